"""Command-line entry point: ``riskcal <command> [flags]``.

Exit codes: 0 success, 1 error (including bad flags), 2 calibration saturated.

Files
-----
loss matrix CSV
    First row: the ascending lambda grid. Each further row: one example's
    losses at those values. Floats are written in their shortest exact
    round-trip form (at most 17 significant digits).
loss vector
    One number per line (blank lines and ``#`` comments skipped).
label tree
    ``id,parent_id,label_or_dash`` per line; the root is its own parent.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from riskcal import __version__
from riskcal.bounds import BOUND_KINDS, BoundSpec, ucb
from riskcal.calibration import (
    CalibrationWarning,
    LossMatrix,
    calibrate_conformal,
    calibrate_rcps,
    conformal_scores,
    validate_matrix,
)
from riskcal.setfns import (
    Distogram,
    class_varying_loss_matrix,
    distogram_loss_matrix,
    hierarchical_loss_matrix,
    load_tree,
    multilabel_loss_matrix,
    segmentation_loss_matrix,
)
from riskcal.simlab import DistSpec, SimResult, bound_eval_experiment

EXIT_OK, EXIT_ERROR, EXIT_SATURATED = 0, 1, 2
TASKS = ("classification", "multilabel", "hierarchical", "segmentation", "protein")


class CliError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would read as "saturated"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def fmt(v: float) -> str:
    # shortest string that round-trips; never more than 17 significant digits
    return repr(float(v))


def _json_num(v):
    v = float(v)
    if math.isfinite(v):
        return v
    return "inf" if v > 0 else ("-inf" if v < 0 else "nan")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _floats(cells, where: str) -> list[float]:
    try:
        return [float(c) for c in cells]
    except ValueError:
        raise CliError(f"{where}: expected numbers, got {cells!r}") from None


def read_loss_matrix(path) -> LossMatrix:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if len(rows) < 2:
        raise CliError(f"{path}: need a header row of lambda values and at least one data row")
    grid = _floats(rows[0], f"{path} line 1")
    data = []
    for i, r in enumerate(rows[1:], start=2):
        vals = _floats(r, f"{path} line {i}")
        if len(vals) != len(grid):
            raise CliError(f"{path} line {i}: {len(vals)} values but the header has {len(grid)}")
        data.append(vals)
    return LossMatrix(np.array(data), np.array(grid))


def format_loss_matrix(m: LossMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([fmt(v) for v in m.grid])
    for row in m.losses:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def read_loss_vector(path) -> np.ndarray:
    vals = []
    with open(path) as fh:
        for i, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "," in line:
                raise CliError(f"{path} line {i}: expected one loss per line")
            vals.extend(_floats([line], f"{path} line {i}"))
    if not vals:
        raise CliError(f"{path}: no losses")
    return np.array(vals)


def parse_grid(text: str) -> np.ndarray:
    """``a,b,c`` or ``start:stop:num`` (inclusive, evenly spaced)."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise CliError("--grid range must be start:stop:num")
        start, stop = _floats(parts[:2], "--grid")
        try:
            num = int(parts[2])
        except ValueError:
            raise CliError("--grid num must be an integer") from None
        return np.linspace(start, stop, num)
    return np.array(_floats(text.split(","), "--grid"))


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = _floats([value], f"--param {key}")[0]
    return out


def _csv_list(text: str, cast, flag: str):
    try:
        return [cast(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise CliError(f"{flag}: could not parse {text!r}") from None


def _need(args, *names):
    missing = [f"--{n}" for n in names if getattr(args, n) in (None, [])]
    if missing:
        raise CliError(f"{args.command} needs {', '.join(missing)}")


def _unit_interval(value, flag):
    if not 0.0 < value < 1.0:
        raise CliError(f"{flag} must lie in (0, 1), got {value}")


# commands


def cmd_calibrate(args) -> int:
    _need(args, "input", "alpha", "delta", "bound")
    _unit_interval(args.alpha, "--alpha")
    _unit_interval(args.delta, "--delta")
    m = validate_matrix(read_loss_matrix(args.input[0]))
    spec = BoundSpec(args.bound, args.delta, args.cv)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CalibrationWarning)
        report = calibrate_rcps(m, spec, args.alpha, validate=False)
    _emit(_dump(report.to_dict()), args.output)
    if report.saturated:
        print(f"warning: no lambda on the grid brings the {spec.kind} bound below alpha; reported the largest",
              file=sys.stderr)
        return EXIT_SATURATED
    return EXIT_OK


def cmd_conformal(args) -> int:
    _need(args, "input", "alpha")
    _unit_interval(args.alpha, "--alpha")
    m = validate_matrix(read_loss_matrix(args.input[0]))
    scores = conformal_scores(m)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", CalibrationWarning)
        lam = calibrate_conformal(scores, args.alpha, m.grid)
    notes = [str(w.message) for w in caught if issubclass(w.category, CalibrationWarning)]
    _emit(_dump({"lambda_hat": lam, "alpha": args.alpha, "n": m.n, "warnings": notes}), args.output)
    return EXIT_OK


def cmd_bound(args) -> int:
    _need(args, "input", "delta", "bound")
    losses = read_loss_vector(args.input[0])
    value = ucb(losses, BoundSpec(args.bound, args.delta, args.cv))
    out = {
        "bound": args.bound,
        "n": int(losses.size),
        "rhat": float(losses.mean()),
        "ucb": _json_num(value.value),
        "finite": value.finite,
        "clamped": value.clamped,
    }
    if value.approximate:
        out["approximate"] = True
    _emit(_dump(out), args.output)
    return EXIT_OK


def cmd_simulate(args) -> int:
    _need(args, "dist", "n", "bound", "reps")
    spec = DistSpec(args.dist, _parse_params(args.param))
    ns = _csv_list(args.n, int, "--n")
    deltas = _csv_list(args.delta or "0.1", float, "--delta")
    kinds = _csv_list(args.bound, str, "--bound")
    for d in deltas:
        _unit_interval(d, "--delta")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SimResult.CSV_COLUMNS)
    for n in ns:
        for d in deltas:
            for r in bound_eval_experiment(spec, n, d, kinds, args.reps, args.seed, cv=args.cv):
                w.writerow(r.row())
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def _read_labelled_scores(path):
    """Rows ``label,score_0,...,score_{K-1}``; multilabel labels joined by ';'."""
    labels, scores = [], []
    with open(path, newline="") as fh:
        for i, r in enumerate(csv.reader(fh), start=1):
            if not r or r[0].lstrip().startswith("#"):
                continue
            if len(r) < 2:
                raise CliError(f"{path} line {i}: need a label and at least one score")
            labels.append(r[0].strip())
            scores.append(_floats(r[1:], f"{path} line {i}"))
    if not scores or len({len(s) for s in scores}) != 1:
        raise CliError(f"{path}: every row needs the same number of scores")
    return labels, np.array(scores)


def _int_labels(labels, path):
    try:
        return np.array([int(v) for v in labels])
    except ValueError:
        raise CliError(f"{path}: labels must be integer class indices") from None


def _load_npz(path, keys):
    with np.load(path) as z:
        missing = [k for k in keys if k not in z.files]
        if missing:
            raise CliError(f"{path}: missing arrays {missing}")
        return {k: z[k] for k in keys}


def build_loss_matrix(task: str, inputs: list[str], grid: np.ndarray) -> LossMatrix:
    if task == "classification":
        labels, scores = _read_labelled_scores(inputs[0])
        weights = read_loss_vector(inputs[1]) if len(inputs) > 1 else None
        losses = class_varying_loss_matrix(scores, _int_labels(labels, inputs[0]), grid, weights)
    elif task == "multilabel":
        labels, scores = _read_labelled_scores(inputs[0])
        sets = [set(_int_labels(s.split(";"), inputs[0]).tolist()) for s in labels]
        losses = multilabel_loss_matrix(scores, sets, grid)
    elif task == "hierarchical":
        if len(inputs) < 2:
            raise CliError("hierarchical needs --input TREE --input SCORES")
        tree = load_tree(inputs[0])
        labels, scores = _read_labelled_scores(inputs[1])
        losses = hierarchical_loss_matrix(tree, scores, _int_labels(labels, inputs[1]), grid)
    elif task == "segmentation":
        z = _load_npz(inputs[0], ["scores", "masks"])
        losses = segmentation_loss_matrix(z["scores"], z["masks"].astype(bool), grid)
    elif task == "protein":
        z = _load_npz(inputs[0], ["bins", "mass", "truth"])
        dists = [Distogram(z["bins"], m) for m in z["mass"]]
        losses = distogram_loss_matrix(dists, z["truth"], grid)
    else:
        raise CliError(f"unknown task {task!r}; choose from {', '.join(TASKS)}")
    return LossMatrix(losses, grid)


def cmd_loss_matrix(args) -> int:
    _need(args, "task", "input", "grid")
    grid = parse_grid(args.grid)
    m = validate_matrix(build_loss_matrix(args.task, args.input, grid))
    _emit(format_loss_matrix(m), args.output)
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate,
    "conformal": cmd_conformal,
    "bound": cmd_bound,
    "simulate": cmd_simulate,
    "loss-matrix": cmd_loss_matrix,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="riskcal", description="Calibrate set-valued predictors to control risk.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "calibrate": "choose lambda-hat from a loss matrix (JSON report)",
        "conformal": "conformal quantile baseline for 0/1 loss matrices",
        "bound": "upper confidence bound for one loss vector",
        "simulate": "Monte Carlo coverage and gap of bounds (CSV)",
        "loss-matrix": "build a loss matrix from task inputs (CSV)",
    }
    for name, text in helps.items():
        s = sub.add_parser(name, help=text, description=text)
        s.add_argument("--input", action="append", help="input file (repeat for tasks needing several)")
        s.add_argument("--output", help="write here instead of stdout")
        if name in ("calibrate", "conformal"):
            s.add_argument("--alpha", type=float, help="target risk level")
        if name in ("calibrate", "bound"):
            s.add_argument("--delta", type=float, help="allowed failure probability")
        if name in ("calibrate", "bound", "simulate"):
            s.add_argument("--cv", type=float, help="coefficient-of-variation bound (pinelis-utev)")
        if name in ("calibrate", "bound"):
            s.add_argument("--bound", choices=BOUND_KINDS, help="concentration bound")
        if name == "simulate":
            s.add_argument("--bound", help=f"comma-separated bounds from: {', '.join(BOUND_KINDS)}")
            s.add_argument("--delta", help="comma-separated delta values (default 0.1)")
            s.add_argument("--dist", help="bernoulli, beta, gamma, squared-t or lognormal")
            s.add_argument("--param", action="append", help="distribution parameter key=value (repeat)")
            s.add_argument("--n", help="comma-separated sample sizes")
            s.add_argument("--reps", type=int, help="replicates per cell")
            s.add_argument("--seed", type=int, default=0)
        if name == "loss-matrix":
            s.add_argument("--task", choices=TASKS)
            s.add_argument("--grid", help="comma list or start:stop:num; for hierarchical, subtree mass levels in [0, 1]")
            s.add_argument("--seed", type=int, default=0, help="accepted for uniformity; tasks are deterministic")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (CliError, ValueError, OSError) as exc:  # library errors subclass ValueError
        print(f"riskcal {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
