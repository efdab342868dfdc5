"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy/Python
twins take over. ``set_backend`` switches explicitly (tests and benchmarks).
"""

from __future__ import annotations

from types import ModuleType

from riskcal import _kernels_py

try:
    from riskcal import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active: ModuleType = _compiled if _compiled is not None else _kernels_py


def compiled_available() -> bool:
    return _compiled is not None


def backend_name() -> str:
    return "compiled" if _active is _compiled else "python"


def set_backend(name: str) -> None:
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def wsr_ucb_rows(losses, delta):
    return _active.wsr_ucb_rows(losses, delta)


def betting_fractions(losses, delta):
    return _active.betting_fractions(losses, delta)


def label_components_8(mask):
    return _active.label_components_8(mask)
