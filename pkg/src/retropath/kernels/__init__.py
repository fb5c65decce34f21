"""Hot-kernel selection: compiled Cython core if available, NumPy fallback otherwise."""
from . import columns  # noqa: F401
from .columns import NV, pack_params  # noqa: F401

try:  # pragma: no cover - depends on build environment
    from ._core import compute_values  # type: ignore[attr-defined]

    IMPLEMENTATION = "cython"
except ImportError:  # pragma: no cover
    from .fallback import compute_values  # noqa: F401

    IMPLEMENTATION = "numpy"


def available_implementations():
    """Names of kernel implementations importable in this environment."""
    impls = {"numpy"}
    try:
        from . import _core  # noqa: F401

        impls.add("cython")
    except ImportError:
        pass
    return sorted(impls)
