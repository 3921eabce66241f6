"""Kernel backend selection.

The compiled Cython backend is preferred when it imported cleanly; otherwise
the numpy fallback is used.  BREGACCEL_KERNELS=python|compiled forces a
backend (forcing "compiled" raises if the extension is missing).

``set_backend`` swaps the active implementation at runtime; it exists for the
benchmark and the backend-equivalence tests and is not thread safe.
"""

import os

from . import _py_kernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_FUNCTIONS = (
    "soft_threshold_vec",
    "prox_grad_step",
    "momentum_combine",
    "diff_norm2",
    "min_norm_subgrad",
    "beta_phi",
    "project_face",
)

BACKEND = "python"
_impl = _py_kernels


def available_backends():
    backends = ["python"]
    if _ckernels is not None:
        backends.append("compiled")
    return backends


def set_backend(name):
    """Select the kernel implementation ("python" or "compiled")."""
    global BACKEND, _impl
    if name == "python":
        _impl = _py_kernels
    elif name == "compiled":
        if _ckernels is None:
            raise ImportError(
                "compiled kernel backend requested but the extension "
                "bregaccel._kernels._ckernels is not built; run "
                "`python setup.py build_ext --inplace` or reinstall"
            )
        _impl = _ckernels
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    BACKEND = name
    for fn in _FUNCTIONS:
        globals()[fn] = getattr(_impl, fn)


_env = os.environ.get("BREGACCEL_KERNELS", "").strip().lower()
if _env in ("python", "py", "numpy"):
    set_backend("python")
elif _env in ("compiled", "c"):
    set_backend("compiled")
elif _env == "":
    set_backend("compiled" if _ckernels is not None else "python")
else:
    raise ValueError(f"BREGACCEL_KERNELS has unknown value {_env!r}")
