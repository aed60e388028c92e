"""
amhd: pseudo-spectral simulator and verification laboratory for 2D
incompressible MHD with directional fractional hyperresistivity.

Fourier transforms follow the non-unitary convention
``f(x) = sum_k c_k exp(i k.x)``, ``c = fft2(f) / (n1 n2)`` on the torus, and
``g(x) = int exp(-t|xi|^(2 beta)) exp(i x xi) dxi`` (no 1/(2 pi)) on the line.
"""

__version__ = "0.1.0"

from .spectral import Grid, SpectralField, forward_transform, inverse_transform, dealias  # noqa: E402
from .dynamics import PhysParams, MHDState, BlowupError  # noqa: E402
from .timestepper import StepConfig, integrate, step  # noqa: E402
from .diagnostics import DiagConfig, DiagRecord, record  # noqa: E402
from .initial import InitialSpec, make_initial  # noqa: E402

__all__ = [
    "__version__",
    "Grid",
    "SpectralField",
    "forward_transform",
    "inverse_transform",
    "dealias",
    "PhysParams",
    "MHDState",
    "BlowupError",
    "StepConfig",
    "integrate",
    "step",
    "DiagConfig",
    "DiagRecord",
    "record",
    "InitialSpec",
    "make_initial",
]
