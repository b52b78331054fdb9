"""Independent checks: PDE residuals, the conserved norm and the rank-1
time-derivative identity."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import ComplexField1D, ComplexField2D, DimensionError, DomainError, running_integral
from .ist import SolutionSnapshot

EDGE_LAYERS = 3


@dataclass(frozen=True)
class ResidualReport:
    t: float
    linf: float
    l2: float
    interior_margin: int

    def __post_init__(self):
        for name in ("linf", "l2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise DomainError(f"residual {name} must be finite and nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


def residual_field(prev: SolutionSnapshot, curr: SolutionSnapshot,
                   nxt: SolutionSnapshot, dt: float) -> np.ndarray:
    """``i u_t + u_xx + u_yy + (v1 + v2) u`` by centered differences at every node.

    Edge rows and columns of the Laplacian are left at zero; callers trim them.
    """
    if not (prev.grid.matches(curr.grid) and nxt.grid.matches(curr.grid)):
        raise DimensionError("snapshots live on different grids")
    if not dt > 0:
        raise DomainError("dt must be positive")
    u = curr.u.values
    hx, hy = curr.grid.gx.dx, curr.grid.gy.dx
    lap = np.zeros_like(u)
    lap[1:-1, :] += (u[2:] - 2 * u[1:-1] + u[:-2]) / hx**2
    lap[:, 1:-1] += (u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]) / hy**2
    ut = (nxt.u.values - prev.u.values) / (2 * dt)
    return 1j * ut + lap + (curr.v1 + curr.v2) * u


def pde_residual(prev: SolutionSnapshot, curr: SolutionSnapshot, nxt: SolutionSnapshot,
                 dt: float, margin: int = EDGE_LAYERS) -> ResidualReport:
    """Residual norms on the interior, ``margin`` edge layers excluded."""
    r = residual_field(prev, curr, nxt, dt)
    if 2 * margin >= min(r.shape):
        raise DimensionError("grid too small for the requested edge margin")
    sl = (slice(margin, -margin or None),) * 2
    inner = np.abs(r[sl])
    w = curr.grid.weights()[sl]
    return ResidualReport(curr.t, float(inner.max()),
                          float(np.sqrt(np.sum(w * inner**2))), margin)


def conserved_norm(u: ComplexField2D) -> float:
    """Trapezoid value of ``int int |u|^2``."""
    return float(np.sum(u.grid.weights() * np.abs(u.values) ** 2))


def _spectral_derivative(values: np.ndarray, dx: float) -> np.ndarray:
    lam = 2 * np.pi * np.fft.fftfreq(values.size, dx)
    spec = 1j * lam * np.fft.fft(values)
    if values.size % 2 == 0:
        spec[values.size // 2] = 0
    return np.fft.ifft(spec)


def rank1_time_identities(f_prev: ComplexField1D, f_curr: ComplexField1D,
                          f_next: ComplexField1D, dt: float) -> float:
    """Max of ``|i dF/dt - (conj(f) f_x - conj(f_x) f)|`` with ``F = int_{-inf}^x |f|^2``.

    ``f`` is a scattering factor, so ``conj(f)`` follows the standard
    Schrodinger equation.  The time derivative is a centered difference and
    the space derivative is spectral.
    """
    grid = f_curr.grid
    if not (f_prev.grid.matches(grid) and f_next.grid.matches(grid)):
        raise DimensionError("factors live on different grids")
    if not dt > 0:
        raise DomainError("dt must be positive")

    def cum(fld):
        return running_integral(np.abs(fld.values) ** 2, grid.dx, 0, "from_left", "spectral")

    lhs = 1j * (cum(f_next) - cum(f_prev)) / (2 * dt)
    f = f_curr.values
    fx = _spectral_derivative(f, grid.dx)
    rhs = np.conj(f) * fx - np.conj(fx) * f
    return float(np.abs(lhs - rhs).max())
