"""Forward and inverse scattering maps for the (2+1) NLS system

    i u_t + u_xx + u_yy + (v1 + v2) u = 0,
    v1 = p_minus(y, t) + 2 int_{-inf}^x d_y |u|^2,
    v2 = q_plus(x, t) - 2 int_y^{+inf} d_x |u|^2.

Scattering data are the kernel ``f(xi, eta)`` of the operator that maps the
incident wave ``a1(y)`` of the Dirac system ``d_x psi1 = -u psi2``,
``d_y psi2 = conj(u) psi1`` to the outgoing wave ``b2(x)``.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    ComplexField1D,
    ComplexField2D,
    DimensionError,
    DomainError,
    Grid1D,
    Grid2D,
    KernelOperator,
    SingularityError,
    check_edge_decay,
    cumulative_weights,
    operator_norm,
    running_integral,
)
from .evolution import evolve_rank1
from .rank1 import Rank1Data

BoundaryFn = Optional[Callable[[np.ndarray, float], np.ndarray]]


def _workers(requested: Optional[int] = None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("IST_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"IST_THREADS must be an integer, got {env!r}") from None
    return min(8, os.cpu_count() or 1)


def _sample_boundary(fn: BoundaryFn, pts: np.ndarray, t: float, name: str) -> np.ndarray:
    if fn is None:
        return np.zeros_like(pts)
    vals = np.asarray(fn(pts, t))
    if np.iscomplexobj(vals):
        if np.any(vals.imag != 0):
            raise DomainError(f"{name} must be real")
        vals = vals.real
    vals = np.broadcast_to(vals.astype(float), pts.shape)
    if not np.all(np.isfinite(vals)):
        raise DomainError(f"{name} must be bounded")
    return vals


@dataclass(frozen=True)
class BoundaryData:
    """Limits of the pseudopotentials: ``p_minus(y, t)`` and ``q_plus(x, t)``.

    Each entry is a callable ``(points, t) -> real samples`` or ``None`` for zero.
    """

    p_minus: BoundaryFn = None
    q_plus: BoundaryFn = None

    @classmethod
    def zero(cls) -> "BoundaryData":
        return cls()

    def p(self, y: np.ndarray, t: float) -> np.ndarray:
        return _sample_boundary(self.p_minus, y, t, "p_minus")

    def q(self, x: np.ndarray, t: float) -> np.ndarray:
        return _sample_boundary(self.q_plus, x, t, "q_plus")


@dataclass(frozen=True)
class SolutionSnapshot:
    t: float
    u: ComplexField2D
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        for name in ("v1", "v2"):
            v = np.asarray(getattr(self, name))
            if np.iscomplexobj(v):
                if np.any(v.imag != 0):
                    raise DomainError(f"{name} must be real")
                v = v.real
            v = np.array(v, dtype=float)
            if v.shape != self.u.grid.shape:
                raise DimensionError(f"{name} shape {v.shape} differs from u")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def grid(self) -> Grid2D:
        return self.u.grid


# -- inverse map for rank-1 data ----------------------------------------------

def _unit_cumulative(values: np.ndarray, grid: Grid1D, direction: str,
                     method: str) -> np.ndarray:
    """Running integral of a unit-mass density, folded into [0, 1]."""
    c = running_integral(values, grid.dx, 0, "from_left", method)
    total = c[-1]
    if total <= 0:
        return np.zeros_like(c)
    c = np.clip(c / total, 0.0, 1.0)
    return c if direction == "from_left" else 1.0 - c


def reconstruct_rank1(data: Rank1Data, quadrature: str = "spectral") -> ComplexField2D:
    """``u(x, y) = conj(k f(x) g(y)) / (1 - k^2 F(x) G(y))``.

    ``F`` is the left running integral of ``|f|^2`` and ``G`` the right
    running integral of ``|g|^2``.  Both are rescaled to the exact unit total
    so that the denominator stays at or above ``1 - k^2``.
    """
    gx, gy = data.xi_grid, data.eta_grid
    grid = Grid2D(gx, gy)
    if data.k == 0:
        return ComplexField2D(grid, np.zeros(grid.shape, complex))
    f, g = data.f_hat.values, data.g_hat.values
    F = data.k**2 * _unit_cumulative(np.abs(f) ** 2, gx, "from_left", quadrature)
    G = _unit_cumulative(np.abs(g) ** 2, gy, "from_right", quadrature)
    den = 1.0 - np.outer(F, G)
    return ComplexField2D(grid, np.conj(data.k * np.outer(f, g)) / den)


def _spectral_gradient(values: np.ndarray, dx: float, axis: int) -> np.ndarray:
    n = values.shape[axis]
    lam = 2 * np.pi * np.fft.fftfreq(n, dx)
    if n % 2 == 0:
        lam[n // 2] = 0
    shape = [1] * values.ndim
    shape[axis] = n
    spec = np.fft.fft(values, axis=axis) * (1j * lam).reshape(shape)
    return np.fft.ifft(spec, axis=axis).real


def pseudopotentials(u: ComplexField2D, boundary: BoundaryData, t: float,
                     method: str = "spectral") -> tuple[np.ndarray, np.ndarray]:
    """Assemble ``v1``, ``v2`` from ``|u|^2`` and the boundary data.

    ``method="spectral"`` differentiates and integrates ``|u|^2`` through its
    trigonometric interpolant, which is spectrally accurate because ``u``
    decays at the grid edges.  ``"finite-difference"`` uses second-order
    centered differences (one-sided at the edges) and running trapezoid sums.
    """
    gx, gy = u.grid.gx, u.grid.gy
    dens = np.abs(u.values) ** 2
    if method == "spectral":
        dens_y = _spectral_gradient(dens, gy.dx, 1)
        dens_x = _spectral_gradient(dens, gx.dx, 0)
        quad = "spectral"
    elif method == "finite-difference":
        dens_y = np.gradient(dens, gy.dx, axis=1, edge_order=2)
        dens_x = np.gradient(dens, gx.dx, axis=0, edge_order=2)
        quad = "trapezoid"
    else:
        raise DomainError(f"method must be 'spectral' or 'finite-difference', got {method!r}")
    v1 = boundary.p(gy.points, t)[None, :] + 2 * running_integral(
        dens_y, gx.dx, 0, "from_left", quad)
    v2 = boundary.q(gx.points, t)[:, None] - 2 * running_integral(
        dens_x, gy.dx, 1, "from_right", quad)
    return v1, v2


# -- Gaussian family ----------------------------------------------------------

def gaussian_profile(grid: Grid1D, t: float) -> ComplexField1D:
    """``(2/pi)^(1/4) (1 + 4it)^(-1/2) exp(-x^2 / (1 + 4it))``."""
    z = 1 + 4j * t
    x = grid.points
    return ComplexField1D(grid, (2 / np.pi) ** 0.25 / np.sqrt(z) * np.exp(-x**2 / z))


def gaussian_cumulative(grid: Grid1D, t: float, quadrature: str = "spectral") -> np.ndarray:
    """``P(x, t) = int_{-inf}^x |p(s, t)|^2 ds`` by quadrature."""
    dens = np.abs(gaussian_profile(grid, t).values) ** 2
    return running_integral(dens, grid.dx, 0, "from_left", quadrature)


def gaussian_solution(grid2d: Grid2D, t: float, k: float, quadrature: str = "spectral",
                      potential_method: str = "spectral") -> SolutionSnapshot:
    """Closed-form solution ``k p(x) p(y) / (1 - k^2 P(x) (1 - P(y)))`` with zero boundary data."""
    if not (0 <= k < 1):
        raise DomainError(f"coupling k must satisfy 0 <= k < 1, got {k}")
    px = gaussian_profile(grid2d.gx, t).values
    py = gaussian_profile(grid2d.gy, t).values
    Px = gaussian_cumulative(grid2d.gx, t, quadrature)
    Py = gaussian_cumulative(grid2d.gy, t, quadrature)
    u = ComplexField2D(grid2d, k * np.outer(px, py) / (1 - k**2 * np.outer(Px, 1 - Py)))
    v1, v2 = pseudopotentials(u, BoundaryData.zero(), t, potential_method)
    return SolutionSnapshot(t, u, v1, v2)


def gaussian_data(grid2d: Grid2D, k: float, t: float = 0.0) -> Rank1Data:
    """Rank-1 data whose reconstruction is :func:`gaussian_solution`."""
    f = gaussian_profile(grid2d.gx, t).conj()
    g = gaussian_profile(grid2d.gy, t).conj()
    return Rank1Data(k, f.normalized(), g.normalized())


# -- inverse map by direct discretization ---------------------------------------

def nystrom_reconstruct(F: KernelOperator, quadrature: str = "spectral",
                        workers: Optional[int] = None) -> ComplexField2D:
    """Potential from general scattering data by dense linear algebra.

    For every ``(x, y)`` solves ``(I - F* Q_x F P_y) z = F*(., x)`` on the eta
    grid and reads ``u(x, y) = z(y)``.  ``Q_x`` restricts xi integrals to
    ``xi < x`` and ``P_y`` restricts eta integrals to ``eta > y``; their
    weights are rows of the running-integral matrix of ``quadrature``, so
    ``"trapezoid"`` gives sharp masks with half weight at the cut.
    """
    nrm = operator_norm(F)
    if nrm >= 1:
        raise DomainError(
            f"scattering data must have operator norm < 1, got {nrm:.6g}")
    gx, gy = F.row_grid, F.col_grid
    grid = Grid2D(gx, gy)
    if nrm == 0:
        return ComplexField2D(grid, np.zeros(grid.shape, complex))
    kern = F.kernel                     # (xi, eta)
    fstar = kern.conj().T               # (eta, xi)
    qw = cumulative_weights(gx, quadrature)
    cy = cumulative_weights(gy, quadrature)
    pw = cy[-1][None, :] - cy           # row j: weights of int_{y_j}^{inf}
    eye = np.eye(gy.n)

    def row(i: int) -> np.ndarray:
        b = (fstar * qw[i][None, :]) @ kern          # F* Q_x F, (eta, eta)
        mats = eye[None] - b[None, :, :] * pw[:, None, :]
        rhs = np.broadcast_to(fstar[:, i], (gy.n, gy.n))[..., None]
        try:
            z = np.linalg.solve(mats, rhs)[..., 0]
        except np.linalg.LinAlgError as exc:
            raise SingularityError("singular Nystrom system") from exc
        return z[np.arange(gy.n), np.arange(gy.n)]

    nw = _workers(workers)
    if nw == 1:
        rows = [row(i) for i in range(gx.n)]
    else:
        with ThreadPoolExecutor(nw) as ex:
            rows = list(ex.map(row, range(gx.n)))
    return ComplexField2D(grid, np.array(rows))


# -- forward map --------------------------------------------------------------

def _sweep(u: np.ndarray, dx: float, dy: float, cols: np.ndarray) -> np.ndarray:
    """Outgoing ``b2`` for incident waves concentrated at the eta indices ``cols``."""
    nx, ny = u.shape
    h = np.sqrt(dx * dy)
    # scaled amplitudes phi1 = sqrt(dy) psi1, phi2 = sqrt(dx) psi2
    phi1 = np.zeros((ny, cols.size), complex)
    phi1[cols, np.arange(cols.size)] = 1 / np.sqrt(dy)
    out = np.empty((nx, cols.size), complex)
    for i in range(nx):
        phi2 = np.zeros(cols.size, complex)
        a = -0.5 * h * u[i]
        b = 0.5 * h * np.conj(u[i])
        det = 1 - a * b
        for j in range(ny):
            # Cayley step (I - G/2)^-1 (I + G/2) with G = [[0, -u h], [conj(u) h, 0]]
            p1 = phi1[j]
            r1 = p1 + a[j] * phi2
            r2 = b[j] * p1 + phi2
            phi1[j] = (r1 + a[j] * r2) / det[j]
            phi2 = (b[j] * r1 + r2) / det[j]
        out[i] = phi2
    return out / np.sqrt(dx)


def forward_scattering(u: ComplexField2D, workers: Optional[int] = None) -> KernelOperator:
    """Kernel of ``F21``: incident ``a1(y)`` at ``x = -inf`` to ``b2(x)`` at ``y = +inf``.

    The Dirac system is discretized as a network of 2x2 cells, one per grid
    node.  Each cell applies the Cayley transform of the local coupling, so
    the discrete scattering map is exactly unitary.  Incident waves are
    discrete deltas ``e_m / dy``; the columns are independent and are split
    across threads without changing the result.
    """
    check_edge_decay(u.values, "potential u")
    gx, gy = u.grid.gx, u.grid.gy
    nw = _workers(workers)
    chunks = [c for c in np.array_split(np.arange(gy.n), nw) if c.size]
    if len(chunks) == 1:
        parts = [_sweep(u.values, gx.dx, gy.dx, chunks[0])]
    else:
        with ThreadPoolExecutor(len(chunks)) as ex:
            parts = list(ex.map(lambda c: _sweep(u.values, gx.dx, gy.dx, c), chunks))
    return KernelOperator(gx, gy, np.concatenate(parts, axis=1))


# -- Cauchy problem -----------------------------------------------------------

def solve_cauchy(data0: Rank1Data, boundary: BoundaryData, times: Sequence[float],
                 dt: float = 1e-3, quadrature: str = "spectral", pad: int = 0,
                 t0: float = 0.0, potential_method: str = "spectral") -> list[SolutionSnapshot]:
    """Snapshots ``(u, v1, v2)`` at each requested time.

    The scattering data are evolved incrementally through the sorted times,
    so nearby times share their history and centered differences between
    snapshots are consistent.
    """
    times = [float(t) for t in times]
    if any(t < t0 for t in times):
        raise DomainError("requested times must not precede the initial time")
    order = sorted(set(times))
    snaps: dict[float, SolutionSnapshot] = {}
    data, tc = data0, t0
    for t in order:
        data = evolve_rank1(data, boundary.p_minus, boundary.q_plus, t, dt, tc, pad)
        tc = t
        u = reconstruct_rank1(data, quadrature)
        v1, v2 = pseudopotentials(u, boundary, t, potential_method)
        snaps[t] = SolutionSnapshot(t, u, v1, v2)
    return [snaps[t] for t in times]
