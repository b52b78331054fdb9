"""Linear Schrodinger propagators for scattering data.

The 1D equation is ``i psi_t + sign * psi_xx + w(x, t) psi = 0``.  Free
evolution is the Fourier multiplier ``exp(-i sign lambda^2 t)``; with a
potential, Strang splitting alternates half-step phases ``exp(i w dt/2)``
(``w`` sampled at the step midpoint) with exact kinetic steps.

Potentials are callables ``w(x, t)`` returning real samples at the points
``x``, plain numbers for constant potentials, or ``None``.

The spectral steps assume periodicity.  Fields that spread towards the
grid edges can be zero-padded with ``pad`` extra points on each side; the
result is cropped back to the original grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .core import (
    ComplexField1D,
    DimensionError,
    DomainError,
    Grid1D,
    KernelOperator,
    check_edge_decay,
)
from .rank1 import Rank1Data

Potential = Union[None, float, Callable[[np.ndarray, float], np.ndarray]]


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise DomainError(f"sign must be +1 or -1, got {sign}")
    return int(sign)


def _sample_potential(w: Potential, x: np.ndarray, t: float) -> np.ndarray:
    if callable(w):
        vals = np.asarray(w(x, t))
    else:
        vals = np.asarray(w, dtype=float)
    if np.iscomplexobj(vals):
        if np.any(vals.imag != 0):
            raise DomainError("potential must be real")
        vals = vals.real
    vals = np.broadcast_to(vals.astype(float), x.shape)
    if not np.all(np.isfinite(vals)):
        raise DomainError("potential must be bounded (finite) on the grid")
    return vals


def _padded_points(grid: Grid1D, pad: int) -> np.ndarray:
    return grid.x_min + grid.dx * np.arange(-pad, grid.n + pad)


def _evolve(values: np.ndarray, grid: Grid1D, sign: int, w: Potential,
            t: float, dt: Optional[float], t0: float, pad: int) -> np.ndarray:
    """Evolve ``values`` (grid along axis 0, batch along axis 1) from t0 to t."""
    if pad < 0:
        raise DomainError("pad must be nonnegative")
    span = t - t0
    if span < 0:
        raise DomainError("propagators only run forward in time")
    if span == 0:
        return values.copy()
    v = np.pad(values, ((pad, pad), (0, 0))) if pad else values.astype(complex)
    m = v.shape[0]
    lam = 2 * np.pi * np.fft.fftfreq(m, grid.dx)
    lam2 = (sign * lam**2)[:, None]

    def kinetic(arr, h):
        return np.fft.ifft(np.exp(-1j * lam2 * h) * np.fft.fft(arr, axis=0), axis=0)

    if w is None:
        v = kinetic(v, span)
    else:
        if dt is None or not dt > 0:
            raise DomainError("split-step evolution needs dt > 0")
        x = _padded_points(grid, pad)
        steps = max(1, math.ceil(span / dt - 1e-12))
        tc = t0
        for s in range(steps):
            h = dt if s < steps - 1 else t - tc
            phase = np.exp(0.5j * h * _sample_potential(w, x, tc + 0.5 * h))[:, None]
            v = phase * kinetic(phase * v, h)
            tc = t0 + (s + 1) * dt
    return v[pad:pad + grid.n] if pad else v


@dataclass(frozen=True)
class Propagator1D:
    """``i psi_t + sign psi_xx + w(x, t) psi = 0`` on ``grid``."""

    grid: Grid1D
    sign: int = 1
    potential: Potential = None
    dt: Optional[float] = None
    pad: int = 0

    def __post_init__(self):
        _check_sign(self.sign)
        if self.potential is not None:
            if self.dt is None or not self.dt > 0:
                raise DomainError("dt > 0 is required with a potential")
            _sample_potential(self.potential, self.grid.points, 0.0)

    def __call__(self, fld: ComplexField1D, t: float, t0: float = 0.0,
                 check_edges: bool = True) -> ComplexField1D:
        if not fld.grid.matches(self.grid):
            raise DimensionError("field grid differs from propagator grid")
        if check_edges:
            check_edge_decay(fld.values, "propagated field")
        out = _evolve(fld.values[:, None], self.grid, self.sign, self.potential,
                      t, self.dt, t0, self.pad)
        return ComplexField1D(self.grid, out[:, 0])

    def evolve_array(self, values: np.ndarray, t: float, t0: float = 0.0,
                     axis: int = 0) -> np.ndarray:
        """Evolve every 1D slice of ``values`` along ``axis``."""
        arr = np.moveaxis(np.asarray(values, complex), axis, 0)
        if arr.shape[0] != self.grid.n:
            raise DimensionError("array axis length differs from the grid")
        flat = arr.reshape(self.grid.n, -1)
        out = _evolve(flat, self.grid, self.sign, self.potential, t, self.dt, t0, self.pad)
        return np.moveaxis(out.reshape(arr.shape), 0, axis)


def propagate_free(fld: ComplexField1D, sign: int, t: float, pad: int = 0,
                   check_edges: bool = True) -> ComplexField1D:
    """Exact free evolution by the Fourier multiplier ``exp(-i sign lambda^2 t)``."""
    if t < 0:
        raise DomainError("t must be nonnegative")
    return Propagator1D(fld.grid, sign, pad=pad)(fld, t, check_edges=check_edges)


def propagate_potential(fld: ComplexField1D, sign: int, w: Potential, t: float,
                        dt: float, t0: float = 0.0, pad: int = 0,
                        check_edges: bool = True) -> ComplexField1D:
    """Strang split-step evolution from ``t0`` to ``t`` with potential ``w``."""
    if w is None:
        w = 0.0
    return Propagator1D(fld.grid, sign, w, dt, pad)(fld, t, t0, check_edges)


def propagate_kernel_2d(kernel: KernelOperator, p: Potential, q: Potential,
                        t: float, dt: float, t0: float = 0.0, pad: int = 0,
                        check_edges: bool = True) -> KernelOperator:
    """Evolve ``f(xi, eta)`` by ``(i d_t - d_xi^2 - d_eta^2 - p(eta) - q(xi)) f = 0``.

    The conjugate kernel obeys the standard equation with potential ``p + q``,
    which separates: the xi axis is evolved with ``q`` and the eta axis with
    ``p``.
    """
    if check_edges:
        check_edge_decay(kernel.kernel, "kernel")
    conj = np.conj(kernel.kernel)
    px = Propagator1D(kernel.row_grid, 1, 0.0 if q is None else q, dt, pad)
    py = Propagator1D(kernel.col_grid, 1, 0.0 if p is None else p, dt, pad)
    conj = px.evolve_array(conj, t, t0, axis=0)
    conj = py.evolve_array(conj, t, t0, axis=1)
    return KernelOperator(kernel.row_grid, kernel.col_grid, np.conj(conj), kernel.weights)


def evolve_factors(data: Rank1Data, p_minus: Potential, q_plus: Potential,
                   t: float, dt: float, t0: float = 0.0, pad: int = 0,
                   check_edges: bool = True) -> tuple[ComplexField1D, ComplexField1D]:
    """Evolved (not renormalized) factors ``f(xi, t)``, ``g(eta, t)``.

    ``conj(f)`` follows ``i d_t + d_xi^2 + q_plus`` and ``conj(g)`` follows
    ``i d_t + d_eta^2 + p_minus``.
    """
    out = []
    for fld, w in ((data.f_hat, q_plus), (data.g_hat, p_minus)):
        evolved = propagate_potential(fld.conj(), 1, w, t, dt, t0, pad, check_edges)
        out.append(evolved.conj())
    return out[0], out[1]


def evolve_rank1(data: Rank1Data, p_minus: Potential, q_plus: Potential,
                 t: float, dt: float, t0: float = 0.0, pad: int = 0,
                 check_edges: bool = True) -> Rank1Data:
    """Evolve rank-1 scattering data; ``k`` is carried over unchanged."""
    if t == t0:
        return data
    f, g = evolve_factors(data, p_minus, q_plus, t, dt, t0, pad, check_edges)
    return Rank1Data(data.k, f.normalized(), g.normalized())
