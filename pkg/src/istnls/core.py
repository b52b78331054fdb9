"""Uniform grids, sampled fields, quadrature and discretized integral operators.

Every integral in the package is a weighted sum over grid samples.  A
:class:`KernelOperator` stores kernel samples ``k(xi_i, eta_j)`` together with
the quadrature weights of its column grid, so that the operator acts on a
vector of samples ``a`` as ``(K a)_i = sum_j k_ij w_j a_j``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

#: relative edge amplitude above which a field is considered not decayed
EDGE_DECAY_TOL = 1e-8


class ISTError(Exception):
    """Base class for errors raised by istnls."""


class DimensionError(ISTError, ValueError):
    """Grids or array shapes that should agree do not."""


class DomainError(ISTError, ValueError):
    """An argument lies outside the domain of the operation."""


class SingularityError(ISTError, ArithmeticError):
    """A denominator or linear system is numerically singular."""


class EdgeDecayWarning(UserWarning):
    """A field does not decay at the edges of its grid."""


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid1D:
    """Uniform grid ``x_j = x_min + j*dx`` for ``j = 0..n-1``."""

    n: int
    x_min: float
    dx: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise DomainError(f"grid needs n >= 2 points, got {self.n}")
        if not (np.isfinite(self.dx) and self.dx > 0):
            raise DomainError(f"grid spacing must be positive, got {self.dx}")
        if not np.isfinite(self.x_min):
            raise DomainError("grid origin must be finite")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "x_min", float(self.x_min))
        object.__setattr__(self, "dx", float(self.dx))

    @classmethod
    def from_bounds(cls, x_min: float, x_max: float, n: int) -> "Grid1D":
        """Grid with both endpoints included."""
        if n < 2:
            raise DomainError(f"grid needs n >= 2 points, got {n}")
        return cls(n, x_min, (x_max - x_min) / (n - 1))

    @property
    def x_max(self) -> float:
        return self.x_min + (self.n - 1) * self.dx

    @property
    def points(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n)

    def weights(self) -> np.ndarray:
        """Composite trapezoid weights."""
        w = np.full(self.n, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def wavenumbers(self) -> np.ndarray:
        """Angular frequencies ``2*pi*m/(n*dx)`` in FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.dx)

    def matches(self, other: "Grid1D", rtol: float = 1e-12) -> bool:
        if self.n != other.n:
            return False
        scale = max(abs(self.x_min), abs(self.x_max), self.dx)
        return (abs(self.x_min - other.x_min) <= rtol * scale
                and abs(self.dx - other.dx) <= rtol * self.dx)


@dataclass(frozen=True)
class Grid2D:
    gx: Grid1D
    gy: Grid1D

    @property
    def shape(self) -> tuple[int, int]:
        return (self.gx.n, self.gy.n)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.gx.points, self.gy.points, indexing="ij")

    def weights(self) -> np.ndarray:
        return np.outer(self.gx.weights(), self.gy.weights())

    def matches(self, other: "Grid2D") -> bool:
        return self.gx.matches(other.gx) and self.gy.matches(other.gy)


@dataclass(frozen=True)
class ComplexField1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values, complex)
        if v.shape != (self.grid.n,):
            raise DimensionError(
                f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field samples must be finite")
        object.__setattr__(self, "values", v)

    def norm(self) -> float:
        """Discrete L2 norm with trapezoid weights."""
        return float(np.sqrt(np.sum(self.grid.weights() * np.abs(self.values) ** 2)))

    def conj(self) -> "ComplexField1D":
        return ComplexField1D(self.grid, np.conj(self.values))

    def abs2(self) -> "RealField1D":
        return RealField1D(self.grid, np.abs(self.values) ** 2)

    def normalized(self) -> "ComplexField1D":
        nrm = self.norm()
        if nrm == 0:
            raise DomainError("cannot normalize a zero field")
        return ComplexField1D(self.grid, self.values / nrm)


@dataclass(frozen=True)
class RealField1D:
    grid: Grid1D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            if np.any(v.imag != 0):
                raise DomainError("real field has nonzero imaginary part")
            v = v.real
        v = _frozen(v, float)
        if v.shape != (self.grid.n,):
            raise DimensionError(
                f"expected {self.grid.n} samples, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field samples must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class ComplexField2D:
    """Samples ``u[i, j] = u(x_i, y_j)``; flattening is x-outer, y-inner."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.ndim == 1 and v.size == self.grid.gx.n * self.grid.gy.n:
            v = v.reshape(self.grid.shape)
        if v.shape != self.grid.shape:
            raise DimensionError(
                f"expected shape {self.grid.shape}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("field samples must be finite")
        object.__setattr__(self, "values", _frozen(v, complex))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.grid.weights() * np.abs(self.values) ** 2)))


@dataclass(frozen=True)
class KernelOperator:
    """Discretized Hilbert-Schmidt operator from ``col_grid`` to ``row_grid``."""

    row_grid: Grid1D
    col_grid: Grid1D
    kernel: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        k = np.array(self.kernel, dtype=complex)
        if k.shape != (self.row_grid.n, self.col_grid.n):
            raise DimensionError(
                f"kernel shape {k.shape} does not match grids "
                f"({self.row_grid.n}, {self.col_grid.n})")
        if not np.all(np.isfinite(k)):
            raise DomainError("kernel samples must be finite")
        w = self.col_grid.weights() if self.weights is None else np.asarray(self.weights, float)
        if w.shape != (self.col_grid.n,):
            raise DimensionError("one quadrature weight per column point required")
        object.__setattr__(self, "kernel", _frozen(k, complex))
        object.__setattr__(self, "weights", _frozen(w, float))

    @property
    def is_square(self) -> bool:
        return self.row_grid.matches(self.col_grid)

    def matrix(self) -> np.ndarray:
        """Matrix acting on sample vectors: ``kernel @ diag(weights)``."""
        return self.kernel * self.weights[None, :]

    def weighted_matrix(self) -> np.ndarray:
        """``diag(sqrt(w_row)) K diag(sqrt(w_col))``, an isometric image in l2."""
        return (np.sqrt(self.row_grid.weights())[:, None] * self.kernel
                * np.sqrt(self.weights)[None, :])

    def hs_norm(self) -> float:
        return float(np.linalg.norm(self.weighted_matrix()))

    def trace(self) -> complex:
        if not self.is_square:
            raise DimensionError("trace needs a square operator")
        return complex(np.sum(self.weights * np.diag(self.kernel)))

    def adjoint(self) -> "KernelOperator":
        """Kernel ``conj(k(eta, xi))`` on the swapped grids."""
        return KernelOperator(self.col_grid, self.row_grid, self.kernel.conj().T)

    def scaled(self, c: complex) -> "KernelOperator":
        return KernelOperator(self.row_grid, self.col_grid, c * self.kernel, self.weights)


def edge_ratio(values: np.ndarray, axes=None) -> float:
    """Largest edge sample relative to the largest sample overall."""
    v = np.abs(np.asarray(values))
    peak = v.max() if v.size else 0.0
    if peak == 0:
        return 0.0
    axes = range(v.ndim) if axes is None else axes
    edge = 0.0
    for ax in axes:
        edge = max(edge, np.take(v, 0, axis=ax).max(), np.take(v, -1, axis=ax).max())
    return float(edge / peak)


def check_edge_decay(values, name: str = "field", tol: float = EDGE_DECAY_TOL,
                     strict: bool = False, axes=None) -> bool:
    """Warn (or raise if ``strict``) when ``values`` has not decayed at the edges."""
    ratio = edge_ratio(values, axes)
    if ratio <= tol:
        return True
    msg = f"{name} edge amplitude is {ratio:.2e} of its peak (limit {tol:.0e}); widen the grid"
    if strict:
        raise DomainError(msg)
    warnings.warn(msg, EdgeDecayWarning, stacklevel=3)
    return False


# -- quadrature ---------------------------------------------------------------

def _cumtrapz(values: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    v = np.moveaxis(np.asarray(values), axis, 0)
    out = np.zeros_like(v)
    out[1:] = np.cumsum(0.5 * dx * (v[1:] + v[:-1]), axis=0)
    return np.moveaxis(out, 0, axis)


def _cumspectral(values: np.ndarray, dx: float, axis: int = 0) -> np.ndarray:
    # antiderivative of the zero-mean periodic part plus the mean times x
    v = np.moveaxis(np.asarray(values), axis, 0)
    n = v.shape[0]
    mean = v.mean(axis=0)
    lam = 2 * np.pi * np.fft.fftfreq(n, dx)
    shape = (n,) + (1,) * (v.ndim - 1)
    spec = np.fft.fft(v - mean, axis=0)
    spec[0] = 0
    spec[1:] /= 1j * lam[1:].reshape((n - 1,) + shape[1:])
    if n % 2 == 0:
        spec[n // 2] = 0
    anti = np.fft.ifft(spec, axis=0)
    if not np.iscomplexobj(v):
        anti = anti.real
    out = anti + np.multiply.outer(dx * np.arange(n), mean)
    out = out - out[0]
    return np.moveaxis(out, 0, axis)


def running_integral(values: np.ndarray, dx: float, axis: int = 0,
                     direction: str = "from_left", method: str = "trapezoid") -> np.ndarray:
    """Array version of :func:`cumulative_integral` along ``axis``."""
    if method == "trapezoid":
        left = _cumtrapz(values, dx, axis)
    elif method == "spectral":
        left = _cumspectral(values, dx, axis)
    else:
        raise DomainError(f"unknown quadrature method {method!r}")
    if direction == "from_left":
        return left
    if direction == "from_right":
        total = np.take(left, [-1], axis=axis)
        return total - left
    raise DomainError(f"direction must be 'from_left' or 'from_right', got {direction!r}")


def cumulative_integral(field, direction: str = "from_left",
                        method: str = "trapezoid") -> RealField1D:
    """Running integral of real samples.

    ``from_left`` gives ``int_{x_0}^{x_j}``, ``from_right`` gives
    ``int_{x_j}^{x_{n-1}}``; both share the full-grid total, so their sum is
    the same constant at every point.  ``method="spectral"`` integrates the
    trigonometric interpolant instead of the piecewise-linear one and is
    spectrally accurate for samples that decay at both edges.
    """
    values = field.values
    if np.iscomplexobj(values):
        raise DomainError("cumulative_integral expects real samples, e.g. |f|^2")
    out = running_integral(values, field.grid.dx, 0, direction, method)
    return RealField1D(field.grid, out)


def cumulative_weights(grid: Grid1D, method: str = "trapezoid") -> np.ndarray:
    """Matrix ``C`` with ``C @ h == running_integral(h)`` (from the left)."""
    return running_integral(np.eye(grid.n), grid.dx, 0, "from_left", method)


def operator_norm(op: KernelOperator) -> float:
    """Largest singular value of the symmetrically weighted kernel."""
    m = op.weighted_matrix()
    if not np.any(m):
        return 0.0
    return float(np.linalg.norm(m, 2))


def apply_kernel(op: KernelOperator, fld: ComplexField1D) -> ComplexField1D:
    if not fld.grid.matches(op.col_grid):
        raise DimensionError("field grid differs from the operator's column grid")
    return ComplexField1D(op.row_grid, op.matrix() @ fld.values)


def volterra_mask(n: int, polarity: str = "positive") -> np.ndarray:
    """``theta(x - y)`` (positive) or ``theta(y - x)`` (negative), 1/2 on the diagonal."""
    if polarity == "positive":
        m = np.tril(np.ones((n, n)), -1)
    elif polarity == "negative":
        m = np.triu(np.ones((n, n)), 1)
    else:
        raise DomainError(f"polarity must be 'positive' or 'negative', got {polarity!r}")
    m[np.diag_indices(n)] = 0.5
    return m


def volterra(op: KernelOperator, polarity: str = "positive") -> KernelOperator:
    """Restrict a square kernel to one side of the diagonal."""
    if not op.is_square:
        raise DimensionError("Volterra restriction needs a square operator")
    return KernelOperator(op.row_grid, op.col_grid,
                          op.kernel * volterra_mask(op.row_grid.n, polarity), op.weights)
