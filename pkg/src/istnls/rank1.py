"""Rank-1 operator calculus: resolvents, Volterra inverses, factorizations,
the norm-preserving maps A_k and the explicit scattering matrix.

Discrete conventions
--------------------
Operators act on sample vectors as ``K @ diag(w)`` with trapezoid weights.
Running traces such as ``T(x_i) = int_{-inf}^{x_i} f g`` are taken as the
partial sums ``tau_i = sum_{j<i} w_j f_j g_j`` (exclusive) and
``tau_{i+1}`` (inclusive).  Where a continuum formula divides by ``1 - T``,
the discrete kernels divide by the geometric mean
``sqrt((1 - tau_i)(1 - tau_{i+1}))`` and the diagonal is chosen so that the
discrete operator identities hold exactly in finite dimensions.  Both choices
agree with the continuum kernels up to ``O(dx^2)``, and the diagonal
reduces to the half-weight rule of a theta mask as ``dx -> 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    ComplexField1D,
    DimensionError,
    DomainError,
    Grid1D,
    KernelOperator,
    SingularityError,
    operator_norm,
    volterra_mask,
)

SINGULAR_TOL = 1e-12
NORM_TOL = 1e-10


def _check_k(k: float) -> float:
    k = float(k)
    if not (0.0 <= k < 1.0):
        raise DomainError(f"coupling k must satisfy 0 <= k < 1, got {k}")
    return k


def _guard(den: np.ndarray, what: str) -> None:
    if np.any(np.abs(den) < SINGULAR_TOL):
        raise SingularityError(f"{what} vanishes on the grid")


def _exclusive_left(a: np.ndarray) -> np.ndarray:
    """``sum_{j<i} a_j`` for each i."""
    out = np.zeros_like(a)
    out[1:] = np.cumsum(a)[:-1]
    return out


def _exclusive_right(a: np.ndarray) -> np.ndarray:
    """``sum_{j>i} a_j`` for each i."""
    out = np.zeros_like(a)
    out[:-1] = np.cumsum(a[::-1])[::-1][1:]
    return out


@dataclass(frozen=True)
class Rank1Data:
    """Scattering data ``k f_hat(xi) g_hat(eta)`` with unit-norm factors."""

    k: float
    f_hat: ComplexField1D
    g_hat: ComplexField1D

    def __post_init__(self):
        object.__setattr__(self, "k", _check_k(self.k))
        for name in ("f_hat", "g_hat"):
            nrm = getattr(self, name).norm()
            if abs(nrm - 1.0) > NORM_TOL:
                raise DomainError(f"{name} must have unit norm, got {nrm:.12g}")

    @classmethod
    def from_factors(cls, f: ComplexField1D, g: ComplexField1D,
                     k: float | None = None) -> "Rank1Data":
        """Normalize ``f`` and ``g``; ``k`` defaults to ``|f| |g|``."""
        if k is None:
            k = f.norm() * g.norm()
        return cls(k, f.normalized(), g.normalized())

    @property
    def xi_grid(self) -> Grid1D:
        return self.f_hat.grid

    @property
    def eta_grid(self) -> Grid1D:
        return self.g_hat.grid

    def kernel(self) -> KernelOperator:
        return KernelOperator(self.xi_grid, self.eta_grid,
                              self.k * np.outer(self.f_hat.values, self.g_hat.values))


@dataclass(frozen=True)
class ScatteringMatrix:
    """The four blocks of ``S = I + F``.

    ``F11`` acts on the eta grid, ``F22`` on the xi grid, ``F21`` maps eta
    to xi and ``F12`` maps xi to eta.
    """

    F11: KernelOperator
    F12: KernelOperator
    F21: KernelOperator
    F22: KernelOperator

    def weights(self) -> np.ndarray:
        return np.concatenate([self.F11.weights, self.F22.weights])

    def block_matrix(self) -> np.ndarray:
        """Dense matrix of ``S`` acting on stacked samples ``(a1(eta), a2(xi))``."""
        n1 = self.F11.row_grid.n
        n2 = self.F22.row_grid.n
        return np.block([
            [np.eye(n1) + self.F11.matrix(), self.F12.matrix()],
            [self.F21.matrix(), np.eye(n2) + self.F22.matrix()],
        ])

    def adjoint_matrix(self) -> np.ndarray:
        """Adjoint of ``S`` in the weighted inner product: ``W^-1 S^H W``."""
        w = self.weights()
        return self.block_matrix().conj().T * w[None, :] / w[:, None]

    def unitarity_defect(self) -> float:
        s = self.block_matrix()
        eye = np.eye(s.shape[0])
        return float(max(np.abs(s @ self.adjoint_matrix() - eye).max(),
                         np.abs(self.adjoint_matrix() @ s - eye).max()))

    def factorization_defect(self) -> float:
        """``max |(I - F12 G21) - (I + F11)(I + G11)|`` with ``G = F*``."""
        n = self.F11.row_grid.n
        eye = np.eye(n)
        g21 = self.F12.adjoint().matrix()
        g11 = self.F11.adjoint().matrix()
        lhs = eye - self.F12.matrix() @ g21
        rhs = (eye + self.F11.matrix()) @ (eye + g11)
        return float(np.abs(lhs - rhs).max())


# -- the maps A_k -------------------------------------------------------------

def _ak_denominator(f: ComplexField1D, k: float, tail: bool) -> np.ndarray:
    a = f.grid.weights() * np.abs(f.values) ** 2
    a = a / a.sum()
    excl = _exclusive_right(a) if tail else _exclusive_left(a)
    den = np.sqrt((1 - k**2 * excl) * (1 - k**2 * (excl + a)))
    _guard(den, "A_k denominator")
    return den


def apply_Ak(f: ComplexField1D, k: float) -> ComplexField1D:
    """Norm-preserving map ``sqrt(1-k^2) f / (1 - k^2 F(x)/|f|^2)``."""
    k = _check_k(k)
    if not np.any(f.values):
        return f
    den = _ak_denominator(f, k, tail=False)
    return ComplexField1D(f.grid, np.sqrt(1 - k**2) * f.values / den)


def apply_Ak_inv(F: ComplexField1D, k: float) -> ComplexField1D:
    """Inverse of :func:`apply_Ak`, built from the right running integral."""
    k = _check_k(k)
    if not np.any(F.values):
        return F
    den = _ak_denominator(F, k, tail=True)
    return ComplexField1D(F.grid, np.sqrt(1 - k**2) * F.values / den)


# -- rank-1 operators ---------------------------------------------------------

def rank1_factors(K: KernelOperator, rtol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Split a separable kernel into ``f(x) g(y)`` samples.

    Raises :class:`DomainError` if the kernel is not rank 1 to ``rtol``.
    """
    k = K.kernel
    peak = np.abs(k).max()
    if peak == 0:
        return np.zeros(k.shape[0], complex), np.zeros(k.shape[1], complex)
    i0, j0 = np.unravel_index(np.argmax(np.abs(k)), k.shape)
    f = k[:, j0].copy()
    g = k[i0, :] / k[i0, j0]
    if np.abs(np.outer(f, g) - k).max() > rtol * peak:
        raise DomainError("kernel is not of rank 1")
    return f, g


def resolvent_rank1(K: KernelOperator) -> KernelOperator:
    """Kernel of ``(I - K)^-1 - I`` for rank-1 ``K``, namely ``K / (1 - tr K)``."""
    rank1_factors(K)
    den = 1 - K.trace()
    if abs(den) < SINGULAR_TOL:
        raise SingularityError("tr K = 1: I - K is not invertible")
    return K.scaled(1 / den)


def _same_grid(f: ComplexField1D, g: ComplexField1D) -> Grid1D:
    if not f.grid.matches(g.grid):
        raise DimensionError("factors of a Volterra kernel must share one grid")
    return f.grid


def plain_volterra(f: ComplexField1D, g: ComplexField1D) -> KernelOperator:
    """``f(x) g(y) theta(x - y)`` with the half-weight diagonal."""
    grid = _same_grid(f, g)
    kern = np.outer(f.values, g.values) * volterra_mask(grid.n, "positive")
    return KernelOperator(grid, grid, kern)


def _running_trace(f: ComplexField1D, g: ComplexField1D):
    w = f.grid.weights()
    p = w * f.values * g.values
    tau = np.concatenate([[0], np.cumsum(p)])
    return w, p, tau


def predivided_volterra(f: ComplexField1D, g: ComplexField1D) -> KernelOperator:
    """``f(x) g(y) theta(x - y) / (1 - T(x))`` with ``T`` the running trace of ``f g``."""
    grid = _same_grid(f, g)
    w, _, tau = _running_trace(f, g)
    _guard(1 - tau, "1 - T")
    s = np.sqrt(1 - tau)
    den = s[:-1] * s[1:]
    kern = np.tril(np.outer(f.values / den, g.values), -1)
    kern[np.diag_indices(grid.n)] = (s[:-1] / s[1:] - 1) / w
    return KernelOperator(grid, grid, kern)


def volterra_inverse_rank1(f: ComplexField1D, g: ComplexField1D,
                           form: str = "plain") -> KernelOperator:
    """Correction kernel of the inverse of a rank-1 Volterra operator.

    ``plain``: ``K+ = plain_volterra(f, g)`` and ``(I - K+)^-1 = I + K_hat``.
    ``predivided``: ``K+ = predivided_volterra(f, g)`` and
    ``(I + K+)^-1 = I - K_hat`` with ``K_hat ~ f(x) g(y) theta(x-y) / (1 - T(y))``.
    """
    grid = _same_grid(f, g)
    n = grid.n
    w, p, tau = _running_trace(f, g)
    fv, gv = f.values, g.values
    if form == "plain":
        half = 1 - 0.5 * p
        _guard(half, "1 - w f g / 2")
        # log of prod_{j<k<i} (1 + p_k/2)/(1 - p_k/2), via cumulative sums
        log_rho = np.log((1 + 0.5 * p) / half)
        lc = np.concatenate([[0], np.cumsum(log_rho)])
        expo = lc[:n, None] - lc[None, 1:]
        expo = np.where(np.tril(np.ones((n, n), bool), -1), expo, -np.inf)
        kern = np.outer(fv / half, gv / half) * np.exp(expo)
        kern[np.diag_indices(n)] = 0.5 * fv * gv / half
    elif form == "predivided":
        _guard(1 - tau, "1 - T")
        s = np.sqrt(1 - tau)
        den = s[:-1] * s[1:]
        kern = np.tril(np.outer(fv, gv / den), -1)
        kern[np.diag_indices(n)] = (1 - s[1:] / s[:-1]) / w
    else:
        raise DomainError(f"form must be 'plain' or 'predivided', got {form!r}")
    return KernelOperator(grid, grid, kern)


def factorize_rank1(K: KernelOperator):
    """Volterra factors with ``I - K = (I+A+)^-1 (I+A-)^-1 = (I+B-)^-1 (I+B+)^-1``.

    Returns ``(A_plus, A_minus, B_plus, B_minus)``.  ``A_plus`` and ``B_plus``
    are supported on ``x >= y``, ``A_minus`` and ``B_minus`` on ``y >= x``.
    """
    if not K.is_square:
        raise DimensionError("factorization needs a square operator")
    nrm = operator_norm(K)
    if nrm >= 1:
        raise DomainError(f"factorization needs ||K|| < 1, got {nrm:.6g}")
    f, g = rank1_factors(K)
    grid = K.row_grid
    n = grid.n
    w = grid.weights()
    p = w * f * g

    # left running traces: tr K Q_x
    tau = np.concatenate([[0], np.cumsum(p)])
    _guard(1 - tau, "1 - tr K Q_x")
    s = np.sqrt(1 - tau)
    den = s[:-1] * s[1:]
    diag = (s[:-1] / s[1:] - 1) / w
    a_plus = np.tril(np.outer(f / den, g), -1)
    a_minus = np.triu(np.outer(f, g / den), 1)
    a_plus[np.diag_indices(n)] = diag
    a_minus[np.diag_indices(n)] = diag

    # right running traces: tr K P_x
    excl = _exclusive_right(p)
    _guard(1 - excl - p, "1 - tr K P_x")
    se = np.sqrt(1 - excl)
    si = np.sqrt(1 - excl - p)
    den = se * si
    diag = (se / si - 1) / w
    b_minus = np.triu(np.outer(f / den, g), 1)
    b_plus = np.tril(np.outer(f, g / den), -1)
    b_minus[np.diag_indices(n)] = diag
    b_plus[np.diag_indices(n)] = diag

    mk = lambda m: KernelOperator(grid, grid, m)  # noqa: E731
    return mk(a_plus), mk(a_minus), mk(b_plus), mk(b_minus)


def scattering_elements(data: Rank1Data) -> ScatteringMatrix:
    """All blocks of the unitary scattering operator for rank-1 ``F21``."""
    k = data.k
    xi, eta = data.xi_grid, data.eta_grid
    f, g = data.f_hat.values, data.g_hat.values
    F21 = data.kernel()
    if k == 0:
        zero = lambda r, c: KernelOperator(r, c, np.zeros((r.n, c.n)))  # noqa: E731
        return ScatteringMatrix(zero(eta, eta), zero(eta, xi), F21, zero(xi, xi))

    def tail_factor(grid, a_raw, from_right):
        a = grid.weights() * a_raw
        excl = _exclusive_right(a) if from_right else _exclusive_left(a)
        lo, hi = 1 - k**2 * excl, 1 - k**2 * (excl + a)
        _guard(lo * hi, "scattering denominator")
        return np.sqrt(lo * hi), (np.sqrt(hi / lo) - 1) / grid.weights()

    # F11 on eta: -k^2 conj(g(x)) g(y) theta(x-y) / (1 - k^2 int_x^inf |g|^2)
    den, diag = tail_factor(eta, np.abs(g) ** 2, from_right=True)
    f11 = np.tril(-k**2 * np.outer(np.conj(g) / den, g), -1)
    f11[np.diag_indices(eta.n)] = diag

    # F22 on xi: -k^2 f(x) conj(A_k f(y)) / sqrt(1 - k^2), lower triangular
    den, diag = tail_factor(xi, np.abs(f) ** 2, from_right=False)
    f22 = np.tril(-k**2 * np.outer(f, np.conj(f) / den), -1)
    f22[np.diag_indices(xi.n)] = diag

    g_inv = apply_Ak_inv(data.g_hat, k).values
    f_ak = apply_Ak(data.f_hat, k).values
    f12 = -k * np.outer(np.conj(g_inv), np.conj(f_ak))

    return ScatteringMatrix(
        KernelOperator(eta, eta, f11),
        KernelOperator(eta, xi, f12),
        F21,
        KernelOperator(xi, xi, f22),
    )
