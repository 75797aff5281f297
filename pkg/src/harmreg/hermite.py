"""Hermite machinery for the noise transform G.

Coefficients follow the moment convention C_k = E[G(xi) H_k(xi)] for the
probabilists' polynomials, so G expands as sum_k (C_k / k!) H_k and the
subordinated covariance is sum_k (C_k^2 / k!) B(t)^k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special

from .errors import DegenerateTransformError, QuadratureError, ValidationError
from .spectral import NoiseSpec, covariance

SQRT_2PI = math.sqrt(2.0 * math.pi)
DEFAULT_K_MAX = 20
RANK_TOL = 1e-8

_GH_NODE_LADDER = (64, 128, 256, 512, 1024)
_GH_STABILITY = 1e-9


def hermite(k: int, x):
    """Probabilists' Hermite polynomial H_k(x) by the three-term recurrence
    H_{k+1} = x H_k - k H_{k-1}. Supports k <= 60; array x broadcasts.
    """
    if k < 0 or k != int(k):
        raise ValidationError(f"hermite order must be a nonnegative integer, got {k}")
    if k > 60:
        raise ValidationError(f"hermite order overflow: k = {k} exceeds 60")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if k == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = x.copy()
    for j in range(1, k):
        h, h_prev = x * h - j * h_prev, h
    return h if h.ndim else float(h)


def _phi(x):
    return np.exp(-0.5 * x * x) / SQRT_2PI


def _gh_pass(g, k_max: int, nodes: int) -> np.ndarray:
    x, w = special.roots_hermitenorm(nodes)
    gx = g(x)
    out = np.empty(k_max + 1)
    h_prev = np.ones_like(x)
    h = x.copy()
    out[0] = (w * gx).sum() / SQRT_2PI
    if k_max >= 1:
        out[1] = (w * gx * h).sum() / SQRT_2PI
    for k in range(2, k_max + 1):
        h, h_prev = x * h - (k - 1) * h_prev, h
        out[k] = (w * gx * h).sum() / SQRT_2PI
    return out


def _adaptive_pass(g, k_max: int, breakpoints, epsabs: float) -> np.ndarray:
    pts = sorted(breakpoints)
    edges = [-np.inf, *pts, np.inf]
    out = np.empty(k_max + 1)
    for k in range(k_max + 1):
        fk = lambda x: g(np.asarray(x)) * hermite(k, x) * _phi(x)
        acc = 0.0
        for a, b in zip(edges, edges[1:]):
            val, _ = integrate.quad(fk, a, b, epsabs=epsabs, epsrel=1e-12, limit=300)
            acc += val
        out[k] = acc
    return out


def hermite_coefficients(g, k_max: int = DEFAULT_K_MAX, breakpoints=()) -> np.ndarray:
    """Coefficients C_k = int G(x) H_k(x) phi(x) dx for k = 0..k_max.

    Gauss-Hermite quadrature with node doubling until no coefficient moves
    by more than 1e-9 on the factorial-free scale |Delta C_k| / sqrt(k!)
    (the natural magnitude of C_k grows like sqrt(k!), putting an absolute
    criterion below roundoff at high order). Transforms that are not smooth
    (declared via ``breakpoints``, e.g. a kink at 0) defeat Gauss-Hermite
    convergence; for those the routine escalates to piecewise adaptive
    quadrature split at the breakpoints, applying the same stability
    criterion across two tolerance levels.

    Raises
    ------
    QuadratureError : neither route reaches the stability criterion.
    ValidationError : |C_0| > 1e-8 (the transform must be centered).
    """
    scale = np.sqrt([math.factorial(k) for k in range(k_max + 1)])
    prev = _gh_pass(g, k_max, _GH_NODE_LADDER[0])
    coeffs = None
    for nodes in _GH_NODE_LADDER[1:]:
        cur = _gh_pass(g, k_max, nodes)
        if np.max(np.abs(cur - prev) / scale) <= _GH_STABILITY:
            coeffs = cur
            break
        prev = cur
    if coeffs is None:
        if not breakpoints:
            raise QuadratureError(
                "Gauss-Hermite coefficients did not stabilize to 1e-9; "
                "declare breakpoints for non-smooth transforms"
            )
        rough = _adaptive_pass(g, k_max, breakpoints, epsabs=1e-10)
        fine = _adaptive_pass(g, k_max, breakpoints, epsabs=1e-12)
        if np.max(np.abs(fine - rough) / scale) > _GH_STABILITY:
            raise QuadratureError("adaptive Hermite coefficients did not stabilize to 1e-9")
        coeffs = fine
    if abs(coeffs[0]) > 1e-8:
        raise ValidationError(
            f"transform has nonzero mean: C_0 = {coeffs[0]:.3e} (must be centered)"
        )
    return coeffs


def _tail_weight(k: int, a: float) -> float:
    # int_a^inf H_k(x) phi(x) dx; the k >= 1 case telescopes through the
    # derivative identity (H_{k-1} phi)' = -H_k phi
    if k == 0:
        return 0.5 * math.erfc(a / math.sqrt(2.0))
    return float(hermite(k - 1, a) * _phi(a))


def _table_pass(xs, gs, k_max: int, nodes: int) -> np.ndarray:
    """Coefficients of the piecewise-linear interpolant with constant
    clamping outside the table, by per-segment Gauss-Legendre quadrature
    plus closed-form Gaussian tails."""
    xs = np.asarray(xs, dtype=float)
    gs = np.asarray(gs, dtype=float)
    u, w = np.polynomial.legendre.leggauss(nodes)
    a, b = xs[:-1], xs[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * u[None, :]
    gx = np.interp(x, xs, gs)
    weights = half[:, None] * w[None, :]
    base = gx * _phi(x) * weights
    out = np.empty(k_max + 1)
    h_prev = np.ones_like(x)
    h = x.copy()
    out[0] = base.sum()
    if k_max >= 1:
        out[1] = (base * h).sum()
    for k in range(2, k_max + 1):
        h, h_prev = x * h - (k - 1) * h_prev, h
        out[k] = (base * h).sum()
    for k in range(k_max + 1):
        out[k] += gs[-1] * _tail_weight(k, xs[-1])
        out[k] += gs[0] * _tail_weight(k, -xs[0]) * (-1.0) ** k
    return out


def _table_eg2(xs, gs) -> float:
    xs = np.asarray(xs, dtype=float)
    gs = np.asarray(gs, dtype=float)
    u, w = np.polynomial.legendre.leggauss(16)
    a, b = xs[:-1], xs[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    x = mid[:, None] + half[:, None] * u[None, :]
    gx = np.interp(x, xs, gs)
    eg2 = float((gx * gx * _phi(x) * half[:, None] * w[None, :]).sum())
    eg2 += gs[-1] ** 2 * _tail_weight(0, xs[-1])
    eg2 += gs[0] ** 2 * _tail_weight(0, -xs[0])
    return eg2


_TABLE_CENTER_CAP = 1e-3


def _table_coefficients(xs, gs, k_max: int) -> tuple[np.ndarray, float]:
    """Coefficients of the table interpolant and the constant shift that
    centers it. A centered transform tabulated at resolution h picks up an
    O(h^2) interpolation mean, so exact centering is enforced by absorbing
    that residual into a shift rather than rejecting the table; a mean
    beyond the cap signals a genuinely uncentered transform."""
    rough = _table_pass(xs, gs, k_max, 8)
    fine = _table_pass(xs, gs, k_max, 16)
    scale = np.sqrt([math.factorial(k) for k in range(k_max + 1)])
    if np.max(np.abs(fine - rough) / scale) > _GH_STABILITY:
        raise QuadratureError("table Hermite coefficients did not stabilize to 1e-9")
    shift = float(fine[0])
    if abs(shift) > _TABLE_CENTER_CAP:
        raise ValidationError(
            f"transform has nonzero mean: C_0 = {shift:.3e} (must be centered)"
        )
    # subtracting a constant moves only C_0: int H_k phi = 0 for k >= 1
    fine[0] = 0.0
    return fine, shift


def hermite_rank(coeffs, tol: float = RANK_TOL) -> int:
    """Smallest k >= 1 with |C_k|/sqrt(k!) above tolerance."""
    coeffs = np.asarray(coeffs, dtype=float)
    for k in range(1, len(coeffs)):
        if abs(coeffs[k]) / math.sqrt(math.factorial(k)) > tol:
            return k
    raise DegenerateTransformError("all Hermite coefficients below rank tolerance")


def subordinated_covariance(coeffs, spec: NoiseSpec, t, rank: int | None = None):
    """Covariance of G(xi) at lag t: sum_{k=m}^{K_max} (C_k^2 / k!) B(t)^k."""
    coeffs = np.asarray(coeffs, dtype=float)
    m = hermite_rank(coeffs) if rank is None else rank
    b = covariance(spec, t)
    b_arr = np.asarray(b, dtype=float)
    out = np.zeros_like(b_arr)
    for k in range(m, len(coeffs)):
        out += coeffs[k] ** 2 / math.factorial(k) * b_arr**k
    return out if out.ndim else float(out)


_ABS_CENTER = math.sqrt(2.0 / math.pi)


def _g_identity(x):
    return np.asarray(x, dtype=float)


def _g_cube(x):
    return np.asarray(x, dtype=float) ** 3


def _g_centered_abs(x):
    return np.abs(np.asarray(x, dtype=float)) - _ABS_CENTER


@dataclass(frozen=True)
class TransformSpec:
    """The noise transform G with its Hermite data.

    ``coeffs`` is the moment-convention list (C_0..C_K_max); ``aux`` holds
    kind-specific extras (Hermite-basis weights or the sample table) as
    nested tuples so the spec stays hashable and picklable.
    """

    kind: str
    coeffs: tuple[float, ...]
    rank: int
    eg2: float = field(compare=False)
    parseval_gap: float = field(compare=False)
    aux: tuple = ()

    @property
    def k_max(self) -> int:
        return len(self.coeffs) - 1

    def g(self, x):
        """Apply G pointwise."""
        if self.kind == "identity":
            return _g_identity(x)
        if self.kind == "cube":
            return _g_cube(x)
        if self.kind == "centered-absolute-value":
            return _g_centered_abs(x)
        if self.kind == "hermite-polynomial":
            weights = [c / math.factorial(k) for k, c in enumerate(self.coeffs)]
            return np.polynomial.hermite_e.hermeval(np.asarray(x, dtype=float), weights)
        if self.kind == "user-table":
            xs, gs = self.aux
            return np.interp(np.asarray(x, dtype=float), xs, gs)
        raise ValidationError(f"unknown transform kind {self.kind!r}")

    def tail_coefficient_mass(self) -> float:
        """sum_{k > K_max} C_k^2 / k!, from the Parseval gap."""
        return self.parseval_gap


def _finish_transform(
    kind: str, g, coeffs: np.ndarray, aux: tuple = (), breakpoints=(), eg2=None
) -> TransformSpec:
    rank = hermite_rank(coeffs)
    if eg2 is None and breakpoints:
        # kinked transforms defeat Gauss-Hermite; integrate EG^2 piecewise
        edges = [-np.inf, *sorted(breakpoints), np.inf]
        eg2 = 0.0
        for a, b in zip(edges, edges[1:]):
            val, _ = integrate.quad(
                lambda x: g(np.asarray(x)) ** 2 * _phi(x),
                a, b, epsabs=1e-12, epsrel=1e-12, limit=300,
            )
            eg2 += val
    elif eg2 is None:
        # EG^2 by the same node ladder used for the coefficients
        x, w = special.roots_hermitenorm(_GH_NODE_LADDER[-1])
        eg2 = float((w * g(x) ** 2).sum() / SQRT_2PI)
    partial = float(sum(c * c / math.factorial(k) for k, c in enumerate(coeffs) if k >= 1))
    gap = eg2 - partial
    if gap < -1e-6:
        raise QuadratureError(
            f"Parseval mismatch: coefficient mass {partial:.9f} exceeds EG^2 {eg2:.9f}"
        )
    if gap > 0.05 * max(eg2, 1e-12):
        raise ValidationError(
            f"truncation at K_max = {len(coeffs) - 1} loses {gap / eg2:.1%} of EG^2; "
            "increase K_max or supply a smoother transform"
        )
    return TransformSpec(
        kind=kind,
        coeffs=tuple(float(c) for c in coeffs),
        rank=rank,
        eg2=eg2,
        parseval_gap=max(gap, 0.0),
        aux=aux,
    )


def make_transform(kind: str, *, coeffs=None, table=None, k_max: int = DEFAULT_K_MAX) -> TransformSpec:
    """Build a TransformSpec for one of the supported kinds.

    kind='hermite-polynomial' takes ``coeffs`` as the C_k list (moment
    convention); kind='user-table' takes ``table`` as an (x, G(x)) pair of
    arrays covering the bulk of the standard normal range.
    """
    if kind == "identity":
        return _finish_transform(kind, _g_identity, hermite_coefficients(_g_identity, k_max))
    if kind == "cube":
        return _finish_transform(kind, _g_cube, hermite_coefficients(_g_cube, k_max))
    if kind == "centered-absolute-value":
        c = hermite_coefficients(_g_centered_abs, k_max, breakpoints=(0.0,))
        return _finish_transform(kind, _g_centered_abs, c, breakpoints=(0.0,))
    if kind == "hermite-polynomial":
        if coeffs is None:
            raise ValidationError("hermite-polynomial transform requires coeffs")
        c = np.zeros(max(k_max + 1, len(coeffs)))
        c[: len(coeffs)] = np.asarray(coeffs, dtype=float)
        if abs(c[0]) > 1e-8:
            raise ValidationError("transform must be centered: C_0 = 0")
        weights = [v / math.factorial(k) for k, v in enumerate(c)]
        g = lambda x: np.polynomial.hermite_e.hermeval(np.asarray(x, dtype=float), weights)
        return _finish_transform(kind, g, c)
    if kind == "user-table":
        if table is None:
            raise ValidationError("user-table transform requires table")
        xs = tuple(float(v) for v in table[0])
        gs = tuple(float(v) for v in table[1])
        if len(xs) < 2 or len(xs) != len(gs):
            raise ValidationError("table must be two equal-length sequences")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValidationError("table abscissae must be strictly increasing")
        # the interpolant is piecewise linear with constant clamping, so
        # its coefficients and EG^2 integrate segment by segment
        c, shift = _table_coefficients(xs, gs, k_max)
        gs = tuple(v - shift for v in gs)
        g = lambda x: np.interp(np.asarray(x, dtype=float), xs, gs)
        return _finish_transform(kind, g, c, aux=(xs, gs), eg2=_table_eg2(xs, gs))
    raise ValidationError(f"unknown transform kind {kind!r}")
