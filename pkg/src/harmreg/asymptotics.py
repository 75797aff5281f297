"""Limit covariance machinery for the harmonic least-squares estimator.

Self-convolutions of the noise spectral density are computed as cosine
transforms of powers of the covariance; powers of the covariance are
expanded exactly into envelope-times-cosine terms so each piece reduces
to a transform of a smooth monotone envelope. On top of that sit the
per-harmonic limit Gram blocks, the 3x3 covariance blocks of the
normalized estimation errors (in both published variants), the general
spectral-measure form, and the plug-in estimator with truncation tails.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from . import _quad
from .errors import (
    ExperimentError,
    NonIntegrableError,
    OverlapError,
    QuadratureError,
    ValidationError,
)
from .hermite import TransformSpec
from .simulate import HarmonicModel
from .spectral import NoiseSpec, covariance, covariance_envelope, singular_points

DEFAULT_J_MAX = 20
_COEFF_SKIP = 1e-12  # scale-free floor below which a Hermite term is dropped
_CT_TOL = 1e-7
MODES = ("derived", "as-printed")


# ---------------------------------------------------------------------------
# powers of the covariance as sums of envelope * cos(omega t)


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _cos_power(kappa: float, n: int) -> dict:
    """cos^n(kappa t) as {frequency: coefficient} over cos(freq t)."""
    out = {}
    for i in range(n + 1):
        freq = abs((n - 2 * i) * kappa)
        out[freq] = out.get(freq, 0.0) + math.comb(n, i) * 0.5**n
    return out


def _merge_products(dicts) -> dict:
    acc = {0.0: 1.0}
    for d in dicts:
        nxt = {}
        for w1, c1 in acc.items():
            for w2, c2 in d.items():
                for w in (abs(w1 + w2), abs(w1 - w2)):
                    nxt[w] = nxt.get(w, 0.0) + 0.5 * c1 * c2
        acc = nxt
    return acc


@functools.lru_cache(maxsize=4096)
def _power_terms(spec: NoiseSpec, k: int):
    """B(t)^k as a tuple of (weight, envelope-params, ((freq, coef), ...)).

    envelope-params is a tuple of (decay_power, rho) pairs defining
    U(t) = prod (1 + t^rho)^(-decay_power); the cosine dictionary is the
    exact trigonometric expansion of the carrier product.
    """
    comps = spec.components
    terms = []
    for n in _compositions(k, len(comps)):
        weight = math.factorial(k)
        env = []
        dicts = []
        for nj, comp in zip(n, comps):
            weight /= math.factorial(nj)
            weight *= comp.weight**nj
            if nj > 0:
                env.append((nj * comp.alpha / 2.0, comp.rho))
                if comp.kappa != 0.0:
                    dicts.append(_cos_power(comp.kappa, nj))
        freq_map = _merge_products(dicts) if dicts else {0.0: 1.0}
        terms.append((weight, tuple(env), tuple(sorted(freq_map.items()))))
    return tuple(terms)


def _envelope_fns(env):
    def u(t):
        out = 1.0
        for a, rho in env:
            out *= (1.0 + t**rho) ** (-a)
        return out

    def du(t):
        s = 0.0
        for a, rho in env:
            s -= a * rho * t ** (rho - 1.0) / (1.0 + t**rho)
        return u(t) * s

    beta = sum(a * rho for a, rho in env)
    return u, du, beta


@functools.lru_cache(maxsize=65536)
def _envelope_ct(env, mu: float):
    u, du, beta = _envelope_fns(env)
    return _quad.cosine_transform(u, beta, mu, du=du, tol=_CT_TOL)


def self_convolution(
    spec: NoiseSpec, rank: int, k: int, lam: float, tol: float = 1e-5
) -> float:
    """k-fold self-convolution of the spectral density at frequency lam,
    computed as (1/2pi) * integral of B(t)^k cos(lam t) dt.

    Requires k >= rank and an integrable power: alpha_min * k > 1 (and the
    envelope decay exponent times k > 1 when rho != 2). Even in lam. The
    accumulated quadrature error estimate must stay within tol.
    """
    if k < 1 or k < rank:
        raise ValidationError(f"order k = {k} must be >= rank = {rank}")
    if spec.alpha_min * k <= 1.0 or spec.decay_exponent * k <= 1.0:
        raise NonIntegrableError(
            f"self-convolution of order {k} is not integrable: "
            f"alpha_min * k = {spec.alpha_min * k:.3f}"
        )
    lam = abs(float(lam))
    val = 0.0
    err = 0.0
    for weight, env, freq_map in _power_terms(spec, k):
        for omega, coef in freq_map:
            for mu in (abs(lam - omega), lam + omega):
                v, e = _envelope_ct(env, mu)
                val += weight * coef * v
                err += abs(weight * coef) * e
    val /= 2.0 * math.pi
    err /= 2.0 * math.pi
    if err > tol:
        raise QuadratureError(
            f"self-convolution error estimate {err:.2e} exceeds {tol:.2e}"
        )
    if val < 0.0:
        if val < -max(10.0 * err, 1e-8):
            raise QuadratureError(
                f"self-convolution at {lam:.4f} came out negative: {val:.3e}"
            )
        val = 0.0
    return val


def abs_cov_power_integral(spec: NoiseSpec, m: int, lo: float = 0.0) -> float:
    """integral over [lo, inf) of |B(t)|^m dt. Beyond a fixed split point
    the integrand is replaced by its power-law envelope, so the result is
    a slight overestimate there (conservative for the bounds it feeds)."""
    if spec.decay_exponent * m <= 1.0 or spec.alpha_min * m <= 1.0:
        raise NonIntegrableError(f"|B|^{m} is not integrable")
    split = max(4096.0, 4.0 * lo)
    # composite Simpson on dyadic blocks; |B|^m has kinks at zeros of B,
    # so adaptive rules stall at tight tolerances while a fine fixed grid
    # with a step-halving self-check stays robust
    block_edges = [lo]
    width = 8.0
    while block_edges[-1] + width < split:
        block_edges.append(block_edges[-1] + width)
        width *= 2.0
    block_edges.append(split)
    kappa_max = max(c.kappa for c in spec.components)
    main = 0.0
    coarse = 0.0
    for a, b in zip(block_edges[:-1], block_edges[1:]):
        # step must resolve the fastest carrier; without one it may grow
        # with distance since only the envelope varies
        h = max(1.0 / 512.0, a / 1024.0)
        if kappa_max > 0.0:
            h = min(h, math.pi / (48.0 * kappa_max))
        npts = 4 * max(16, math.ceil((b - a) / (4.0 * h))) + 1
        t = np.linspace(a, b, npts)
        y = np.abs(covariance(spec, t)) ** m
        main += integrate.simpson(y, x=t)
        coarse += integrate.simpson(y[::2], x=t[::2])
    if abs(main - coarse) > 1e-6 * max(1.0, abs(main)):
        raise QuadratureError(
            f"|B|^{m} integral did not stabilize: "
            f"{main:.9g} vs {coarse:.9g} on the halved grid"
        )
    # envelope tail integrates like C t^(-beta) past the split point
    beta = spec.decay_exponent * m
    tail = covariance_envelope(spec, split) ** m * split / (beta - 1.0)
    return main + tail


@functools.lru_cache(maxsize=1024)
def b_m(spec: NoiseSpec, m: int) -> float:
    """B_m = integral over the whole line of |B(t)|^m dt."""
    return 2.0 * abs_cov_power_integral(spec, m, 0.0)


def abs_cov_tail(spec: NoiseSpec, m: int, horizon: float) -> float:
    """integral over [horizon, inf) of |B(t)|^m dt."""
    return abs_cov_power_integral(spec, m, horizon)


def _active_orders(transform: TransformSpec, j_max: int):
    orders = []
    for j in range(transform.rank, min(j_max, transform.k_max) + 1):
        c = transform.coeffs[j]
        if abs(c) / math.sqrt(math.factorial(j)) > _COEFF_SKIP:
            orders.append((j, c * c / math.factorial(j)))
    return orders


def _tail_mass(transform: TransformSpec, j_max: int) -> float:
    mass = transform.tail_coefficient_mass()
    for j in range(j_max + 1, transform.k_max + 1):
        mass += transform.coeffs[j] ** 2 / math.factorial(j)
    return mass


def spectral_factor(
    spec: NoiseSpec,
    transform: TransformSpec,
    lam: float,
    j_max: int = DEFAULT_J_MAX,
) -> tuple[float, float]:
    """s(lam) = sum_{j=rank}^{j_max} (C_j^2 / j!) f^(*j)(lam) and the
    truncation tail bound (1/2pi) B_rank sum_{j>j_max} C_j^2 / j!."""
    if j_max < transform.rank:
        raise ValidationError("j_max below the transform rank")
    s = 0.0
    for j, w in _active_orders(transform, j_max):
        s += w * self_convolution(spec, transform.rank, j, lam)
    tail = _tail_mass(transform, j_max) * b_m(spec, transform.rank) / (2.0 * math.pi)
    return s, tail


# ---------------------------------------------------------------------------
# per-harmonic Gram structure and covariance blocks


@dataclass
class GramBlock:
    """Limit Gram matrix of the normalized regressors of one harmonic and
    the scalers mapping d_T-normalization to (sqrt(T), sqrt(T), T^(3/2))."""

    j_matrix: np.ndarray
    scalers: np.ndarray

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.j_matrix))


def gram_block(a: float, b: float) -> GramBlock:
    c2 = a * a + b * b
    if c2 <= 0.0:
        raise ValidationError("harmonic amplitude is zero")
    c = math.sqrt(c2)
    off_b = math.sqrt(3.0) * b / (2.0 * c)
    off_c = -math.sqrt(3.0) * a / (2.0 * c)
    j = np.array([
        [1.0, 0.0, off_b],
        [0.0, 1.0, off_c],
        [off_b, off_c, 1.0],
    ])
    scalers = np.array([math.sqrt(0.5), math.sqrt(0.5), math.sqrt(c2 / 6.0)])
    return GramBlock(j_matrix=j, scalers=scalers)


def gamma_matrix(
    a: float,
    b: float,
    phi: float,
    transform: TransformSpec,
    spec: NoiseSpec,
    j_max: int = DEFAULT_J_MAX,
    mode: str = "derived",
    s_value: float | None = None,
) -> np.ndarray:
    """3x3 covariance block of (sqrt(T)(A^-A), sqrt(T)(B^-B),
    T^(3/2)(phi^-phi)) for one harmonic.

    mode='as-printed' returns 4pi s/C^2 * [[C^2, -3AB, -6B], [-3AB, C^2,
    6A], [-6B, 6A, 12]] verbatim; mode='derived' returns D (2pi s J^-1) D
    with D = diag(sqrt(2), sqrt(2), sqrt(6)/C), which replaces the two
    leading diagonal entries by A^2+4B^2 and 4A^2+B^2 and is positive
    definite. Off-diagonals and the (3,3) entry agree between modes.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}")
    c2 = a * a + b * b
    if c2 <= 0.0:
        raise ValidationError("harmonic amplitude is zero")
    if s_value is None:
        s_value, _ = spectral_factor(spec, transform, phi, j_max)
    pref = 4.0 * math.pi * s_value / c2
    if mode == "as-printed":
        return pref * np.array([
            [c2, -3.0 * a * b, -6.0 * b],
            [-3.0 * a * b, c2, 6.0 * a],
            [-6.0 * b, 6.0 * a, 12.0],
        ])
    block = gram_block(a, b)
    d = np.diag(1.0 / block.scalers)
    core = 2.0 * math.pi * s_value * np.linalg.inv(block.j_matrix)
    return d @ core @ d


@dataclass
class GammaReport:
    """Per-harmonic limit covariance blocks with their spectral factors,
    truncation metadata, and eigenvalues."""

    mode: str
    j_max: int
    frequencies: tuple
    matrices: tuple
    s_values: tuple
    tail_bounds: tuple
    eigenvalues: tuple

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        if self.mode == "derived":
            for phi, eig in zip(self.frequencies, self.eigenvalues):
                if np.min(eig) <= 0.0:
                    raise ExperimentError(
                        f"derived covariance block at {phi:.4f} is not "
                        "positive definite"
                    )


def gamma_report(
    model: HarmonicModel,
    transform: TransformSpec,
    spec: NoiseSpec,
    j_max: int = DEFAULT_J_MAX,
    mode: str = "derived",
) -> GammaReport:
    """gamma_matrix for every harmonic of the model, with s factors and
    tail bounds."""
    a_arr, b_arr, phi_arr = model.amplitudes()
    mats, svals, tails, eigs = [], [], [], []
    for a, b, phi in zip(a_arr, b_arr, phi_arr):
        s, tail = spectral_factor(spec, transform, phi, j_max)
        m = gamma_matrix(a, b, phi, transform, spec, j_max, mode, s_value=s)
        mats.append(m)
        svals.append(s)
        tails.append(tail)
        eigs.append(np.linalg.eigvalsh(m))
    return GammaReport(
        mode=mode,
        j_max=j_max,
        frequencies=tuple(float(p) for p in phi_arr),
        matrices=tuple(mats),
        s_values=tuple(svals),
        tail_bounds=tuple(tails),
        eigenvalues=tuple(eigs),
    )


# ---------------------------------------------------------------------------
# general spectral-measure form


def trig_spectral_measure(a: float, b: float, phi: float):
    """Atoms (location, 3x3 Hermitian mass block) of the spectral measure
    of one normalized harmonic regressor triple; masses at +phi and -phi
    are complex conjugates and sum to the real Gram block."""
    c2 = a * a + b * b
    if c2 <= 0.0:
        raise ValidationError("harmonic amplitude is zero")
    c = math.sqrt(c2)
    beta_p = math.sqrt(3.0) * (b - 1j * a) / (4.0 * c)
    gamma_p = -math.sqrt(3.0) * (a + 1j * b) / (4.0 * c)
    m_plus = np.array([
        [0.5, 0.5j, beta_p],
        [-0.5j, 0.5, gamma_p],
        [np.conj(beta_p), np.conj(gamma_p), 0.5],
    ])
    return [(phi, m_plus), (-phi, np.conj(m_plus))]


def sigma_general(
    transform: TransformSpec,
    spec: NoiseSpec,
    atoms,
    j_max: int = DEFAULT_J_MAX,
) -> tuple[np.ndarray, np.ndarray]:
    """(Sigma, Sigma0) for a discrete regression spectral measure.

    Sigma = 2pi sum_k (C_k^2/k!) sum_atoms f^(*k)(location) * mass;
    Sigma0 = (total mass)^-1 Sigma (total mass)^-1. Atom locations must
    avoid the singular points of the noise density.
    """
    atoms = [(float(loc), np.asarray(mass)) for loc, mass in atoms]
    if not atoms:
        raise ValidationError("spectral measure needs at least one atom")
    sing = [pt for pt, _ in singular_points(spec)]
    for loc, _ in atoms:
        for pt in sing:
            if abs(abs(loc) - abs(pt)) < 1e-9:
                raise OverlapError(
                    f"measure atom at {loc:.6f} overlaps noise singular "
                    f"point {pt:.6f}"
                )
    q = atoms[0][1].shape[0]
    total = np.zeros_like(atoms[0][1], dtype=complex)
    for _, mass in atoms:
        if mass.shape != (q, q):
            raise ValidationError("atom mass blocks must share one shape")
        total += mass
    if np.linalg.cond(total) > 1e12:
        raise ValidationError("spectral measure total mass is singular")
    sigma = np.zeros((q, q), dtype=complex)
    for j, w in _active_orders(transform, j_max):
        for loc, mass in atoms:
            sigma += (
                w * self_convolution(spec, transform.rank, j, abs(loc)) * mass
            )
    sigma *= 2.0 * math.pi
    inv = np.linalg.inv(total)
    sigma0 = inv @ sigma @ inv
    if np.max(np.abs(sigma.imag)) < 1e-10 * max(np.max(np.abs(sigma.real)), 1.0):
        sigma = sigma.real
        sigma0 = sigma0.real
    return sigma, sigma0


def plug_in_gamma(
    result,
    transform: TransformSpec,
    spec: NoiseSpec,
    j_max: int = DEFAULT_J_MAX,
    mode: str = "derived",
) -> GammaReport:
    """GammaReport evaluated at the estimated parameters (Theorem-7 style
    plug-in); the tail bound fields carry the truncation error bound."""
    band = result.model.band
    for _, _, phi in result.model.harmonics:
        if not band[0] < phi < band[1]:
            raise ValidationError("estimated frequency escapes the band")
    return gamma_report(result.model, transform, spec, j_max, mode)
