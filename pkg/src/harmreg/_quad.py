"""Quadrature helpers shared by the spectral and asymptotics modules.

Three problems recur: integrating a density across integrable power-law
singularities, closing an exponential upper tail, and cosine transforms
of slowly decaying envelopes where truncation must be corrected by
endpoint asymptotics rather than brute domain growth.
"""

from __future__ import annotations

import math

from scipy import integrate

from .errors import QuadratureError

_T_START = 256.0
_T_CAP = 131072.0


def panel(f, a: float, b: float, sev_a=None, sev_b=None, tol: float = 1e-6) -> float:
    """Integrate f on [a, b] where either endpoint may carry an integrable
    power-law singularity f ~ C |x - end|^(sev - 1), 0 < sev <= 1.

    Power endpoints (sev < 1) are removed exactly by the substitution
    x = end +/- u^(1/sev); logarithmic endpoints (sev == 1) are left to the
    adaptive rule, whose nodes are interior.
    """
    if b <= a:
        return 0.0
    if sev_a is not None and sev_b is not None:
        mid = 0.5 * (a + b)
        return panel(f, a, mid, sev_a, None, tol) + panel(f, mid, b, None, sev_b, tol)
    if sev_a is not None and sev_a < 1.0:
        e = sev_a
        g = lambda u: f(a + u ** (1.0 / e)) * (1.0 / e) * u ** (1.0 / e - 1.0)
        val, _ = integrate.quad(g, 0.0, (b - a) ** e, epsabs=tol, epsrel=tol, limit=200)
        return val
    if sev_b is not None and sev_b < 1.0:
        e = sev_b
        g = lambda u: f(b - u ** (1.0 / e)) * (1.0 / e) * u ** (1.0 / e - 1.0)
        val, _ = integrate.quad(g, 0.0, (b - a) ** e, epsabs=tol, epsrel=tol, limit=200)
        return val
    val, _ = integrate.quad(f, a, b, epsabs=tol, epsrel=tol, limit=200)
    return val


def upper_tail(f, lo: float, tol: float = 1e-6) -> float:
    """Integrate f on [lo, inf) for exponentially decaying f."""
    val, _ = integrate.quad(f, lo, math.inf, epsabs=tol, epsrel=tol, limit=200)
    return val


def cosine_transform(u, beta: float, mu: float, du=None, tol: float = 1e-6):
    """int_0^inf u(t) cos(mu t) dt for a smooth monotone envelope u ~ c t^-beta.

    Integrates [0, T1] adaptively; the remainder is handled by integration
    by parts (mu > 0) or by the power-law tail formula (mu == 0, requires
    beta > 1). Returns (value, error_estimate).

    Parameters
    ----------
    u : envelope callable.
    beta : asymptotic decay exponent of u.
    mu : transform frequency, >= 0.
    du : optional exact derivative of u; defaults to the asymptotic
        relation u'(t) = -beta u(t) / t.
    tol : absolute error budget.
    """
    if mu < 0.0:
        raise ValueError("cosine_transform requires mu >= 0")
    if du is None:
        du = lambda t: -beta * u(t) / t

    def power_tail(t):
        # closes int_t^inf u assuming u ~ c s^-beta_loc locally
        beta_loc = -t * du(t) / u(t)
        if beta_loc <= 1.0:
            raise QuadratureError(
                f"power tail with local exponent {beta_loc:.3f} <= 1 "
                "is not integrable"
            )
        return u(t) * t / (beta_loc - 1.0)

    t1 = _T_START
    while True:
        if mu > 0.0:
            tail_err = abs(du(t1)) / mu**2
        else:
            if beta <= 1.0:
                raise QuadratureError(
                    f"power tail with beta = {beta} <= 1 is not integrable"
                )
            # drift of the local exponent over one doubling tracks how far
            # u is from an exact power law, which is what the closure misses
            drift = abs(
                t1 * du(t1) / u(t1) - 0.5 * t1 * du(0.5 * t1) / u(0.5 * t1)
            )
            tail_err = power_tail(t1) * 2.0 * drift
        if tail_err <= 0.5 * tol or t1 >= _T_CAP:
            break
        t1 *= 2.0

    if mu > 0.0:
        limit = max(300, int(mu * t1 / math.pi) + 50)
        val, quad_err = integrate.quad(
            u, 0.0, t1, weight="cos", wvar=mu,
            epsabs=0.1 * tol, epsrel=1e-10, limit=limit,
        )
        val += -u(t1) * math.sin(mu * t1) / mu - du(t1) * math.cos(mu * t1) / mu**2
        tail_err = abs(du(t1)) / mu**2
    else:
        val, quad_err = integrate.quad(
            u, 0.0, t1, epsabs=0.1 * tol, epsrel=1e-10, limit=400
        )
        tail = power_tail(t1)
        val += tail
        # a-posteriori check: closing the tail at t1/2 must agree with
        # integrating [t1/2, t1] and closing at t1
        seg, seg_err = integrate.quad(
            u, 0.5 * t1, t1, epsabs=0.1 * tol, epsrel=1e-10, limit=200
        )
        tail_err = abs(power_tail(0.5 * t1) - (seg + tail)) + seg_err

    err = quad_err + tail_err
    if err > 10.0 * tol:
        raise QuadratureError(
            f"cosine transform error estimate {err:.2e} exceeds budget {tol:.2e}"
        )
    return val, err
