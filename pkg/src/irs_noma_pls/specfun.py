"""Special functions and quadrature rules used by the closed-form evaluators.

Everything here is a pure function of its inputs. Gamma ratios and factorials
are carried in log-space so that the large-N expressions never overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal

EULER_GAMMA = 0.57721566490153286
_TINY = 1e-300


class ConvergenceError(ArithmeticError):
    """A series or iteration hit its term budget before meeting tolerance."""


@dataclass(frozen=True)
class SeriesControl:
    rel_tol: float = 1e-12
    max_terms: int = 500

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")


DEFAULT_SERIES = SeriesControl()


class RuleKind(str, Enum):
    GAUSS_LAGUERRE = "GaussLaguerre"
    CHEBYSHEV_GAUSS = "ChebyshevGauss"


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights of an n-point rule.

    GaussLaguerre rules integrate against ``x**alpha * exp(-x)`` on (0, inf);
    ChebyshevGauss rules against ``1/sqrt(1 - x**2)`` on (-1, 1).
    """

    kind: RuleKind
    order: int
    nodes: np.ndarray
    weights: np.ndarray
    alpha: float = 0.0

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)

    def integrate(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.dot(self.weights, f(self.nodes)))


# ---------------------------------------------------------------- gamma family


def log_gamma(x: float) -> float:
    if not x > 0:
        raise ValueError(f"log_gamma needs x > 0, got {x}")
    return math.lgamma(x)


def _gamma_series(s: float, x: float, ctrl: SeriesControl) -> float:
    # returns log of gamma(s, x) (lower, unregularized)
    term = 1.0 / s
    total = term
    ap = s
    for _ in range(ctrl.max_terms * 10):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * ctrl.rel_tol * 1e-3:
            return math.log(total) - x + s * math.log(x)
    raise ConvergenceError(f"incomplete gamma series did not converge (s={s}, x={x})")


def _gamma_contfrac(s: float, x: float, ctrl: SeriesControl) -> float:
    # modified Lentz on the upper-function continued fraction; returns log Gamma(s, x)
    b = x + 1.0 - s
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, ctrl.max_terms * 10):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < ctrl.rel_tol * 1e-3:
            return math.log(h) - x + s * math.log(x)
    raise ConvergenceError(f"incomplete gamma continued fraction did not converge (s={s}, x={x})")


def _incomplete_gamma_logs(s: float, x: float, ctrl: SeriesControl) -> tuple[float, float]:
    """(log lower, log upper) unregularized incomplete gamma."""
    lg = math.lgamma(s)
    if x == 0.0:
        return -math.inf, lg
    if x < s + 1.0:
        lo = _gamma_series(s, x, ctrl)
        p = math.exp(lo - lg)
        up = lg + math.log1p(-p) if p < 1.0 else -math.inf
        return lo, up
    up = _gamma_contfrac(s, x, ctrl)
    q = math.exp(up - lg)
    lo = lg + math.log1p(-q) if q < 1.0 else -math.inf
    return lo, up


def lower_incomplete_gamma(s: float, x: float, ctrl: SeriesControl = DEFAULT_SERIES) -> tuple[float, float]:
    """Return ``(gamma(s, x), P(s, x))``."""
    if not s > 0 or not x >= 0:
        raise ValueError(f"lower_incomplete_gamma needs s > 0, x >= 0 (got s={s}, x={x})")
    if math.isinf(x):
        return math.exp(math.lgamma(s)), 1.0
    lo, _ = _incomplete_gamma_logs(s, x, ctrl)
    reg = min(1.0, math.exp(lo - math.lgamma(s)))
    return math.exp(lo), reg


def upper_incomplete_gamma_regularized(s: float, x: float, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Q(s, x) = Gamma(s, x) / Gamma(s), without the 1 - P cancellation."""
    if not s > 0 or not x >= 0:
        raise ValueError(f"needs s > 0, x >= 0 (got s={s}, x={x})")
    if math.isinf(x):
        return 0.0
    _, up = _incomplete_gamma_logs(s, x, ctrl)
    return min(1.0, math.exp(up - math.lgamma(s)))


def log_lower_incomplete_gamma(s: float, x: float, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    if not s > 0 or not x >= 0:
        raise ValueError(f"needs s > 0, x >= 0 (got s={s}, x={x})")
    if math.isinf(x):
        return math.lgamma(s)
    return _incomplete_gamma_logs(s, x, ctrl)[0]


# ---------------------------------------------------------------- Marcum Q


def marcum_q_half(a: float, b: float) -> float:
    """Marcum Q of order 1/2, i.e. P(|G + a| > b) for a standard normal G."""
    if a < 0 or b < 0:
        raise ValueError(f"marcum_q_half needs a, b >= 0 (got a={a}, b={b})")
    r2 = math.sqrt(2.0)
    return min(1.0, 0.5 * (math.erfc((b - a) / r2) + math.erfc((b + a) / r2)))


# ---------------------------------------------------------------- 2F1 at -1


def hyp2f1_at_minus1(a: float, b: float, c: float, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """2F1(a, b; c; -1) through Pfaff: 2^-a * 2F1(a, c - b; c; 1/2)."""
    if not c > 0:
        raise ValueError(f"hyp2f1_at_minus1 needs c > 0, got {c}")
    for p in (a, b):
        if p <= 0 and p == int(p):
            # terminating polynomial: sum it directly, exactly as written
            term, total = 1.0, 1.0
            for n in range(int(-p)):
                term *= -(a + n) * (b + n) / ((c + n) * (n + 1))
                total += term
            return total
    bb = c - b
    term = 1.0
    total = 1.0
    for n in range(ctrl.max_terms):
        term *= (a + n) * (bb + n) / ((c + n) * (n + 1)) * 0.5
        total += term
        if term == 0.0:
            break
        # the ratio tends to 1/2, so past the turning point the tail is below |term|
        if n > abs(a) + abs(bb) + 2 and abs(term) <= 0.1 * ctrl.rel_tol * abs(total):
            break
    else:
        raise ConvergenceError(f"2F1 series did not converge for a={a}, b={b}, c={c}")
    return 2.0 ** (-a) * total


# ---------------------------------------------------------------- exponential integral


def exp_integral_ei(x: float, ctrl: SeriesControl = DEFAULT_SERIES) -> float:
    """Ei(x) for x < 0, returned as -E1(-x)."""
    if not x < 0:
        raise ValueError(f"exp_integral_ei is only defined here for x < 0, got {x}")
    z = -x
    if math.isinf(z):
        return 0.0
    if z <= 1.0:
        total = 0.0
        term = 1.0
        for n in range(1, ctrl.max_terms + 1):
            term *= -z / n
            total += term / n
            if abs(term / n) < ctrl.rel_tol * 1e-3 * abs(total):
                break
        else:
            raise ConvergenceError(f"E1 series did not converge at {z}")
        e1 = -EULER_GAMMA - math.log(z) - total
        return -e1
    # Lentz on E1(z) = e^-z / (z + 1 - 1/(z + 3 - 4/(z + 5 - ...)))
    b = z + 1.0
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, ctrl.max_terms * 10):
        an = -float(i * i)
        b += 2.0
        d = 1.0 / (an * d + b)
        c = b + an / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < ctrl.rel_tol * 1e-3:
            return -h * math.exp(-z)
    raise ConvergenceError(f"E1 continued fraction did not converge at {z}")


def exp_e1_scaled(z: float) -> float:
    """e^z * E1(z) for z > 0, stable for large z."""
    if z > 700.0:
        # asymptotic tail, accurate to ~1e-12 well before this point
        s, t = 0.0, 1.0
        for k in range(12):
            s += t
            t *= -(k + 1) / z
        return s / z
    return -math.exp(z) * exp_integral_ei(-z)


# ---------------------------------------------------------------- quadrature


def _laguerre_pair(n: int, alpha: float, x: np.ndarray):
    """Scaled generalized Laguerre values.

    Returns ``(p_n, p_{n-1}, log_scale)`` with ``L_k = p_k * exp(log_scale)``,
    renormalising at every step so large x never overflows.
    """
    x = np.asarray(x, dtype=float)
    p_prev = np.zeros_like(x)
    p = np.ones_like(x)
    log_scale = np.zeros_like(x)
    for k in range(n):
        p_next = ((2 * k + 1 + alpha - x) * p - (k + alpha) * p_prev) / (k + 1)
        p_prev, p = p, p_next
        s = np.maximum(np.abs(p), np.abs(p_prev))
        s = np.where(s > 0, s, 1.0)
        p = p / s
        p_prev = p_prev / s
        log_scale = log_scale + np.log(s)
    return p, p_prev, log_scale


def gauss_laguerre_rule(
    n: int, alpha: float = 0.0, newton_steps: int = 3, normalized: bool = False
) -> QuadratureRule:
    """Gauss-Laguerre nodes (Golub-Welsch) with weights from the Laguerre closed form.

    The weight of node x_l is Gamma(n+alpha+1) x_l / (n! (n+1)^2 L_{n+1}(x_l)^2);
    with alpha = 0 this is x_l / ((n+1)^2 L_{n+1}(x_l)^2). ``normalized`` divides
    by Gamma(alpha+1) so the weights form a probability vector (Gamma(alpha+1, 1) law).
    """
    if not 1 <= n <= 512:
        raise ValueError(f"gauss_laguerre_rule supports 1 <= n <= 512, got {n}")
    if not alpha > -1:
        raise ValueError("alpha must exceed -1")
    k = np.arange(n, dtype=float)
    diag = 2 * k + 1 + alpha
    off = np.sqrt(k[1:] * (k[1:] + alpha))
    try:
        x = eigh_tridiagonal(diag, off, eigvals_only=True)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure path
        raise ConvergenceError("Golub-Welsch eigen-iteration failed") from exc
    x = np.sort(x)
    for _ in range(newton_steps):
        pn, pm, _ = _laguerre_pair(n, alpha, x)
        # x L_n' = n L_n - (n + alpha) L_{n-1}
        deriv = (n * pn - (n + alpha) * pm) / x
        step = np.where(deriv != 0, pn / deriv, 0.0)
        x = x - step
    pn1, _, log_s = _laguerre_pair(n + 1, alpha, x)
    log_w = (
        math.lgamma(n + alpha + 1)
        - math.lgamma(n + 1)
        + np.log(x)
        - 2 * math.log(n + 1)
        - 2 * (np.log(np.abs(pn1)) + log_s)
    )
    if normalized:
        log_w = log_w - math.lgamma(alpha + 1)
    return QuadratureRule(RuleKind.GAUSS_LAGUERRE, n, x, np.exp(log_w), float(alpha))


def chebyshev_gauss_rule(n: int) -> QuadratureRule:
    if n < 1:
        raise ValueError(f"chebyshev_gauss_rule needs n >= 1, got {n}")
    p = np.arange(1, n + 1)
    nodes = np.cos((2 * p - 1) * np.pi / (2 * n))
    # cos((2p-1)pi/2n) is not exactly zero in floating point for the middle node
    nodes[np.abs(nodes) < 1e-15] = 0.0
    return QuadratureRule(RuleKind.CHEBYSHEV_GAUSS, n, nodes, np.full(n, np.pi / n))


# ---------------------------------------------------------------- Poisson mixture


def poisson_half_log_weight(lam: float, k: int) -> float:
    """log of e^{-lam/2} lam^k / (k! 2^k Gamma(k + 1/2))."""
    if lam == 0.0:
        return -math.lgamma(0.5) if k == 0 else -math.inf
    return -lam / 2 + k * math.log(lam / 2) - math.lgamma(k + 1) - math.lgamma(k + 0.5)


def _mixture(lam: float, contribution: Callable[[int], float], ctrl: SeriesControl) -> float:
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if lam == 0.0:
        return contribution(0)
    mode = lam / 2
    total = 0.0
    for k in range(ctrl.max_terms):
        c = contribution(k)
        total += c
        if k > mode and abs(c) <= ctrl.rel_tol * abs(total):
            return total
    raise ConvergenceError(f"Poisson mixture did not converge within {ctrl.max_terms} terms (lambda={lam})")


def poisson_half_mixture_sum(
    lam: float, term: Callable[[int], float], ctrl: SeriesControl = DEFAULT_SERIES
) -> float:
    """sum_k e^{-lam/2} lam^k / (k! 2^k Gamma(k+1/2)) * term(k), truncated adaptively."""
    return _mixture(lam, lambda k: math.exp(poisson_half_log_weight(lam, k)) * term(k), ctrl)


def poisson_mixture_sum(
    lam: float, term: Callable[[int], float], ctrl: SeriesControl = DEFAULT_SERIES
) -> float:
    """Same series with the Gamma(k+1/2) folded into the term: sum_k Pois(k; lam/2) * term(k).

    Use this when term(k) is already a regularized quantity (a probability or
    an expectation), which keeps every factor O(1).
    """
    if lam == 0.0:
        return term(0)
    half = lam / 2
    return _mixture(
        lam,
        lambda k: math.exp(-half + k * math.log(half) - math.lgamma(k + 1)) * term(k),
        ctrl,
    )


# ---------------------------------------------------------------- vectorised incomplete gamma


def regularized_gamma_pq(s, x, rel_tol: float = 1e-14, max_iter: int = 5000):
    """Vectorised (P(s, x), Q(s, x)); series below s + 1, Lentz continued fraction above."""
    s, x = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(x, dtype=float))
    if np.any(s <= 0) or np.any(x < 0):
        raise ValueError("regularized_gamma_pq needs s > 0 and x >= 0")
    P = np.zeros(s.shape)
    Q = np.ones(s.shape)
    finite = np.isfinite(x) & (x > 0)
    P[np.isinf(x)] = 1.0
    Q[np.isinf(x)] = 0.0
    lgs = _lgamma_vec(s)
    use_series = finite & (x < s + 1)
    use_cf = finite & ~use_series

    if use_series.any():
        ss, xs = s[use_series], x[use_series]
        term = 1.0 / ss
        total = term.copy()
        ap = ss.copy()
        active = np.ones(ss.shape, dtype=bool)
        for _ in range(max_iter):
            ap = ap + 1.0
            term = np.where(active, term * xs / ap, term)
            total = np.where(active, total + term, total)
            active = active & (np.abs(term) >= np.abs(total) * rel_tol)
            if not active.any():
                break
        else:
            raise ConvergenceError("vectorised incomplete gamma series did not converge")
        with np.errstate(divide="ignore"):
            lp = np.log(total) - xs + ss * np.log(xs) - lgs[use_series]
        p = np.minimum(1.0, np.exp(lp))
        P[use_series] = p
        Q[use_series] = 1.0 - p

    if use_cf.any():
        sc, xc = s[use_cf], x[use_cf]
        b = xc + 1.0 - sc
        c = np.full(sc.shape, 1.0 / _TINY)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(sc.shape, dtype=bool)
        for i in range(1, max_iter):
            an = -i * (i - sc)
            b = b + 2.0
            dn = an * d + b
            dn = np.where(np.abs(dn) < _TINY, _TINY, dn)
            cn = b + an / c
            cn = np.where(np.abs(cn) < _TINY, _TINY, cn)
            dn = 1.0 / dn
            delta = dn * cn
            d = np.where(active, dn, d)
            c = np.where(active, cn, c)
            h = np.where(active, h * delta, h)
            active = active & (np.abs(delta - 1.0) >= rel_tol)
            if not active.any():
                break
        else:
            raise ConvergenceError("vectorised incomplete gamma continued fraction did not converge")
        q = np.minimum(1.0, np.exp(np.log(h) - xc + sc * np.log(xc) - lgs[use_cf]))
        Q[use_cf] = q
        P[use_cf] = 1.0 - q
    return P, Q


def _lgamma_vec(s: np.ndarray) -> np.ndarray:
    flat = [math.lgamma(v) for v in s.ravel()]
    return np.asarray(flat, dtype=float).reshape(s.shape)
