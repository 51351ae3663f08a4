"""Closed-form quantities for the two-hop opportunistic relaying scheme.

Everything here is deterministic. Probabilities of the form ``(1 - p)**n``
are evaluated as ``exp(n * log1p(-p))`` so that n up to 1e9 neither
underflows nor loses the small complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.special import gammainc

__all__ = [
    "chi_square_cdf",
    "distinct_probability",
    "max_exceeds_probability",
    "threshold_cap",
    "Phase1BoundParams",
    "r1_bound_value",
    "r1_lower_bound",
    "r1_lower_bound_optimized",
    "golden_section_max",
    "sinr_p2_pdf",
    "sinr_p2_cdf",
    "success_probability",
    "r2_exact",
    "phase2_critical_m",
    "genie_m_bounds",
    "mac_bc_upper",
    "OverheadBudget",
    "feedback_overhead",
    "coherence_time_bandwidth",
]


def _loglog(n, name="n"):
    if n <= math.e:
        raise ValueError(f"{name}={n} must exceed e so that log log {name} is defined and positive")
    return math.log(math.log(n))


def chi_square_cdf(y, pairs: int):
    """CDF of a sum of ``pairs`` i.i.d. Exp(1) variables (chi-square with
    ``2 * pairs`` degrees of freedom, unit scale per pair).

    ``pairs = 0`` is the point mass at zero.
    """
    if pairs < 0 or int(pairs) != pairs:
        raise ValueError(f"pairs must be a nonnegative integer, got {pairs!r}")
    y_arr = np.asarray(y, dtype=np.float64)
    if pairs == 0:
        out = (y_arr >= 0).astype(np.float64)
    else:
        # regularized lower incomplete gamma; keeps full relative accuracy
        # in the lower tail where 1 - e^{-y} sum(...) would cancel
        out = gammainc(pairs, np.maximum(y_arr, 0.0))
    return float(out) if np.ndim(out) == 0 else out


def distinct_probability(n: int, m: int) -> float:
    """Probability that m relays pick m distinct sources: n(n-1)...(n-m+1)/n^m."""
    if m > n:
        return 0.0
    j = np.arange(m, dtype=np.float64)
    return float(np.exp(np.log1p(-j / n).sum()))


def max_exceeds_probability(n: int, s: float) -> float:
    """P[max of n Exp(1) > s] = 1 - (1 - e^{-s})^n."""
    return float(-math.expm1(n * math.log1p(-math.exp(-s))))


def threshold_cap(n: int) -> float:
    """Largest admissible signal threshold, log n - log log n."""
    return math.log(n) - _loglog(n)


@dataclass(frozen=True)
class Phase1BoundParams:
    n: int
    m: int
    rho: float
    s: float

    def __post_init__(self):
        if self.n < 16:
            raise ValueError(f"n={self.n}: the Phase-1 bound needs n >= 16 so its threshold range is nonempty")
        if self.m < 1:
            raise ValueError(f"m={self.m} must be >= 1")
        if self.m > self.n:
            raise ValueError(f"m={self.m} exceeds n={self.n}")
        if not self.rho > 0:
            raise ValueError(f"rho={self.rho} must be positive")
        cap = threshold_cap(self.n)
        if not 0 < self.s <= cap * (1 + 1e-12):
            raise ValueError(f"s={self.s} outside (0, log n - log log n] = (0, {cap}]")


def r1_bound_value(n: int, m: int, rho: float, s: float) -> float:
    """Phase-1 bound expression at any threshold s > 0, without the range check."""
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    f_y = chi_square_cdf(s - 1.0 / rho, m - 1)
    return m * distinct_probability(n, m) * max_exceeds_probability(n, s) * f_y


def r1_lower_bound(p: Phase1BoundParams) -> float:
    """Phase-1 throughput lower bound at signal threshold ``p.s``.

    Treats the aggregate interference as chi-square with 2(m-1) degrees of
    freedom, which is exact only as n grows.
    """
    return r1_bound_value(p.n, p.m, p.rho, p.s)


def golden_section_max(f, a: float, b: float, tol: float = 1e-7) -> Tuple[float, float]:
    """Maximize ``f`` on [a, b]; returns (x, f(x))."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def r1_lower_bound_optimized(n: int, m: int, rho: float, grid: int = 512,
                             constrained: bool = False) -> Tuple[float, float]:
    """Maximize the Phase-1 bound over the threshold; returns (value, s).

    No shape is assumed for the objective: a uniform grid locates the best
    cell and golden-section search refines within its neighbours.

    For m >= 2 the objective keeps increasing past log n - log log n, so
    restricting s to that range (``constrained=True``) just reproduces the
    fixed-threshold bound. The default searches (0, 2 log n].
    """
    if n < 16:
        raise ValueError(f"n={n}: the Phase-1 bound needs n >= 16")
    if m > n:
        raise ValueError(f"m={m} exceeds n={n}")
    cap = threshold_cap(n)
    upper = cap if constrained else max(cap, 2.0 * math.log(n))
    grid = max(int(grid), 512)

    def objective(s):
        return r1_bound_value(n, m, rho, min(max(s, 1e-300), upper))

    xs = np.linspace(upper / grid, upper, grid)
    vals = np.array([objective(x) for x in xs])
    k = int(vals.argmax())
    lo = xs[k - 1] if k > 0 else 0.0
    hi = xs[k + 1] if k + 1 < grid else upper
    s_ref, v_ref = golden_section_max(objective, lo, hi, tol=1e-7)
    # the objective can jump (m = 1 steps up at s = 1/rho); never return
    # something worse than the grid point
    if v_ref < vals[k]:
        return float(vals[k]), float(xs[k])
    return float(v_ref), float(min(s_ref, upper))


def sinr_p2_pdf(x, m: int, rho_r: float):
    """Density of a Phase-2 SINR with m relays on air."""
    x = np.asarray(x, dtype=np.float64)
    out = np.exp(-x / rho_r) / (1.0 + x) ** m * ((1.0 + x) / rho_r + m - 1)
    return float(out) if out.ndim == 0 else out


def sinr_p2_cdf(x, m: int, rho_r: float):
    x = np.asarray(x, dtype=np.float64)
    out = -np.expm1(-x / rho_r - (m - 1) * np.log1p(x))
    return float(out) if out.ndim == 0 else out


def success_probability(m: int, rho: float) -> float:
    """P[SINR >= 1] for one link among m concurrent unit-gain links:
    e^{-1/rho} / 2^{m-1}."""
    return math.exp(-1.0 / rho - (m - 1) * math.log(2.0))


def r2_exact(n: int, m: int, rho_r: float) -> float:
    """Average Phase-2 throughput m (1 - (1 - e^{-1/rho_R}/2^{m-1})^n)."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    p = success_probability(m, rho_r)
    return float(-m * math.expm1(n * math.log1p(-p)))


def phase2_critical_m(n: int, rho_r: float, side: str = "linear") -> float:
    """Relay count at the Phase-2 phase transition.

    ``side='linear'`` keeps R2 linear in m; ``side='saturated'`` is the
    larger count beyond which R2 = o(m).
    """
    if side not in ("linear", "saturated"):
        raise ValueError(f"side must be 'linear' or 'saturated', got {side!r}")
    sign = -1.0 if side == "linear" else 1.0
    return (math.log(n) + sign * _loglog(n) - 1.0 / rho_r) / math.log(2.0) + 1.0


def genie_m_bounds(n: int, epsilon: float = 0.5) -> Tuple[float, float]:
    """(unachievable, achievable) concurrent-success counts for the genie.

    Upper: log n / log 2 + 2. Achievable: (1 - eps) log n / (2 log 2) + 2.
    """
    if n < 2:
        raise ValueError(f"n={n} must be >= 2")
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon={epsilon} must lie in (0, 1)")
    ln2 = math.log(2.0)
    return math.log(n) / ln2 + 2.0, (1.0 - epsilon) * math.log(n) / (2.0 * ln2) + 2.0


def mac_bc_upper(n: int, m: int) -> float:
    """Scaling of any two-hop scheme with cooperating relays: (m/2) log log n."""
    return 0.5 * m * _loglog(n)


@dataclass(frozen=True)
class OverheadBudget:
    """Feedback bits per block and the block-size condition.

    ``phase2_bits_expected`` uses a union bound on the feedback probability,
    so it is an upper bound on the expectation.
    """

    phase1_bits: int
    phase2_bits_expected: float
    tw_required: float
    tw_available: Optional[float] = None

    @property
    def phase2_is_upper_bound(self) -> bool:
        return True

    @property
    def negligible(self) -> Optional[bool]:
        if self.tw_available is None:
            return None
        return self.tw_available >= self.tw_required


def feedback_overhead(n: int, m: int, rho_r: float, tw_available: Optional[float] = None) -> OverheadBudget:
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    index_bits = lambda k: math.ceil(math.log2(k)) if k > 1 else 0  # noqa: E731
    q = m * success_probability(m, rho_r)
    tw_required = math.log(n) * _loglog(n) if n > math.e else 0.0
    return OverheadBudget(
        phase1_bits=m * index_bits(n),
        phase2_bits_expected=n * q * index_bits(m),
        tw_required=tw_required,
        tw_available=tw_available,
    )


def coherence_time_bandwidth(delay_spread: float, carrier_hz: float, speed_mps: float,
                             c: float = 3.0e8) -> Tuple[float, float, float]:
    """Coherence bandwidth, coherence time and their product.

    W_c = 1 / (2 T_d); Doppler spread D_s = f_c v / c; T_c = 1 / (4 D_s).
    """
    w_c = 1.0 / (2.0 * delay_spread)
    doppler = carrier_hz * speed_mps / c
    t_c = 1.0 / (4.0 * doppler)
    return w_c, t_c, w_c * t_c
