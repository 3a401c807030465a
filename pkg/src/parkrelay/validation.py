"""Oracle checks run by ``parkrelay validate``.

Every check compares a closed form with an independent route to the same
number: adaptive quadrature (mpmath / scipy), brute-force enumeration or
Monte Carlo.  Each returns a :class:`Check` carrying the measured error and
the tolerance it was judged against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath as mp
import numpy as np
from scipy import integrate, stats

from . import specfun
from .capacity import sc_capacity, sc_snr_pdf, surviving_relay_distribution
from .channel import RadioConfig, db_to_linear, link_snr, sample_channel_gain, snr_cdf_approx, snr_cdf_exact
from .montecarlo import child_seed, estimate_outage
from .outage import link_outage, snr_outage, system_outage
from .parking import DualGammaHourParams, ParkingModel, leave_probability, survival_probability


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: measured={self.measured:.3e} tol={self.tolerance:.1e}{extra}"


# -- quadrature oracles for the special functions -----------------------------

mp.mp.dps = 30


def _power_exp_integral(s: float, x: float) -> mp.mpf:
    """int_0^x t^(s-1) e^-t dt.

    Near zero t = v^(1/s) removes the t^(s-1) singularity; the rest is split
    around the peak at s - 1 and truncated where the integrand drops by e^-120.
    """
    head_end = min(x, 1.0)
    total = mp.quad(lambda v: mp.exp(-(v ** (1 / mp.mpf(s)))), [0, mp.mpf(head_end) ** s]) / s
    if x <= 1.0:
        return total
    width = 10 * math.sqrt(s) + 1
    end = min(x, s + 120 + 20 * math.sqrt(s))
    pts = sorted({1.0, end} | {p for p in (s - 1 - width, s - 1, s - 1 + width) if 1.0 < p < end})
    return total + mp.quad(lambda t: mp.exp((s - 1) * mp.log(t) - t), pts)


def quad_gamma(x: float) -> float:
    return float(_power_exp_integral(x, mp.inf))


def quad_lower_gamma(s: float, x: float) -> float:
    return float(_power_exp_integral(s, x))


def quad_bessel_k1(x: float) -> float:
    # K1(x) = int_0^inf exp(-x cosh t) cosh t dt; the tail past x (cosh t - 1) = 120
    # is below e^-120 relative, so the range is truncated there.
    pts = [0.0] + [float(mp.acosh(1 + c / x)) for c in (1.0, 30.0, 120.0)]
    val = mp.quad(lambda t: mp.exp(-x * (mp.cosh(t) - 1)) * mp.cosh(t), pts)
    return float(val * mp.exp(-x))


def quad_e1(x: float) -> float:
    # E1(x) = e^-x int_0^inf exp(-x (e^u - 1)) du after t = e^u
    pts = sorted({0.0, math.log1p(1.0 / x), math.log1p(120.0 / x)})
    val = mp.quad(lambda u: mp.exp(-x * mp.expm1(u)), pts)
    return float(val * mp.exp(-x))


def special_function_points() -> dict[str, list]:
    grid = np.logspace(-3, np.log10(170.0), 100)
    s_vals = np.logspace(np.log10(0.05), np.log10(50.0), 10)
    x_vals = np.logspace(-3, 3, 10)
    return {
        "gamma": [min(float(v), 170.0) for v in grid],
        "lower_incomplete_gamma": [(float(s), float(x)) for s in s_vals for x in x_vals],
        "bessel_k1": [float(v) for v in np.logspace(-6, np.log10(500.0), 100)],
        "exp_integral_e1": [float(v) for v in np.logspace(-6, np.log10(500.0), 100)],
    }


def check_special_functions(tol: float = 1e-9) -> list[Check]:
    pts = special_function_points()
    pairs: dict[str, tuple[Callable, Callable]] = {
        "gamma": (specfun.gamma, quad_gamma),
        "lower_incomplete_gamma": (specfun.lower_incomplete_gamma, quad_lower_gamma),
        "bessel_k1": (specfun.bessel_k1, quad_bessel_k1),
        "exp_integral_e1": (specfun.exp_integral_e1, quad_e1),
    }
    out = []
    for name, (impl, oracle) in pairs.items():
        worst = 0.0
        for p in pts[name]:
            args = p if isinstance(p, tuple) else (p,)
            ref = oracle(*args)
            worst = max(worst, abs(impl(*args) / ref - 1.0))
        out.append(Check(f"{name} vs quadrature ({len(pts[name])} pts)", worst <= tol, worst, tol))
    worst = 0.0
    for s, x in pts["lower_incomplete_gamma"]:
        total = specfun.lower_incomplete_gamma(s, x) + specfun.upper_incomplete_gamma(s, x)
        worst = max(worst, abs(total / specfun.gamma(s) - 1.0))
    out.append(Check("gamma(s,x) + Gamma(s,x) = Gamma(s)", worst <= 1e-10, worst, 1e-10))
    return out


# -- capacity -----------------------------------------------------------------

def quad_sc_capacity(bandwidth: float, mu: float, k: int) -> float:
    f = lambda g: 0.5 * bandwidth * math.log2(1.0 + g) * sc_snr_pdf(g, mu, k)
    return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-12, limit=500)[0]


def check_capacity(
    capacity: Callable[[RadioConfig, float, int], float] = sc_capacity,
    k_values: Sequence[int] = range(1, 9),
    mus: Sequence[float] = (1e-3, 1e-2, 1e-1, 1.0),
    tol: float = 1e-6,
) -> list[Check]:
    cfg = RadioConfig()
    worst = 0.0
    for k in k_values:
        for mu in mus:
            worst = max(worst, abs(capacity(cfg, mu, k) / quad_sc_capacity(cfg.bandwidth, mu, k) - 1.0))
    k1 = 0.0
    for mu in mus:
        ref = cfg.bandwidth / (2 * math.log(2)) * math.exp(mu) * float(mp.e1(mu))
        k1 = max(k1, abs(capacity(cfg, mu, 1) / ref - 1.0))
    return [
        Check("SC capacity closed form vs quadrature", worst <= tol, worst, tol),
        Check("SC capacity K=1 single-branch form", k1 <= tol, k1, tol),
    ]


def enumerate_survivors(p: Sequence[float]) -> np.ndarray:
    dist = np.zeros(len(p) + 1)
    for pattern in itertools.product((0, 1), repeat=len(p)):
        prob = 1.0
        for stay, pi in zip(pattern, p):
            prob *= pi if stay else 1.0 - pi
        dist[sum(pattern)] += prob
    return dist


def check_poisson_binomial(seed: int = 7, instances: int = 100, tol: float = 1e-12) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        p = rng.random(int(rng.integers(1, 13)))
        worst = max(worst, float(np.max(np.abs(surviving_relay_distribution(p) - enumerate_survivors(p)))))
    sums = max(abs(surviving_relay_distribution(rng.random(k)).sum() - 1.0) for k in range(1, 65))
    return [
        Check("Poisson-binomial DP vs enumeration (K<=12)", worst <= tol, worst, tol),
        Check("Poisson-binomial sums to 1 (K<=64)", sums <= 1e-10, sums, 1e-10),
    ]


# -- parking survival ---------------------------------------------------------

def tail_quad(params: DualGammaHourParams, x: float) -> float:
    """P[X > x] by adaptive quadrature of the mixture density, per component."""
    total = 0.0
    comps = ((params.kappa_s, params.theta_s, params.d1), (params.kappa_l, params.theta_l, params.d2))
    for k, th, w in comps:
        if w == 0:
            continue
        norm = math.lgamma(k) + k * math.log(th)
        pieces = [x, x + th, x + 5 * th * k, x + 40 * th * (k + 1), np.inf]
        for a, b in zip(pieces, pieces[1:]):
            if a == 0.0:
                # t^(k-1) handled by the algebraic weight
                g = lambda t, th=th, norm=norm: math.exp(-t / th - norm)
                val = integrate.quad(g, a, b, epsabs=0, epsrel=1e-13, limit=200, weight="alg", wvar=(k - 1, 0))[0]
            else:
                g = lambda t, k=k, th=th, norm=norm: math.exp((k - 1) * math.log(t) - t / th - norm)
                val = integrate.quad(g, a, b, epsabs=0, epsrel=1e-13, limit=200)[0]
            total += w * val
    return total


def check_survival(model: ParkingModel, tol: float = 1e-7) -> list[Check]:
    ta = np.linspace(0.0, 24.0, 20)
    n = np.linspace(0.0, 12.0, 20)
    worst = 0.0
    exact_one = 0.0
    for h in range(24):
        p = model.params(h)
        cache: dict[float, float] = {}

        def tail(x: float) -> float:
            key = round(x, 9)
            if key not in cache:
                cache[key] = tail_quad(p, x)
            return cache[key]

        for a in ta:
            exact_one = max(exact_one, abs(survival_probability(p, float(a), 0.0) - 1.0))
            for m in n:
                ref = tail(float(a + m)) / tail(float(a))
                got = survival_probability(p, float(a), float(m))
                worst = max(worst, abs(got / ref - 1.0))
    return [
        Check("conditional survival vs quadrature tail ratio (24x20x20)", worst <= tol, worst, tol),
        Check("survival(t_a, 0) == 1", exact_one == 0.0, exact_one, 0.0),
    ]


# -- channel ------------------------------------------------------------------

def check_snr_cdf(cfg: RadioConfig, draws: int = 10**6, seed: int = 11) -> list[Check]:
    rng = np.random.default_rng(seed)
    snr = link_snr(sample_channel_gain(rng, draws), sample_channel_gain(rng, draws), cfg)
    rates = cfg.rates()
    res = stats.kstest(snr, np.vectorize(lambda x: snr_cdf_exact(float(x), rates)))
    x = np.linspace(0.0, 5.0, 501)
    gaps = []
    for mu in (1.0, 0.1, 0.01, 0.001):
        r = RadioConfig(p_s=1.0, p_ri=1.0, n0=mu).rates()
        gaps.append(max(abs(snr_cdf_exact(float(v), r) - snr_cdf_approx(float(v), r.mu)) for v in x))
    mono = all(b < a for a, b in zip(gaps, gaps[1:]))
    return [
        Check("exact AF CDF vs empirical (KS p-value)", res.pvalue > 0.01, res.pvalue, 0.01,
              f"D={res.statistic:.2e}, n={draws}"),
        Check("approximation gap shrinks with mean SNR", mono, gaps[-1], 0.0,
              "gaps=" + ",".join(f"{g:.2e}" for g in gaps)),
    ]


def check_outage_agreement(
    cfg: RadioConfig,
    relays,
    model: ParkingModel,
    thresholds_db: Sequence[float] = (0.0, 5.0, 10.0, 15.0, 20.0),
    k_values: Sequence[int] = (1, 2, 3),
    trials: int = 10**6,
    seed: int = 2024,
    snr_model: str = "exact",
) -> list[Check]:
    p_leave = [leave_probability(model.params(r.arrival_hour), r.elapsed_parked, cfg.tau) for r in relays]
    worst_ratio = 0.0
    idx = 0
    for th in thresholds_db:
        c = cfg.with_threshold(db_to_linear(th))
        pg = snr_outage(c, model=snr_model)
        for k in k_values:
            analytical = system_outage(link_outage(pg, pl) for pl in p_leave[:k])
            est = estimate_outage(relays[:k], model, c, trials, child_seed(seed, idx), p_leave=p_leave[:k])
            idx += 1
            se = math.sqrt(analytical * (1 - analytical) / trials)
            allowed = max(3 * se, 0.005)
            worst_ratio = max(worst_ratio, abs(est.point - analytical) / allowed)
    return [
        Check("analytical vs Monte Carlo outage (|diff| / allowed)", worst_ratio <= 1.0, worst_ratio, 1.0,
              f"{len(thresholds_db)}x{len(k_values)} grid, {trials} trials")
    ]


def run_all(cfg: RadioConfig, model: ParkingModel, relays, trials: int = 10**6, seed: int = 2024) -> list[Check]:
    checks: list[Check] = []
    checks += check_special_functions()
    checks += check_capacity()
    checks += check_poisson_binomial()
    checks += check_survival(model)
    checks += check_snr_cdf(cfg)
    checks += check_outage_agreement(cfg, relays, model, trials=trials, seed=seed)
    return checks
