"""Ergodic capacity with selection combining and relay departures.

With K branches whose SNR CDFs are all 1 - exp(-mu * g), the combined SNR
is the maximum of K iid exponentials.  Expanding (1 - e^{-mu g})^(K-1)
binomially and integrating term by term gives

    C(K) = B K / (2 ln 2) * sum_{j=0}^{K-1} (-1)^j C(K-1, j)
                             * e^{(j+1) mu} E1((j+1) mu) / (j+1).

The j = 0 term alone is the familiar single-branch result, which pins the
lower summation index at zero.  Departures thin the K relays to a random
survivor count with a Poisson-binomial law, and the departure-adjusted
capacity averages C(k) over that law.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import RadioConfig
from .specfun import exp_integral_e1_scaled

__all__ = [
    "SurvivalVector",
    "CapacityReport",
    "sc_snr_pdf",
    "sc_snr_cdf",
    "sc_capacity",
    "surviving_relay_distribution",
    "adjusted_capacity",
    "capacity_report",
    "mu_bar",
    "MAX_BRANCHES",
]

# The alternating sum loses about log10(C(K-1, K/2)) digits; past this many
# branches the closed form is no longer trustworthy to 1e-6.
MAX_BRANCHES = 24


@dataclass(frozen=True)
class SurvivalVector:
    """Per-relay probabilities of staying through the window."""

    p: tuple[float, ...]

    def __init__(self, p: Sequence[float]):
        p = tuple(float(v) for v in p)
        if not p:
            raise ValueError("survival vector needs at least one relay")
        for v in p:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"survival probability {v!r} outside [0, 1]")
        object.__setattr__(self, "p", p)

    @classmethod
    def from_leave(cls, p_leave: Sequence[float]) -> "SurvivalVector":
        return cls([1.0 - v for v in p_leave])

    def __len__(self) -> int:
        return len(self.p)


@dataclass(frozen=True)
class CapacityReport:
    c_full: float
    k_dist: tuple[float, ...]
    c_adjusted: float


def mu_bar(cfg: RadioConfig) -> float:
    """Common reciprocal mean SNR; requires equal source and relay power."""
    if not math.isclose(cfg.p_s, cfg.p_ri, rel_tol=1e-12):
        raise ValueError(
            f"capacity closed form needs identical source and relay powers (p_s={cfg.p_s}, p_ri={cfg.p_ri})"
        )
    return cfg.rates().mu


def sc_snr_cdf(gamma, mu_bar: float, k: int):
    return (-np.expm1(-mu_bar * np.asarray(gamma, dtype=float))) ** k


def sc_snr_pdf(gamma, mu_bar: float, k: int):
    """Density of the largest of ``k`` exponential branch SNRs."""
    if mu_bar <= 0:
        raise ValueError("mu_bar must be > 0")
    if k < 1:
        raise ValueError("k must be >= 1")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("gamma must be >= 0")
    e = np.exp(-mu_bar * g)
    out = k * mu_bar * e * (-np.expm1(-mu_bar * g)) ** (k - 1)
    return out if out.ndim else float(out)


def sc_capacity(cfg: RadioConfig, mu_bar: float, k: int) -> float:
    """Ergodic capacity (bit/s) of ``k`` selection-combined branches."""
    if mu_bar <= 0:
        raise ValueError("mu_bar must be > 0")
    if not 1 <= k <= MAX_BRANCHES:
        raise ValueError(f"k must be in 1..{MAX_BRANCHES}, got {k}")
    terms = []
    for j in range(k):
        a = (j + 1) * mu_bar
        terms.append((-1) ** j * math.comb(k - 1, j) * exp_integral_e1_scaled(a) / (j + 1))
    return cfg.bandwidth * k / (2.0 * math.log(2.0)) * math.fsum(terms)


def surviving_relay_distribution(sv: SurvivalVector | Sequence[float]) -> np.ndarray:
    """P{K' = k} for k = 0..K, by the O(K^2) Poisson-binomial recurrence."""
    if not isinstance(sv, SurvivalVector):
        sv = SurvivalVector(sv)
    dist = np.zeros(len(sv) + 1)
    dist[0] = 1.0
    for n, p in enumerate(sv.p, start=1):
        dist[1 : n + 1] = dist[1 : n + 1] * (1.0 - p) + dist[0:n] * p
        dist[0] *= 1.0 - p
    return dist


def adjusted_capacity(cfg: RadioConfig, mu_bar: float, sv: SurvivalVector | Sequence[float]) -> float:
    """Capacity averaged over the number of relays still parked after tau."""
    if not isinstance(sv, SurvivalVector):
        sv = SurvivalVector(sv)
    dist = surviving_relay_distribution(sv)
    return math.fsum(dist[k] * sc_capacity(cfg, mu_bar, k) for k in range(1, len(sv) + 1))


def capacity_report(cfg: RadioConfig, sv: SurvivalVector | Sequence[float]) -> CapacityReport:
    if not isinstance(sv, SurvivalVector):
        sv = SurvivalVector(sv)
    m = mu_bar(cfg)
    dist = surviving_relay_distribution(sv)
    return CapacityReport(sc_capacity(cfg, m, len(sv)), tuple(dist.tolist()), adjusted_capacity(cfg, m, sv))
