"""Two-hop amplify-and-forward link model.

Per-hop SNRs are x = P_s |h_sr|^2 / N0 and y = P_r |h_rd|^2 / N0 with
|h|^2 exponential of mean 2.  With the relay gain chosen to cap the relay's
transmit power at P_r, the end-to-end SNR of one relay branch is
xy / (1 + x + y), so the amplification factor never has to be carried
around explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .specfun import X_MAX, bessel_k1e

__all__ = [
    "RadioConfig",
    "LinkRates",
    "db_to_linear",
    "linear_to_db",
    "link_snr",
    "sample_channel_gain",
    "snr_cdf_exact",
    "snr_cdf_bound",
    "snr_cdf_approx",
    "GAIN_MEAN",
]

GAIN_MEAN = 2.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RadioConfig:
    """Radio parameters.  ``gamma_th`` is linear, ``tau`` in hours."""

    p_s: float = 2.0
    p_ri: float = 2.0
    n0: float = 0.02
    gamma_th: float = 10.0
    bandwidth: float = 1.0
    tau: float = 1.0 / 12.0

    def __post_init__(self) -> None:
        for name in ("p_s", "p_ri", "n0", "gamma_th", "bandwidth", "tau"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"RadioConfig.{name} must be a positive number, got {v!r}")

    @property
    def gamma_th_db(self) -> float:
        return linear_to_db(self.gamma_th)

    def with_threshold(self, gamma_th: float) -> "RadioConfig":
        return RadioConfig(self.p_s, self.p_ri, self.n0, gamma_th, self.bandwidth, self.tau)

    def rates(self) -> "LinkRates":
        return LinkRates.from_config(self)


@dataclass(frozen=True)
class LinkRates:
    """Reciprocal mean per-hop SNRs and their sum ``mu``."""

    w_sri: float
    w_rid: float

    def __post_init__(self) -> None:
        if not (self.w_sri > 0 and self.w_rid > 0):
            raise ValueError("link rates must be positive")

    @classmethod
    def from_config(cls, cfg: RadioConfig) -> "LinkRates":
        return cls(cfg.n0 / (GAIN_MEAN * cfg.p_s), cfg.n0 / (GAIN_MEAN * cfg.p_ri))

    @property
    def mu(self) -> float:
        return self.w_sri + self.w_rid


def link_snr(gain_sr, gain_rd, cfg: RadioConfig):
    """End-to-end SNR of one AF branch; works on scalars or arrays."""
    x = np.asarray(gain_sr, dtype=float) * (cfg.p_s / cfg.n0)
    y = np.asarray(gain_rd, dtype=float) * (cfg.p_ri / cfg.n0)
    out = x * y / (1.0 + x + y)
    return out if out.ndim else float(out)


def sample_channel_gain(rng: np.random.Generator, size=None):
    """|h|^2 draws: exponential with rate 1/2."""
    return rng.exponential(GAIN_MEAN, size)


def _one_minus_bk1(b: float, expo: float) -> float:
    # 1 - b K1(b) exp(-expo), with K1 scaled to keep the product finite.
    if b == 0.0:
        return 0.0
    if b > X_MAX:
        return 1.0
    val = 1.0 - b * bessel_k1e(b) * math.exp(-(b + expo))
    return min(1.0, max(0.0, val))


def snr_cdf_exact(x: float, rates: LinkRates) -> float:
    """Exact CDF of xy / (1 + x + y) for exponential per-hop SNRs.

    F(x) = 1 - 2 sqrt(w1 w2 x (x+1)) e^{-x (w1+w2)} K1(2 sqrt(w1 w2 x (x+1))).
    """
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0:
        return 0.0
    b = 2.0 * math.sqrt(rates.w_sri * rates.w_rid * x * (x + 1.0))
    return _one_minus_bk1(b, x * rates.mu)


def snr_cdf_bound(x: float, rates: LinkRates) -> float:
    """CDF of the harmonic-mean bound xy / (x + y).

    F(x) = 1 - 2x sqrt(w1 w2) e^{-x (w1+w2)} K1(2x sqrt(w1 w2)); it is the
    high-SNR limit of ``snr_cdf_exact`` and lies below it everywhere.
    """
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if x == 0:
        return 0.0
    b = 2.0 * x * math.sqrt(rates.w_sri * rates.w_rid)
    return _one_minus_bk1(b, x * rates.mu)


def snr_cdf_approx(x: float, mu: float) -> float:
    """Exponential approximation 1 - exp(-mu x), from x K1(x) ~ 1."""
    if x < 0:
        raise ValueError(f"x must be >= 0, got {x}")
    if mu <= 0:
        raise ValueError(f"mu must be > 0, got {mu}")
    return -math.expm1(-mu * x)
