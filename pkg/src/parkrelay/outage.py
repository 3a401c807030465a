"""Outage probability of relay links that can fail by fading or by departure."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .channel import LinkRates, RadioConfig, db_to_linear, snr_cdf_approx, snr_cdf_exact
from .parking import ParkingModel, Relay, leave_probability

__all__ = [
    "RelayLinkProfile",
    "OutageReport",
    "snr_outage",
    "link_outage",
    "system_outage",
    "relay_leave_probability",
    "relay_link_profiles",
    "outage_report",
    "outage_vs_threshold_sweep",
    "SweepRow",
    "SNR_MODELS",
]

SNR_MODELS = ("approx", "exact")


@dataclass(frozen=True)
class RelayLinkProfile:
    rates: LinkRates
    relay: Relay
    p_gamma: float
    p_leave: float

    @property
    def p_out(self) -> float:
        return link_outage(self.p_gamma, self.p_leave)


@dataclass
class OutageReport:
    per_link: list[float]
    system: float
    simulated: float | None = None
    ci_halfwidth: float | None = None

    @classmethod
    def from_links(cls, per_link: Sequence[float]) -> "OutageReport":
        return cls(list(per_link), system_outage(per_link))


def snr_outage(cfg: RadioConfig, rates: LinkRates | None = None, model: str = "approx") -> float:
    """Probability that one branch's SNR is below ``cfg.gamma_th``.

    ``model="approx"`` uses the exponential CDF (the analytical default);
    ``"exact"`` uses the exact AF CDF and is meant for validation runs.
    """
    rates = rates or cfg.rates()
    if model == "approx":
        return snr_cdf_approx(cfg.gamma_th, rates.mu)
    if model == "exact":
        return snr_cdf_exact(cfg.gamma_th, rates)
    raise ValueError(f"unknown SNR model {model!r}; expected one of {SNR_MODELS}")


def _check_prob(name: str, p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")


def link_outage(p_gamma: float, p_leave: float) -> float:
    """A branch is lost if its SNR is too low or its relay leaves."""
    _check_prob("p_gamma", p_gamma)
    _check_prob("p_leave", p_leave)
    return 1.0 - (1.0 - p_gamma) * (1.0 - p_leave)


def system_outage(links: Iterable[float]) -> float:
    """Product of per-branch outages (selection combining, independent branches)."""
    links = list(links)
    if not links:
        raise ValueError("system outage needs at least one relay link")
    out = 1.0
    for p in links:
        _check_prob("link outage", p)
        out *= p
    return out


def relay_leave_probability(relay: Relay, model: ParkingModel, tau: float) -> float:
    return leave_probability(model.params(relay.arrival_hour), relay.elapsed_parked, tau)


def relay_link_profiles(
    cfg: RadioConfig, relays: Sequence[Relay], model: ParkingModel, snr_model: str = "approx"
) -> list[RelayLinkProfile]:
    rates = cfg.rates()
    p_gamma = snr_outage(cfg, rates, snr_model)
    return [
        RelayLinkProfile(rates, r, p_gamma, relay_leave_probability(r, model, cfg.tau)) for r in relays
    ]


def outage_report(
    cfg: RadioConfig, relays: Sequence[Relay], model: ParkingModel, snr_model: str = "approx"
) -> OutageReport:
    profiles = relay_link_profiles(cfg, relays, model, snr_model)
    return OutageReport.from_links([p.p_out for p in profiles])


@dataclass
class SweepRow:
    threshold_db: float
    k: int
    p_out_analytical: float
    p_out_simulated: float | None = None
    ci_halfwidth: float | None = None


def outage_vs_threshold_sweep(
    cfg: RadioConfig,
    relays: Sequence[Relay],
    model: ParkingModel,
    thresholds_db: Sequence[float],
    k_values: Sequence[int] | None = None,
    snr_model: str = "approx",
) -> list[SweepRow]:
    """Analytical system outage for each threshold and each prefix size K.

    Rows are ordered threshold-major, K-minor.  The relay list is used in
    order: K = 2 means the first two relays.
    """
    if not relays:
        raise ValueError("sweep needs at least one relay")
    if k_values is None:
        k_values = range(1, len(relays) + 1)
    k_values = list(k_values)
    for k in k_values:
        if not 1 <= k <= len(relays):
            raise ValueError(f"K={k} outside 1..{len(relays)}")
    rates = cfg.rates()
    p_leave = [relay_leave_probability(r, model, cfg.tau) for r in relays]
    rows = []
    for th_db in thresholds_db:
        c = cfg.with_threshold(db_to_linear(th_db))
        p_gamma = snr_outage(c, rates, snr_model)
        links = [link_outage(p_gamma, pl) for pl in p_leave]
        for k in k_values:
            rows.append(SweepRow(float(th_db), k, system_outage(links[:k])))
    return rows

