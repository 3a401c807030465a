"""``parkrelay`` command line: one subcommand per figure plus ``validate``.

Every figure command writes a CSV into ``--out`` whose metadata block holds
the seed, the trial count and a hash of the effective configuration.  The
output is a pure function of the configuration and the seed.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy import stats

from . import __version__
from .config import RunConfig, default_config_document, load_run_config
from .csvio import write_csv
from .montecarlo import (
    EmptyLotError,
    capacity_day_profile,
    child_seed,
    estimate_outage,
    generate_day,
    outage_day_profile,
    tarr_sensitivity,
    tdur_sensitivity,
)
from .outage import outage_vs_threshold_sweep, relay_leave_probability
from .parking import ConfigError, Relay, arrival_mean, exponential_parking_model
from .validation import run_all

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# Sub-stream keys below the run seed, one per independent use.
_RELAY_STREAM, _TRIAL_STREAM = 1, 2


def _meta(rc: RunConfig, trials: int | None, **extra: Any) -> dict[str, Any]:
    meta: dict[str, Any] = {"command": extra.pop("command"), "seed": rc.scenario.seed}
    if trials is not None:
        meta["trials"] = trials
    meta["config_hash"] = rc.config_hash()
    meta["parking_table"] = rc.model.description
    meta.update(extra)
    return meta


def fig2_relays(rc: RunConfig) -> list[Relay]:
    """The relay set for the threshold sweep, as chosen by ``fig2.relay_source``."""
    sec = rc.section("fig2")
    k_max = max(sec["k_values"])
    source = sec["relay_source"]
    if source == "list":
        relays = [Relay(int(r["arrival_hour"]), float(r["elapsed_parked"])) for r in sec["relays"]]
    elif source == "expected":
        t_arr = arrival_mean(rc.model.arrival)
        elapsed = rc.scenario.current_time - t_arr
        if elapsed < 0:
            raise ConfigError(
                f"scenario.current_time={rc.scenario.current_time} precedes the mean arrival hour {t_arr:.3f}"
            )
        relays = [Relay(int(t_arr), elapsed)] * k_max
    else:
        rng = np.random.default_rng(child_seed(rc.scenario.seed, _RELAY_STREAM))
        state = generate_day(rc.model, rc.scenario, rng)
        idx = state.present_indices(rc.scenario.current_time)
        if idx.size < k_max:
            raise ConfigError(f"only {idx.size} cars parked at current_time, fig2 needs {k_max}")
        relays = state.relays_at(rc.scenario.current_time, np.sort(rng.choice(idx, k_max, replace=False)))
    if len(relays) < k_max:
        raise ConfigError(f"fig2.relays lists {len(relays)} relays but k_values needs {k_max}")
    return relays


def cmd_fig2(rc: RunConfig, out: Path) -> Path:
    sec = rc.section("fig2")
    relays = fig2_relays(rc)
    trials = sec["trials"]
    rows = outage_vs_threshold_sweep(
        rc.radio, relays, rc.model, sec["thresholds_db"], sec["k_values"], snr_model=sec["snr_model"]
    )
    p_leave = [relay_leave_probability(r, rc.model, rc.radio.tau) for r in relays]
    body = []
    for i, row in enumerate(rows):
        cfg = rc.radio.with_threshold(10.0 ** (row.threshold_db / 10.0))
        est = estimate_outage(
            relays[: row.k],
            rc.model,
            cfg,
            trials,
            child_seed(rc.scenario.seed, _TRIAL_STREAM, i),
            workers=rc.workers,
            p_leave=p_leave[: row.k],
        )
        body.append([row.threshold_db, row.k, row.p_out_analytical, est.point, est.half_width])
    meta = _meta(
        rc,
        trials,
        command="fig2",
        snr_model=sec["snr_model"],
        n0=rc.radio.n0,
        tau_hours=rc.radio.tau,
        relays=";".join(f"{r.arrival_hour}:{r.elapsed_parked!r}" for r in relays),
    )
    cols = ["threshold_db", "k", "p_out_analytical", "p_out_simulated", "ci_halfwidth"]
    return write_csv(out / "fig2.csv", cols, body, meta)


def cmd_fig3(rc: RunConfig, out: Path) -> Path:
    days = rc.section("fig3")["days"]
    keys = ("arrivals", "rejected", "departures", "departures_wrapped", "occupancy")
    first = None
    sums = {k: np.zeros(24) for k in keys}
    overnight = 0
    for d in range(days):
        state = generate_day(rc.model, rc.scenario, np.random.default_rng(child_seed(rc.scenario.seed, d)))
        if first is None:
            first = state
        for k in keys:
            sums[k] += getattr(state, k)
        overnight += state.overnight
    means = {k: sums[k] / days for k in keys}
    body = []
    for h in range(24):
        body.append([h] + [int(getattr(first, k)[h]) for k in keys] + [float(means[k][h]) for k in keys])
    totals = [int(getattr(first, k).sum()) for k in keys[:4]]
    body.append(["total"] + totals + [""] + [float(means[k].sum()) for k in keys[:4]] + [""])
    meta = _meta(
        rc,
        days,
        command="fig3",
        day0_admitted=int(first.admitted.sum()),
        day0_overnight=first.overnight,
        mean_overnight=overnight / days,
        peak_arrival_hour=int(np.argmax(means["arrivals"])),
        peak_departure_hour=int(np.argmax(means["departures_wrapped"])),
        peak_departure_same_day_hour=int(np.argmax(means["departures"])),
    )
    cols = ["hour", *keys, *(f"{k}_mean" for k in keys)]
    return write_csv(out / "fig3.csv", cols, body, meta)


def _band_mean(values: dict[int, float], lo: int, hi: int) -> float:
    v = [values[h] for h in range(lo, hi + 1) if h in values and not math.isnan(values[h])]
    return sum(v) / len(v) if v else math.nan


def _outage_profile(rc: RunConfig, hours: Sequence[int]):
    sec = rc.section("fig4")
    return outage_day_profile(rc.model, rc.radio, rc.scenario, sec["k"], hours=hours, method=sec["method"])


def cmd_fig4(rc: RunConfig, out: Path) -> Path:
    sec = rc.section("fig4")
    prof = _outage_profile(rc, [int(h) for h in sec["hours"]])
    body = []
    for hv in prof:
        est = hv.estimate
        body.append([hv.hour, hv.mean, est.half_width if est else math.nan, est.n if est else 0, hv.skipped])
    means = {hv.hour: hv.mean for hv in prof}
    valid = {h: v for h, v in means.items() if not math.isnan(v)}
    meta = _meta(
        rc,
        rc.scenario.replications,
        command="fig4",
        k=sec["k"],
        method=sec["method"],
        min_hour=min(valid, key=valid.get) if valid else "",
        mean_09_11=_band_mean(means, 9, 11),
        mean_19_21=_band_mean(means, 19, 21),
    )
    cols = ["hour", "outage_mean", "outage_ci_halfwidth", "n", "skipped"]
    return write_csv(out / "fig4.csv", cols, body, meta)


def cmd_fig5(rc: RunConfig, out: Path) -> Path:
    sec = rc.section("fig5")
    res = tdur_sensitivity(rc.model, rc.radio, int(sec["t_arr"]), sec["tdur_minutes"])
    control = tdur_sensitivity(exponential_parking_model(arrival=rc.model.arrival), rc.radio, int(sec["t_arr"]),
                               sec["tdur_minutes"])
    body = [[m, r.p_leave, r.p_out] for m, r in zip(sec["tdur_minutes"], res.rows)]
    meta = _meta(
        rc,
        None,
        command="fig5",
        t_arr=int(sec["t_arr"]),
        spread=res.spread,
        relative_spread=res.relative_spread,
        exponential_control_spread=control.spread,
    )
    return write_csv(out / "fig5.csv", ["t_dur_min", "p_leave", "p_out"], body, meta)


def cmd_fig6(rc: RunConfig, out: Path) -> Path:
    sec = rc.section("fig6")
    hours = [int(h) for h in sec["tarr_hours"]]
    res = tarr_sensitivity(rc.model, rc.radio, float(sec["t_dur_hours"]), hours)
    body = [[r.t_arr, r.p_leave, r.p_out] for r in res.rows]
    by_hour = {r.t_arr: r.p_out for r in res.rows}
    afternoon, morning = _band_mean(by_hour, 16, 18), _band_mean(by_hour, 6, 10)
    meta = _meta(
        rc,
        None,
        command="fig6",
        t_dur_hours=float(sec["t_dur_hours"]),
        spread=res.spread,
        relative_spread=res.relative_spread,
        mean_16_18=afternoon,
        mean_06_10=morning,
        afternoon_peak=afternoon > morning,
    )
    return write_csv(out / "fig6.csv", ["t_arr", "p_leave", "p_out"], body, meta)


def cmd_fig7(rc: RunConfig, out: Path) -> Path:
    hours = [int(h) for h in rc.section("fig7")["hours"]]
    cap = capacity_day_profile(rc.model, rc.radio, rc.scenario, hours=hours)
    outage = _outage_profile(rc, hours)
    body = [[c.hour, c.mean, c.estimate.half_width] for c in cap]
    rho = stats.spearmanr([c.mean for c in cap], [o.mean for o in outage]).statistic
    meta = _meta(
        rc,
        rc.scenario.replications,
        command="fig7",
        outage_k=rc.section("fig4")["k"],
        peak_hour=max(cap, key=lambda c: c.mean).hour,
        spearman_vs_outage=float(rho),
    )
    return write_csv(out / "fig7.csv", ["hour", "capacity_mean", "capacity_ci_halfwidth"], body, meta)


def cmd_validate(rc: RunConfig, trials: int) -> int:
    checks = run_all(rc.radio, rc.model, fig2_relays(rc), trials=trials, seed=rc.scenario.seed)
    for c in checks:
        print(c.line())
    failed = sum(not c.passed for c in checks)
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


FIGURES: dict[str, Callable[[RunConfig, Path], Path]] = {
    "fig2": cmd_fig2,
    "fig3": cmd_fig3,
    "fig4": cmd_fig4,
    "fig5": cmd_fig5,
    "fig6": cmd_fig6,
    "fig7": cmd_fig7,
}

_HELP = {
    "fig2": "outage vs SNR threshold, analytical and Monte Carlo",
    "fig3": "hourly arrivals, departures and occupancy of the lot",
    "fig4": "outage at each hour of the day",
    "fig5": "single-relay outage vs time already parked",
    "fig6": "single-relay outage vs arrival hour",
    "fig7": "departure-adjusted capacity at each hour of the day",
    "validate": "run the oracle suite and report pass/fail",
    "print-default-config": "print the default JSON configuration",
}


def _trial_override(command: str, n: int) -> dict[str, Any]:
    # --trials means "how many random repetitions" for whichever command runs.
    if command == "fig2":
        return {"fig2": {"trials": n}}
    if command == "fig3":
        return {"fig3": {"days": n}}
    if command in ("fig4", "fig7"):
        return {"scenario": {"replications": n}}
    return {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="parkrelay", description="Outage and capacity of parked-car relays in vehicular networks."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, text in _HELP.items():
        p = sub.add_parser(name, help=text, description=text)
        if name == "print-default-config":
            continue
        p.add_argument("--config", type=Path, help="JSON run configuration (defaults if omitted)")
        p.add_argument("--seed", type=int, help="override scenario.seed")
        p.add_argument("--trials", type=int, help="override the trial or replication count")
        p.add_argument("--workers", type=int, help="worker threads for Monte Carlo trials")
        if name != "validate":
            p.add_argument("--out", type=Path, default=Path("."), help="output directory (default: .)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "print-default-config":
        print(json.dumps(default_config_document(), indent=2))
        return EXIT_OK

    overrides: dict[str, Any] = {}
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_CONFIG
        overrides["scenario"] = {"seed": args.seed}
    if args.trials is not None:
        if args.trials < 1:
            print("error: --trials must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        for key, val in _trial_override(args.command, args.trials).items():
            overrides.setdefault(key, {}).update(val)
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        rc = load_run_config(args.config, overrides)
        if args.command == "validate":
            return cmd_validate(rc, args.trials or 10**6)
        start = time.perf_counter()
        path = FIGURES[args.command](rc, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyLotError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"wrote {path} in {time.perf_counter() - start:.1f}s")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
