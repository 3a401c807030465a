"""Run configuration: one JSON document per run, plus an optional table file."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .channel import RadioConfig, db_to_linear
from .montecarlo import DayScenario
from .parking import ConfigError, ParkingModel, default_table_document, parse_parking_model

__all__ = ["RunConfig", "DEFAULT_CONFIG", "default_config_document", "load_run_config", "build_run_config"]

DEFAULT_CONFIG: dict[str, Any] = {
    "radio": {
        "p_s": 2.0,
        "p_ri": 2.0,
        "n0": 0.02,
        "gamma_th_db": 10.0,
        "bandwidth": 1.0,
        "tau_hours": 1.0 / 12.0,
    },
    # null selects the bundled synthetic table; a path is resolved relative
    # to the config file.
    "parking_table": None,
    "scenario": {
        "lot_capacity": 500,
        "daily_cars": 2000,
        "current_time": 15.0,
        "replications": 1000,
        "seed": 20180101,
    },
    "workers": 1,
    "fig2": {
        "thresholds_db": [0.0, 5.0, 10.0, 15.0, 20.0],
        "k_values": [1, 2, 3],
        "trials": 100000,
        "snr_model": "exact",
        # "expected": every relay arrived at the mean (truncated) arrival
        # time; "random": relays drawn uniformly from a simulated lot at
        # scenario.current_time; "list": use "relays" below.
        "relay_source": "expected",
        "relays": [],
    },
    "fig3": {"days": 100},
    "fig4": {"k": 3, "method": "analytical", "hours": list(range(24))},
    "fig5": {"t_arr": 9, "tdur_minutes": list(range(30, 301, 30))},
    "fig6": {"t_dur_hours": 2.0, "tarr_hours": list(range(24))},
    "fig7": {"hours": list(range(7, 23))},
}

_SNR_MODELS = ("approx", "exact")


def default_config_document() -> dict[str, Any]:
    return copy.deepcopy(DEFAULT_CONFIG)


@dataclass
class RunConfig:
    radio: RadioConfig
    model: ParkingModel
    scenario: DayScenario
    document: dict[str, Any]
    table_document: dict[str, Any]
    source: str = "<defaults>"

    @property
    def workers(self) -> int:
        return int(self.document["workers"])

    def section(self, name: str) -> dict[str, Any]:
        return self.document[name]

    def config_hash(self) -> str:
        """Digest of everything that determines a command's output."""
        doc = copy.deepcopy(self.document)
        doc.pop("workers", None)
        doc["parking_table"] = self.table_document
        blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _merge(base: dict, override: dict, where: str, errors: list[str]) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in base:
            errors.append(f"{where}{key}: unknown key")
            continue
        if isinstance(base[key], dict) and base[key] is not None:
            if not isinstance(val, dict):
                errors.append(f"{where}{key}: expected an object")
                continue
            out[key] = _merge(base[key], val, f"{where}{key}.", errors)
        else:
            out[key] = val
    return out


def _num(doc: dict, key: str, where: str, errors: list[str], positive: bool = True) -> float:
    v = doc.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        errors.append(f"{where}.{key}: expected a number, got {v!r}")
        return 1.0
    if positive and v <= 0:
        errors.append(f"{where}.{key}: must be > 0, got {v!r}")
        return 1.0
    return float(v)


def _grid(doc: dict, key: str, where: str, errors: list[str], integer: bool = False) -> None:
    v = doc.get(key)
    ok = isinstance(v, list) and len(v) > 0 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    )
    if ok and integer:
        ok = all(float(x).is_integer() for x in v)
    if not ok:
        errors.append(f"{where}.{key}: expected a non-empty list of {'integers' if integer else 'numbers'}")
        return
    if any(b <= a for a, b in zip(v, v[1:])):
        errors.append(f"{where}.{key}: grid must be strictly increasing")


def build_run_config(
    override: dict[str, Any] | None = None, base_dir: Path | None = None, source: str = "<defaults>"
) -> RunConfig:
    errors: list[str] = []
    doc = _merge(DEFAULT_CONFIG, override or {}, "", errors)

    r = doc["radio"]
    vals = {k: _num(r, k, "radio", errors) for k in ("p_s", "p_ri", "n0", "bandwidth", "tau_hours")}
    th_db = _num(r, "gamma_th_db", "radio", errors, positive=False)

    s = doc["scenario"]
    for key in ("lot_capacity", "daily_cars", "replications", "seed"):
        v = s.get(key)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            errors.append(f"scenario.{key}: expected a non-negative integer, got {v!r}")
    _num(s, "current_time", "scenario", errors, positive=False)
    if not isinstance(doc["workers"], int) or doc["workers"] < 1:
        errors.append("workers: expected a positive integer")

    f2 = doc["fig2"]
    _grid(f2, "thresholds_db", "fig2", errors)
    _grid(f2, "k_values", "fig2", errors, integer=True)
    if f2["snr_model"] not in _SNR_MODELS:
        errors.append(f"fig2.snr_model: expected one of {_SNR_MODELS}")
    if f2["relay_source"] not in ("expected", "random", "list"):
        errors.append("fig2.relay_source: expected 'expected', 'random' or 'list'")
    if not isinstance(f2["trials"], int) or f2["trials"] < 1:
        errors.append("fig2.trials: expected a positive integer")
    if f2["relay_source"] == "list":
        if not isinstance(f2["relays"], list) or not f2["relays"]:
            errors.append("fig2.relays: relay_source 'list' needs a non-empty list")
        else:
            for i, rec in enumerate(f2["relays"]):
                if not (isinstance(rec, dict) and {"arrival_hour", "elapsed_parked"} <= rec.keys()):
                    errors.append(f"fig2.relays[{i}]: needs arrival_hour and elapsed_parked")
    if not isinstance(doc["fig3"]["days"], int) or doc["fig3"]["days"] < 1:
        errors.append("fig3.days: expected a positive integer")
    f4 = doc["fig4"]
    if not isinstance(f4["k"], int) or f4["k"] < 1:
        errors.append("fig4.k: expected a positive integer")
    if f4["method"] not in ("analytical", "empirical"):
        errors.append("fig4.method: expected 'analytical' or 'empirical'")
    _grid(f4, "hours", "fig4", errors, integer=True)
    _grid(doc["fig5"], "tdur_minutes", "fig5", errors)
    _grid(doc["fig6"], "tarr_hours", "fig6", errors, integer=True)
    _num(doc["fig6"], "t_dur_hours", "fig6", errors, positive=False)
    _grid(doc["fig7"], "hours", "fig7", errors, integer=True)

    table_ref = doc["parking_table"]
    table_doc: dict[str, Any] = {}
    table_source = "synthetic_parking_table.json"
    if table_ref is None:
        table_doc = default_table_document()
    elif not isinstance(table_ref, str):
        errors.append("parking_table: expected a path or null")
    else:
        path = Path(table_ref)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        table_source = str(path)
        try:
            table_doc = json.loads(path.read_text())
        except OSError as exc:
            errors.append(f"parking_table: cannot read {path} ({exc.strerror})")
        except json.JSONDecodeError as exc:
            errors.append(f"parking_table: {path}:{exc.lineno}:{exc.colno}: {exc.msg}")

    if errors:
        raise ConfigError(f"{source}: invalid configuration:\n  " + "\n  ".join(errors))

    model = parse_parking_model(table_doc, table_source)
    try:
        radio = RadioConfig(
            vals["p_s"], vals["p_ri"], vals["n0"], db_to_linear(th_db), vals["bandwidth"], vals["tau_hours"]
        )
        scenario = DayScenario(
            s["lot_capacity"], s["daily_cars"], float(s["current_time"]), s["replications"], s["seed"]
        )
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(radio, model, scenario, doc, table_doc, source)


def _overlay(doc: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    out = copy.deepcopy(doc)
    for key, val in overrides.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _overlay(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_run_config(path: str | Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Read a JSON config (or the defaults) and apply command-line overrides."""
    if path is None:
        return build_run_config(_overlay({}, overrides or {}))
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return build_run_config(_overlay(doc, overrides or {}), path.parent, str(path))
