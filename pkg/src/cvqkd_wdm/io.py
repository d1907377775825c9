"""Scenario configuration files and result serialization.

Configs are YAML. Every key is optional; absent keys take the defaults
(40 slots of 100 Gbit/s, k = 5, the spain7 fixture, QkdParams()). Optical power is given in dBm and stored in watts.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path as FsPath
from typing import Any, Mapping, Sequence

import numpy as np
import yaml

from . import __version__
from .cvqkd_model import QkdParams, dbm_to_w
from .errors import ConfigError, InputDomainError
from .network import TOPOLOGIES
from .sweep import MatrixSpec, ScenarioConfig, ScenarioResult, TopologySpec

SUMMARY_COLUMNS = (
    "scenario_id",
    "lambda",
    "xi_r_snu_per_w",
    "margin",
    "offered_qkd_bps",
    "offered_classical_bps",
    "blocked_qkd_ratio",
    "blocked_classical_ratio",
    "unused_links",
    "avg_link_utilization",
    "runtime_ms",
)

DETAIL_COLUMNS = (
    "scenario_id",
    "link_id",
    "length_km",
    "n_slots_used",
    "carried_qkd_bps",
    "capacity_at_n_bps",
)

# config key -> ScenarioConfig axis name
AXIS_KEYS = {
    "lambda": "lam",
    "xi_r": "xi_r",
    "offered_qkd_bps": "qkd_total_bps",
    "offered_classical_bps": "classical_total_bps",
    "margin": "margin",
}

_TOP_KEYS = {
    "scenario_id",
    "topology",
    "lambda",
    "wdm_slots",
    "channel_rate_bps",
    "k",
    "margin",
    "offered_classical_bps",
    "offered_qkd_bps",
    "traffic",
    "qkd_traffic",
    "qkd",
    "sweep",
}
_QKD_KEYS = {
    "f_sym",
    "beta",
    "mu",
    "xi_0",
    "xi_r",
    "p_opt_dbm",
    "alpha_0_db",
    "alpha_l_db_per_km",
}


def _number(value: Any, key: str) -> float:
    # PyYAML reads "1e9" (no dot) as a string
    if isinstance(value, bool):
        raise ConfigError(f"expected a number, got {value!r}", key)
    try:
        x = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected a number, got {value!r}", key) from None
    if not math.isfinite(x):
        raise ConfigError(f"expected a finite number, got {value!r}", key)
    return x


def _integer(value: Any, key: str) -> int:
    x = _number(value, key)
    if x != int(x):
        raise ConfigError(f"expected an integer, got {value!r}", key)
    return int(x)


def _mapping(value: Any, key: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ConfigError("expected a mapping", key)
    return value


def _check_keys(section: Mapping, allowed: set[str], prefix: str = "") -> None:
    for k in section:
        if k not in allowed:
            raise ConfigError("unknown key", f"{prefix}{k}")


def _parse_topology(value: Any) -> str | TopologySpec:
    if isinstance(value, str):
        if value not in TOPOLOGIES:
            raise ConfigError(f"unknown topology {value!r}; known: {sorted(TOPOLOGIES)}", "topology")
        return value
    section = _mapping(value, "topology")
    _check_keys(section, {"nodes", "links"}, "topology.")
    try:
        nodes = tuple((_integer(i, "topology.nodes"), str(n)) for i, n in section["nodes"])
        links = tuple(
            (_integer(a, "topology.links"), _integer(b, "topology.links"), _number(km, "topology.links"))
            for a, b, km in section["links"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("expected nodes: [[id, name], ...] and links: [[a, b, km], ...]", "topology") from None
    return TopologySpec(nodes, links)


def _parse_matrix(value: Any, key: str) -> MatrixSpec:
    section = _mapping(value, key)
    _check_keys(section, {"demands", "gravity_weights"}, f"{key}.")
    if "demands" in section and "gravity_weights" in section:
        raise ConfigError("give either demands or gravity_weights, not both", key)
    if "demands" in section:
        try:
            entries = tuple(
                (_integer(o, f"{key}.demands"), _integer(d, f"{key}.demands"), _number(v, f"{key}.demands"))
                for o, d, v in section["demands"]
            )
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError("expected [[origin, destination, bps], ...]", f"{key}.demands") from None
        for o, d, v in entries:
            if o == d or v <= 0:
                raise ConfigError(f"invalid demand {o}->{d} offering {v}", f"{key}.demands")
        return MatrixSpec(entries=entries)
    if "gravity_weights" in section:
        weights = _mapping(section["gravity_weights"], f"{key}.gravity_weights")
        pairs = tuple(
            sorted((_integer(n, f"{key}.gravity_weights"), _number(w, f"{key}.gravity_weights.{n}")) for n, w in weights.items())
        )
        for n, w in pairs:
            if w <= 0:
                raise ConfigError("weights must be > 0", f"{key}.gravity_weights.{n}")
        return MatrixSpec(weights=pairs)
    return MatrixSpec()


def _parse_params(value: Any) -> QkdParams:
    section = _mapping(value, "qkd")
    _check_keys(section, _QKD_KEYS, "qkd.")
    kwargs: dict[str, Any] = {}
    for name in ("f_sym", "beta", "xi_0", "xi_r", "alpha_0_db", "alpha_l_db_per_km"):
        if name in section:
            kwargs[name] = _number(section[name], f"qkd.{name}")
    if "mu" in section:
        kwargs["mu"] = _integer(section["mu"], "qkd.mu")
    if "p_opt_dbm" in section:
        kwargs["p_opt_w"] = dbm_to_w(_number(section["p_opt_dbm"], "qkd.p_opt_dbm"))
    try:
        return QkdParams(**kwargs)
    except InputDomainError as exc:
        bad = str(exc).split(" ", 1)[0]
        key = "qkd.p_opt_dbm" if bad == "p_opt_w" else f"qkd.{bad}"
        raise ConfigError(str(exc), key) from None


def _parse_axis(value: Any, key: str) -> tuple[float, ...]:
    if isinstance(value, Mapping):
        _check_keys(value, {"logspace", "linspace"}, f"{key}.")
        if len(value) != 1:
            raise ConfigError("give exactly one of logspace / linspace", key)
        (kind, spec), = value.items()
        try:
            start, stop, num = spec
        except (TypeError, ValueError):
            raise ConfigError(f"{kind} expects [start, stop, count]", key) from None
        start, stop = _number(start, key), _number(stop, key)
        num = _integer(num, key)
        if num < 1:
            raise ConfigError("count must be >= 1", key)
        fn = np.logspace if kind == "logspace" else np.linspace
        return tuple(float(x) for x in fn(start, stop, num))
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigError("axis has no values", key)
        return tuple(_number(v, key) for v in value)
    return (_number(value, key),)


def parse_config(raw: Any) -> tuple[ScenarioConfig, dict[str, tuple[float, ...]]]:
    """Validate a parsed YAML document; returns the base scenario and sweep axes."""
    if raw is None:
        raw = {}
    raw = _mapping(raw, "<root>")
    _check_keys(raw, _TOP_KEYS)
    kwargs: dict[str, Any] = {}
    if "scenario_id" in raw:
        kwargs["scenario_id"] = str(raw["scenario_id"])
    if "topology" in raw:
        kwargs["topology"] = _parse_topology(raw["topology"])
    if "lambda" in raw:
        kwargs["lam"] = _number(raw["lambda"], "lambda")
    if "wdm_slots" in raw:
        kwargs["wdm_slots"] = _integer(raw["wdm_slots"], "wdm_slots")
    if "channel_rate_bps" in raw:
        kwargs["channel_rate_bps"] = _number(raw["channel_rate_bps"], "channel_rate_bps")
    if "k" in raw:
        kwargs["k"] = _integer(raw["k"], "k")
    if "margin" in raw:
        kwargs["margin"] = _number(raw["margin"], "margin")
    if "offered_classical_bps" in raw:
        kwargs["classical_total_bps"] = _number(raw["offered_classical_bps"], "offered_classical_bps")
    if "offered_qkd_bps" in raw:
        kwargs["qkd_total_bps"] = _number(raw["offered_qkd_bps"], "offered_qkd_bps")
    if "traffic" in raw:
        kwargs["classical_matrix"] = _parse_matrix(raw["traffic"], "traffic")
    if "qkd_traffic" in raw:
        kwargs["qkd_matrix"] = _parse_matrix(raw["qkd_traffic"], "qkd_traffic")
    if "qkd" in raw:
        kwargs["params"] = _parse_params(raw["qkd"])

    checks = {
        "lam": ("lambda", lambda v: v > 0),
        "wdm_slots": ("wdm_slots", lambda v: v >= 1),
        "channel_rate_bps": ("channel_rate_bps", lambda v: v > 0),
        "k": ("k", lambda v: v >= 1),
        "margin": ("margin", lambda v: 0 <= v < 1),
        "classical_total_bps": ("offered_classical_bps", lambda v: v >= 0),
        "qkd_total_bps": ("offered_qkd_bps", lambda v: v >= 0),
    }
    for name, (key, ok) in checks.items():
        if name in kwargs and not ok(kwargs[name]):
            raise ConfigError(f"value {kwargs[name]!r} out of range", key)
    config = ScenarioConfig(**kwargs)

    axes: dict[str, tuple[float, ...]] = {}
    if "sweep" in raw:
        section = _mapping(raw["sweep"], "sweep")
        _check_keys(section, set(AXIS_KEYS), "sweep.")
        for key, value in section.items():
            values = _parse_axis(value, f"sweep.{key}")
            ok = {"lambda": lambda v: v > 0, "margin": lambda v: 0 <= v < 1}.get(key, lambda v: v >= 0)
            for v in values:
                if not ok(v):
                    raise ConfigError(f"value {v!r} out of range", f"sweep.{key}")
            axes[AXIS_KEYS[key]] = values
    # the build may still reject e.g. demands naming nodes outside the topology
    try:
        topology = config.build_topology()
    except InputDomainError as exc:
        raise ConfigError(str(exc), "topology") from None
    for key, spec in (("traffic", config.classical_matrix), ("qkd_traffic", config.qkd_matrix)):
        if spec is None:
            continue
        try:
            spec.build(topology)
        except InputDomainError as exc:
            raise ConfigError(str(exc), key) from None
    return config, axes


def load_config(path: str | FsPath) -> tuple[ScenarioConfig, dict[str, tuple[float, ...]]]:
    text = FsPath(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    return parse_config(raw)


def config_digest(config: ScenarioConfig, axes: Mapping[str, Sequence[float]] | None = None) -> str:
    """SHA-256 of the validated config; insensitive to key order and comments."""
    doc = {"config": asdict(config), "axes": {k: list(v) for k, v in (axes or {}).items()}}
    doc["config"].pop("scenario_id")
    canonical = json.dumps(doc, sort_keys=True, separators=(",", ":"), default=repr)
    return hashlib.sha256(canonical.encode()).hexdigest()


@dataclass
class RunManifest:
    tool_version: str
    config_digest: str
    started_at: str
    row_count: int = 0
    errors: list[dict[str, str]] = field(default_factory=list)

    @classmethod
    def start(cls, digest: str) -> "RunManifest":
        now = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(__version__, digest, now)


def _ratio(x: float | None) -> str:
    return "" if x is None else f"{x:.9g}"


def _param(x: float) -> str:
    return f"{x:.12g}"


def _bps(x: float | None) -> str:
    return "" if x is None else str(int(round(x)))


def summary_row(r: ScenarioResult) -> list[str]:
    return [
        r.scenario_id,
        _param(r.lam),
        _param(r.xi_r),
        _param(r.margin),
        _bps(r.offered_qkd_bps),
        _bps(r.offered_classical_bps),
        _ratio(r.blocked_qkd_ratio),
        _ratio(r.blocked_classical_ratio),
        "" if r.unused_links is None else str(r.unused_links),
        _ratio(r.avg_link_utilization),
        f"{r.runtime_ms:.3f}",
    ]


def emit_results(
    results: Sequence[ScenarioResult],
    destination: str | FsPath,
    detail: bool = False,
    manifest: RunManifest | None = None,
) -> dict[str, FsPath]:
    """Write summary.csv, optionally links.csv, and manifest.json under ``destination``."""
    if not results:
        raise InputDomainError("no results to emit")
    out = FsPath(destination)
    out.mkdir(parents=True, exist_ok=True)
    written = {}

    summary = out / "summary.csv"
    with summary.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for r in results:
            w.writerow(summary_row(r))
    written["summary"] = summary

    if detail:
        links = out / "links.csv"
        with links.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(DETAIL_COLUMNS)
            for r in results:
                for lr in r.links:
                    w.writerow([
                        r.scenario_id,
                        lr.link_id,
                        _param(lr.length_km),
                        lr.n_slots_used,
                        _bps(lr.carried_qkd_bps),
                        _bps(lr.capacity_at_n_bps),
                    ])
        written["links"] = links

    if manifest is None:
        manifest = RunManifest.start("")
    manifest.row_count = len(results)
    manifest.errors = [{"scenario_id": r.scenario_id, "error": r.error} for r in results if r.error]
    path = out / "manifest.json"
    path.write_text(json.dumps(asdict(manifest), indent=2) + "\n", encoding="utf-8")
    written["manifest"] = path
    return written


def read_summary_csv(path: str | FsPath) -> list[dict[str, Any]]:
    """Parse a summary CSV back into typed values (empty cells become None)."""
    floats = {
        "lambda", "xi_r_snu_per_w", "margin", "blocked_qkd_ratio",
        "blocked_classical_ratio", "avg_link_utilization", "runtime_ms",
    }
    ints = {"offered_qkd_bps", "offered_classical_bps", "unused_links"}
    rows = []
    with FsPath(path).open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            row: dict[str, Any] = {}
            for key, text in rec.items():
                if key in floats:
                    row[key] = float(text) if text else None
                elif key in ints:
                    row[key] = int(text) if text else None
                else:
                    row[key] = text
            rows.append(row)
    return rows
