"""File formats: populations, configs, schedules, sessions, results, manifests.

All JSON artifacts are canonical (sorted keys, decimal float strings) so a
save -> load -> save cycle is byte-identical; every artifact embeds the config
hash it was produced under plus a format version that loaders verify.
"""

from __future__ import annotations

import csv
import datetime
import io
from dataclasses import dataclass

import numpy as np

from . import __version__ as TOOL_VERSION
from .calibration import BoundarySchedule, DesignConfig, TruncationRule
from .canonical import atomic_write_text, canonical_dumps, float_str
from .evaluation import OcPoint, ReplaySummary
from .population import FinitePopulation
from .procedure import SessionState, new_session, observe

import json

__all__ = [
    "FORMAT_VERSION",
    "load_population_csv",
    "save_population_csv",
    "load_config",
    "config_from_dict",
    "schedule_to_dict",
    "schedule_from_dict",
    "save_schedule",
    "load_schedule",
    "save_schedule_csv",
    "session_to_dict",
    "save_session",
    "load_session",
    "save_oc_csv",
    "load_oc_csv",
    "save_replay",
    "load_replay",
    "save_tau_histogram_csv",
    "RunManifest",
    "save_manifest",
    "load_manifest",
]

FORMAT_VERSION = 1

_CONFIG_KEYS = {
    "n", "r", "alpha", "beta", "theta_h", "theta_k",
    "variant", "t0", "T", "m_reps", "seed", "backend",
}
_REQUIRED_CONFIG_KEYS = ("n", "r", "alpha", "beta", "theta_h", "theta_k")


def _envelope(kind: str) -> dict:
    return {"format": f"seqaudit.{kind}", "format_version": FORMAT_VERSION, "tool_version": TOOL_VERSION}


def _check_envelope(doc: dict, kind: str) -> None:
    fmt = doc.get("format")
    if fmt != f"seqaudit.{kind}":
        raise ValueError(f"not a seqaudit.{kind} file (format={fmt!r})")
    ver = doc.get("format_version")
    if ver != FORMAT_VERSION:
        raise ValueError(
            f"unsupported {kind} format version {ver!r}; this tool reads version {FORMAT_VERSION}"
        )


# ---------------------------------------------------------------------------
# Populations


def load_population_csv(path, column=None) -> FinitePopulation:
    """Read a population of 0/1 deviation indicators from CSV.

    ``column`` selects a named column (header required) or an integer index;
    with the default None the file must have a single column. A header row is
    auto-detected by a non-numeric first field. Any value other than 0 or 1
    fails with its file line number.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ValueError("empty population: no data rows")

    first = rows[0]
    has_header = any(not _is_number(cell) for cell in first)
    if isinstance(column, str):
        if not has_header:
            raise ValueError(f"column {column!r} requested but the file has no header row")
        try:
            idx = [c.strip() for c in first].index(column)
        except ValueError:
            raise ValueError(f"column {column!r} not found in header {first}") from None
    elif column is None:
        if len(first) != 1:
            raise ValueError(
                "population file has multiple columns; select one with a column name or index"
            )
        idx = 0
    else:
        idx = int(column)

    start = 1 if has_header else 0
    values = []
    for line_no, row in enumerate(rows[start:], start=start + 1):
        if idx >= len(row):
            raise ValueError(f"row {line_no}: missing column {idx}")
        cell = row[idx].strip()
        if cell == "0":
            values.append(0)
        elif cell == "1":
            values.append(1)
        else:
            raise ValueError(
                f"row {line_no}: population values must be 0 or 1, got {cell!r}"
            )
    if not values:
        raise ValueError("empty population: no data rows")
    return FinitePopulation(np.asarray(values, dtype=np.int8))


def _is_number(cell: str) -> bool:
    try:
        float(cell.strip())
        return True
    except ValueError:
        return False


def save_population_csv(pop: FinitePopulation, path) -> None:
    lines = ["deviation"] + [str(int(v)) for v in pop.items]
    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Configs


def config_from_dict(doc: dict) -> DesignConfig:
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    missing = [k for k in _REQUIRED_CONFIG_KEYS if k not in doc]
    if missing:
        raise ValueError(f"missing config keys: {missing}")
    if doc.get("variant") == "truncated" and "T" not in doc:
        raise ValueError("T required for the truncated variant")
    kwargs = {}
    for key, value in doc.items():
        if key in ("r", "alpha", "beta", "theta_h", "theta_k"):
            try:
                kwargs[key] = float(value)
            except (TypeError, ValueError):
                raise ValueError(f"config key {key!r} must be a number, got {value!r}") from None
        elif key in ("n", "t0", "T", "m_reps", "seed"):
            if isinstance(value, bool) or (not isinstance(value, int) and int(value) != value):
                raise ValueError(f"config key {key!r} must be an integer, got {value!r}")
            kwargs[key] = int(value)
        else:
            kwargs[key] = value
    return DesignConfig(**kwargs)


def load_config(path) -> DesignConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise ValueError(f"config file is not valid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise ValueError("config file must contain a JSON object")
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# Schedules


def schedule_to_dict(schedule: BoundarySchedule) -> dict:
    config = schedule.config
    doc = _envelope("schedule")
    doc["config"] = config.to_dict()
    doc["config_hash"] = config.config_hash
    doc["derived"] = {
        "m_h_star": config.m_h_star,
        "m_k_star": config.m_k_star,
        "one_sided_boundary_m": config.m_null_boundary if config.one_sided else None,
        "full_inspection_accept_h_max": config.full_inspection_accept_h_max,
        "min_stage": schedule.min_stage,
        "horizon": schedule.horizon,
        "power_floor_stage": schedule.power_floor_stage,
        "power_target_met": schedule.power_target_met,
        "collapse_stage": schedule.collapse_stage,
    }
    if schedule.truncation is not None:
        doc["truncation"] = {
            "T": schedule.truncation.T,
            "c_t": schedule.truncation.c_t,
            "residual_beta": float_str(schedule.truncation.residual_beta),
            "infeasible": schedule.truncation.infeasible,
        }
    else:
        doc["truncation"] = None
    doc["stages"] = [
        {
            "t": t,
            "lower": int(schedule.lower[t - 1]),
            "upper": int(schedule.upper[t - 1]),
            "cum_alpha": float_str(schedule.cum_upper_err[t - 1]),
            "cum_beta": float_str(schedule.cum_lower_err[t - 1]),
        }
        for t in range(1, config.n)
    ]
    return doc


def schedule_from_dict(doc: dict) -> BoundarySchedule:
    _check_envelope(doc, "schedule")
    config = config_from_dict(doc["config"])
    stated_hash = doc.get("config_hash")
    if stated_hash != config.config_hash:
        raise ValueError(
            "config hash mismatch: file may be tampered or hand-edited "
            f"(stated {stated_hash!r}, computed {config.config_hash!r})"
        )
    stages = doc["stages"]
    if len(stages) != config.n - 1:
        raise ValueError(f"schedule must cover stages 1..{config.n - 1}, got {len(stages)} rows")
    lower = np.zeros(config.n - 1, dtype=np.int64)
    upper = np.zeros(config.n - 1, dtype=np.int64)
    cum_a = np.zeros(config.n - 1)
    cum_b = np.zeros(config.n - 1)
    for row in stages:
        t = int(row["t"])
        lower[t - 1] = int(row["lower"])
        upper[t - 1] = int(row["upper"])
        cum_a[t - 1] = float(row["cum_alpha"])
        cum_b[t - 1] = float(row["cum_beta"])
    trunc = None
    if doc.get("truncation") is not None:
        td = doc["truncation"]
        trunc = TruncationRule(
            T=int(td["T"]),
            c_t=int(td["c_t"]),
            residual_beta=float(td["residual_beta"]),
            infeasible=bool(td["infeasible"]),
        )
    derived = doc.get("derived", {})
    return BoundarySchedule(
        config=config,
        lower=lower,
        upper=upper,
        cum_upper_err=cum_a,
        cum_lower_err=cum_b,
        min_stage=int(derived.get("min_stage", max(1, config.t0))),
        truncation=trunc,
        power_floor_stage=derived.get("power_floor_stage"),
        power_target_met=bool(derived.get("power_target_met", True)),
        collapse_stage=derived.get("collapse_stage"),
    )


def save_schedule(schedule: BoundarySchedule, path) -> None:
    atomic_write_text(path, canonical_dumps(schedule_to_dict(schedule)))


def load_schedule(path) -> BoundarySchedule:
    with open(path, encoding="utf-8") as fh:
        return schedule_from_dict(json.load(fh))


def save_schedule_csv(schedule: BoundarySchedule, path) -> None:
    """Per-stage thresholds in count and rate space plus the error ledger."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "lower", "upper", "kappa_lower", "kappa_upper", "cum_alpha_hat", "cum_beta_hat"])
    for t in range(1, schedule.n):
        writer.writerow(
            [
                t,
                int(schedule.lower[t - 1]),
                int(schedule.upper[t - 1]),
                float_str(schedule.kappa_lower(t)),
                float_str(schedule.kappa_upper(t)),
                float_str(schedule.cum_upper_err[t - 1]),
                float_str(schedule.cum_lower_err[t - 1]),
            ]
        )
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Sessions


def session_to_dict(session: SessionState) -> dict:
    schedule = session.schedule
    doc = _envelope("session")
    doc["schedule"] = schedule_to_dict(schedule)
    doc["history"] = list(session.history)
    doc["status"] = session.status
    doc["decided_at"] = session.decided_at
    doc["decision_source"] = session.decision_source
    doc["t"] = session.t
    doc["count"] = session.count
    rows = []
    s = 0
    for t, x in enumerate(session.history, start=1):
        s += x
        if t <= schedule.n - 1:
            low, high = schedule.stage_bounds(t)
        else:
            low, high = None, None
        rows.append({"t": t, "s": s, "lower": low, "upper": high})
    doc["stages"] = rows
    return doc


def save_session(session: SessionState, path) -> None:
    atomic_write_text(path, canonical_dumps(session_to_dict(session)))


def load_session(path) -> SessionState:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    _check_envelope(doc, "session")
    schedule = schedule_from_dict(doc["schedule"])
    session = new_session(schedule)
    for x in doc["history"]:
        session = observe(session, int(x))
    if session.status != doc["status"]:
        raise ValueError(
            f"session file is inconsistent: stored status {doc['status']!r} "
            f"but replaying the history gives {session.status!r}"
        )
    return session


# ---------------------------------------------------------------------------
# Operating characteristic and replay results


_OC_FIELDS = [
    "m", "p", "accept_k_prob", "error_prob", "expected_tau",
    "se_accept_k", "se_error", "se_tau", "region",
]


def save_oc_csv(points, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_OC_FIELDS)
    for pt in points:
        writer.writerow(
            [
                pt.m,
                float_str(pt.p),
                float_str(pt.accept_k_prob),
                float_str(pt.error_prob),
                float_str(pt.expected_tau),
                float_str(pt.se_accept_k),
                float_str(pt.se_error),
                float_str(pt.se_tau),
                pt.region,
            ]
        )
    atomic_write_text(path, buf.getvalue())


def load_oc_csv(path) -> list[OcPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        points = []
        for row in reader:
            points.append(
                OcPoint(
                    m=int(row["m"]),
                    p=float(row["p"]),
                    accept_k_prob=float(row["accept_k_prob"]),
                    error_prob=float(row["error_prob"]),
                    expected_tau=float(row["expected_tau"]),
                    se_accept_k=float(row["se_accept_k"]),
                    se_error=float(row["se_error"]),
                    se_tau=float(row["se_tau"]),
                    region=row["region"],
                )
            )
    return points


def replay_to_dict(summary: ReplaySummary, config_hash: str | None = None) -> dict:
    doc = _envelope("replay")
    doc["config_hash"] = config_hash
    doc["summary"] = {
        "runs": summary.runs,
        "mean_tau": float_str(summary.mean_tau),
        "median_tau": summary.median_tau,
        "q10_tau": summary.q10_tau,
        "q90_tau": summary.q90_tau,
        "incorrect_pct": float_str(summary.incorrect_pct),
        "inspected_pct": float_str(summary.inspected_pct),
        "accepted_h": summary.accepted_h,
        "accepted_k": summary.accepted_k,
        "in_indifference": summary.in_indifference,
        "region_note": summary.region_note,
    }
    doc["tau_histogram"] = [[int(t), int(c)] for t, c in sorted(summary.tau_histogram.items())]
    return doc


def save_replay(summary: ReplaySummary, path, config_hash: str | None = None) -> None:
    atomic_write_text(path, canonical_dumps(replay_to_dict(summary, config_hash)))


def load_replay(path) -> ReplaySummary:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    _check_envelope(doc, "replay")
    s = doc["summary"]
    return ReplaySummary(
        runs=int(s["runs"]),
        mean_tau=float(s["mean_tau"]),
        median_tau=int(s["median_tau"]),
        q10_tau=int(s["q10_tau"]),
        q90_tau=int(s["q90_tau"]),
        incorrect_pct=float(s["incorrect_pct"]),
        inspected_pct=float(s["inspected_pct"]),
        accepted_h=int(s["accepted_h"]),
        accepted_k=int(s["accepted_k"]),
        in_indifference=bool(s["in_indifference"]),
        tau_histogram={int(t): int(c) for t, c in doc["tau_histogram"]},
    )


def save_tau_histogram_csv(summary: ReplaySummary, path) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tau", "count"])
    for tau, count in sorted(summary.tau_histogram.items()):
        writer.writerow([tau, count])
    atomic_write_text(path, buf.getvalue())


# ---------------------------------------------------------------------------
# Run manifests


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run's artifacts bit for bit.

    ``parameters`` records the non-config inputs of the producing command
    (evaluation seed, reps, grid, worker count), so replaying a manifest
    regenerates every random draw.
    """

    config_hash: str
    master_seed: int
    backend: str
    artifacts: dict
    parameters: dict = None
    tool_version: str = TOOL_VERSION
    created_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parameters", dict(self.parameters or {}))

    @staticmethod
    def for_config(config: DesignConfig, artifacts: dict, parameters: dict | None = None) -> "RunManifest":
        return RunManifest(
            config_hash=config.config_hash,
            master_seed=config.seed,
            backend=config.backend,
            artifacts=dict(artifacts),
            parameters=parameters,
            created_at=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        )


def save_manifest(manifest: RunManifest, path) -> None:
    doc = _envelope("manifest")
    doc.update(
        {
            "config_hash": manifest.config_hash,
            "master_seed": manifest.master_seed,
            "backend": manifest.backend,
            "artifacts": manifest.artifacts,
            "parameters": manifest.parameters,
            "created_at": manifest.created_at,
        }
    )
    doc["tool_version"] = manifest.tool_version
    atomic_write_text(path, canonical_dumps(doc))


def load_manifest(path) -> RunManifest:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    _check_envelope(doc, "manifest")
    return RunManifest(
        config_hash=doc["config_hash"],
        master_seed=int(doc["master_seed"]),
        backend=doc["backend"],
        artifacts=dict(doc["artifacts"]),
        parameters=dict(doc.get("parameters", {})),
        tool_version=doc["tool_version"],
        created_at=doc["created_at"],
    )
