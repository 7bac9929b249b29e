"""Scenario configuration, execution and on-disk artifacts.

A scenario is a YAML document with the sections ``network``,
``attributes``, ``gains``, ``algorithm``, ``events``, ``integrator`` and
``output`` (see README for the schema).  :func:`run` executes it and
writes tidy CSV time series, a plotting manifest, a config echo and
``summary.json``.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Hashable

import numpy as np
import yaml

from .algorithms import (
    ALGORITHMS, TIE_BREAKS, AlgorithmRun, RunSettings, Scenario, kstar, oracle_mode, run_algorithm,
)
from .bounds import PRESETS, BoundReport, bound_report, select_gains, time_bound_x, time_bound_y, time_bound_z
from .errors import ConfigError, ModeConsensusError
from .integrate import Trajectory, box_violations
from .network import (
    EVENT_KINDS, LEADER_POLICIES, AttributeTable, ScenarioEvent, apply_events, build_network,
    check_dwell, random_connected_edges,
)
from .protocols import GainSet, boxes, build_system, rnd

NETWORK_KINDS = ("ring", "path", "complete", "edges", "random")
GAIN_FIELDS = ("h_x", "gamma_x", "h_y", "gamma_y", "beta", "g", "gamma_z")


# schema


@dataclass(frozen=True)
class NetworkSpec:
    kind: str = "ring"
    n: int = 3
    n_bar: int | None = None
    edges: tuple[tuple[int, int], ...] = ()
    p: float = 0.3
    leader: int = 1
    leader_policy: str = "require"


@dataclass(frozen=True)
class AttributeSpec:
    universe: tuple | None = None
    histogram: tuple[int, ...] | None = None
    values: tuple | None = None
    shuffle: bool = True


@dataclass(frozen=True)
class GainSpec:
    preset: str | None = None
    overrides: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str = "direct"
    K: int | None = None
    f_star: int | None = None
    execution: str = "sequential"
    counter: bool = False
    tie_break: str = "lowest-index"
    cadence: float | None = None
    verify: bool = True


@dataclass(frozen=True)
class EventSpec:
    time: float
    kind: str
    nodes: tuple[int, ...] = ()
    edges: tuple[tuple[int, int], ...] = ()
    attribute: Any = None
    init: float | None = None


@dataclass(frozen=True)
class IntegratorSpec:
    dt: float | None = None
    horizon: float | None = None
    window: float = 0.05
    init: str = "box"


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    timeseries: bool = True
    max_samples: int = 2000


@dataclass(frozen=True)
class ScenarioConfig:
    network: NetworkSpec
    attributes: AttributeSpec
    name: str = "scenario"
    seed: int = 0
    gains: GainSpec = GainSpec()
    algorithm: AlgorithmSpec = AlgorithmSpec()
    events: tuple[EventSpec, ...] = ()
    integrator: IntegratorSpec = IntegratorSpec()
    output: OutputSpec = OutputSpec()


def _tuplify(v):
    if isinstance(v, list):
        return tuple(_tuplify(x) for x in v)
    return v


def _listify(v):
    if isinstance(v, (list, tuple)):
        return [_listify(x) for x in v]
    if isinstance(v, dict):
        return {k: _listify(x) for k, x in v.items()}
    return v


def _section(cls, data, path: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", path)
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown}", path)
    return {k: _tuplify(v) for k, v in data.items()}


def _expect(value, types, path: str, *, optional: bool = False):
    if value is None and optional:
        return value
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(f"expected {types}, got a boolean", path)
    if not isinstance(value, types):
        raise ConfigError(f"expected {getattr(types, '__name__', types)}, got {type(value).__name__}", path)
    return value


def _choice(value, options, path):
    if value not in options:
        raise ConfigError(f"{value!r} is not one of {list(options)}", path)
    return value


def _pairs(value, path) -> tuple[tuple[int, int], ...]:
    out = []
    for i, e in enumerate(value or ()):
        if not (isinstance(e, tuple) and len(e) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in e)):
            raise ConfigError("edge must be a pair of integers", f"{path}[{i}]")
        out.append((int(e[0]), int(e[1])))
    return tuple(out)


_NUM = (int, float)


def config_from_dict(data: dict) -> ScenarioConfig:
    top = _section(ScenarioConfig, data, "<root>")
    for key in ("network", "attributes"):
        if key not in top:
            raise ConfigError("required section missing", key)

    net = _section(NetworkSpec, data.get("network"), "network")
    net_spec = NetworkSpec(**net)
    _choice(net_spec.kind, NETWORK_KINDS, "network.kind")
    _expect(net_spec.n, int, "network.n")
    if net_spec.n < 1:
        raise ConfigError("must be positive", "network.n")
    _expect(net_spec.n_bar, int, "network.n_bar", optional=True)
    if net_spec.n_bar is not None and net_spec.n_bar < net_spec.n:
        raise ConfigError(f"n_bar={net_spec.n_bar} below n={net_spec.n}", "network.n_bar")
    _expect(net_spec.p, _NUM, "network.p")
    _expect(net_spec.leader, int, "network.leader")
    _choice(net_spec.leader_policy, LEADER_POLICIES, "network.leader_policy")
    net_spec = replace(net_spec, edges=_pairs(net_spec.edges, "network.edges"), p=float(net_spec.p))
    if net_spec.kind == "edges" and not net_spec.edges:
        raise ConfigError("an edge-list network needs edges", "network.edges")

    att_spec = AttributeSpec(**_section(AttributeSpec, data.get("attributes"), "attributes"))
    n = net_spec.n
    if (att_spec.histogram is None) == (att_spec.values is None):
        raise ConfigError("give exactly one of histogram or values", "attributes")
    if att_spec.histogram is not None:
        hist = att_spec.histogram
        if not isinstance(hist, tuple) or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 0 for c in hist):
            raise ConfigError("histogram must be a list of non-negative integers", "attributes.histogram")
        if sum(hist) != n:
            raise ConfigError(f"histogram totals {sum(hist)} but the network has {n} nodes", "attributes.histogram")
        if att_spec.universe is not None and len(att_spec.universe) != len(hist):
            raise ConfigError("universe and histogram lengths differ", "attributes.universe")
    else:
        if not isinstance(att_spec.values, tuple) or len(att_spec.values) != n:
            raise ConfigError(f"need exactly {n} values", "attributes.values")
    if att_spec.universe is not None:
        if len(set(att_spec.universe)) != len(att_spec.universe):
            raise ConfigError("universe has duplicates", "attributes.universe")
        if att_spec.values is not None:
            missing = set(att_spec.values) - set(att_spec.universe)
            if missing:
                raise ConfigError(f"values {sorted(map(str, missing))} not in the universe", "attributes.values")
    _expect(att_spec.shuffle, bool, "attributes.shuffle")

    g = _section(GainSpec, data.get("gains"), "gains")
    over = g.get("overrides") or {}
    if not isinstance(over, dict):
        raise ConfigError("expected a mapping of gain name to value", "gains.overrides")
    over = tuple(sorted(over.items()))
    for k, v in over:
        _choice(k, GAIN_FIELDS, "gains.overrides")
        _expect(v, _NUM, f"gains.overrides.{k}")
    gain_spec = GainSpec(g.get("preset"), tuple((k, float(v)) for k, v in over))
    if gain_spec.preset is not None:
        _choice(gain_spec.preset, PRESETS, "gains.preset")

    alg = AlgorithmSpec(**_section(AlgorithmSpec, data.get("algorithm"), "algorithm"))
    _choice(alg.name, ALGORITHMS, "algorithm.name")
    _choice(alg.execution, ("sequential", "combined"), "algorithm.execution")
    _choice(alg.tie_break, TIE_BREAKS, "algorithm.tie_break")
    _expect(alg.K, int, "algorithm.K", optional=True)
    _expect(alg.f_star, int, "algorithm.f_star", optional=True)
    _expect(alg.cadence, _NUM, "algorithm.cadence", optional=True)
    _expect(alg.counter, bool, "algorithm.counter")
    _expect(alg.verify, bool, "algorithm.verify")
    if alg.name == "apriori-K" and alg.K is None and alg.f_star is None:
        raise ConfigError("apriori-K needs K or f_star", "algorithm")
    if alg.K is not None and not 1 <= alg.K <= n:
        raise ConfigError(f"K must lie in 1..{n}", "algorithm.K")
    if alg.f_star is not None and not 1 <= alg.f_star <= n:
        raise ConfigError(f"f_star must lie in 1..{n}", "algorithm.f_star")

    events = []
    raw_events = data.get("events") or []
    if not isinstance(raw_events, list):
        raise ConfigError("expected a list", "events")
    for i, raw in enumerate(raw_events):
        path = f"events[{i}]"
        e = _section(EventSpec, raw, path)
        for req in ("time", "kind"):
            if req not in e:
                raise ConfigError("required key missing", f"{path}.{req}")
        ev = EventSpec(**e)
        _expect(ev.time, _NUM, f"{path}.time")
        _choice(ev.kind, EVENT_KINDS, f"{path}.kind")
        _expect(ev.init, _NUM, f"{path}.init", optional=True)
        nodes = ev.nodes if isinstance(ev.nodes, tuple) else (ev.nodes,)
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in nodes):
            raise ConfigError("nodes must be integers", f"{path}.nodes")
        events.append(replace(ev, time=float(ev.time), nodes=nodes, edges=_pairs(ev.edges, f"{path}.edges"),
                              init=None if ev.init is None else float(ev.init)))

    integ = IntegratorSpec(**_section(IntegratorSpec, data.get("integrator"), "integrator"))
    _expect(integ.dt, _NUM, "integrator.dt", optional=True)
    _expect(integ.horizon, _NUM, "integrator.horizon", optional=True)
    _expect(integ.window, _NUM, "integrator.window")
    _choice(integ.init, ("box", "integers"), "integrator.init")
    if integ.window <= 0:
        raise ConfigError("must be positive", "integrator.window")
    integ = replace(integ, dt=None if integ.dt is None else float(integ.dt),
                    horizon=None if integ.horizon is None else float(integ.horizon), window=float(integ.window))

    out = OutputSpec(**_section(OutputSpec, data.get("output"), "output"))
    _expect(out.dir, str, "output.dir")
    _expect(out.max_samples, int, "output.max_samples")

    name = _expect(top.get("name", "scenario"), str, "name")
    seed = _expect(top.get("seed", 0), int, "seed")
    cfg = ScenarioConfig(net_spec, att_spec, name, seed, gain_spec, alg, tuple(events), integ, out)
    build_scenario(cfg)  # pre-checks every network and event invariant
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("expected a mapping", "<root>")
    return config_from_dict(data)


def load_config(path: str | Path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(str(exc), str(path)) from exc
    return parse_config(text)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = asdict(cfg)
    d["gains"]["overrides"] = dict(cfg.gains.overrides)
    order = ["name", "seed", "network", "attributes", "gains", "algorithm", "events", "integrator", "output"]
    return _listify({k: d[k] for k in order})


def emit_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


# scenario construction


def _network_edges(spec: NetworkSpec, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = spec.n
    if spec.kind == "ring":
        if n < 3:
            raise ConfigError(f"a ring needs at least 3 nodes, got {n}", "network.n")
        return [(i, i % n + 1) for i in range(1, n + 1)]
    if spec.kind == "path":
        return [(i, i + 1) for i in range(1, n)]
    if spec.kind == "complete":
        return [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    if spec.kind == "random":
        return random_connected_edges(n, spec.p, rng)
    return list(spec.edges)


def _attribute_layout(spec: AttributeSpec, n: int, rng: np.random.Generator) -> tuple[list, tuple]:
    if spec.histogram is not None:
        universe = spec.universe if spec.universe is not None else tuple(range(1, len(spec.histogram) + 1))
        labels = [a for a, c in zip(universe, spec.histogram) for _ in range(c)]
    else:
        labels = list(spec.values)
        universe = spec.universe
    if spec.shuffle:
        order = rng.permutation(n)
        labels = [labels[i] for i in order]
    return labels, universe


def resolve_gains(cfg: ScenarioConfig, n_bar: int, omega_size: int) -> tuple[GainSet, list[str]]:
    notes = []
    preset = cfg.gains.preset
    if preset is None:
        preset = "desk"
        notes.append("no gains given; desk preset selected")
    K = cfg.algorithm.K or 1
    gains = select_gains(n_bar, omega_size, preset, n=cfg.network.n, K=K)
    if cfg.gains.overrides:
        gains = replace(gains, preset=f"{preset}+overrides", **dict(cfg.gains.overrides))
    return gains, notes


def build_scenario(cfg: ScenarioConfig) -> tuple[Scenario, list[str]]:
    """Network, attributes and gains for ``cfg``; raises :class:`ConfigError` on invalid input."""
    rng = np.random.default_rng(cfg.seed)
    spec = cfg.network
    n_bar = spec.n_bar or spec.n
    try:
        edges = _network_edges(spec, rng)
        labels, universe = _attribute_layout(cfg.attributes, spec.n, rng)
        extra = [e.attribute for e in cfg.events if e.attribute is not None]
        if universe is None:
            pool = list(dict.fromkeys([*labels, *extra]))
            try:
                universe = tuple(sorted(pool))
            except TypeError:
                universe = tuple(pool)
        elif any(a not in universe for a in extra):
            raise ConfigError(f"event attributes {[a for a in extra if a not in universe]} not in the universe",
                              "events")
        timeline, attrs = build_network(spec.n, edges, labels, n_bar=n_bar, leader=spec.leader,
                                        universe=universe, leader_policy=spec.leader_policy)
    except (ModeConsensusError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), "network") from exc
    box = boxes(n_bar)[_init_family(cfg)]
    events = [ScenarioEvent(e.time, e.kind, e.nodes, e.edges, e.attribute, e.init,
                            box if e.init is not None else None) for e in cfg.events]
    try:
        timeline, attrs = apply_events(timeline, attrs, events)
    except (ModeConsensusError, ValueError) as exc:
        raise ConfigError(str(exc), "events") from exc
    gains, notes = resolve_gains(cfg, n_bar, attrs.size)
    a = cfg.algorithm
    settings = RunSettings(window=cfg.integrator.window, dt=cfg.integrator.dt, horizon=cfg.integrator.horizon,
                           seed=cfg.seed, tie_break=a.tie_break, verify=a.verify, cadence=a.cadence,
                           execution=a.execution, counter=a.counter, init=cfg.integrator.init)
    return Scenario(timeline, attrs, gains, settings), notes


def _init_family(cfg: ScenarioConfig) -> str:
    if cfg.algorithm.name == "apriori-K" and cfg.algorithm.execution == "combined":
        return "x"  # the tightest box shared by every column
    return "y"


def required_dwell(cfg: ScenarioConfig, gains: GainSet, n_bar: int, omega_size: int) -> float:
    """Spacing between changes that lets the chosen algorithm re-lock before the next change."""
    if cfg.algorithm.name == "direct":
        return time_bound_y(n_bar, gains.h_y)
    return time_bound_x(n_bar, gains.h_x) + time_bound_y(n_bar, gains.h_y) + time_bound_z(n_bar, omega_size, gains.beta)


# running


@dataclass
class Verdict:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class RunSummary:
    name: str
    algorithm: str
    mode: Hashable | None
    mode_estimate: dict
    frequencies: dict
    lock_times: dict
    bounds: BoundReport
    K_trace: list[int]
    state_var_count: int
    elapsed: float
    wall_clock: float
    verdicts: list[Verdict]
    notes: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    files: list[str] = field(default_factory=list)
    result: AlgorithmRun | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "algorithm": self.algorithm,
            "mode": self.mode,
            "mode_estimate": {str(k): v for k, v in self.mode_estimate.items()},
            "frequencies": {str(k): v for k, v in self.frequencies.items()},
            "lock_times": self.lock_times,
            "bound_report": self.bounds.to_dict(),
            "gain_checks": [c.to_dict() for c in self.bounds.gain_checks],
            "K_trace": self.K_trace,
            "state_var_count": self.state_var_count,
            "elapsed": self.elapsed,
            "wall_clock_s": self.wall_clock,
            "verdicts": [asdict(v) for v in self.verdicts],
            "passed": self.passed,
            "notes": self.notes,
            "warnings": self.warnings,
            "files": self.files,
        }


def _verdicts(cfg: ScenarioConfig, scenario: Scenario, result: AlgorithmRun) -> list[Verdict]:
    tl = scenario.timeline
    labels = scenario.labels(len(tl.segments) - 1)
    modes, best = oracle_mode(labels, scenario.attrs)
    count = labels.count(result.mode) if result.mode is not None else 0
    out = [
        Verdict("mode-matches-oracle", count == best,
                f"returned {result.mode!r} with frequency {count}; oracle modes {modes} with frequency {best}"),
        Verdict("locks-within-bounds", not result.failures, "; ".join(result.failures)),
    ]
    if cfg.algorithm.verify:
        out.append(Verdict("protocol-values-match-oracle", not result.mismatches, "; ".join(result.mismatches)))
    if tl.events:
        n_bar, omega = scenario.n_bar, scenario.omega_size
        dwell = required_dwell(cfg, scenario.gains, n_bar, omega)
        rep = check_dwell(tl, dwell, include_start=True)
        out.append(Verdict("dwell-time", rep.passed,
                           f"required {dwell:.6g} s; gaps {[round(g.gap, 6) for g in rep.gaps]}"))
        bad = []
        for idx, (start, mode) in enumerate(result.segment_modes):
            seg_labels = scenario.labels(idx)
            _, f = oracle_mode(seg_labels)
            if mode is None or seg_labels.count(mode) != f:
                bad.append(f"segment at {start:g}: got {mode!r}")
        out.append(Verdict("segment-modes-match-oracle", not bad and len(result.segment_modes) == len(tl.segments),
                           "; ".join(bad)))
        viol = []
        for sub in result.subruns:
            if sub.trajectory is None:
                continue
            systems = _systems_for(sub, scenario)
            viol += box_violations(sub.trajectory, systems)
        out.append(Verdict("states-in-admissible-boxes", not viol,
                           "; ".join(f"t={t:g} agent {i} {v}={x:.6g}" for t, i, v, x in viol[:10])))
    return out


def _systems_for(sub, scenario: Scenario):
    kw = {}
    if sub.kind == "frequency":
        kw["attribute"] = _label_from_var(sub.trajectory.variables[0], scenario.attrs)
    elif sub.kind == "combined":
        kw["K"] = (len(sub.trajectory.variables) - 1) // 2
    return [build_system(sub.kind, seg, scenario.attrs, scenario.gains, n_bar=scenario.n_bar, **kw)
            for seg in scenario.timeline.segments]


# artifacts

FIGURES = {
    ("direct", "mode"): "mode estimated at each agent (direct algorithm)",
    ("direct", "frequency"): "frequency estimates per attribute (direct algorithm)",
    ("size", None): "network size estimated at each agent",
    ("kth", None): "k-th smallest attribute estimated at each agent",
    ("candidate-frequency", None): "frequency of each candidate attribute",
    ("apriori-K", "mode"): "mode estimated at each agent (a-priori K)",
    ("adaptive-K", "mode"): "mode estimated at each agent (adaptive K)",
    ("adaptive-K", "K"): "time evolution of K",
    ("combined", None): "combined dynamics: size, candidates, frequencies and mode",
}


def _thin(n: int, max_samples: int) -> np.ndarray:
    if n <= max_samples:
        return np.arange(n)
    idx = np.unique(np.linspace(0, n - 1, max_samples).round().astype(int))
    return idx


def emit_timeseries(traj: Trajectory, path: Path, *, max_samples: int = 2000,
                    extra: dict[str, np.ndarray] | None = None, time_offset: float = 0.0) -> Path:
    """Tidy CSV ``time_s, agent_id, variable, value`` for the agents active at each sample."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    series = {name: traj.states[:, :, c] for c, name in enumerate(traj.variables)}
    series.update(traj.derived)
    if extra:
        series.update(extra)
    rows = _thin(len(traj), max_samples)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_s", "agent_id", "variable", "value"])
        for t in rows:
            ts = format(float(traj.times[t]) + time_offset, ".17g")
            agents = np.flatnonzero(traj.active[t]) + 1
            for name, arr in series.items():
                for i in agents:
                    w.writerow([ts, int(i), name, format(float(arr[t, i - 1]), ".17g")])
    return path


def _mode_series(subs, table: AttributeTable, policy: str) -> np.ndarray | None:
    """Per-sample, per-agent argmax of rounded frequency estimates; ``None`` when grids differ."""
    trajs = [s.trajectory for s in subs]
    if not trajs or any(len(t) != len(trajs[0]) or not np.array_equal(t.times, trajs[0].times) for t in trajs):
        return None
    labels = [_label_from_var(t.variables[0], table) for t in trajs]
    vals = np.stack([rnd(t.states[:, :, 0]) for t in trajs], axis=-1)  # (T, n_bar, A)
    levels = np.array([table.level(a) for a in labels])
    order = np.argsort(levels if policy == "lowest-index" else -levels, kind="stable")
    best = order[np.argmax(vals[..., order], axis=-1)]
    return levels[best].astype(float)


def _label_from_var(var: str, table: AttributeTable):
    inner = var[var.index("[") + 1:-1]
    for a in table.universe:
        if str(a) == inner:
            return a
    raise KeyError(inner)


def write_artifacts(out_dir: Path, cfg: ScenarioConfig, scenario: Scenario, result: AlgorithmRun) -> list[dict]:
    ts_dir = out_dir / "timeseries"
    manifest = []
    maxs = cfg.output.max_samples
    alg = result.algorithm

    def add(path, protocol, figure):
        manifest.append({"file": str(path.relative_to(out_dir)), "protocol": protocol, "figure": figure})

    if cfg.output.timeseries:
        for i, sub in enumerate(result.subruns):
            safe = sub.name.replace("(", "_").replace(")", "").replace(" ", "")
            p = emit_timeseries(sub.trajectory, ts_dir / f"{i:02d}_{safe}.csv", max_samples=maxs)
            if sub.kind == "size":
                fig = FIGURES[("size", None)]
            elif sub.kind == "kth":
                fig = FIGURES[("kth", None)]
            elif sub.kind == "combined":
                fig = FIGURES[("combined", None)]
            elif alg == "direct":
                fig = FIGURES[("direct", "frequency")]
            else:
                fig = FIGURES[("candidate-frequency", None)]
            add(p, sub.name, fig)
        freq_subs = [s for s in result.subruns if s.kind == "frequency"]
        if alg != "direct" and result.candidates:
            wanted = {f"frequency({c.label})" for c in result.candidates}
            last = {}
            for s in freq_subs:
                if s.name in wanted:
                    last[s.name] = s
            freq_subs = list(last.values())
        mode = _mode_series(freq_subs, scenario.attrs, cfg.algorithm.tie_break) if freq_subs else None
        if mode is not None:
            base = freq_subs[0].trajectory
            mtraj = Trajectory(base.times, mode[:, :, None], "mode", ["mhat"], base.active, base.segment_starts)
            p = emit_timeseries(mtraj, ts_dir / "mode.csv", max_samples=maxs)
            add(p, "mode", FIGURES[(alg, "mode")])
    if alg == "adaptive-K":
        p = out_dir / "k_trace.csv"
        with p.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["round", "K", "start_s", "F", "candidates"])
            w.writerow([0, 1, format(0.0, ".17g"), 1, ""])
            for r, rd in enumerate(result.rounds, start=1):
                cands = " ".join(f"{c.position}:{c.label}:{c.frequency}" for c in rd.candidates)
                w.writerow([r, rd.K, format(rd.start, ".17g"), rd.F, cands])
        add(p, "K", FIGURES[("adaptive-K", "K")])
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


def run(cfg: ScenarioConfig, out_dir: str | Path | None = None) -> RunSummary:
    """Execute ``cfg`` and write every artifact into ``out_dir`` (default ``cfg.output.dir``)."""
    t0 = time.perf_counter()
    scenario, notes = build_scenario(cfg)
    out = Path(out_dir if out_dir is not None else cfg.output.dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(str(exc), "output.dir") from exc
    a = cfg.algorithm
    f_star = a.f_star
    k_star = None
    labels = scenario.labels(0)
    if a.name != "direct":
        _, best = oracle_mode(labels)
        k_star = kstar(best, len(labels))
    result = run_algorithm(scenario, a.name, f_star=f_star, K=a.K)
    report = bound_report(scenario.gains, scenario.n_bar, scenario.omega_size,
                          segment=scenario.timeline.segments[0], k_star=k_star)
    verdicts = _verdicts(cfg, scenario, result)
    (out / "config.yaml").write_text(emit_config(cfg))
    manifest = write_artifacts(out, cfg, scenario, result)
    summary = RunSummary(
        name=cfg.name,
        algorithm=result.algorithm,
        mode=_jsonable(result.mode),
        mode_estimate={i: _jsonable(m) for i, m in result.mode_estimate.items()},
        frequencies={a_: _jsonable(f) for a_, f in result.frequencies.items()},
        lock_times={s.name: s.lock.lock_time for s in result.subruns},
        bounds=report,
        K_trace=list(result.K_trace),
        state_var_count=result.state_var_count,
        elapsed=float(result.elapsed),
        wall_clock=time.perf_counter() - t0,
        verdicts=verdicts,
        notes=notes,
        warnings=list(result.warnings),
        files=[m["file"] for m in manifest],
        result=result,
    )
    (out / "summary.json").write_text(json.dumps(summary.to_dict(), indent=2, default=str) + "\n")
    return summary
