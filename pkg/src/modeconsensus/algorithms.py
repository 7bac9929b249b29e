"""Mode-finding algorithms built from the consensus protocols, plus brute-force oracles.

Three strategies are provided:

* :func:`run_algorithm1` (``direct``) counts every attribute and takes the
  argmax;
* :func:`run_algorithm2` (``apriori-K``) uses a known lower bound on the mode
  frequency to restrict counting to a few order statistics;
* :func:`run_algorithm3` (``adaptive-K``) learns that lower bound by
  increasing ``K`` until the pigeonhole condition certifies the candidates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .bounds import time_bound_x, time_bound_y, time_bound_z
from .errors import AlgorithmInconsistency, ConfigError
from .integrate import (
    DEFAULT_WINDOW, LockDetector, LockReport, Trajectory, detect_lock, integrate_fixed_step,
    max_stable_dt, run_piecewise,
)
from .network import AttributeTable, NetworkTimeline
from .protocols import GainSet, boxes, build_system, ceil_div, rnd

ALGORITHMS = ("direct", "apriori-K", "adaptive-K")
TIE_BREAKS = ("lowest-index", "highest-index")


# oracles and combinatorics


def oracle_mode(attrs: Iterable[Hashable], table: AttributeTable | None = None) -> tuple[list, int]:
    """All most frequent labels (ordered by index when a table is given) and their frequency."""
    counts = Counter(attrs)
    if not counts:
        raise ValueError("mode of an empty multiset")
    best = max(counts.values())
    modes = [a for a, c in counts.items() if c == best]
    if table is not None:
        modes.sort(key=table.level)
    else:
        try:
            modes.sort()
        except TypeError:
            pass
    return modes, best


def oracle_kth(attrs: Sequence[Hashable], k: int, table: AttributeTable | None = None):
    """k-th smallest attribute under the index order (labels compared directly without a table)."""
    if not 1 <= k <= len(attrs):
        raise ValueError(f"k={k} outside 1..{len(attrs)}")
    key = table.level if table is not None else None
    return sorted(attrs, key=key)[k - 1]


def candidate_positions(n: int, K: int) -> list[int]:
    """Order-statistic positions that must contain any attribute of frequency ``>= ceil(n/K)``."""
    if not 1 <= K <= n:
        raise ValueError(f"K={K} outside 1..{n}")
    step = ceil_div(n, K)
    # positions past n hold no order statistic; usually this drops just j = K
    return [j * step for j in range(1, n // step + 1)]


def kstar(f_star: int, n: int) -> int:
    """Smallest ``K`` with ``f_star >= ceil(n / K)``."""
    if not 1 <= f_star <= n:
        raise ValueError(f"f_star={f_star} outside 1..{n}")
    K = 1
    while f_star < ceil_div(n, K):
        K += 1
    return K


def state_count(algorithm: str, K: int | None = None, *, n: int | None = None, omega_size: int | None = None) -> int:
    """Scalar states each agent maintains.

    ``direct`` needs one counter per attribute; ``apriori-K`` needs the size
    estimate plus a (position, frequency) pair per candidate, with fewer
    pairs when ``n`` is given and some positions exceed it; ``adaptive-K``
    pays for every round up to ``K``.
    """
    if algorithm == "direct":
        if omega_size is None:
            raise ValueError("direct algorithm needs omega_size")
        return int(omega_size)
    if K is None or K < 1:
        raise ValueError("K must be a positive integer")
    if algorithm == "apriori-K":
        if n is not None:
            return 2 * len(candidate_positions(n, min(K, n))) + 1
        return 2 * K + 1
    if algorithm == "adaptive-K":
        return K * (K + 1) + 1
    raise ValueError(f"unknown algorithm {algorithm!r}")


def select_mode(freqs: dict, table: AttributeTable, policy: str = "lowest-index"):
    """Argmax of ``freqs`` with ties resolved by index order."""
    if policy not in TIE_BREAKS:
        raise ValueError(f"tie_break must be one of {TIE_BREAKS}")
    best = max(freqs.values())
    tied = sorted((a for a, f in freqs.items() if f == best), key=table.level)
    return tied[0] if policy == "lowest-index" else tied[-1]


# runs


@dataclass
class RunSettings:
    window: float = DEFAULT_WINDOW
    dt: float | None = None
    horizon: float | None = None
    seed: int = 0
    tie_break: str = "lowest-index"
    verify: bool = True
    cadence: float | None = None
    execution: str = "sequential"
    counter: bool = False
    init: str = "box"


@dataclass
class Scenario:
    timeline: NetworkTimeline
    attrs: AttributeTable
    gains: GainSet
    settings: RunSettings = field(default_factory=RunSettings)

    @property
    def n_bar(self) -> int:
        return self.timeline.n_bar

    @property
    def omega_size(self) -> int:
        return self.attrs.size

    def labels(self, segment_index: int = 0) -> list:
        seg = self.timeline.segments[segment_index]
        return [self.attrs.label_at(i, seg.start) for i in sorted(seg.active)]


@dataclass
class SubRun:
    name: str
    kind: str
    lock: LockReport
    bound: float
    trajectory: Trajectory | None = None
    oracle: int | None = None
    segment_locks: list[LockReport] = field(default_factory=list)
    dt: float | None = None  # fixed step, for stepped runs

    @property
    def value(self) -> int | None:
        return None if self.lock.locked_values is None else int(self.lock.locked_values[0])

    @property
    def duration(self) -> float | None:
        """Lock time measured from the start of this sub-run."""
        if self.lock.lock_time is None:
            return None
        return self.lock.lock_time - (self.trajectory.segment_starts[-1] if self.trajectory is not None else 0.0)

    @property
    def matches_oracle(self) -> bool | None:
        if self.oracle is None:
            return None
        return self.value == self.oracle


@dataclass
class Candidate:
    position: int
    label: Hashable
    frequency: int | None = None


@dataclass
class Round:
    K: int
    start: float
    candidates: list[Candidate]
    F: int


@dataclass
class AlgorithmRun:
    algorithm: str
    K_trace: list[int] = field(default_factory=list)
    candidates: list[Candidate] = field(default_factory=list)
    rounds: list[Round] = field(default_factory=list)
    mode: Hashable | None = None
    mode_estimate: dict[int, Hashable] = field(default_factory=dict)
    frequencies: dict = field(default_factory=dict)
    elapsed: float = 0.0
    state_var_count: int = 0
    n_estimate: int | None = None
    subruns: list[SubRun] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    mismatches: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    segment_modes: list[tuple[float, Hashable | None]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _rng(settings: RunSettings, *tags: int) -> np.random.Generator:
    return np.random.default_rng([int(settings.seed), *tags])


_TAGS = {"size": 1, "frequency": 2, "counter": 3, "kth": 4, "combined": 5}


def initial_state(kind: str, scenario: Scenario, rng: np.random.Generator, dim: int = 1) -> np.ndarray:
    """Independent local initial values for the agents active at time zero."""
    n_bar = scenario.n_bar
    b = boxes(n_bar)
    fam = {"size": "x", "frequency": "y", "counter": "y", "kth": "z"}
    cols = [fam[kind]] * dim if kind != "combined" else ["x"] + ["z"] * ((dim - 1) // 2) + ["y"] * ((dim - 1) // 2)
    y0 = np.zeros((n_bar, dim))
    for slot in (i - 1 for i in sorted(scenario.timeline.segments[0].active)):
        for c, f in enumerate(cols):
            if scenario.settings.init == "integers":
                hi = scenario.omega_size if f == "z" else n_bar
                y0[slot, c] = rng.integers(1, hi + 1)
            else:
                y0[slot, c] = rng.uniform(*b[f])
    return y0


def _oracle_for(kind, scenario: Scenario, seg_index: int, *, attribute=None, k=None) -> int:
    labels = scenario.labels(seg_index)
    if kind == "size":
        return len(labels)
    if kind == "frequency":
        return sum(1 for a in labels if a == attribute)
    if kind == "kth":
        return scenario.attrs.level(oracle_kth(labels, k, scenario.attrs))
    raise ValueError(kind)


def run_linear(scenario: Scenario, kind: str, *, attribute=None, tag: int = 0) -> SubRun:
    """Exact piecewise run of a size or frequency protocol over the whole timeline."""
    s = scenario.settings
    tl = scenario.timeline
    bound = time_bound_x(scenario.n_bar, scenario.gains.h_x) if kind == "size" else \
        time_bound_y(scenario.n_bar, scenario.gains.h_y)
    systems = [build_system(kind, seg, scenario.attrs, scenario.gains, n_bar=scenario.n_bar, attribute=attribute)
               for seg in tl.segments]
    dim = systems[0].dim
    y0 = initial_state(kind, scenario, _rng(s, _TAGS[kind], tag), dim)
    last = tl.last.start
    horizon = s.horizon if s.horizon is not None else last + 1.05 * bound + 3 * s.window
    traj = run_piecewise(tl, systems, y0, horizon, method="exact", window=s.window)
    seg_locks = []
    ends = tl.segment_ends(horizon)
    for seg, end in zip(tl.segments, ends):
        part = traj.between(seg.start, end) if end < horizon else traj.between(seg.start)
        seg_locks.append(detect_lock(part, s.window, final=True, bound=seg.start + bound))
    name = kind if kind == "size" else f"{kind}({attribute})" if kind == "frequency" else kind
    oracle = None
    if s.verify and kind != "counter":
        oracle = _oracle_for(kind, scenario, len(tl.segments) - 1, attribute=attribute)
    return SubRun(name, kind, seg_locks[-1], bound, traj, oracle, seg_locks)


def run_kth(scenario: Scenario, k: int, n_est: int, *, tag: int = 0, horizon: float | None = None) -> SubRun:
    """Fixed-step k-th smallest run on the current network, stopping once the value is certified."""
    s = scenario.settings
    seg = scenario.timeline.last
    system = build_system("kth", seg, scenario.attrs, scenario.gains, n_bar=scenario.n_bar, k=k, n_est=n_est)
    bound = time_bound_z(scenario.n_bar, scenario.omega_size, scenario.gains.beta)
    dt = s.dt if s.dt is not None else max_stable_dt(system)
    y0 = initial_state("kth", scenario, _rng(s, _TAGS["kth"], k, tag))
    if horizon is None:
        horizon = s.horizon if s.horizon is not None else bound + 2 * s.window
        stop = LockDetector(s.window, certificate=lambda key: system.kth_certificate(key[0]))
    else:
        stop = None
    traj = integrate_fixed_step(system, y0, dt, horizon, t0=seg.start, early_stop=stop,
                                sample_every=s.window / 10)
    lock = detect_lock(traj, s.window, final=True, bound=seg.start + bound)
    oracle = _oracle_for("kth", scenario, len(scenario.timeline.segments) - 1, k=k) if s.verify else None
    return SubRun(f"kth({k})", "kth", lock, bound, traj, oracle, dt=dt)


def _read_value(sub: SubRun, cadence: float | None, leader_slot: int) -> int | None:
    """Locked value, or under a fixed cadence the leader's rounded state at the end of the interval."""
    if cadence is None:
        return sub.value
    return int(rnd(sub.trajectory.final[leader_slot, 0]))


def _segment_failures(run: AlgorithmRun, name: str, locks: list[LockReport], starts: list[float]):
    """Flag earlier segments that did not re-lock before the next change."""
    for start, lk in zip(starts[:-1], locks[:-1]):
        if lk.lock_time is None:
            run.failures.append(f"{name} did not re-lock after the change at t={start:g}")
        elif lk.within_bound is False:
            run.failures.append(f"{name} re-locked at {lk.lock_time:.6g} s, after its bound {lk.bound_used:.6g} s")


def _check(run: AlgorithmRun, sub: SubRun, value: int | None, cadence: float | None = None):
    run.subruns.append(sub)
    if sub.trajectory is not None:
        _segment_failures(run, sub.name, sub.segment_locks, sub.trajectory.segment_starts)
    if value is None:
        run.failures.append(f"{sub.name} did not lock within {sub.bound:.6g} s")
    elif cadence is None and sub.lock.within_bound is False:
        run.failures.append(f"{sub.name} locked at {sub.lock.lock_time:.6g} s, after its bound {sub.lock.bound_used:.6g} s")
    if sub.oracle is not None and value is not None and value != sub.oracle:
        run.mismatches.append(f"{sub.name}: simulated {value}, oracle {sub.oracle}")


def _per_agent_argmax(run: AlgorithmRun, scenario: Scenario, subs: dict, policy: str):
    ids = sorted(scenario.timeline.last.active)
    for i in ids:
        freqs = {a: int(rnd(sub.trajectory.final[i - 1, 0])) for a, sub in subs.items()}
        run.mode_estimate[i] = select_mode(freqs, scenario.attrs, policy)


def run_algorithm1(scenario: Scenario) -> AlgorithmRun:
    """Count every attribute with the frequency protocol and return the most frequent one."""
    s = scenario.settings
    tab = scenario.attrs
    run = AlgorithmRun("direct", state_var_count=state_count("direct", omega_size=tab.size))
    subs = {}
    if s.counter:
        sub = run_linear(scenario, "counter")
        run.subruns.append(sub)
        if sub.lock.locked_values is None:
            run.failures.append(f"counter did not lock within {sub.bound:.6g} s")
            return run
        for p, a in enumerate(tab.universe):
            run.frequencies[a] = int(sub.lock.locked_values[p])
        seg_locks = sub.segment_locks
        per_segment = [
            None if lk.locked_values is None else {a: int(lk.locked_values[p]) for p, a in enumerate(tab.universe)}
            for lk in seg_locks
        ]
        final = sub.trajectory.final
        for i in sorted(scenario.timeline.last.active):
            run.mode_estimate[i] = select_mode(
                {a: int(rnd(final[i - 1, p])) for p, a in enumerate(tab.universe)}, tab, s.tie_break)
        run.elapsed = sub.duration or 0.0
        if s.verify:
            labels = scenario.labels(len(scenario.timeline.segments) - 1)
            for a in tab.universe:
                want = sum(1 for b in labels if b == a)
                if run.frequencies[a] != want:
                    run.mismatches.append(f"counter[{a}]: simulated {run.frequencies[a]}, oracle {want}")
    else:
        for tag, a in enumerate(tab.universe):
            sub = run_linear(scenario, "frequency", attribute=a, tag=tag)
            _check(run, sub, sub.value)
            subs[a] = sub
            if sub.value is not None:
                run.frequencies[a] = sub.value
        if run.failures:
            return run
        per_segment = []
        for idx in range(len(scenario.timeline.segments)):
            locks = {a: sub.segment_locks[idx] for a, sub in subs.items()}
            if any(lk.locked_values is None for lk in locks.values()):
                per_segment.append(None)
            else:
                per_segment.append({a: int(lk.locked_values[0]) for a, lk in locks.items()})
        _per_agent_argmax(run, scenario, subs, s.tie_break)
        run.elapsed = max(sub.duration for sub in subs.values())
    for seg, freqs in zip(scenario.timeline.segments, per_segment):
        run.segment_modes.append((seg.start, None if freqs is None else select_mode(freqs, tab, s.tie_break)))
    run.mode = select_mode(run.frequencies, tab, s.tie_break)
    run.candidates = [Candidate(0, a, f) for a, f in run.frequencies.items()]
    return run


def _estimate_size(run: AlgorithmRun, scenario: Scenario) -> int | None:
    sub = run_linear(scenario, "size")
    _check(run, sub, sub.value)
    run.n_estimate = sub.value
    if sub.value is not None:
        run.elapsed += sub.duration
    return sub.value


def _round(run: AlgorithmRun, scenario: Scenario, n_hat: int, K: int, start: float, tag: int) -> Round:
    """Candidate selection then frequency counting for one value of ``K``."""
    s = scenario.settings
    tab = scenario.attrs
    leader_slot = scenario.timeline.last.leader - 1
    cands = []
    stage = 0.0
    for p in candidate_positions(n_hat, K):
        sub = run_kth(scenario, p, n_hat, tag=tag, horizon=s.cadence)
        value = _read_value(sub, s.cadence, leader_slot)
        _check(run, sub, value, s.cadence)
        if value is None or not 1 <= value <= tab.size:
            run.failures.append(f"{sub.name} produced no valid attribute index")
            continue
        stage = max(stage, s.cadence if s.cadence is not None else sub.duration)
        cands.append(Candidate(p, tab.label(value)))
    elapsed = stage
    stage = 0.0
    freq_of: dict = {}
    for c in cands:
        if c.label not in freq_of:
            sub = run_linear(scenario, "frequency", attribute=c.label, tag=1000 * tag + tab.level(c.label))
            value = _read_value(sub, None, leader_slot)
            _check(run, sub, value)
            freq_of[c.label] = value
            if sub.duration is not None:
                stage = max(stage, sub.duration)
        c.frequency = freq_of[c.label]
    elapsed += stage
    run.elapsed += elapsed
    F = max((c.frequency for c in cands if c.frequency is not None), default=0)
    return Round(K, start, cands, F)


def _finish(run: AlgorithmRun, scenario: Scenario, cands: list[Candidate]):
    s = scenario.settings
    freqs = {c.label: c.frequency for c in cands if c.frequency is not None}
    if not freqs:
        run.failures.append("no candidate frequency available")
        return
    run.candidates = cands
    run.frequencies = freqs
    run.mode = select_mode(freqs, scenario.attrs, s.tie_break)
    run.mode_estimate = {i: run.mode for i in sorted(scenario.timeline.last.active)}


def _require_static(scenario: Scenario, what: str):
    if scenario.timeline.events:
        raise ConfigError(f"{what} runs on a fixed network; use the direct algorithm or combined execution "
                          "for scenarios with events", "events")


def run_algorithm2(scenario: Scenario, f_star: int | None = None, K: int | None = None) -> AlgorithmRun:
    """Mode search restricted to the candidate order statistics certified by ``f_star`` (or ``K``)."""
    if f_star is None and K is None:
        raise ValueError("need f_star or K")
    if scenario.settings.execution == "combined":
        return run_algorithm2_combined(scenario, f_star=f_star, K=K)
    _require_static(scenario, "sequential algorithm 2")
    run = AlgorithmRun("apriori-K")
    n_hat = _estimate_size(run, scenario)
    if n_hat is None:
        return run
    if K is None:
        K = kstar(min(f_star, n_hat), n_hat)
    K = min(K, n_hat)
    run.K_trace = [K]
    _warn_f_star(run, scenario, f_star, K)
    rnd_ = _round(run, scenario, n_hat, K, run.elapsed, tag=K)
    run.rounds.append(rnd_)
    run.state_var_count = state_count("apriori-K", K, n=n_hat)
    _finish(run, scenario, rnd_.candidates)
    return run


def _warn_f_star(run: AlgorithmRun, scenario: Scenario, f_star, K: int):
    if not scenario.settings.verify:
        return
    for idx, seg in enumerate(scenario.timeline.segments):
        labels = scenario.labels(idx)
        _, best = oracle_mode(labels)
        need = ceil_div(len(labels), K)
        at = f" (segment at t={seg.start:g})" if idx else ""
        if f_star is not None and best < f_star:
            run.warnings.append(f"supplied f*={f_star} exceeds the true mode frequency {best}{at}; "
                                "result not guaranteed")
        if best < need:
            run.warnings.append(f"mode frequency {best} < ceil(N/K)={need}{at}; candidates may miss the mode")


def run_algorithm2_combined(scenario: Scenario, f_star: int | None = None, K: int | None = None) -> AlgorithmRun:
    """All estimators integrated together as one system; reports a single end-to-end lock."""
    s = scenario.settings
    tl = scenario.timeline
    n_true = tl.segments[0].n
    if K is None:
        K = kstar(min(f_star, n_true), n_true)
    gains = scenario.gains
    systems = [build_system("combined", seg, scenario.attrs, gains, n_bar=scenario.n_bar, K=K,
                            tie_break=s.tie_break) for seg in tl.segments]
    run = AlgorithmRun("apriori-K", K_trace=[K])
    bound = (time_bound_x(scenario.n_bar, gains.h_x) + time_bound_y(scenario.n_bar, gains.h_y)
             + time_bound_z(scenario.n_bar, scenario.omega_size, gains.beta))
    y0 = initial_state("combined", scenario, _rng(s, _TAGS["combined"], K), systems[0].dim)
    horizon = s.horizon if s.horizon is not None else tl.last.start + bound
    dt = s.dt if s.dt is not None else min(max_stable_dt(sy) for sy in systems)
    traj = run_piecewise(tl, systems, y0, horizon, method="step", dt=dt, window=s.window)
    locks = []
    for seg, end in zip(tl.segments, tl.segment_ends(horizon)):
        part = traj.between(seg.start, end) if end < horizon else traj.between(seg.start)
        locks.append(detect_lock(part, s.window, columns=["x", "mhat"], final=True, bound=seg.start + bound))
    lock = locks[-1]
    n_last = tl.last.n
    run.state_var_count = state_count("apriori-K", K, n=n_last)
    _warn_f_star(run, scenario, f_star, K)
    oracle = None
    if s.verify:
        modes, _ = oracle_mode(scenario.labels(len(tl.segments) - 1), scenario.attrs)
        oracle = scenario.attrs.level(modes[0])
    sub = SubRun("combined", "combined", lock, bound, traj, None, locks, dt=dt)
    run.subruns.append(sub)
    _segment_failures(run, sub.name, locks, [seg.start for seg in tl.segments])
    for seg, lk in zip(tl.segments, locks):
        run.segment_modes.append((seg.start, None if lk.locked_values is None else scenario.attrs.label(int(lk.locked_values[1]))))
    if lock.locked_values is None:
        run.failures.append(f"combined dynamics did not lock within {horizon:.6g} s")
        return run
    if lock.within_bound is False:
        run.failures.append(f"combined dynamics locked after the bound {lock.bound_used:.6g} s")
    run.n_estimate = int(lock.locked_values[0])
    level = int(lock.locked_values[1])
    run.mode = scenario.attrs.label(level)
    run.mode_estimate = {i: scenario.attrs.label(int(traj.derived["mhat"][-1, i - 1])) for i in sorted(tl.last.active)}
    run.elapsed = lock.lock_time - tl.last.start
    final = traj.final
    Ks = systems[-1]
    live = len(candidate_positions(run.n_estimate, K))
    for j in range(live):
        z = int(rnd(final[Ks.slots[0], 1 + j]))
        yv = int(rnd(final[Ks.slots[0], 1 + K + j]))
        run.candidates.append(Candidate((j + 1) * ceil_div(run.n_estimate, K),
                                        scenario.attrs.label(z) if 1 <= z <= scenario.omega_size else None, yv))
    run.frequencies = {c.label: c.frequency for c in run.candidates if c.label is not None}
    if oracle is not None and level != oracle:
        _, best = oracle_mode(scenario.labels(len(tl.segments) - 1))
        if run.frequencies.get(run.mode) != best:
            run.mismatches.append(f"combined: mode index {level}, oracle {oracle}")
    return run


def run_algorithm3(scenario: Scenario, max_K: int | None = None) -> AlgorithmRun:
    """Grow ``K`` until the best frequency found certifies the candidate set."""
    _require_static(scenario, "algorithm 3")
    s = scenario.settings
    run = AlgorithmRun("adaptive-K")
    n_hat = _estimate_size(run, scenario)
    if n_hat is None:
        return run
    K, F = 1, 1
    run.K_trace = [K]
    if n_hat == 1:
        only = scenario.labels(len(scenario.timeline.segments) - 1)[0]
        run.mode = only
        run.frequencies = {only: 1}
        run.candidates = [Candidate(1, only, 1)]
        run.mode_estimate = {i: only for i in scenario.timeline.last.active}
        run.state_var_count = 1
        return run
    # the first round is K=2 even when a single attribute exists
    limit = max_K if max_K is not None else max(scenario.omega_size, 2)
    last: Round | None = None
    while F < ceil_div(n_hat, K):
        K += 1
        if K > limit or K > n_hat:
            raise AlgorithmInconsistency(f"K={K} exceeds {limit} without meeting F >= ceil(N/K) (F={F})")
        run.K_trace.append(K)
        start = run.elapsed
        last = _round(run, scenario, n_hat, K, start, tag=K)
        run.rounds.append(last)
        if run.failures and s.cadence is None:
            return run
        F = max(F, last.F)
    run.state_var_count = state_count("adaptive-K", K)
    _finish(run, scenario, last.candidates)
    return run


def run_algorithm(scenario: Scenario, algorithm: str, *, f_star: int | None = None, K: int | None = None) -> AlgorithmRun:
    if algorithm == "direct":
        return run_algorithm1(scenario)
    if algorithm == "apriori-K":
        return run_algorithm2(scenario, f_star=f_star, K=K)
    if algorithm == "adaptive-K":
        return run_algorithm3(scenario)
    raise ValueError(f"unknown algorithm {algorithm!r}; expected one of {ALGORITHMS}")


__all__ = [
    "AlgorithmInconsistency", "AlgorithmRun", "Candidate", "Round", "RunSettings", "Scenario",
    "SubRun", "candidate_positions", "kstar", "oracle_kth", "oracle_mode", "run_algorithm", "run_algorithm1",
    "run_algorithm2", "run_algorithm2_combined", "run_algorithm3", "select_mode", "state_count",
]
