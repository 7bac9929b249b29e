"""Time propagation of protocol states.

Linear protocols are propagated exactly through the eigendecomposition of
their symmetric coupling matrix, so any sample time costs the same.  The
sign-coupled protocols are stepped with explicit Euler at a step size that
keeps one step's increment below a quarter unit (the chatter budget), which
leaves rounded values unaffected by the sliding-mode chatter.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numba import njit

from .errors import LocalInitError, NumericalRefusal
from .network import NetworkTimeline
from .protocols import ProtocolSystem, equilibrium, rnd

log = logging.getLogger(__name__)

CHATTER_BUDGET = 0.25
# one sign quantum gamma_z*dt of disagreement accumulates per hop, so the
# consensus band is about gamma_z*dt*diameter wide; keep it well inside 1/2
BAND_BUDGET = 0.25
DEFAULT_WINDOW = 0.05


@dataclass
class Trajectory:
    times: np.ndarray  # (T,)
    states: np.ndarray  # (T, n_bar, dim)
    kind: str
    variables: list[str]
    active: np.ndarray  # (T, n_bar) agents simulated at each sample
    segment_starts: list[float] = field(default_factory=lambda: [0.0])
    derived: dict[str, np.ndarray] = field(default_factory=dict)  # name -> (T, n_bar)
    event_states: list[tuple[float, np.ndarray]] = field(default_factory=list)
    stopped_early: bool = False

    def __post_init__(self):
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def series(self, columns: Sequence[str | int] | None = None) -> tuple[list[str], np.ndarray]:
        """Named columns as an array ``(T, n_bar, c)``; derived outputs are addressable by name."""
        if columns is None:
            return list(self.variables), self.states
        names, parts = [], []
        for c in columns:
            if isinstance(c, int):
                names.append(self.variables[c])
                parts.append(self.states[:, :, c])
            elif c in self.derived:
                names.append(c)
                parts.append(self.derived[c])
            else:
                names.append(c)
                parts.append(self.states[:, :, self.variables.index(c)])
        return names, np.stack(parts, axis=-1)

    def between(self, t0: float, t1: float = math.inf) -> "Trajectory":
        sel = (self.times >= t0) & (self.times < t1) if math.isfinite(t1) else self.times >= t0
        return Trajectory(
            self.times[sel], self.states[sel], self.kind, self.variables, self.active[sel],
            [s for s in self.segment_starts if t0 <= s < t1] or [t0],
            {k: v[sel] for k, v in self.derived.items()},
            [(t, s) for t, s in self.event_states if t0 <= t < t1],
        )


@dataclass
class LockReport:
    lock_time: float | None
    locked_values: np.ndarray | None
    stability_window: float
    bound_used: float | None = None
    columns: list[str] = field(default_factory=list)

    @property
    def locked(self) -> bool:
        return self.lock_time is not None

    @property
    def within_bound(self) -> bool | None:
        if self.bound_used is None or self.lock_time is None:
            return None
        return self.lock_time <= self.bound_used

    def value(self, column: int = 0) -> int:
        if self.locked_values is None:
            raise ValueError("trajectory never locked")
        return int(self.locked_values[column])

    def to_dict(self) -> dict:
        return {
            "lock_time": self.lock_time,
            "locked_values": None if self.locked_values is None else [int(v) for v in self.locked_values],
            "stability_window": self.stability_window,
            "bound": self.bound_used,
            "columns": self.columns,
        }


def _uniform_keys(values: np.ndarray, active: np.ndarray) -> list[tuple | None]:
    """Per sample: the common rounded vector if all active agents agree, else ``None``."""
    r = rnd(values)
    keys = []
    big = np.where(active[..., None], r, np.nan)
    lo = np.nanmin(big, axis=1)
    hi = np.nanmax(big, axis=1)
    agree = np.all(lo == hi, axis=1)
    for t in range(len(values)):
        keys.append(tuple(lo[t].tolist()) if agree[t] else None)
    return keys


def detect_lock(
    traj: Trajectory,
    window: float = DEFAULT_WINDOW,
    *,
    columns: Sequence[str | int] | None = None,
    final: bool = False,
    bound: float | None = None,
) -> LockReport:
    """Earliest time after which rounded states agree across agents and hold for ``window``.

    With ``final`` only the run of agreement that reaches the end of the
    trajectory is considered, so a transient plateau cannot be mistaken for
    convergence.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    names, values = traj.series(columns)
    keys = _uniform_keys(values, traj.active)
    runs = []
    start = 0
    for t in range(1, len(keys) + 1):
        if t == len(keys) or keys[t] != keys[start]:
            if keys[start] is not None:
                runs.append((start, t - 1))
            start = t
    if final:
        runs = [r for r in runs if r[1] == len(keys) - 1]
    tol = 1e-12 * max(1.0, float(traj.times[-1])) if len(traj) else 0.0
    for s, e in runs:
        if traj.times[e] - traj.times[s] >= window - tol:
            vals = np.array(keys[s], dtype=int)
            return LockReport(float(traj.times[s]), vals, window, bound, names)
    return LockReport(None, None, window, bound, names)


# exact propagation


def propagate_linear_exact(system: ProtocolSystem, y0: np.ndarray, t) -> np.ndarray:
    """State of a linear protocol at time(s) ``t`` after ``y0``.

    Returns shape ``(n_bar, dim)`` for scalar ``t`` and ``(T, n_bar, dim)``
    for an array of times.  Agents outside the component keep ``y0``.
    """
    if not system.is_linear:
        raise TypeError(f"{system.kind} protocol has no exact propagator")
    M = system.coupling_matrix
    if not np.allclose(M, M.T, rtol=0, atol=1e-12 * max(1.0, np.abs(M).max())):
        raise RuntimeError("coupling matrix is not symmetric")
    y0 = np.asarray(y0, dtype=float).reshape(system.n_bar, system.dim)
    lam, Q = np.linalg.eigh(M)
    ystar = equilibrium(system)[system.slots]
    coef = Q.T @ (y0[system.slots] - ystar)  # (n, dim)
    ts = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(ts < 0):
        raise ValueError("t must be non-negative")
    decay = np.exp(-system.h * lam[None, :] * ts[:, None])  # (T, n)
    inner = decay[:, :, None] * coef[None]
    moving = ystar[None] + np.einsum("ij,tjd->tid", Q, inner)
    out = np.repeat(y0[None], len(ts), axis=0)
    out[:, system.slots] = moving
    return out[0] if np.ndim(t) == 0 else out


def sample_grid(duration: float, *, n_geometric: int = 60, n_uniform: int = 400,
                max_spacing: float | None = None, first: float = 1e-6) -> np.ndarray:
    """Sample offsets in ``[0, duration]``: geometric near zero, then uniform."""
    if duration <= 0:
        return np.array([0.0])
    n_uni = n_uniform
    if max_spacing is not None:
        n_uni = max(n_uni, int(math.ceil(duration / max_spacing)))
    geo = np.geomspace(min(first, duration / 10), duration, n_geometric)
    uni = np.linspace(0.0, duration, n_uni + 1)
    return np.unique(np.concatenate([[0.0], geo, uni]))


# fixed-step integration


@njit(cache=True)
def _kth_steps(z, ptr, idx, levels, n_est, k, beta, g, gamma_z, dt, n_steps):
    n = z.shape[0]
    dz = np.empty(n)
    for _ in range(n_steps):
        for i in range(n):
            d = z[i] - levels[i]
            if d < 0:
                p = beta * d - g * k
            elif d > 0:
                p = beta * d + g * (n_est + 1 - k)
            else:
                p = 0.0
            c = 0.0
            for q in range(ptr[i], ptr[i + 1]):
                diff = z[idx[q]] - z[i]
                if diff > 0:
                    c += 1.0
                elif diff < 0:
                    c -= 1.0
            dz[i] = -p + gamma_z * c
        for i in range(n):
            z[i] += dt * dz[i]


@njit(cache=True)
def _combined_steps(x, Z, Y, ptr, idx, levels, lead, n_bar, K,
                    h_x, gamma_x, h_y, gamma_y, beta, g, gamma_z, dt, n_steps):
    n = x.shape[0]
    dx = np.empty(n)
    dZ = np.empty((n, K))
    dY = np.empty((n, K))
    for _ in range(n_steps):
        for i in range(n):
            nh = math.floor(x[i] + 0.5)
            if nh < 1.0:
                nh = 1.0
            elif nh > n_bar:
                nh = float(n_bar)
            step = math.ceil(nh / K)
            live = int(nh) // int(step)
            lap = 0.0
            for q in range(ptr[i], ptr[i + 1]):
                lap += x[idx[q]] - x[i]
            dx[i] = h_x * (-lead[i] * x[i] + 1.0 + gamma_x * lap)
            for kk in range(K):
                if kk >= live:
                    dZ[i, kk] = 0.0
                    dY[i, kk] = 0.0
                    continue
                pos = (kk + 1) * step
                d = Z[i, kk] - levels[i]
                if d < 0:
                    p = beta * d - g * pos
                elif d > 0:
                    p = beta * d + g * (nh + 1 - pos)
                else:
                    p = 0.0
                c = 0.0
                lapy = 0.0
                for q in range(ptr[i], ptr[i + 1]):
                    diff = Z[idx[q], kk] - Z[i, kk]
                    if diff > 0:
                        c += 1.0
                    elif diff < 0:
                        c -= 1.0
                    lapy += Y[idx[q], kk] - Y[i, kk]
                dZ[i, kk] = -p + gamma_z * c
                ind = 1.0 if math.floor(Z[i, kk] + 0.5) == levels[i] else 0.0
                dY[i, kk] = h_y * (-lead[i] * Y[i, kk] + ind + gamma_y * lapy)
        for i in range(n):
            x[i] += dt * dx[i]
            for kk in range(K):
                Z[i, kk] += dt * dZ[i, kk]
                Y[i, kk] += dt * dY[i, kk]


def _csr(system: ProtocolSystem) -> tuple[np.ndarray, np.ndarray]:
    pos = {v: p for p, v in enumerate(system.ids)}
    nbrs = system.segment.neighbors()
    ptr = [0]
    idx: list[int] = []
    for v in system.ids:
        idx.extend(pos[u] for u in sorted(nbrs[v]))
        ptr.append(len(idx))
    return np.array(ptr, dtype=np.int64), np.array(idx, dtype=np.int64)


def linear_rate(system: ProtocolSystem) -> float:
    """Largest eigenvalue rate of the linear parts; explicit Euler needs ``dt * rate < 2``."""
    L = system.laplacian
    e = system.leader_vec
    rates = []
    if system.kind in ("size", "combined"):
        rates.append(system.gains.h_x * np.linalg.eigvalsh(system.gains.gamma_x * L + np.outer(e, e))[-1])
    if system.kind in ("frequency", "counter", "combined"):
        rates.append(system.gains.h_y * np.linalg.eigvalsh(system.gains.gamma_y * L + np.outer(e, e))[-1])
    return float(max(rates)) if rates else 0.0


def max_stable_dt(system: ProtocolSystem) -> float:
    """Default step: chatter budget, consensus-band budget, and Euler stability of linear parts (margin 2)."""
    limits = []
    if system.kind in ("kth", "combined"):
        limits.append(CHATTER_BUDGET / system.step_rate)
        limits.append(BAND_BUDGET / (system.gains.gamma_z * max(1, system.segment.diameter)))
    rate = linear_rate(system)
    if rate > 0:
        limits.append(1.0 / rate)
    return min(limits) if limits else math.inf


def check_step(system: ProtocolSystem, dt: float) -> None:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if system.kind in ("kth", "combined"):
        required = CHATTER_BUDGET / system.step_rate
        if dt > required * (1 + 1e-12):
            raise NumericalRefusal(
                f"dt={dt:.6g} violates the chatter budget; need dt <= {required:.6g}", required_dt=required
            )
    rate = linear_rate(system)
    if rate > 0 and dt * rate >= 2.0:
        raise NumericalRefusal(
            f"dt={dt:.6g} makes explicit Euler unstable; need dt < {2.0 / rate:.6g}", required_dt=2.0 / rate
        )


@dataclass
class LockDetector:
    """Early-stop rule for fixed-step runs.

    Stops once the rounded states have agreed for ``window`` seconds and, when
    given, ``certificate(values)`` confirms the agreed value cannot change.
    """

    window: float = DEFAULT_WINDOW
    columns: Sequence[str | int] | None = None
    certificate: Callable[[tuple], bool] | None = None


def integrate_fixed_step(
    system: ProtocolSystem,
    y0: np.ndarray,
    dt: float,
    horizon: float,
    *,
    early_stop: LockDetector | None = None,
    sample_every: float | None = None,
    t0: float = 0.0,
    backend: str = "auto",
) -> Trajectory:
    """Explicit Euler from ``t0`` to ``t0 + horizon`` with samples every ``sample_every``."""
    check_step(system, dt)
    n_bar, dim = system.n_bar, system.dim
    state = np.array(y0, dtype=float).reshape(n_bar, dim)
    n_total = max(1, int(math.ceil(horizon / dt - 1e-9)))
    dt = horizon / n_total  # never larger than requested; lands exactly on the horizon
    if sample_every is None:
        sample_every = horizon / 1000
        if early_stop is not None:
            sample_every = min(sample_every, early_stop.window / 10)
    stride = max(1, int(round(sample_every / dt)))

    fast = backend == "numba" or (backend == "auto" and system.kind in ("kth", "combined"))
    if fast:
        ptr, idx = _csr(system)
        lv = system.levels[system.slots].astype(float)
        local = np.ascontiguousarray(state[system.slots])
        g = system.gains

    def advance(n_steps):
        nonlocal state
        if n_steps <= 0:
            return
        if not fast:
            for _ in range(n_steps):
                state = state + dt * system.rhs(state)
            return
        if system.kind == "kth":
            z = np.ascontiguousarray(local[:, 0])
            _kth_steps(z, ptr, idx, lv, float(system.n_est), float(system.k),
                       g.beta, g.g, g.gamma_z, dt, n_steps)
            local[:, 0] = z
        elif system.kind == "combined":
            K = system.K
            x = np.ascontiguousarray(local[:, 0])
            Z = np.ascontiguousarray(local[:, 1:1 + K])
            Y = np.ascontiguousarray(local[:, 1 + K:])
            _combined_steps(x, Z, Y, ptr, idx, lv, system.leader_vec, n_bar, K,
                            g.h_x, g.gamma_x, g.h_y, g.gamma_y, g.beta, g.g, g.gamma_z, dt, n_steps)
            local[:, 0] = x
            local[:, 1:1 + K] = Z
            local[:, 1 + K:] = Y
        else:
            raise ValueError(f"no fast kernel for {system.kind}")
        state[system.slots] = local

    times = [t0]
    samples = [state.copy()]
    done = 0
    stopped = False
    run_key, run_start = None, None
    if early_stop is not None:
        cols = _column_indices(system, early_stop.columns)
    while done < n_total:
        n = min(stride, n_total - done)
        advance(n)
        done += n
        times.append(t0 + done * dt)
        samples.append(state.copy())
        if early_stop is None:
            continue
        obs = _observed(system, state, cols)[system.slots]
        r = rnd(obs)
        key = tuple(r[0].tolist()) if np.all(r == r[0]) else None
        if key != run_key:
            run_key, run_start = key, times[-1]
        if key is not None and times[-1] - run_start >= early_stop.window - 1e-12:
            if early_stop.certificate is None or early_stop.certificate(key):
                stopped = True
                break

    states = np.array(samples)
    traj = Trajectory(np.array(times), states, system.kind, system.variables,
                      np.repeat(system.active_mask[None], len(times), axis=0), [t0])
    if system.kind == "combined":
        traj.derived["mhat"] = np.array([system.observe(s) for s in states])
    traj.stopped_early = stopped
    return traj


def _column_indices(system, columns):
    if columns is None:
        return list(range(system.dim))
    return [c if isinstance(c, int) else c if c == "mhat" else system.variables.index(c) for c in columns]


def _observed(system, state, cols):
    parts = []
    for c in cols:
        parts.append(system.observe(state) if c == "mhat" else state[:, c])
    return np.stack(parts, axis=-1)


def run_piecewise(
    timeline: NetworkTimeline,
    systems: Sequence[ProtocolSystem],
    y0: np.ndarray,
    horizon: float,
    *,
    method: str = "exact",
    dt: float | None = None,
    window: float = DEFAULT_WINDOW,
    n_uniform: int = 400,
    early_stop: LockDetector | None = None,
) -> Trajectory:
    """Propagate across every segment of ``timeline`` up to absolute time ``horizon``.

    Surviving agents carry their state over each change, agents that become
    active take the local initial value of the event that activated them, and
    inactive agents stay frozen.  The pre-change state at each event time is
    recorded in ``event_states``.
    """
    if len(systems) != len(timeline.segments):
        raise ValueError("need exactly one system per segment")
    if method not in ("exact", "step"):
        raise ValueError("method must be 'exact' or 'step'")
    ends = timeline.segment_ends(horizon)
    state = np.array(y0, dtype=float).reshape(systems[0].n_bar, systems[0].dim)
    parts: list[Trajectory] = []
    event_states = []
    for i, (seg, system, end) in enumerate(zip(timeline.segments, systems, ends)):
        if i > 0:
            ev = timeline.events[i - 1]
            event_states.append((seg.start, state.copy()))
            joiners = sorted(seg.active - timeline.segments[i - 1].active)
            if joiners and ev.init is None:
                raise LocalInitError(f"nodes {joiners} become active at t={seg.start} without a local initial state")
            for v in joiners:
                state[v - 1] = ev.init
        last = i == len(timeline.segments) - 1
        duration = end - seg.start
        if duration <= 0:
            continue
        if method == "exact":
            offsets = sample_grid(duration, n_uniform=n_uniform, max_spacing=window / 5)
            if not last:
                offsets = offsets[offsets < duration]
            states = propagate_linear_exact(system, state, offsets)
            part = Trajectory(seg.start + offsets, states, system.kind, system.variables,
                              np.repeat(system.active_mask[None], len(offsets), axis=0), [seg.start])
            state = propagate_linear_exact(system, state, duration)
        else:
            step = dt if dt is not None else max_stable_dt(system)
            part = integrate_fixed_step(system, state, step, duration, t0=seg.start,
                                        early_stop=early_stop if last else None,
                                        sample_every=min(duration / n_uniform, window / 10))
            state = part.final.copy()
            if not last:
                part = part.between(seg.start, end - 1e-12 * max(1.0, end))
        parts.append(part)
    traj = Trajectory(
        np.concatenate([p.times for p in parts]),
        np.concatenate([p.states for p in parts]),
        systems[0].kind,
        systems[-1].variables,
        np.concatenate([p.active for p in parts]),
        [s.start for s in timeline.segments],
        {k: np.concatenate([p.derived[k] for p in parts]) for k in parts[-1].derived},
        event_states,
        parts[-1].stopped_early,
    )
    return traj


def box_violations(traj: Trajectory, systems: Sequence[ProtocolSystem]) -> list[tuple[float, int, str, float]]:
    """Agents whose state lies outside its admissible box just before an event.

    Checked against the component active right before the change.
    """
    out = []
    for (t, state), system in zip(traj.event_states, systems):
        for col, (lo, hi) in enumerate(system.column_boxes()):
            for slot in system.slots:
                v = state[slot, col]
                if not lo <= v <= hi:
                    out.append((t, int(slot) + 1, system.variables[col], float(v)))
    return out
