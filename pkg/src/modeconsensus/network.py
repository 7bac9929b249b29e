"""Time-varying undirected networks, agent attributes and admissible changes.

Agents are identified by integers ``1..n_bar``.  A :class:`NetworkTimeline`
is a sequence of constant-graph :class:`Segment` values; every admissible
change produces a new segment through :func:`apply_event`, which never mutates
its input.  Only the connected component holding the leader (the damped agent)
is simulated; everything else counts as having left the network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Hashable, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .errors import DegenerateRingError, InadmissibleChange, UnknownAttributeError

Edge = tuple[int, int]

EVENT_KINDS = ("edge-add", "edge-remove", "node-join", "node-leave", "attribute-change")
LEADER_POLICIES = ("require", "lowest-active-id")


def norm_edge(i: int, j: int) -> Edge:
    i, j = int(i), int(j)
    if i == j:
        raise ValueError(f"self-loop on node {i}")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Segment:
    """A constant graph that holds from ``start`` until the next segment."""

    start: float
    active: frozenset[int]
    edges: frozenset[Edge]
    leader: int

    @property
    def n(self) -> int:
        return len(self.active)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(sorted(self.active))
        g.add_edges_from(sorted(self.edges))
        return g

    def neighbors(self) -> dict[int, list[int]]:
        nbrs: dict[int, list[int]] = {i: [] for i in self.active}
        for i, j in sorted(self.edges):
            nbrs[i].append(j)
            nbrs[j].append(i)
        return nbrs

    def degree(self, i: int) -> int:
        return sum(1 for e in self.edges if i in e)

    @property
    def max_degree(self) -> int:
        degs = [len(v) for v in self.neighbors().values()]
        return max(degs, default=0)

    @property
    def diameter(self) -> int:
        if len(self.active) < 2:
            return 0
        return nx.diameter(self.graph())

    def is_connected(self) -> bool:
        if not self.active:
            return False
        return nx.is_connected(self.graph())

    def laplacian(self) -> tuple[list[int], np.ndarray]:
        """Graph Laplacian over the active nodes, rows in ascending id order."""
        ids = sorted(self.active)
        pos = {v: p for p, v in enumerate(ids)}
        L = np.zeros((len(ids), len(ids)))
        for i, j in self.edges:
            a, b = pos[i], pos[j]
            L[a, b] -= 1.0
            L[b, a] -= 1.0
            L[a, a] += 1.0
            L[b, b] += 1.0
        return ids, L


@dataclass(frozen=True)
class ScenarioEvent:
    """One admissible change.

    ``nodes`` names the affected agents (joiner, leaver, or re-labelled
    agent), ``edges`` the affected edges.  ``init`` is the local initial state
    given to every node that becomes active at this event; it must lie in
    ``init_box`` when both are set.
    """

    time: float
    kind: str
    nodes: tuple[int, ...] = ()
    edges: tuple[Edge, ...] = ()
    attribute: Hashable | None = None
    init: float | None = None
    init_box: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}; expected one of {EVENT_KINDS}")
        object.__setattr__(self, "nodes", tuple(int(v) for v in self.nodes))
        object.__setattr__(self, "edges", tuple(norm_edge(*e) for e in self.edges))
        if self.init_box is not None:
            lo, hi = self.init_box
            object.__setattr__(self, "init_box", (float(lo), float(hi)))


@dataclass(frozen=True)
class NetworkTimeline:
    n_bar: int
    segments: tuple[Segment, ...]
    events: tuple[ScenarioEvent, ...] = ()
    leader_policy: str = "require"

    def __post_init__(self):
        if self.leader_policy not in LEADER_POLICIES:
            raise ValueError(f"leader_policy must be one of {LEADER_POLICIES}")
        for seg in self.segments:
            if len(seg.active) > self.n_bar:
                raise ValueError(f"{len(seg.active)} active nodes exceed n_bar={self.n_bar}")

    @property
    def last(self) -> Segment:
        return self.segments[-1]

    def segment_at(self, t: float) -> Segment:
        seg = self.segments[0]
        for s in self.segments:
            if s.start <= t:
                seg = s
            else:
                break
        return seg

    def segment_ends(self, horizon: float) -> list[float]:
        starts = [s.start for s in self.segments]
        return starts[1:] + [horizon]

    @property
    def max_degree(self) -> int:
        return max(s.max_degree for s in self.segments)

    def ever_active(self) -> list[int]:
        ids: set[int] = set()
        for s in self.segments:
            ids |= s.active
        return sorted(ids)


@dataclass(frozen=True)
class AttributeTable:
    """Attribute universe, the index bijection, and per-agent label history.

    ``agent_attr[i]`` is a tuple of ``(since_time, label)`` pairs sorted by
    time.  Labels are opaque hashable tokens; their only order is the one
    given by ``universe`` (position ``p`` has index ``p + 1``).
    """

    universe: tuple
    agent_attr: Mapping[int, tuple[tuple[float, Hashable], ...]]
    index_of: dict = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        universe = tuple(self.universe)
        if len(set(universe)) != len(universe):
            raise ValueError("attribute universe contains duplicates")
        object.__setattr__(self, "universe", universe)
        object.__setattr__(self, "index_of", {a: p + 1 for p, a in enumerate(universe)})
        for agent, hist in self.agent_attr.items():
            for _, label in hist:
                if label not in self.index_of:
                    raise UnknownAttributeError(f"agent {agent} holds {label!r}, not in universe")

    @classmethod
    def from_labels(cls, labels: Mapping[int, Hashable] | Sequence, universe: Sequence | None = None):
        if not isinstance(labels, Mapping):
            labels = {i + 1: a for i, a in enumerate(labels)}
        if universe is None:
            universe = _default_universe(labels.values())
        return cls(tuple(universe), {int(i): ((0.0, a),) for i, a in labels.items()})

    @property
    def size(self) -> int:
        return len(self.universe)

    def level(self, label) -> int:
        try:
            return self.index_of[label]
        except (KeyError, TypeError):
            raise UnknownAttributeError(f"{label!r} is not in the attribute universe") from None

    def label(self, level: int):
        if not 1 <= level <= len(self.universe):
            raise UnknownAttributeError(f"index {level} outside 1..{len(self.universe)}")
        return self.universe[level - 1]

    def label_at(self, agent: int, t: float = 0.0):
        hist = self.agent_attr.get(agent)
        if not hist:
            raise KeyError(f"agent {agent} has no attribute")
        current = hist[0][1]
        for since, label in hist:
            if since <= t:
                current = label
        return current

    def labels_at(self, agents: Iterable[int], t: float = 0.0) -> dict[int, Hashable]:
        return {i: self.label_at(i, t) for i in agents}

    def reordered(self, universe: Sequence) -> "AttributeTable":
        """Same attributes seen through a different bijection."""
        if set(universe) != set(self.universe) or len(universe) != len(self.universe):
            raise ValueError("reordering must be a permutation of the universe")
        return AttributeTable(tuple(universe), self.agent_attr)

    def apply_event(self, ev: ScenarioEvent) -> "AttributeTable":
        if ev.kind not in ("attribute-change", "node-join"):
            return self
        if ev.attribute is None:
            if ev.kind == "node-join" and all(v in self.agent_attr for v in ev.nodes):
                return self
            raise InadmissibleChange(f"{ev.kind} at t={ev.time} needs an attribute", ev)
        self.level(ev.attribute)
        hist = dict(self.agent_attr)
        for v in ev.nodes:
            hist[v] = tuple(hist.get(v, ())) + ((float(ev.time), ev.attribute),)
        return AttributeTable(self.universe, hist)


def _default_universe(labels: Iterable) -> tuple:
    seen = list(dict.fromkeys(labels))
    try:
        return tuple(sorted(seen))
    except TypeError:
        return tuple(seen)


def build_network(
    n: int,
    edges: Iterable[Sequence[int]],
    attrs: Sequence | Mapping[int, Hashable],
    *,
    n_bar: int | None = None,
    leader: int = 1,
    universe: Sequence | None = None,
    leader_policy: str = "require",
) -> tuple[NetworkTimeline, AttributeTable]:
    """Single-segment timeline on nodes ``1..n`` with the given edges."""
    n_bar = n if n_bar is None else int(n_bar)
    if n < 1:
        raise ValueError("network needs at least one node")
    if n > n_bar:
        raise ValueError(f"n={n} exceeds n_bar={n_bar}")
    if len(attrs) != n:
        raise ValueError(f"{len(attrs)} attributes given for {n} nodes")
    eset = frozenset(norm_edge(*e) for e in edges)
    for i, j in eset:
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"edge ({i}, {j}) references a node outside 1..{n}")
    seg = Segment(0.0, frozenset(range(1, n + 1)), eset, leader)
    if leader not in seg.active:
        raise ValueError(f"leader {leader} is not a node")
    if not seg.is_connected():
        raise ValueError("initial network must be connected")
    timeline = NetworkTimeline(n_bar, (seg,), (), leader_policy)
    return timeline, AttributeTable.from_labels(attrs, universe)


def build_ring(n: int, attrs: Sequence, **kw) -> tuple[NetworkTimeline, AttributeTable]:
    """Cycle graph in which node ``i`` is adjacent to ``i +/- 1 (mod n)``."""
    if n < 3:
        raise DegenerateRingError(f"a ring needs at least 3 nodes, got {n}")
    edges = [(i, i % n + 1) for i in range(1, n + 1)]
    return build_network(n, edges, attrs, **kw)


def build_path(n: int, attrs: Sequence, **kw):
    return build_network(n, [(i, i + 1) for i in range(1, n)], attrs, **kw)


def build_complete(n: int, attrs: Sequence, **kw):
    edges = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    return build_network(n, edges, attrs, **kw)


def random_connected_edges(n: int, p: float, rng: np.random.Generator) -> list[Edge]:
    """Random spanning tree plus independent extra edges with probability ``p``."""
    order = rng.permutation(n) + 1
    edges = set()
    for pos in range(1, n):
        parent = order[rng.integers(0, pos)]
        edges.add(norm_edge(order[pos], parent))
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            if (i, j) not in edges and rng.random() < p:
                edges.add((i, j))
    return sorted(edges)


def _leader_component(active: set[int], edges: set[Edge], leader: int) -> set[int]:
    g = nx.Graph()
    g.add_nodes_from(active)
    g.add_edges_from(edges)
    return set(nx.node_connected_component(g, leader))


def apply_event(timeline: NetworkTimeline, ev: ScenarioEvent) -> NetworkTimeline:
    """Append the segment produced by ``ev``; raise :class:`InadmissibleChange` otherwise."""
    prev = timeline.last
    if not ev.time > prev.start:
        raise InadmissibleChange(f"event at t={ev.time} is not after the last change at t={prev.start}", ev)
    if ev.init is not None and ev.init_box is not None:
        lo, hi = ev.init_box
        if not lo <= ev.init <= hi:
            raise InadmissibleChange(f"initial state {ev.init} outside local box [{lo}, {hi}]", ev)

    active = set(prev.active)
    edges = set(prev.edges)
    leader = prev.leader
    n_bar = timeline.n_bar

    def need_active(nodes):
        for v in nodes:
            if v not in active:
                raise InadmissibleChange(f"node {v} is not active at t={ev.time}", ev)

    if ev.kind == "edge-add":
        if not ev.edges:
            raise InadmissibleChange("edge-add without edges", ev)
        for e in ev.edges:
            need_active(e)
            if e in edges:
                raise InadmissibleChange(f"edge {e} already present", ev)
        edges |= set(ev.edges)
    elif ev.kind == "edge-remove":
        if not ev.edges:
            raise InadmissibleChange("edge-remove without edges", ev)
        for e in ev.edges:
            if e not in edges:
                raise InadmissibleChange(f"edge {e} is not present", ev)
        edges -= set(ev.edges)
    elif ev.kind == "node-join":
        if not ev.nodes:
            raise InadmissibleChange("node-join without nodes", ev)
        joiners = set(ev.nodes)
        for v in joiners:
            if not 1 <= v <= n_bar:
                raise InadmissibleChange(f"node {v} outside the potential set 1..{n_bar}", ev)
            if v in active:
                raise InadmissibleChange(f"node {v} is already active", ev)
        for e in ev.edges:
            if not set(e) & joiners:
                raise InadmissibleChange(f"edge {e} does not touch a joining node", ev)
            for v in e:
                if v not in active and v not in joiners:
                    raise InadmissibleChange(f"edge {e} touches inactive node {v}", ev)
        attached = {v for e in ev.edges for v in e}
        if not joiners <= attached:
            raise InadmissibleChange("every joining node needs an incident edge", ev)
        active |= joiners
        edges |= set(ev.edges)
    elif ev.kind == "node-leave":
        if not ev.nodes:
            raise InadmissibleChange("node-leave without nodes", ev)
        need_active(ev.nodes)
        for v in ev.nodes:
            active.discard(v)
            edges = {e for e in edges if v not in e}
    elif ev.kind == "attribute-change":
        if not ev.nodes:
            raise InadmissibleChange("attribute-change without nodes", ev)
        for v in ev.nodes:
            if not 1 <= v <= n_bar:
                raise InadmissibleChange(f"node {v} outside the potential set 1..{n_bar}", ev)

    had_edges = prev.degree(leader) > 0
    leader_gone = leader not in active or (had_edges and not any(leader in e for e in edges))
    if leader_gone:
        if timeline.leader_policy == "require":
            raise InadmissibleChange(f"leader {leader} would leave the network (leader_policy=require)", ev)
        remaining = sorted(active - {leader})
        if not remaining:
            raise InadmissibleChange("no node left to take over as leader", ev)
        leader = remaining[0]
        active.discard(prev.leader)
        edges = {e for e in edges if prev.leader not in e}

    component = _leader_component(active, edges, leader)
    edges = {e for e in edges if e[0] in component and e[1] in component}
    seg = Segment(float(ev.time), frozenset(component), frozenset(edges), leader)
    return replace(timeline, segments=timeline.segments + (seg,), events=timeline.events + (ev,))


def apply_events(
    timeline: NetworkTimeline, attrs: AttributeTable, events: Iterable[ScenarioEvent]
) -> tuple[NetworkTimeline, AttributeTable]:
    for ev in sorted(events, key=lambda e: e.time):
        timeline = apply_event(timeline, ev)
        attrs = attrs.apply_event(ev)
    return timeline, attrs


@dataclass(frozen=True)
class DwellGap:
    earlier: float
    later: float
    gap: float
    ok: bool


@dataclass(frozen=True)
class DwellReport:
    required: float
    gaps: tuple[DwellGap, ...]

    @property
    def passed(self) -> bool:
        return all(g.ok for g in self.gaps)

    @property
    def violations(self) -> list[DwellGap]:
        return [g for g in self.gaps if not g.ok]


def check_dwell(
    timeline: NetworkTimeline | Sequence[float], required_dwell: float, *, include_start: bool = False
) -> DwellReport:
    """Flag every consecutive pair of changes closer than ``required_dwell``.

    With ``include_start`` the initial segment start counts as a change too,
    so the first event must also wait out the dwell time.
    """
    if required_dwell < 0:
        raise ValueError("required_dwell must be non-negative")
    if isinstance(timeline, NetworkTimeline):
        times = [ev.time for ev in timeline.events]
        if include_start:
            times = [timeline.segments[0].start] + times
    else:
        times = list(timeline)
    gaps = []
    for a, b in zip(times, times[1:]):
        gaps.append(DwellGap(a, b, b - a, (b - a) >= required_dwell or math.isclose(b - a, required_dwell)))
    return DwellReport(float(required_dwell), tuple(gaps))
