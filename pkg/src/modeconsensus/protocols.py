"""Vector fields and equilibria of the consensus protocols.

State arrays always have shape ``(n_bar, dim)``: row ``i - 1`` belongs to
agent ``i``.  Rows of agents outside the simulated component have a zero
derivative, so orphans and departed agents keep their last value.

Kinds:

``size``       damped-leader integrator counting the agents
``frequency``  same, driven by the indicator of one attribute
``counter``    vector version of ``frequency`` over the whole universe
``kth``        sign-coupled k-th smallest element protocol
``combined``   size, k-th and frequency estimators run simultaneously
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GainViolation, UnknownAttributeError
from .network import AttributeTable, Segment

KINDS = ("size", "frequency", "counter", "kth", "combined")
LINEAR_KINDS = ("size", "frequency", "counter")
SIGN_KINDS = ("kth", "combined")


def rnd(v):
    """Round half up, elementwise (``<v>`` in the protocol definitions)."""
    return np.floor(np.asarray(v, dtype=float) + 0.5)


def boxes(n_bar: int) -> dict[str, tuple[float, float]]:
    """Admissible initialization intervals for each state family."""
    return {
        "x": (0.5, n_bar + 0.5),
        "y": (-0.5, n_bar + 0.5),
        "z": (0.5, n_bar + 0.5),
    }


@dataclass(frozen=True)
class GainSet:
    h_x: float
    gamma_x: float
    h_y: float
    gamma_y: float
    beta: float
    g: float
    gamma_z: float
    K: int = 1
    preset: str = "custom"

    def __post_init__(self):
        for name in ("h_x", "gamma_x", "h_y", "gamma_y", "beta", "g", "gamma_z"):
            if not getattr(self, name) > 0:
                raise ValueError(f"gain {name} must be positive")
        if int(self.K) < 1:
            raise ValueError("K must be a positive integer")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def indicator(a, a_i, table: AttributeTable | None = None) -> int:
    if table is not None:
        table.level(a)
        table.level(a_i)
    return 1 if a_i == a else 0


def phi_k(z, level, n, k, beta, g):
    """Local k-th smallest cost gradient.

    Piecewise linear in ``z`` with a jump of ``g * (n + 1)`` at ``level``:
    ``beta (z - level) - g k`` below, ``0`` on, and
    ``beta (z - level) + g (n + 1 - k)`` above.  Broadcasts over arrays.
    """
    z = np.asarray(z, dtype=float)
    d = z - level
    out = np.where(d < 0, beta * d - g * k, beta * d + g * (n + 1 - k))
    out = np.where(d == 0, 0.0, out)
    return out if out.ndim else float(out)


def phi_sup(level: float, n: int, k: int, beta: float, g: float, box: tuple[float, float]) -> float:
    """``sup |phi_k(tau, level, n)|`` over ``tau`` in ``box`` (one-sided limits included)."""
    lo, hi = box
    cands = []
    if lo < level:
        cands += [beta * (lo - level) - g * k, beta * (min(hi, level) - level) - g * k]
    if hi > level:
        cands += [beta * (hi - level) + g * (n + 1 - k), beta * (max(lo, level) - level) + g * (n + 1 - k)]
    return max(abs(c) for c in cands) if cands else 0.0


def candidate_count(n_hat, K: int):
    """Number of candidate slots whose position ``j * ceil(n_hat / K)`` does not exceed ``n_hat``."""
    n_hat = np.asarray(n_hat)
    return n_hat // -(-n_hat // K)


def combined_rhs(x, Z, Y, adjacency, levels, leader, gains: GainSet, K: int, n_bar: int):
    """Right-hand side of the simultaneous size / k-th / frequency dynamics.

    ``x`` has shape ``(n,)``; ``Z`` and ``Y`` shape ``(n, K)``; ``adjacency``
    is the dense 0/1 matrix of the simulated component and ``leader`` a 0/1
    vector marking the damped agent.  Returns ``(dx, dZ, dY, mhat)`` where
    ``mhat`` is each agent's current mode-index estimate.

    The leader term is damping (``-x``), as in the size and frequency
    protocols.  Candidate slot ``k`` targets order statistic
    ``k * ceil(<x> / K)`` with ``<x>`` clamped to ``[1, n_bar]``; slots past
    the live count are frozen.
    """
    n_hat = np.clip(rnd(x), 1, n_bar)
    step = np.ceil(n_hat / K)
    live = candidate_count(n_hat.astype(int), K)
    ks = np.arange(1, K + 1)
    positions = ks[None, :] * step[:, None]
    mask = ks[None, :] <= live[:, None]

    dx = gains.h_x * (-leader * x + 1.0 + gains.gamma_x * (adjacency @ x - adjacency.sum(1) * x))

    lv = levels[:, None]
    phi = phi_k(Z, lv, n_hat[:, None], positions, gains.beta, gains.g)
    sgn = np.sign(Z[None, :, :] - Z[:, None, :])  # [i, j, k] = sgn(z_j - z_i)
    coupling = gains.gamma_z * np.einsum("ij,ijk->ik", adjacency, sgn)
    dZ = np.where(mask, -phi + coupling, 0.0)

    ind = (rnd(Z) == lv).astype(float)
    lap_y = adjacency @ Y - adjacency.sum(1)[:, None] * Y
    dY = gains.h_y * (-leader[:, None] * Y + ind + gains.gamma_y * lap_y)
    dY = np.where(mask, dY, 0.0)

    mhat = combined_estimate(Z, Y, mask)
    return dx, dZ, dY, mhat


def combined_estimate(Z, Y, mask, tie_break: str = "lowest-index"):
    """Mode index per agent: rounded ``z`` of the live slot with the largest rounded ``y``.

    Comparing rounded frequencies keeps tied attributes from flickering
    between agents; the tie goes to the lowest (or highest) slot, and slots
    are ordered by attribute index.
    """
    scored = np.where(mask, rnd(Y), -np.inf)
    if tie_break == "highest-index":
        best = scored.shape[1] - 1 - np.argmax(scored[:, ::-1], axis=1)
    else:
        best = np.argmax(scored, axis=1)
    return rnd(Z[np.arange(Z.shape[0]), best])


@dataclass(frozen=True, eq=False)
class ProtocolSystem:
    """One protocol on one constant network segment.

    Build with :func:`build_system`.  ``levels[i - 1]`` is ``l(a_i)`` for
    every agent known to the attribute table, 0 otherwise.
    """

    kind: str
    segment: Segment
    n_bar: int
    levels: np.ndarray
    gains: GainSet
    omega_size: int
    attribute_level: int | None = None
    k: int | None = None
    n_est: int | None = None
    K: int | None = None
    labels: tuple = field(default=(), repr=False)
    tie_break: str = "lowest-index"

    @cached_property
    def ids(self) -> list[int]:
        return sorted(self.segment.active)

    @cached_property
    def slots(self) -> np.ndarray:
        return np.array([i - 1 for i in self.ids], dtype=int)

    @cached_property
    def active_mask(self) -> np.ndarray:
        m = np.zeros(self.n_bar, dtype=bool)
        m[self.slots] = True
        return m

    @property
    def leader_pos(self) -> int:
        return self.ids.index(self.segment.leader)

    @cached_property
    def laplacian(self) -> np.ndarray:
        return self.segment.laplacian()[1]

    @cached_property
    def adjacency(self) -> np.ndarray:
        L = self.laplacian
        return np.diag(np.diag(L)) - L

    @cached_property
    def leader_vec(self) -> np.ndarray:
        e = np.zeros(len(self.ids))
        e[self.leader_pos] = 1.0
        return e

    @property
    def dim(self) -> int:
        if self.kind == "counter":
            return self.omega_size
        if self.kind == "combined":
            return 1 + 2 * self.K
        return 1

    @property
    def variables(self) -> list[str]:
        if self.kind == "size":
            return ["x"]
        if self.kind == "frequency":
            return [f"y[{self.labels[self.attribute_level - 1]}]" if self.labels else f"y[{self.attribute_level}]"]
        if self.kind == "counter":
            return [f"xi[{d}]" for d in range(1, self.omega_size + 1)]
        if self.kind == "kth":
            return [f"z[{self.k}]"]
        return ["x"] + [f"z[{j}]" for j in range(1, self.K + 1)] + [f"y[{j}]" for j in range(1, self.K + 1)]

    @property
    def is_linear(self) -> bool:
        return self.kind in LINEAR_KINDS

    def box(self) -> tuple[float, float]:
        fam = {"size": "x", "frequency": "y", "counter": "y", "kth": "z"}.get(self.kind, "x")
        return boxes(self.n_bar)[fam]

    def column_boxes(self) -> list[tuple[float, float]]:
        b = boxes(self.n_bar)
        if self.kind == "combined":
            return [b["x"]] + [b["z"]] * self.K + [b["y"]] * self.K
        return [self.box()] * self.dim

    # linear kinds

    @property
    def h(self) -> float:
        return self.gains.h_x if self.kind == "size" else self.gains.h_y

    @property
    def gamma(self) -> float:
        return self.gains.gamma_x if self.kind == "size" else self.gains.gamma_y

    @cached_property
    def coupling_matrix(self) -> np.ndarray:
        """``gamma L + e_leader e_leader^T`` over the simulated component."""
        if not self.is_linear:
            raise TypeError(f"{self.kind} protocol is not linear")
        return self.gamma * self.laplacian + np.outer(self.leader_vec, self.leader_vec)

    @property
    def drift(self) -> np.ndarray:
        return -self.h * self.coupling_matrix

    @cached_property
    def b(self) -> np.ndarray:
        """Constant input per simulated agent, shape ``(n, dim)``."""
        lv = self.levels[self.slots]
        if self.kind == "size":
            return np.ones((len(lv), 1))
        if self.kind == "frequency":
            return (lv == self.attribute_level).astype(float)[:, None]
        if self.kind == "counter":
            out = np.zeros((len(lv), self.omega_size))
            out[np.arange(len(lv)), lv.astype(int) - 1] = 1.0
            return out
        raise TypeError(f"{self.kind} protocol is not linear")

    @property
    def input(self) -> np.ndarray:
        return self.h * self.b

    # evaluation

    def rhs(self, state: np.ndarray, t: float = 0.0) -> np.ndarray:
        state = np.asarray(state, dtype=float).reshape(self.n_bar, self.dim)
        out = np.zeros_like(state)
        s = state[self.slots]
        if self.is_linear:
            out[self.slots] = self.drift @ s + self.input
        elif self.kind == "kth":
            z = s[:, 0]
            lv = self.levels[self.slots]
            sgn = np.sign(z[None, :] - z[:, None])
            coupling = self.gains.gamma_z * (self.adjacency * sgn).sum(1)
            out[self.slots, 0] = -phi_k(z, lv, self.n_est, self.k, self.gains.beta, self.gains.g) + coupling
        else:
            K = self.K
            dx, dZ, dY, _ = combined_rhs(
                s[:, 0], s[:, 1 : 1 + K], s[:, 1 + K :], self.adjacency, self.levels[self.slots],
                self.leader_vec, self.gains, K, self.n_bar,
            )
            out[self.slots, 0] = dx
            out[self.slots, 1 : 1 + K] = dZ
            out[self.slots, 1 + K :] = dY
        return out

    def observe(self, state: np.ndarray) -> np.ndarray | None:
        """Derived per-agent output (mode index) for the combined kind, ``None`` otherwise."""
        if self.kind != "combined":
            return None
        state = np.asarray(state).reshape(self.n_bar, self.dim)
        K = self.K
        x = state[:, 0]
        n_hat = np.clip(rnd(x), 1, self.n_bar).astype(int)
        ks = np.arange(1, K + 1)
        mask = ks[None, :] <= candidate_count(n_hat, K)[:, None]
        return combined_estimate(state[:, 1 : 1 + K], state[:, 1 + K :], mask, self.tie_break)

    def blended_kth_drift(self, zeta: float) -> float:
        """Sum of the local k-th fields at a common value ``zeta`` (sign terms cancel)."""
        lv = self.levels[self.slots]
        return float(-np.sum(phi_k(np.full(len(lv), zeta), lv, self.n_est, self.k, self.gains.beta, self.gains.g)))

    def kth_certificate(self, m: float) -> bool:
        """True when the blended drift traps a consensus value inside ``[m - 1/2, m + 1/2]``."""
        return self.blended_kth_drift(m - 0.5) > 0 and self.blended_kth_drift(m + 0.5) < 0

    @property
    def step_rate(self) -> float:
        """Largest one-step increment rate of the sign-coupled states (chatter budget denominator)."""
        return self.gains.gamma_z * self.segment.max_degree + self.gains.g * (self.n_bar + 1)


def build_system(
    kind: str,
    segment: Segment,
    attrs: AttributeTable,
    gains: GainSet,
    *,
    n_bar: int,
    attribute=None,
    k: int | None = None,
    n_est: int | None = None,
    K: int | None = None,
    strict: bool = False,
    tie_break: str = "lowest-index",
) -> ProtocolSystem:
    """Assemble the protocol ``kind`` on ``segment`` with attributes in force at its start."""
    if kind not in KINDS:
        raise ValueError(f"unknown protocol kind {kind!r}")
    if segment.leader not in segment.active:
        raise ValueError("segment component does not contain the leader")
    levels = np.zeros(n_bar)
    for i, hist in attrs.agent_attr.items():
        if 1 <= i <= n_bar:
            levels[i - 1] = attrs.level(attrs.label_at(i, segment.start))
    for i in segment.active:
        if levels[i - 1] == 0:
            raise UnknownAttributeError(f"active agent {i} has no attribute")
    attribute_level = None
    if kind == "frequency":
        if attribute is None:
            raise ValueError("frequency protocol needs an attribute")
        attribute_level = attrs.level(attribute)
    if kind == "kth":
        n_est = segment.n if n_est is None else int(n_est)
        if k is None or not 1 <= k <= n_est:
            raise ValueError(f"k={k} must lie in 1..{n_est}")
    if kind == "combined":
        K = gains.K if K is None else int(K)
    system = ProtocolSystem(
        kind, segment, n_bar, levels, gains, attrs.size,
        attribute_level=attribute_level, k=k, n_est=n_est, K=K, labels=attrs.universe, tie_break=tie_break,
    )
    if strict:
        from .bounds import gain_checks

        failed = [c for c in gain_checks(gains, n_bar, attrs.size, system=system) if not c.passed]
        if failed:
            raise GainViolation("; ".join(f"{c.name}: need {c.required:g}, have {c.actual:g}" for c in failed))
    return system


def equilibrium(system: ProtocolSystem) -> np.ndarray:
    """Equilibrium of a linear protocol; rows of agents outside the component are NaN."""
    if not system.is_linear:
        raise TypeError("equilibrium is defined for linear kinds only")
    M = system.coupling_matrix
    try:
        y = np.linalg.solve(M, system.b)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - M is positive definite on a connected component
        raise RuntimeError("singular coupling matrix; is the component connected?") from exc
    out = np.full((system.n_bar, system.dim), np.nan)
    out[system.slots] = y
    return out


def chatter_dt(system: ProtocolSystem, budget: float = 0.25) -> float:
    return budget / system.step_rate


def ceil_div(n: int, K: int) -> int:
    return -(-int(n) // int(K))


__all__ = [
    "GainSet", "ProtocolSystem", "build_system", "equilibrium", "indicator", "phi_k", "phi_sup",
    "combined_rhs", "rnd", "boxes", "ceil_div", "chatter_dt", "KINDS", "LINEAR_KINDS", "SIGN_KINDS",
]

