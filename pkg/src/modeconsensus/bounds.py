"""Convergence-time bounds, gain selection and spectral sanity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import Segment
from .protocols import GainSet, ProtocolSystem, boxes, phi_sup

PRESETS = ("paper-exact", "paper-strict", "desk")

SQRT2 = math.sqrt(2.0)


def _time_bound(n_bar: int, h: float, width: float) -> float:
    return 4.0 * n_bar / h * math.log(4.0 * width * math.sqrt(n_bar) / (2.0 - SQRT2))


def time_bound_x(n_bar: int, h_x: float) -> float:
    """Size-estimation lock bound; the box ``[0.5, n_bar + 0.5]`` has width ``n_bar``."""
    return _time_bound(n_bar, h_x, n_bar)


def time_bound_y(n_bar: int, h_y: float) -> float:
    """Frequency-estimation lock bound; the box ``[-0.5, n_bar + 0.5]`` has width ``n_bar + 1``."""
    return _time_bound(n_bar, h_y, n_bar + 1)


def time_bound_z(n_bar: int, omega_size: int, beta: float) -> float:
    return math.log(2.0 * n_bar * omega_size) / beta


def deviation_bound(n: int, gamma: float) -> float:
    """Upper bound on ``|y_i* - y_1*|`` at the frequency-protocol equilibrium."""
    return SQRT2 * n**3 / (4.0 * gamma)


def algorithm2_bound(t_x: float, t_y: float, t_z: float) -> float:
    return t_x + t_y + t_z


def algorithm3_bound(t_x: float, t_y: float, t_z: float, k_star: int) -> float:
    return t_x + k_star * (t_y + t_z)


def worst_phi_sup(n_bar: int, omega_size: int, beta: float, g: float) -> float:
    """``sup |phi_k|`` over the z-box, every level in ``1..|Omega|``, ``N <= n_bar`` and ``k <= N``."""
    box = boxes(n_bar)["z"]
    # |phi| grows with n and is extremal at k = 1 or k = n, level at the ends of the range
    return max(
        phi_sup(level, n_bar, k, beta, g, box)
        for level in {1, omega_size}
        for k in {1, n_bar}
    )


def select_gains(
    n_bar: int,
    omega_size: int,
    preset: str = "desk",
    *,
    n: int | None = None,
    K: int = 1,
    margin: float = 1.1,
) -> GainSet:
    """Gains for one of the presets.

    ``paper-exact`` reproduces the published simulation values (with ``n``
    given, the frequency coupling uses the known size ``n**3``);
    ``paper-strict`` satisfies every sufficient condition with strict
    inequality; ``desk`` does the same with slow speed gains so that
    explicit stepping of the linear parts stays cheap on small networks.
    """
    if n_bar < 2:
        raise ValueError("n_bar must be at least 2")
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")
    beta = 1.0 / n_bar
    if preset == "paper-exact":
        g = float(omega_size)
        return GainSet(
            h_x=1e3, gamma_x=float(n_bar**3), h_y=1e3, gamma_y=float((n or n_bar) ** 3),
            beta=beta, g=g, gamma_z=g * n_bar**2, K=K, preset=preset,
        )
    if preset == "paper-strict":
        h, g = 1e3, beta * n_bar * omega_size + 1.0
    else:
        h, g = 10.0, 2.0 * beta * n_bar * omega_size
    gamma_z = margin * n_bar * worst_phi_sup(n_bar, omega_size, beta, g)
    return GainSet(
        h_x=h, gamma_x=float(n_bar**3), h_y=h, gamma_y=float(n_bar**3),
        beta=beta, g=g, gamma_z=gamma_z, K=K, preset=preset,
    )


@dataclass(frozen=True)
class GainCheck:
    name: str
    required: float
    actual: float
    passed: bool
    strict: bool = False

    def to_dict(self) -> dict:
        return {"name": self.name, "required": self.required, "actual": self.actual, "pass": self.passed}


def gain_checks(
    gains: GainSet, n_bar: int, omega_size: int, *, system: ProtocolSystem | None = None
) -> list[GainCheck]:
    """Evaluate each sufficient gain condition.

    The k-th coupling condition is evaluated for the concrete attributes,
    ``k`` and ``N`` of ``system`` when a k-th system is supplied, and for the
    worst case over all admissible instances otherwise.
    """
    checks = [
        GainCheck("gamma_x >= n_bar^3", float(n_bar**3), gains.gamma_x, gains.gamma_x >= n_bar**3),
        GainCheck("gamma_y >= n_bar^3", float(n_bar**3), gains.gamma_y, gains.gamma_y >= n_bar**3),
    ]
    g_req = gains.beta * n_bar * omega_size
    checks.append(GainCheck("g > beta*n_bar*|Omega|", g_req, gains.g, gains.g > g_req, strict=True))
    if system is not None and system.kind == "kth":
        box = boxes(n_bar)["z"]
        lv = system.levels[system.slots]
        sup = max(phi_sup(level, system.n_est, system.k, gains.beta, gains.g, box) for level in set(lv.tolist()))
        name = f"gamma_z > n_bar*sup|phi_{system.k}|"
    else:
        sup = worst_phi_sup(n_bar, omega_size, gains.beta, gains.g)
        name = "gamma_z > n_bar*sup|phi| (worst case)"
    checks.append(GainCheck(name, n_bar * sup, gains.gamma_z, gains.gamma_z > n_bar * sup, strict=True))
    return checks


@dataclass(frozen=True)
class SpectralCheck:
    inequality: str
    lhs: float
    rhs: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        return {"inequality": self.inequality, "lhs": self.lhs, "rhs": self.rhs, "pass": self.passed, "note": self.note}


def spectral_checks(
    net: Segment | np.ndarray, gamma: float, *, leader: int = 0, margin: float = 1e-7
) -> list[SpectralCheck]:
    """Check the Laplacian inequalities behind the frequency-protocol proof.

    ``net`` is a segment or a Laplacian matrix (``leader`` then gives the row
    of the damped agent).  A disconnected graph reports ``lambda_2 = 0`` as a
    failed check instead of raising.
    """
    if isinstance(net, Segment):
        ids, L = net.laplacian()
        leader = ids.index(net.leader)
    else:
        L = np.asarray(net, dtype=float)
    n = L.shape[0]
    evals = np.linalg.eigvalsh(L)
    lam2 = float(evals[1]) if n > 1 else 0.0
    if n > 1 and lam2 < 1e-9:
        lam2 = 0.0
    out = [SpectralCheck("lambda_2(L) >= 4/N^2", lam2, 4.0 / n**2, lam2 >= 4.0 / n**2 - margin,
                         "" if lam2 > 0 else "graph is disconnected")]
    e = np.zeros(n)
    e[leader] = 1.0
    M = gamma * L + np.outer(e, e)
    lam_min = float(np.linalg.eigvalsh(M)[0])
    if lam2 > 0 and gamma >= n / lam2:
        out.append(SpectralCheck("lambda_min(gamma L + e e^T) >= 1/(4N)", lam_min, 1.0 / (4 * n),
                                 lam_min >= 1.0 / (4 * n) - margin))
    else:
        out.append(SpectralCheck("lambda_min(gamma L + e e^T) >= 1/(4N)", lam_min, 1.0 / (4 * n), True,
                                 "premise gamma >= N/lambda_2 not met; vacuous"))
    out.append(SpectralCheck("lambda_min(gamma L + e e^T) > 0", lam_min, 0.0,
                             gamma > 0 and lam_min > 0 if lam2 > 0 else False,
                             "" if lam2 > 0 else "positive definiteness needs a connected graph"))
    return out


@dataclass
class BoundReport:
    t_x: float
    t_y: float
    t_z: float
    gain_checks: list[GainCheck] = field(default_factory=list)
    spectral_checks: list[SpectralCheck] = field(default_factory=list)
    k_star: int | None = None

    @property
    def algorithm1(self) -> float:
        return self.t_y

    @property
    def algorithm2(self) -> float:
        return algorithm2_bound(self.t_x, self.t_y, self.t_z)

    @property
    def algorithm3(self) -> float | None:
        if self.k_star is None:
            return None
        return algorithm3_bound(self.t_x, self.t_y, self.t_z, self.k_star)

    def to_dict(self) -> dict:
        return {
            "t_x": self.t_x,
            "t_y": self.t_y,
            "t_z": self.t_z,
            "algorithm1": self.algorithm1,
            "algorithm2": self.algorithm2,
            "algorithm3": self.algorithm3,
            "k_star": self.k_star,
            "gain_checks": [c.to_dict() for c in self.gain_checks],
            "spectral_checks": [c.to_dict() for c in self.spectral_checks],
        }


def bound_report(
    gains: GainSet, n_bar: int, omega_size: int, *, segment: Segment | None = None, k_star: int | None = None
) -> BoundReport:
    report = BoundReport(
        t_x=time_bound_x(n_bar, gains.h_x),
        t_y=time_bound_y(n_bar, gains.h_y),
        t_z=time_bound_z(n_bar, omega_size, gains.beta),
        gain_checks=gain_checks(gains, n_bar, omega_size),
        k_star=k_star,
    )
    if segment is not None:
        report.spectral_checks = spectral_checks(segment, gains.gamma_y)
    return report
