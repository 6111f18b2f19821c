"""Geometric content of an evolution, the Wilczek-Zee oracle and gate distances."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .evolve import EvolutionResult, ReducedSystem, level_projectors, propagate, reduce
from .paths import Conditional, ControlSegment, GatePlan, embed_operator

__all__ = [
    "Holonomy",
    "LeakageTooLarge",
    "GapClosed",
    "geometric_part",
    "equal_phase_check",
    "wilczek_zee_transport",
    "transport_frames",
    "gate_distance",
    "gate_metrics",
    "sector_agreement",
    "SegmentReport",
    "PlanReport",
    "analyze_segment",
    "analyze_plan",
    "control_sector_phase",
    "control_phase_gate",
]

MAX_LEAKAGE = 1e-3


class LeakageTooLarge(RuntimeError):
    """The evolution left its eigenspaces; no geometric decomposition exists."""


class GapClosed(RuntimeError):
    """Two levels touched along the sampled path."""


@dataclass
class Holonomy:
    """Geometric unitary on the active qubits with per-level phases.

    ``level_phases[n]`` is the phase of level ``n`` relative to the frame in
    ``gauge_frame`` (the ideal holonomy of the segment), so two levels share a
    phase exactly when the geometric gate matches the frame up to a global
    phase.  ``excited_unitary`` is the same map assembled from the excited
    level of the full Hamiltonian, and ``sector_parts`` the per-sector pieces.
    """

    geometric_unitary: np.ndarray
    level_phases: np.ndarray
    gauge_frame: dict = field(default_factory=dict)
    excited_unitary: np.ndarray | None = None
    sector_parts: dict = field(default_factory=dict)
    leakage: float = 0.0


def _level_blocks(u: np.ndarray, start: list[np.ndarray], end: list[np.ndarray]) -> list[np.ndarray]:
    return [pe @ u @ ps for ps, pe in zip(start, end)]


def _phases_against(blocks: list[np.ndarray], frame: np.ndarray, start, end) -> np.ndarray:
    out = []
    for b, ps, pe in zip(blocks, start, end):
        w = pe @ frame @ ps
        out.append(np.angle(np.trace(w.conj().T @ b)))
    return np.array(out)


def geometric_part(
    ev: EvolutionResult,
    rs: ReducedSystem,
    max_leakage: float = MAX_LEAKAGE,
    frame: np.ndarray | None = None,
) -> Holonomy:
    """Strip dynamical phases and assemble the geometric gate.

    In sector ``g`` level ``n`` of ``H`` is multiplied by ``exp(-i omega_{g,n})``.
    With two sectors the gate is assembled per level of the full Hamiltonian:
    the ground level takes the top level of ``H`` from sector +1 and the bottom
    level from sector -1.  Both members of a full level carry the same
    adiabatic correction, which therefore drops out as a global phase.
    """
    if ev.leakage > max_leakage:
        raise LeakageTooLarge(f"leakage {ev.leakage:.3g} exceeds {max_leakage:.3g}")
    start, end = ev.start_projectors, ev.end_projectors
    n_levels = len(start)
    parts = {}
    for g, u in ev.sector_unitaries.items():
        blocks = _level_blocks(u, start, end)
        parts[g] = [np.exp(-1j * w) * b for w, b in zip(ev.dynamical_phases[g], blocks)]
    if frame is None:
        frame = rs.segment.ideal() if ev.t0 == 0 and np.isclose(ev.t1, rs.segment.duration) else None

    if len(parts) == 2:
        # full ground level: positive-energy levels of H from sector +1, the rest from -1
        up = [ev.level_energies[n] > 0 for n in range(n_levels)]
        ground = [parts[1][n] if up[n] else parts[-1][n] for n in range(n_levels)]
        excited = [parts[-1][n] if up[n] else parts[1][n] for n in range(n_levels)]
    else:
        ground = excited = next(iter(parts.values()))
    v_ground = sum(ground)
    v_excited = sum(excited)
    if frame is not None:
        phases = _phases_against(ground, frame, start, end)
    else:
        phases = np.array([np.angle(np.trace(b @ b.conj().T)) for b in ground])
    return Holonomy(
        v_ground,
        phases,
        {"convention": "ideal" if frame is not None else "none", "frame": frame},
        v_excited,
        {g: sum(p) for g, p in parts.items()},
        ev.leakage,
    )


def equal_phase_check(h: Holonomy) -> float:
    """``|exp(i alpha_0) - exp(i alpha_1)|``, maximised over pairs when there are more levels."""
    e = np.exp(1j * np.asarray(h.level_phases))
    return float(np.abs(e[:, None] - e[None, :]).max())


def sector_agreement(h: Holonomy) -> float:
    """Phase-invariant distance between the gates carried by the two full levels.

    Each full level combines one level of ``H`` from each passive sector, so a
    sector-dependent geometric action shows up here as a nonzero distance.
    """
    if h.excited_unitary is None:
        return 0.0
    return gate_distance(h.geometric_unitary, h.excited_unitary)


# ---------------------------------------------------------------------------
# Wilczek-Zee transport


def _polar(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m)
    return u @ vh


def _ordered_product(links: np.ndarray) -> np.ndarray:
    while len(links) > 1:
        if len(links) % 2:
            links = np.concatenate([links, np.eye(links.shape[-1], dtype=complex)[None]])
        links = links[1::2] @ links[0::2]
    return links[0]


def transport_frames(frames: np.ndarray) -> np.ndarray:
    """Parallel transport of a level along sampled orthonormal frames.

    ``frames`` has shape ``(N+1, d, m)``: one ``d x m`` frame per sample.  The
    link between neighbours is the unitary polar factor of their overlap, which
    removes whatever gauge the frames were sampled in.  Returns the map
    ``|start> -> |end>`` as a ``d x d`` matrix.
    """
    overlaps = np.swapaxes(frames[1:].conj(), -1, -2) @ frames[:-1]
    links = _polar(overlaps)
    path = _ordered_product(links)
    return frames[-1] @ path @ frames[0].conj().T


def _sample_frames(segs: list[ControlSegment], n_samples: int) -> list[np.ndarray]:
    mats = []
    for k, seg in enumerate(segs):
        s = np.linspace(0.0, 1.0, n_samples + 1)
        if k > 0:
            s = s[1:]
        mats.append(seg.operators_at_s(s))
    h = np.concatenate(mats)
    w, v = np.linalg.eigh(h)
    d = h.shape[-1]
    gaps = np.diff(w, axis=-1)
    # level structure from the first sample; later samples follow energy order
    _, _, bases0 = level_projectors(h[0])
    sizes = [b.shape[1] for b in bases0]
    bounds = np.cumsum([0] + sizes)
    for b in bounds[1:-1]:
        if gaps[:, b - 1].min() < 1e-6:
            raise GapClosed("levels touch along the sampled path")
    return [v[:, :, bounds[k] : bounds[k + 1]] for k in range(len(sizes))], d


def wilczek_zee_transport(
    seg: ControlSegment | list[ControlSegment],
    n_samples: int = 64,
    tol: float = 1e-9,
    max_samples: int = 2**18,
) -> Holonomy:
    """Adiabatic holonomy from the instantaneous eigenbasis alone.

    Works in path-parameter space, so the result is independent of ``T_h``.
    A list of segments on the same active qubits is treated as one
    concatenated path.  Samples double until the result changes by less than
    ``tol``.
    """
    segs = list(seg) if isinstance(seg, (list, tuple)) else [seg]
    prev = None
    n = n_samples
    while True:
        levels, d = _sample_frames(segs, n)
        u = sum(transport_frames(f) for f in levels)
        if prev is not None and np.linalg.norm(u - prev, 2) < tol:
            break
        if 2 * n > max_samples:
            break
        prev = u
        n *= 2
    frame = segs[0].ideal()
    for s in segs[1:]:
        frame = s.ideal() @ frame
    start = [f[0] @ f[0].conj().T for f in levels]
    end = [f[-1] @ f[-1].conj().T for f in levels]
    blocks = _level_blocks(u, start, end)
    phases = _phases_against(blocks, frame, start, end)
    return Holonomy(u, phases, {"convention": "parallel transport", "samples": n, "frame": frame})


# ---------------------------------------------------------------------------
# distances


def _check_pair(u: np.ndarray, v: np.ndarray) -> None:
    if u.shape != v.shape or u.shape[0] != u.shape[1]:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")


def gate_distance(u: np.ndarray, v: np.ndarray) -> float:
    """``min_phi ||u - e^{i phi} v||`` in spectral norm."""
    _check_pair(u, v)

    def cost(phi: float) -> float:
        return float(np.linalg.norm(u - np.exp(1j * phi) * v, 2))

    grid = np.linspace(-np.pi, np.pi, 360, endpoint=False)
    tr = np.trace(v.conj().T @ u)
    candidates = list(grid)
    if abs(tr) > 1e-14:
        candidates.append(float(np.angle(tr)))
    vals = [cost(p) for p in candidates]
    best = candidates[int(np.argmin(vals))]
    width = 2 * np.pi / 360
    res = minimize_scalar(cost, bounds=(best - width, best + width), method="bounded", options={"xatol": 1e-12})
    return float(min(res.fun, min(vals)))


def gate_metrics(u: np.ndarray, v: np.ndarray) -> dict[str, float]:
    """Spectral distance, trace fidelity ``|tr(v^dag u)|/d`` and infidelity ``1 - F^2``."""
    _check_pair(u, v)
    f = float(abs(np.trace(v.conj().T @ u)) / u.shape[0])
    return {"spectral": gate_distance(u, v), "trace_fidelity": f, "infidelity": max(0.0, 1.0 - f * f)}


# ---------------------------------------------------------------------------
# end-to-end analysis


@dataclass
class SegmentReport:
    holonomy: Holonomy
    evolution: EvolutionResult
    oracle: Holonomy | None
    oracle_distance: float
    equal_phase_residual: float
    sector_agreement: float
    control_phase: float = 0.0


def control_sector_phase(u: np.ndarray, ideal: np.ndarray) -> float:
    """Relative phase of the control-|1> block against the control-|0> block."""
    d = u.shape[0] // 2
    p0 = np.trace(ideal[:d, :d].conj().T @ u[:d, :d])
    p1 = np.trace(ideal[d:, d:].conj().T @ u[d:, d:])
    return float(np.angle(p1 / p0))


def control_phase_gate(phi: float, dim: int) -> np.ndarray:
    """``diag(1, e^{-i phi})`` on the control (first) qubit of a ``dim``-dimensional space."""
    d = dim // 2
    return np.diag(np.concatenate([np.ones(d), np.full(d, np.exp(-1j * phi))]))


def analyze_segment(
    seg: ControlSegment,
    scheme: str = "magnus4",
    with_oracle: bool = True,
    max_leakage: float = MAX_LEAKAGE,
    tol: float = 1e-10,
) -> SegmentReport:
    rs = reduce(seg)
    ev = propagate(rs, scheme=scheme, tol=tol)
    h = geometric_part(ev, rs, max_leakage=max_leakage)
    oracle, dist = None, float("nan")
    if with_oracle:
        oracle = wilczek_zee_transport(seg)
        dist = gate_distance(h.geometric_unitary, oracle.geometric_unitary)
    phi = 0.0
    if isinstance(seg.form, Conditional):
        phi = control_sector_phase(h.geometric_unitary, seg.ideal())
    return SegmentReport(h, ev, oracle, dist, equal_phase_check(h), sector_agreement(h), phi)


@dataclass
class PlanReport:
    plan: GatePlan
    segments: list[SegmentReport]
    geometric_unitary: np.ndarray
    oracle_unitary: np.ndarray
    delta_spectral: float
    delta_fidelity: float
    leakage: float
    equal_phase_residual: float
    oracle_distance: float
    steps_used: int

    def as_dict(self) -> dict:
        return {
            "gate": self.plan.label,
            "th_factor": None,
            "delta_spectral": self.delta_spectral,
            "delta_fidelity": self.delta_fidelity,
            "leakage": self.leakage,
            "equal_phase_residual": self.equal_phase_residual,
            "oracle_distance": self.oracle_distance,
            "steps_used": self.steps_used,
        }


def analyze_plan(
    plan: GatePlan,
    scheme: str = "magnus4",
    with_oracle: bool = True,
    max_leakage: float = MAX_LEAKAGE,
    correct_control_phase: bool = True,
) -> PlanReport:
    """Run every segment, compose the geometric gates and compare with the target.

    For conditional segments the relative phase between the control sectors
    is measured and, if ``correct_control_phase``, undone by a phase gate on
    the control before composing.
    """
    data = plan.data_qubits
    dim = 2**plan.n_qubits
    u = np.eye(dim, dtype=complex)
    w = np.eye(dim, dtype=complex)
    reports = []
    for seg in plan.segments:
        rep = analyze_segment(seg, scheme, with_oracle, max_leakage)
        reports.append(rep)
        g = rep.holonomy.geometric_unitary
        if correct_control_phase and rep.control_phase:
            g = control_phase_gate(rep.control_phase, g.shape[0]) @ g
        u = embed_operator(g, seg.active_qubits, data) @ u
        if rep.oracle is not None:
            w = embed_operator(rep.oracle.geometric_unitary, seg.active_qubits, data) @ w
    corr = plan.correction_unitary()
    u = corr @ u
    w = corr @ w
    m = gate_metrics(u, plan.target)
    return PlanReport(
        plan,
        reports,
        u,
        w,
        m["spectral"],
        m["infidelity"],
        max(r.evolution.leakage for r in reports),
        max(r.equal_phase_residual for r in reports),
        gate_distance(u, w) if with_oracle else float("nan"),
        max(r.evolution.steps_used for r in reports),
    )
