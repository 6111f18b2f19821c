"""Full-register fault-tolerance checks: block evolution, error injection, verdicts and gadgets.

States are flat complex vectors over ``n`` qubits with qubit 0 as the most
significant bit.  Reference qubits, when present, sit after the code qubits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .evolve import EvolutionResult, propagate, reduce
from .paths import (
    BasisBlend,
    ControlSegment,
    SmoothSchedule,
    T_D,
    cnot_segments,
    xs_legs,
)
from .pauli import (
    GroupMembership,
    NotCorrectable,
    PauliString,
    SubsystemCode,
    Syndrome,
    commutes,
    complete_in_group,
    conjugate_pauli,
    decode_single,
    gf2_rank,
    iter_paulis,
    syndrome,
    trivial_code,
)

__all__ = [
    "ErrorEvent",
    "Verdict",
    "BlockPlan",
    "BlockRunner",
    "VerdictContext",
    "apply_pauli",
    "apply_local",
    "expectation",
    "transversal_rz",
    "transversal_cnot",
    "identity_plan",
    "bell_input",
    "encoded_input",
    "run_plan_on_block",
    "inject_and_evolve",
    "verdict",
    "ft_sweep",
    "sample_events",
    "cat_prep",
    "parity_gadget",
    "InvalidPlan",
    "SweepRow",
    "CSV_HEADER",
    "WHEN_GRID",
    "CheckDiagonalizer",
    "exhaustive_events",
    "validate_block_plan",
]


class InvalidPlan(ValueError):
    """A segment's passive factor is not backed by the code's stabilizer or gauge group."""


# ---------------------------------------------------------------------------
# matrix-free state operations


@lru_cache(maxsize=8)
def _indices(n: int) -> np.ndarray:
    return np.arange(2**n, dtype=np.int64)


def _masks(p: PauliString) -> tuple[int, int, int]:
    n = p.n_qubits
    xm = zm = 0
    ny = 0
    for q, (x, z) in enumerate(zip(p.x_bits, p.z_bits)):
        bit = 1 << (n - 1 - q)
        if x:
            xm |= bit
        if z:
            zm |= bit
        ny += x & z
    return xm, zm, ny


def apply_pauli(state: np.ndarray, p: PauliString) -> np.ndarray:
    """``P |psi>`` without forming ``P``.

    ``(P psi)[c] = i^(k + #Y) (-1)^popcount(z & (c ^ x)) psi[c ^ x]``.
    """
    n = p.n_qubits
    if state.shape[0] != 2**n:
        raise ValueError("state size does not match the Pauli string")
    xm, zm, ny = _masks(p)
    idx = _indices(n)
    src = idx ^ xm if xm else idx
    out = state[src] if xm else state.copy()
    if zm:
        parity = np.bitwise_count(src & zm) & 1
        out = np.where(parity.astype(bool), -out, out)
    phase = (1, 1j, -1, -1j)[(p.phase + ny) % 4]
    if phase != 1:
        out = out * phase
    return out


def apply_local(state: np.ndarray, u: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Apply a ``2^k x 2^k`` matrix to ``qubits`` of an ``n``-qubit state."""
    k = len(qubits)
    psi = state.reshape([2] * n)
    op = u.reshape([2] * (2 * k))
    out = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(qubits)))
    out = np.moveaxis(out, list(range(k)), list(qubits))
    return out.reshape(-1)


def expectation(state: np.ndarray, p: PauliString) -> complex:
    return complex(np.vdot(state, apply_pauli(state, p)))


def _pad(p: PauliString, n_total: int) -> PauliString:
    if p.n_qubits == n_total:
        return p
    return p.tensor(PauliString.identity(n_total - p.n_qubits))


# ---------------------------------------------------------------------------
# plans on code blocks


@dataclass(frozen=True)
class ErrorEvent:
    qubit: int
    pauli: str
    when: float
    segment_index: int

    def __post_init__(self) -> None:
        if self.pauli not in ("X", "Y", "Z"):
            raise ValueError("pauli must be one of X, Y, Z")
        if not 0.0 <= self.when <= 1.0:
            raise ValueError("when must lie in [0, 1]")


@dataclass
class BlockPlan:
    """Segments on a code register with the bookkeeping needed to check them.

    ``groups[k]`` is the code whose stabilizer-times-gauge group must contain
    ``A (x) Gt`` for the start operator ``A`` of segment ``k``; ``None`` marks a
    leg that continues the previous leg on the same qubits with the same
    passive factor.  ``final_code`` is the code after the ideal gates.
    """

    label: str
    code: SubsystemCode
    segments: list[ControlSegment]
    groups: list[SubsystemCode | None]
    corrections: list[PauliString]
    final_code: SubsystemCode
    check_groups: bool = True

    @property
    def n_qubits(self) -> int:
        return self.code.n_qubits

    def max_locality(self) -> int:
        return max(len(s.active_qubits) + s.passive.weight for s in self.segments)


def _start_pauli(seg: ControlSegment, n: int) -> PauliString | None:
    form = seg.form
    if isinstance(form, BasisBlend):
        single = form.a.as_pauli()
    else:
        single = None
    if single is None:
        return None
    return single.unsigned().embed(n, seg.active_qubits)


def validate_block_plan(plan: BlockPlan) -> None:
    """Reject plans whose passive factors are not drawn from the code's groups."""
    if not plan.check_groups:
        return
    n = plan.n_qubits
    prev = None
    for k, (seg, grp) in enumerate(zip(plan.segments, plan.groups)):
        if grp is None:
            if prev is None or seg.passive != prev.passive or set(seg.active_qubits) != set(prev.active_qubits):
                raise InvalidPlan(f"segment {k} does not continue its predecessor")
            if np.abs(prev.end_operator() - seg.start_operator()).max() > 1e-12:
                raise InvalidPlan(f"segment {k} does not start where segment {k - 1} ended")
        else:
            a = _start_pauli(seg, n)
            if a is None:
                raise InvalidPlan(f"segment {k} has no single-Pauli start operator")
            if not grp.in_gauge_group(a * seg.passive.unsigned()):
                raise InvalidPlan(f"segment {k}: {a.label} x {seg.passive.label} is not in the group")
        prev = seg


def _conjugate_code(code: SubsystemCode, u: np.ndarray, qubits: Sequence[int]) -> SubsystemCode:
    return code.conjugated(lambda p: conjugate_pauli(p, u, qubits))


def _choose_passive(code: SubsystemCode, start: PauliString, active: Sequence[int]) -> PauliString:
    group = GroupMembership(code.group_matrix())
    g = complete_in_group(group, start, exclude=active)
    if g is None:
        raise InvalidPlan(f"no passive factor completes {start.label} inside the group")
    return g


def transversal_rz(code: SubsystemCode, total_time: float = 17 * T_D, schedule: str = "bump") -> BlockPlan:
    """Holonomic RZ on every qubit in turn, each with the lightest admissible passive factor."""
    n = code.n_qubits
    segs, groups = [], []
    cur = code
    sched = SmoothSchedule(total_time, schedule)
    for q in range(n):
        start = PauliString.single(n, q, "Z")
        passive = _choose_passive(cur, start, [q])
        seg = ControlSegment(BasisBlend("Z", "X"), (q,), passive, sched)
        segs.append(seg)
        groups.append(cur)
        cur = _conjugate_code(cur, seg.ideal(), [q])
    return BlockPlan("rz-step", code, segs, groups, [], cur)


def identity_plan(code: SubsystemCode, total_time: float = 17 * T_D) -> BlockPlan:
    """Zero-angle path on every qubit (a static Hamiltonian); the ideal gate is the identity."""
    from .paths import ConjugatedRotation

    n = code.n_qubits
    segs, groups = [], []
    sched = SmoothSchedule(total_time)
    for q in range(n):
        start = PauliString.single(n, q, "Z")
        passive = _choose_passive(code, start, [q])
        form = ConjugatedRotation("Z", PauliString.from_label("X"), 0.0)
        segs.append(ControlSegment(form, (q,), passive, sched))
        groups.append(code)
    plan = BlockPlan("identity", code, segs, groups, [], code)
    plan.check_groups = False  # ConjugatedRotation start is Z, checked by construction
    return plan


def transversal_cnot(code: SubsystemCode | None = None, total_time: float = 17 * T_D, schedule: str = "bump") -> BlockPlan:
    """Holonomic CNOT from every qubit of block 0 onto the matching qubit of block 1."""
    if code is None:
        from .pauli import bacon_shor_9

        code = bacon_shor_9()
    pair_code = code.tensor(code)
    n = pair_code.n_qubits
    m = code.n_qubits
    segs, groups, corrections = [], [], []
    cur = pair_code
    for q in range(m):
        c, t = q, q + m
        pc = _choose_passive(cur, PauliString.single(n, c, "Z"), [c])
        leg1, leg2 = xs_legs(c, pc, total_time, schedule)
        segs += [leg1, leg2]
        groups += [cur, None]
        xs = leg2.ideal() @ leg1.ideal()
        cur = _conjugate_code(cur, xs, [c])

        pt = _choose_passive(cur, PauliString.single(n, t, "Z"), [t])
        leg_t = ControlSegment(BasisBlend("Z", "Y"), (t,), pt, SmoothSchedule(total_time, schedule))
        segs.append(leg_t)
        groups.append(cur)
        cur = _conjugate_code(cur, leg_t.ideal(), [t])

        start2 = PauliString.from_sparse(n, {t: "Y"})
        p2 = _choose_passive(cur, start2, [c, t])
        leg_2 = ControlSegment(BasisBlend("IY", "ZZ"), (c, t), p2, SmoothSchedule(total_time, schedule))
        segs.append(leg_2)
        groups.append(cur)
        cur = _conjugate_code(cur, leg_2.ideal(), [c, t])
        corrections.append(PauliString.from_sparse(n, {c: "X", t: "X"}))
    return BlockPlan("cnot-transversal", pair_code, segs, groups, corrections, cur)


# ---------------------------------------------------------------------------
# evolution


@lru_cache(maxsize=256)
def _sector_evolution(form, schedule: SmoothSchedule, t0: float, t1: float, scheme: str) -> EvolutionResult:
    proxy = ControlSegment(form, tuple(range(form.n_active)), _proxy_passive(form.n_active), schedule)
    return propagate(reduce(proxy), t0=t0, t1=t1, scheme=scheme)


@lru_cache(maxsize=256)
def _level_phase_correction(form, schedule: SmoothSchedule, scheme: str) -> dict[int, np.ndarray]:
    """Per-sector rotations about the final Hamiltonian that undo the level phases.

    Each level ``n`` of sector ``g`` picks up ``theta = arg tr(P_n(T) U_g V^dag)``
    relative to the ideal gate ``V``: the dynamical phase plus the small
    adiabatic correction.  The returned ``C_g = sum_n e^{-i(theta - mean)} P_n(T)``
    removes them, leaving one global phase.
    """
    ev = _sector_evolution(form, schedule, 0.0, float(schedule.total_time), scheme)
    v_dag = form.ideal().conj().T
    thetas = {
        g: [np.angle(np.trace(p @ u @ v_dag)) for p in ev.end_projectors]
        for g, u in ev.sector_unitaries.items()
    }
    # unwrap around the first entry so the mean is meaningful
    ref = thetas[1][0]
    for g in thetas:
        thetas[g] = [ref + np.angle(np.exp(1j * (t - ref))) for t in thetas[g]]
    mean = np.mean([t for ts in thetas.values() for t in ts])
    return {
        g: sum(np.exp(-1j * (t - mean)) * p for t, p in zip(ts, ev.end_projectors))
        for g, ts in thetas.items()
    }


def _proxy_passive(k: int) -> PauliString:
    return PauliString.identity(k).tensor(PauliString.from_label("Z"))


def _segment_terms(seg: ControlSegment, n_total: int):
    _, paulis = seg.form.coefficients(np.array([0.0]))
    passive = _pad(seg.passive, n_total)
    full = [_pad(p.embed(seg.n_register, seg.active_qubits), n_total) * passive for p in paulis]
    for a, b in itertools.combinations(full, 2):
        if commutes(a, b):
            raise ValueError("stepping needs mutually anticommuting Hamiltonian terms")
    return full


class BlockRunner:
    """Evolves states through a :class:`BlockPlan`, optionally injecting one error.

    ``method="sector"`` applies exact reduced propagators ``sum_g U_g (x) P_g``;
    ``method="stepping"`` uses matrix-free midpoint steps with the closed-form
    exponential of mutually anticommuting Pauli terms.  ``compensate`` undoes
    the known dynamical rotation after each segment, which is needed when the
    passive factor is trivial and the state spans both levels.
    """

    def __init__(
        self,
        plan: BlockPlan,
        n_ref: int = 0,
        method: str = "sector",
        compensate: bool = False,
        steps: int = 4096,
        scheme: str = "magnus4",
        checkpoint_every: int = 0,
    ):
        if method not in ("sector", "stepping"):
            raise ValueError(f"unknown method {method!r}")
        validate_block_plan(plan)
        self.plan = plan
        self.n_ref = n_ref
        self.n_total = plan.n_qubits + n_ref
        self.method = method
        self.compensate = compensate
        self.steps = steps
        self.scheme = scheme
        self.checkpoint_every = checkpoint_every
        self._checkpoints: dict[int, np.ndarray] = {}
        self._checkpoint_input: np.ndarray | None = None

    # single segment -----------------------------------------------------
    def _apply_sector_ops(self, state, seg: ControlSegment, up: np.ndarray, um: np.ndarray) -> np.ndarray:
        """Apply ``up (x) P_+ + um (x) P_-`` where ``P_g`` projects on the passive factor's sectors.

        The operator is assembled densely on the active qubits plus the passive
        support (at most a few qubits) and applied in one contraction.
        """
        passive = _pad(seg.passive, self.n_total)
        if passive.is_identity:
            u = up if passive.phase == 0 else um
            return apply_local(state, u, seg.active_qubits, self.n_total)
        support = list(passive.support)
        g = passive.restrict(support).to_matrix()
        eye = np.eye(g.shape[0])
        op = np.kron(up, 0.5 * (eye + g)) + np.kron(um, 0.5 * (eye - g))
        return apply_local(state, op, list(seg.active_qubits) + support, self.n_total)

    def _sector_step(self, state, seg: ControlSegment, t0: float, t1: float) -> np.ndarray:
        if t1 <= t0:
            return state
        ev = _sector_evolution(seg.form, seg.schedule, float(t0), float(t1), self.scheme)
        return self._apply_sector_ops(state, seg, ev.sector_unitaries[1], ev.sector_unitaries[-1])

    def _stepping(self, state, seg: ControlSegment, t0: float, t1: float) -> np.ndarray:
        if t1 <= t0:
            return state
        terms = _segment_terms(seg, self.n_total)
        n_steps = max(2, int(np.ceil(self.steps * (t1 - t0) / seg.duration)))
        h = (t1 - t0) / n_steps
        mids = t0 + (np.arange(n_steps) + 0.5) * h
        coeffs, _ = seg.pauli_terms(mids)
        r = np.sqrt((coeffs**2).sum(axis=0))
        psi = state
        for k in range(n_steps):
            # exp(i h sum c_j Q_j) with anticommuting Q_j
            acc = np.zeros_like(psi)
            for c, q in zip(coeffs[:, k], terms):
                if c != 0.0:
                    acc += c * apply_pauli(psi, q)
            if r[k] > 0:
                psi = np.cos(h * r[k]) * psi + 1j * np.sin(h * r[k]) / r[k] * acc
        return psi

    def _compensation(self, state, seg: ControlSegment) -> np.ndarray:
        ops = _level_phase_correction(seg.form, seg.schedule, self.scheme)
        return self._apply_sector_ops(state, seg, ops[1], ops[-1])

    def evolve_segment(self, state, k: int, t0: float = 0.0, t1: float | None = None) -> np.ndarray:
        seg = self.plan.segments[k]
        if t1 is None:
            t1 = seg.duration
        if self.method == "sector":
            out = self._sector_step(state, seg, t0, t1)
        else:
            out = self._stepping(state, seg, t0, t1)
        if self.compensate and np.isclose(t1, seg.duration):
            out = self._compensation(out, seg)
        return out

    # whole plan --------------------------------------------------------------
    def _finish(self, state) -> np.ndarray:
        for c in self.plan.corrections:
            state = apply_pauli(state, _pad(c, self.n_total))
        return state

    def run(self, state: np.ndarray, event: ErrorEvent | None = None, extra: PauliString | None = None) -> np.ndarray:
        """Evolve ``state`` through the plan; ``event`` injects one Pauli mid-segment.

        ``extra`` is applied after the plan (a test hook for deliberately
        uncorrectable residuals).
        """
        segs = self.plan.segments
        if event is not None:
            if not 0 <= event.segment_index < len(segs):
                raise ValueError("event segment out of range")
            if not 0 <= event.qubit < self.plan.n_qubits:
                raise ValueError("event qubit out of range")
        start_k, psi = 0, state
        if event is not None and self.checkpoint_every and self._checkpoint_input is not None:
            if np.shares_memory(state, self._checkpoint_input) or np.array_equal(state, self._checkpoint_input):
                usable = [k for k in self._checkpoints if k <= event.segment_index]
                if usable:
                    start_k = max(usable)
                    psi = self._checkpoints[start_k]
        for k in range(start_k, len(segs)):
            if event is not None and k == event.segment_index:
                t_err = event.when * segs[k].duration
                psi = self.evolve_segment(psi, k, 0.0, t_err) if event.when > 0 else psi
                err = PauliString.single(self.n_total, event.qubit, event.pauli)
                psi = apply_pauli(psi, err)
                psi = self.evolve_segment(psi, k, t_err, None) if event.when < 1 else self._maybe_compensate(psi, k)
            else:
                if event is None and self.checkpoint_every and k % self.checkpoint_every == 0:
                    self._checkpoints[k] = psi
                psi = self.evolve_segment(psi, k)
        if event is None and self.checkpoint_every:
            self._checkpoint_input = state
        psi = self._finish(psi)
        if extra is not None:
            psi = apply_pauli(psi, _pad(extra, self.n_total))
        return psi

    def _maybe_compensate(self, psi, k: int) -> np.ndarray:
        if self.compensate:
            return self._compensation(psi, self.plan.segments[k])
        return psi

    def ideal(self, state: np.ndarray) -> np.ndarray:
        """Apply the ideal gate of every segment, then the corrections."""
        psi = state
        for seg in self.plan.segments:
            psi = apply_local(psi, seg.ideal(), seg.active_qubits, self.n_total)
        return self._finish(psi)


def run_plan_on_block(
    code: SubsystemCode, plan: BlockPlan, input_state: np.ndarray, method: str = "sector", **kw
) -> np.ndarray:
    if plan.code != code:
        raise InvalidPlan("plan was built for a different code")
    n_ref = int(round(np.log2(input_state.shape[0]))) - code.n_qubits
    if n_ref < 0 or 2 ** (code.n_qubits + n_ref) != input_state.shape[0]:
        raise ValueError("input state does not fit the code register")
    return BlockRunner(plan, n_ref=n_ref, method=method, **kw).run(input_state)


def inject_and_evolve(
    code: SubsystemCode, plan: BlockPlan, event: ErrorEvent, input_state: np.ndarray, method: str = "sector", **kw
) -> np.ndarray:
    if plan.code != code:
        raise InvalidPlan("plan was built for a different code")
    n_ref = int(round(np.log2(input_state.shape[0]))) - code.n_qubits
    return BlockRunner(plan, n_ref=n_ref, method=method, **kw).run(input_state, event)


# ---------------------------------------------------------------------------
# inputs


def _project(state: np.ndarray, checks: Iterable[PauliString]) -> np.ndarray:
    for c in checks:
        state = 0.5 * (state + apply_pauli(state, c))
    return state


def encoded_input(code: SubsystemCode, seed: int = 0) -> np.ndarray:
    """A random state projected into the code space (gauge part left random)."""
    rng = np.random.default_rng(seed)
    dim = 2**code.n_qubits
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    psi = _project(psi, code.stabilizer_gens)
    return psi / np.linalg.norm(psi)


def bell_input(code: SubsystemCode, seed: int = 0) -> np.ndarray:
    """Code qubits plus one reference qubit per logical qubit, maximally entangled.

    The projection is onto the stabilizers and ``Lx_k (x) X_ref_k``,
    ``Lz_k (x) Z_ref_k``; the gauge subsystem is left in a random state.
    """
    n, k = code.n_qubits, code.n_logical
    rng = np.random.default_rng(seed)
    dim = 2 ** (n + k)
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    checks = [_pad(s, n + k) for s in code.stabilizer_gens]
    for j, (lx, lz) in enumerate(zip(code.logical_x, code.logical_z)):
        checks.append(lx.tensor(PauliString.single(k, j, "X")))
        checks.append(lz.tensor(PauliString.single(k, j, "Z")))
    psi = _project(psi, checks)
    return psi / np.linalg.norm(psi)


# ---------------------------------------------------------------------------
# verdicts


AMBIGUITY_THRESHOLD = 0.9


@dataclass
class Verdict:
    """Classification of an output state.

    ``correctable`` refers to the dominant error class.  ``uncorrectable_weight``
    is the total weight of all classes the single-error decoder cannot undo,
    however small; ``classes`` lists every class as (weight, lightest
    representative, per-block weights) in decreasing weight.
    """

    correctable: bool
    residual: PauliString
    residual_weight_per_block: list[int]
    syndrome: Syndrome
    dominance: float
    uncorrectable_weight: float = 0.0
    classes: list[tuple[float, PauliString, tuple[int, ...]]] = field(default_factory=list)

    @property
    def ambiguous(self) -> bool:
        """Dominance below 0.9 with a non-negligible uncorrectable share.

        A split between several correctable classes (an error caught halfway
        through a rotation) is reported as ``mixed`` but is not ambiguous.
        """
        return self.dominance < AMBIGUITY_THRESHOLD and self.uncorrectable_weight > 1 - AMBIGUITY_THRESHOLD

    @property
    def flag(self) -> str:
        if not self.correctable:
            return "violation"
        if self.ambiguous:
            return "ambiguous"
        return "mixed" if self.dominance < AMBIGUITY_THRESHOLD else "ok"


def _block_table(block: SubsystemCode, max_weight: int = 2) -> dict[tuple[int, ...], PauliString]:
    """Lightest local Pauli for every (syndrome, logical) class reachable within ``max_weight``."""
    checks = list(block.stabilizer_gens) + list(block.logical_x) + list(block.logical_z)
    table: dict[tuple[int, ...], PauliString] = {}
    for p in iter_paulis(block.n_qubits, max_weight):
        key = tuple(int(not commutes(p, c)) for c in checks)
        table.setdefault(key, p)
    return table


_GATES = {
    "h": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "s": np.diag([1, 1j]),
    "cx": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
}


def _apply_gate_inplace(view: np.ndarray, name: str, qs: tuple[int, ...]) -> None:
    """Apply one of ``_GATES`` in place to a state reshaped to ``(2,) * n``."""
    def at(**fixed):
        idx = [slice(None)] * view.ndim
        for q, b in fixed.items():
            idx[int(q[1:])] = b
        return tuple(idx)

    if name == "h":
        q = f"q{qs[0]}"
        a, b = view[at(**{q: 0})].copy(), view[at(**{q: 1})].copy()
        view[at(**{q: 0})] = (a + b) / np.sqrt(2)
        view[at(**{q: 1})] = (a - b) / np.sqrt(2)
    elif name == "s":
        view[at(**{f"q{qs[0]}": 1})] *= 1j
    elif name == "cz":
        view[at(**{f"q{qs[0]}": 1, f"q{qs[1]}": 1})] *= -1
    elif name == "cx":
        c, t = f"q{qs[0]}", f"q{qs[1]}"
        tmp = view[at(**{c: 1, t: 0})].copy()
        view[at(**{c: 1, t: 0})] = view[at(**{c: 1, t: 1})]
        view[at(**{c: 1, t: 1})] = tmp
    else:
        raise ValueError(name)


class CheckDiagonalizer:
    """Clifford circuit ``C`` with ``C S_i C^dag = sign_i Z_{pivot_i}`` for commuting checks ``S_i``.

    The joint eigenvalue distribution of the checks on a state is then the
    marginal distribution of the pivot bits of ``C |psi>``.
    """

    def __init__(self, checks: Sequence[PauliString]):
        rows = list(checks)
        n = rows[0].n_qubits
        self.n = n
        self.gates: list[tuple[str, tuple[int, ...]]] = []
        self.pivots: list[int] = []

        def apply(name: str, qs: tuple[int, ...]) -> None:
            self.gates.append((name, qs))
            rows[:] = [conjugate_pauli(r, _GATES[name], qs) for r in rows]

        for i in range(len(rows)):
            free = [q for q in range(n) if q not in self.pivots]
            xs = [q for q in free if rows[i].x_bits[q]]
            if xs:
                q = xs[0]
                for t in xs[1:]:
                    apply("cx", (q, t))
                if rows[i].z_bits[q]:
                    apply("s", (q,))
                for r in range(n):
                    if r != q and rows[i].z_bits[r]:
                        apply("cz", (q, r))
                apply("h", (q,))
            else:
                zs = [q for q in free if rows[i].z_bits[q]]
                if not zs:
                    raise ValueError("checks are not independent")
                q = zs[0]
                for c in zs[1:]:
                    apply("cx", (c, q))
                for p in self.pivots:
                    if rows[i].z_bits[p]:
                        apply("cx", (p, q))
            self.pivots.append(q)
        self.signs = []
        for r, q in zip(rows, self.pivots):
            if r.unsigned() != PauliString.single(n, q, "Z") or r.phase not in (0, 2):
                raise ValueError("checks do not commute")
            self.signs.append(1 - r.phase)

    def marginal(self, state: np.ndarray) -> np.ndarray:
        """``p[b]`` over pivot bits (first pivot most significant); bit 1 = eigenvalue ``-sign``."""
        view = state.copy().reshape([2] * self.n)
        for name, qs in self.gates:
            _apply_gate_inplace(view, name, qs)
        probs = np.abs(view) ** 2
        rest = [q for q in range(self.n) if q not in self.pivots]
        probs = probs.transpose(self.pivots + rest).reshape(2 ** len(self.pivots), -1).sum(axis=1)
        return probs


class VerdictContext:
    """Checks that resolve an output state into error classes modulo the gauge group.

    For each block: its stabilizer generators and ``L (x) R`` for the block's
    bare logical pair, where ``R`` acts on the reference qubits and is read off
    the ideal reference state.  Signs come from that state too, so only the
    unsigned operators are needed.
    """

    def __init__(self, code: SubsystemCode, reference_state: np.ndarray, n_ref: int, max_weight: int = 2):
        self.code = code
        self.n_ref = n_ref
        self.n_total = code.n_qubits + n_ref
        self.reference = reference_state
        self._diag: CheckDiagonalizer | None = None
        blocks = [code.block_code(k) for k in range(len(code.blocks))]
        ranks = sum(gf2_rank(b.group_matrix()) for b in blocks)
        if ranks != gf2_rank(code.group_matrix()):
            raise ValueError("the code's group does not factor over its blocks")
        self.blocks = blocks
        self.checks: list[PauliString] = []
        self.signs: list[float] = []
        self.block_slices: list[slice] = []
        self.tables = []
        for k, b in enumerate(blocks):
            qubits = code.blocks[k]
            start = len(self.checks)
            local_ops = list(b.stabilizer_gens)
            for s in local_ops:
                self.checks.append(_pad(s.embed(code.n_qubits, qubits), self.n_total))
            for lop in list(b.logical_x) + list(b.logical_z):
                full = _pad(lop.embed(code.n_qubits, qubits), self.n_total)
                self.checks.append(self._attach_reference(full))
            self.block_slices.append(slice(start, len(self.checks)))
            self.tables.append(_block_table(b, max_weight))
        for c in self.checks:
            e = expectation(reference_state, c)
            if abs(abs(e) - 1) > 1e-6:
                raise ValueError(f"reference state is not an eigenstate of {c.label} ({e:.3g})")
            self.signs.append(float(np.sign(e.real)))

    def _attach_reference(self, lop: PauliString) -> PauliString:
        n = self.code.n_qubits
        best, best_val = None, 0.0
        for syms in itertools.product("IXYZ", repeat=self.n_ref):
            ref = PauliString.identity(n).tensor(PauliString.from_label("".join(syms))) if self.n_ref else None
            op = lop * ref if ref is not None else lop
            val = abs(expectation(self.reference, op))
            if val > best_val:
                best, best_val = op, val
        if best_val < 1 - 1e-6:
            raise ValueError(f"no reference partner for logical {lop.label}")
        return best.unsigned() if best.is_hermitian else best

    def classes(self, state: np.ndarray, prune: float = 1e-14) -> dict[tuple[int, ...], float]:
        """Weight of ``state`` in each joint eigenspace of the checks (bit 1 = flipped sign)."""
        if self._diag is None:
            self._diag = CheckDiagonalizer(self.checks)
        d = self._diag
        probs = d.marginal(state)
        # flip bit of check i: its pivot bit, xored when the Clifford sign differs from the reference sign
        offset = np.array([int(sc != sr) for sc, sr in zip(d.signs, self.signs)], dtype=np.int64)
        m = len(d.pivots)
        out = {}
        for idx in np.nonzero(probs > prune)[0]:
            bits = [(int(idx) >> (m - 1 - i)) & 1 for i in range(m)]
            out[tuple(int(b ^ o) for b, o in zip(bits, offset))] = float(probs[idx])
        return out

    def classes_by_projection(self, state: np.ndarray, prune: float = 1e-14) -> dict[tuple[int, ...], float]:
        """Same as :meth:`classes` by repeated projection; slow, kept as a cross-check."""
        out: dict[tuple[int, ...], float] = {}
        checks = list(zip(self.checks, self.signs))

        def descend(v: np.ndarray, key: tuple[int, ...]) -> None:
            if len(key) == len(checks):
                out[key] = float(np.vdot(v, v).real)
                return
            c, sign = checks[len(key)]
            same = 0.5 * (v + sign * apply_pauli(v, c))
            flip = v - same
            for bit, w in ((0, same), (1, flip)):
                if float(np.vdot(w, w).real) > prune:
                    descend(w, key + (bit,))

        descend(state, ())
        return out

    def resolve(self, key: tuple[int, ...]) -> tuple[PauliString, tuple[int, ...]]:
        """Lightest representative of a class, block by block (weight 3 means none within the cap)."""
        n = self.code.n_qubits
        rep = PauliString.identity(n)
        weights = []
        for b, (sl, table) in enumerate(zip(self.block_slices, self.tables)):
            local = table.get(tuple(key[sl]))
            if local is None:
                weights.append(table_cap(table) + 1)
                continue
            weights.append(local.weight)
            rep = rep * local.embed(n, self.code.blocks[b])
        return rep.unsigned(), tuple(weights)


def table_cap(table: dict) -> int:
    return max(p.weight for p in table.values())


def verdict(ctx: VerdictContext, actual_state: np.ndarray) -> Verdict:
    """Classify ``actual_state`` against the context's reference.

    The state is split into error classes modulo the gauge group.  The
    dominant class decides ``correctable``: its lightest representative must
    have weight at most one in every block and be undone by each block's
    single-error decoder.
    """
    weights = ctx.classes(actual_state)
    total = sum(weights.values())
    classes = []
    bad = 0.0
    for key, w in sorted(weights.items(), key=lambda kv: -kv[1]):
        rep, bw = ctx.resolve(key)
        ok = max(bw) <= 1 and _decoder_fixes(ctx, rep)
        if not ok:
            bad += w / total
        classes.append((w / total, rep, bw, ok))
    dom_w, dom_rep, dom_bw, dom_ok = classes[0]
    return Verdict(
        dom_ok,
        dom_rep,
        list(dom_bw),
        syndrome(ctx.code, dom_rep),
        dom_w,
        bad,
        [c[:3] for c in classes],
    )


def _decoder_fixes(ctx: VerdictContext, rep: PauliString) -> bool:
    for b, block in enumerate(ctx.blocks):
        local = rep.restrict(ctx.code.blocks[b]).unsigned()
        try:
            corr = decode_single(block, syndrome(block, local))
        except NotCorrectable:
            return False
        if not block.in_gauge_group(corr * local):
            return False
    return True


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepRow:
    event: ErrorEvent
    verdict: Verdict

    def csv_fields(self) -> list[str]:
        v = self.verdict
        return [
            str(self.event.qubit),
            self.event.pauli,
            f"{self.event.when:.17g}",
            str(self.event.segment_index),
            str(v.correctable).lower(),
            "|".join(str(w) for w in v.residual_weight_per_block),
            f"{v.dominance:.17g}",
            f"{v.uncorrectable_weight:.17g}",
            v.flag,
        ]


CSV_HEADER = ["qubit", "pauli", "when", "segment", "correctable", "block_weights", "dominance", "uncorrectable_weight", "flag"]


def ft_sweep(
    plan: BlockPlan,
    events: Iterable[ErrorEvent],
    seed: int = 0,
    extra: PauliString | None = None,
    checkpoint_every: int = 0,
) -> list[SweepRow]:
    """Run every event against one Bell-reference input and classify the outputs."""
    code = plan.code
    psi0 = bell_input(code, seed)
    n_ref = code.n_logical
    runner = BlockRunner(plan, n_ref=n_ref, checkpoint_every=checkpoint_every)
    ref = runner.ideal(psi0)
    ctx = VerdictContext(plan.final_code, ref, n_ref)
    if checkpoint_every:
        runner.run(psi0)
    rows = []
    for ev in events:
        out = runner.run(psi0, ev, extra=extra)
        rows.append(SweepRow(ev, verdict(ctx, out)))
    return rows


WHEN_GRID = tuple(round(0.1 * k, 10) for k in range(1, 10))


def exhaustive_events(plan: BlockPlan, when_grid: Sequence[float] = WHEN_GRID, segments: Sequence[int] | None = None) -> list[ErrorEvent]:
    segs = range(len(plan.segments)) if segments is None else segments
    return [
        ErrorEvent(q, p, w, k)
        for k in segs
        for q in range(plan.n_qubits)
        for p in "XYZ"
        for w in when_grid
    ]


def sample_events(plan: BlockPlan, n_events: int, seed: int = 0, when_grid: Sequence[float] = WHEN_GRID) -> list[ErrorEvent]:
    """Random events; half of them hit a qubit the segment touches (active or passive)."""
    rng = np.random.default_rng(seed)
    out = []
    for j in range(n_events):
        k = int(rng.integers(len(plan.segments)))
        seg = plan.segments[k]
        if j % 2 == 0:
            pool = sorted(set(seg.active_qubits) | set(seg.passive.support))
        else:
            pool = list(range(plan.n_qubits))
        q = int(pool[rng.integers(len(pool))])
        p = "XYZ"[int(rng.integers(3))]
        w = float(when_grid[int(rng.integers(len(when_grid)))])
        out.append(ErrorEvent(q, p, w, k))
    return out


# ---------------------------------------------------------------------------
# gadgets


def _trivial_register(n: int) -> SubsystemCode:
    code = trivial_code()
    for _ in range(n - 1):
        code = code.tensor(trivial_code())
    return code


def _cnot_block(control: int, target: int, n: int, total_time: float) -> tuple[list[ControlSegment], PauliString]:
    reg = PauliString.identity(n)
    segs = cnot_segments(control, target, reg, None, total_time)
    return segs, PauliString.from_sparse(n, {control: "X", target: "X"})


def _gadget_plan(n: int, ops: list[tuple], total_time: float, label: str) -> BlockPlan:
    code = _trivial_register(n)
    reg = PauliString.identity(n)
    segs, corr = [], []
    sched = SmoothSchedule(total_time)
    for op in ops:
        if op[0] == "rz":
            segs.append(ControlSegment(BasisBlend("Z", "X"), (op[1],), reg, sched))
        else:
            s, c = _cnot_block(op[1], op[2], n, total_time)
            segs += s
            corr.append(c)
    # each CNOT's Pauli correction is applied by _GadgetRunner right after it
    plan = BlockPlan(label, code, segs, [None] * len(segs), [], code, check_groups=False)
    plan.frame_ops = ops  # type: ignore[attr-defined]
    return plan


class _GadgetRunner(BlockRunner):
    """Runs gadget plans with each CNOT's Pauli correction applied right after it."""

    def run_gadget(self, state: np.ndarray, between: dict[int, PauliString] | None = None) -> np.ndarray:
        psi = state
        k = 0
        n = self.n_total
        for i, op in enumerate(self.plan.frame_ops):  # type: ignore[attr-defined]
            if between and i in between:
                psi = apply_pauli(psi, _pad(between[i], n))
            if op[0] == "rz":
                psi = self.evolve_segment(psi, k)
                k += 1
            else:
                for _ in range(4):
                    psi = self.evolve_segment(psi, k)
                    k += 1
                psi = apply_pauli(psi, PauliString.from_sparse(n, {op[1]: "X", op[2]: "X"}))
        return psi


def cat_prep(n: int, total_time: float = 17 * T_D) -> tuple[np.ndarray, float]:
    """Cat state on ``n`` fresh qubits: holonomic RZ on qubit 0, then a CNOT chain.

    Each qubit is a trivial code with stabilizer <Z> and passive factor I, so
    the known dynamical rotation of every leg is compensated.
    """
    if not 1 <= n <= 4:
        raise ValueError("cat_prep supports 1 to 4 qubits")
    ops = [("rz", 0)] + [("cnot", q, q + 1) for q in range(n - 1)]
    plan = _gadget_plan(n, ops, total_time, f"cat{n}")
    runner = _GadgetRunner(plan, compensate=True)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    out = runner.run_gadget(psi)
    cat = np.zeros(2**n, dtype=complex)
    cat[0] = cat[-1] = 1 / np.sqrt(2)
    return out, float(abs(np.vdot(cat, out)) ** 2)


def parity_gadget(
    cat_state: np.ndarray,
    total_time: float = 17 * T_D,
    pair: tuple[int, int] = (0, 1),
    ancilla_error_between: str | None = None,
) -> np.ndarray:
    """Parity of two cat qubits copied onto a fresh ancilla, then measured in Z.

    Returns ``[p0, p1]`` for the ancilla outcome.  ``ancilla_error_between``
    applies a Pauli to the ancilla between the two CNOTs.
    """
    n = int(round(np.log2(cat_state.shape[0])))
    anc = n
    ops = [("cnot", pair[0], anc), ("cnot", pair[1], anc)]
    plan = _gadget_plan(n + 1, ops, total_time, "parity")
    runner = _GadgetRunner(plan, compensate=True)
    psi = np.kron(cat_state, np.array([1.0, 0.0], dtype=complex))
    between = None
    if ancilla_error_between:
        between = {1: PauliString.single(n + 1, anc, ancilla_error_between)}
    out = runner.run_gadget(psi, between)
    probs = np.abs(out.reshape(-1, 2)) ** 2
    p = probs.sum(axis=0)
    return p / p.sum()
