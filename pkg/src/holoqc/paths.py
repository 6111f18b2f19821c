"""Adiabatic control paths: schedules, Hamiltonian families and the gate library.

Every segment describes a full-register Hamiltonian ``-H(t) (x) Gt`` where
``H(t)`` acts on a few *active* qubits and the passive factor ``Gt`` is a Pauli
string on the remaining qubits.  ``H`` is parametrised by a schedule
``s(t)`` running from 0 to 1.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.integrate import quad

from .pauli import PauliString, PauliSum, commutes, pauli_mul

T_D = np.pi / 2
"""Duration of the dynamical X gate (constant Hamiltonian -X); the time unit for sweeps."""

__all__ = [
    "T_D",
    "SmoothSchedule",
    "BasisBlend",
    "ConjugatedRotation",
    "Conditional",
    "ControlSegment",
    "GatePlan",
    "smooth_s",
    "hamiltonian_at",
    "path_rz",
    "path_xs",
    "path_x_benchmark",
    "path_cnot",
    "path_conditional",
    "spectrum_match_alpha",
    "find_correction_frame",
    "CNOT",
    "RZ_TARGET",
    "XS",
]

RZ_TARGET = np.array([[1, -1], [1, 1]], dtype=complex) / np.sqrt(2)
XS = np.array([[0, 1j], [1, 0]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


# ---------------------------------------------------------------------------
# schedules


def _bump(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = (u > 0) & (u < 1)
    out[inside] = np.exp(-1.0 / np.sin(np.pi * u[inside]))
    return out


def _bump_scalar(u: float) -> float:
    if u <= 0.0 or u >= 1.0:
        return 0.0
    return float(np.exp(-1.0 / np.sin(np.pi * u)))


@lru_cache(maxsize=1)
def _bump_norm() -> float:
    val, _ = quad(_bump_scalar, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=200)
    return val


_PANELS = 1024
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


@lru_cache(maxsize=1)
def _bump_table() -> np.ndarray:
    """Cumulative integral of the bump at panel edges on [0, 1]."""
    edges = np.linspace(0.0, 1.0, _PANELS + 1)
    half = 0.5 / _PANELS
    mids = 0.5 * (edges[1:] + edges[:-1])
    nodes = mids[:, None] + half * _GL_X[None, :]
    panel = half * (_bump(nodes) @ _GL_W)
    return np.concatenate([[0.0], np.cumsum(panel)])


def _bump_cumulative(u: np.ndarray) -> np.ndarray:
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    table = _bump_table()
    k = np.minimum((u * _PANELS).astype(np.int64), _PANELS - 1)
    left = k / _PANELS
    half = 0.5 * (u - left)
    nodes = (left + half)[..., None] + half[..., None] * _GL_X
    return table[k] + half * (_bump(nodes) @ _GL_W)


@dataclass(frozen=True)
class SmoothSchedule:
    """Map from physical time to path parameter ``s in [0, 1]``.

    ``kind="bump"`` integrates ``exp(-1/sin(pi u))`` so that every derivative
    of ``s`` vanishes at both ends; ``kind="linear"`` is ``s = t / T``.
    """

    total_time: float
    kind: str = "bump"

    def __post_init__(self) -> None:
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        if self.kind not in ("bump", "linear"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @property
    def normalization(self) -> float:
        """``a`` such that ``y(T) = T``, i.e. ``T`` times the bump integral over [0, 1]."""
        if self.kind == "linear":
            return self.total_time
        return self.total_time * _bump_norm()

    def _check(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * self.total_time
        if np.any(t < -slack) or np.any(t > self.total_time + slack):
            raise ValueError(f"time outside [0, {self.total_time}]")
        return np.clip(t, 0.0, self.total_time)

    def s(self, t) -> np.ndarray:
        """Vectorised ``s(t)``; panel Gauss-Legendre, accurate to about 1e-15."""
        t = self._check(t)
        u = t / self.total_time
        if self.kind == "linear":
            return u
        return _bump_cumulative(u) / _bump_norm()

    def s_quad(self, t: float) -> float:
        """Scalar ``s(t)`` by adaptive quadrature to relative error 1e-12."""
        t = float(self._check(t))
        u = t / self.total_time
        if self.kind == "linear":
            return u
        if u <= 0.0:
            return 0.0
        if u >= 1.0:
            return 1.0
        # integrate over the shorter side for better relative accuracy
        if u <= 0.5:
            val, _ = quad(_bump_scalar, 0.0, u, epsabs=0.0, epsrel=1e-12, limit=200)
            return val / _bump_norm()
        val, _ = quad(_bump_scalar, u, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
        return 1.0 - val / _bump_norm()

    def ds_dt(self, t) -> np.ndarray:
        t = self._check(t)
        if self.kind == "linear":
            return np.full_like(t, 1.0 / self.total_time)
        return _bump(t / self.total_time) / (_bump_norm() * self.total_time)


def smooth_s(t: float, sched: SmoothSchedule) -> float:
    return sched.s_quad(t)


# ---------------------------------------------------------------------------
# Hamiltonian families on the active qubits

PauliLike = Union[PauliSum, PauliString, str]


def _as_sum(p: PauliLike) -> PauliSum:
    return PauliSum.of(p)


def _sum_matrices(p: PauliSum) -> tuple[np.ndarray, np.ndarray]:
    coeffs = np.array([c for c, _ in p.terms])
    mats = np.array([q.to_matrix() for _, q in p.terms])
    return coeffs, mats


def _squares_to_identity(m: np.ndarray) -> bool:
    return np.allclose(m @ m, np.eye(m.shape[0]), atol=1e-12)


def _anticommute(a: np.ndarray, b: np.ndarray) -> bool:
    return np.allclose(a @ b + b @ a, 0, atol=1e-12)


@dataclass(frozen=True)
class BasisBlend:
    """``H(s) = f(s) A + g(s) B`` with anticommuting involutions ``A`` and ``B``.

    ``profile="trig"`` uses ``f = cos(pi s / 2)``, ``g = sin(pi s / 2)`` and keeps
    the spectrum at exactly +-1.  ``profile="linear"`` uses ``f = 1 - s``,
    ``g = s``; the spectrum then dips to +-1/sqrt(2) at ``s = 1/2``.
    """

    a: PauliSum
    b: PauliSum
    profile: str = "trig"

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _as_sum(self.a))
        object.__setattr__(self, "b", _as_sum(self.b))
        if self.a.n_qubits != self.b.n_qubits:
            raise ValueError("A and B act on different numbers of qubits")
        if self.profile not in ("trig", "linear"):
            raise ValueError(f"unknown profile {self.profile!r}")
        ma, mb = self.a.to_matrix(), self.b.to_matrix()
        if not (_squares_to_identity(ma) and _squares_to_identity(mb)):
            raise ValueError("A and B must square to the identity")
        if not _anticommute(ma, mb):
            raise ValueError("A and B must anticommute")

    @property
    def n_active(self) -> int:
        return self.a.n_qubits

    def profiles(self, s):
        s = np.asarray(s, dtype=float)
        if self.profile == "trig":
            return np.cos(np.pi * s / 2), np.sin(np.pi * s / 2)
        return 1.0 - s, s

    def coefficients(self, s) -> tuple[np.ndarray, tuple[PauliString, ...]]:
        f, g = self.profiles(s)
        ca = [c * f for c, _ in self.a.terms]
        cb = [c * g for c, _ in self.b.terms]
        paulis = tuple(p for _, p in self.a.terms) + tuple(p for _, p in self.b.terms)
        return np.array(ca + cb), paulis

    def ideal(self) -> np.ndarray:
        """Adiabatic holonomy in the fixed frame: ``(I + B A) / sqrt(2)``."""
        ma, mb = self.a.to_matrix(), self.b.to_matrix()
        return (np.eye(ma.shape[0]) + mb @ ma) / np.sqrt(2)

    def describe(self) -> dict:
        return {"form": "basis_blend", "A": self.a.to_json(), "B": self.b.to_json(), "profile": self.profile}


@dataclass(frozen=True)
class ConjugatedRotation:
    """``H(s) = exp(i phi s G) B exp(-i phi s G)`` for ``G`` anticommuting with ``B``.

    Expanded this is ``cos(2 phi s) B + sin(2 phi s) (-i B G)``.  The frame
    rotation is itself the holonomy, so the ideal gate is ``exp(i phi G)``.
    """

    base: PauliSum
    generator: PauliString
    angle: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "base", _as_sum(self.base))
        gen = self.generator
        if isinstance(gen, str):
            gen = PauliString.from_label(gen)
        object.__setattr__(self, "generator", gen)
        if not gen.is_hermitian or gen.phase != 0:
            raise ValueError("generator must be an unsigned Hermitian Pauli")
        for _, p in self.base.terms:
            if commutes(p, gen):
                raise ValueError("generator must anticommute with every base term")
        if not _squares_to_identity(self.base.to_matrix()):
            raise ValueError("base must square to the identity")

    @property
    def n_active(self) -> int:
        return self.base.n_qubits

    @cached_property
    def _partner(self) -> PauliSum:
        terms = []
        for c, p in self.base.terms:
            q = pauli_mul(p, self.generator).with_phase(pauli_mul(p, self.generator).phase + 3)
            # q = -i P G is Hermitian: phase is 0 or 2
            sign = 1.0 if q.phase == 0 else -1.0
            terms.append((c * sign, q.unsigned()))
        return PauliSum(tuple(terms))

    def coefficients(self, s) -> tuple[np.ndarray, tuple[PauliString, ...]]:
        s = np.asarray(s, dtype=float)
        c, sn = np.cos(2 * self.angle * s), np.sin(2 * self.angle * s)
        coeffs = [k * c for k, _ in self.base.terms] + [k * sn for k, _ in self._partner.terms]
        paulis = tuple(p for _, p in self.base.terms) + tuple(p for _, p in self._partner.terms)
        return np.array(coeffs), paulis

    def ideal(self) -> np.ndarray:
        g = self.generator.to_matrix()
        return np.cos(self.angle) * np.eye(g.shape[0]) + 1j * np.sin(self.angle) * g

    def describe(self) -> dict:
        return {
            "form": "conjugated_rotation",
            "base": self.base.to_json(),
            "generator": self.generator.label,
            "angle": self.angle,
        }


def spectrum_match_alpha(f: float, g: float) -> float:
    """Rescaling that gives ``f A + g B`` the spectrum +-1."""
    r2 = f * f + g * g
    if not r2 > 0:
        raise ValueError("f = g = 0 closes the gap")
    return 1.0 / np.sqrt(r2)


@dataclass(frozen=True)
class Conditional:
    """Controlled path ``|0><0| (x) G1 + alpha(s) |1><1| (x) H_O(s)``.

    The control is the first active qubit.  ``alpha`` rescales the operation's
    Hamiltonian so that both control sectors share the spectrum +-1.
    """

    static: PauliSum
    op: BasisBlend

    def __post_init__(self) -> None:
        object.__setattr__(self, "static", _as_sum(self.static))
        if self.static.n_qubits != self.op.n_active:
            raise ValueError("static operator and operation act on different registers")
        if not _squares_to_identity(self.static.to_matrix()):
            raise ValueError("static operator must square to the identity")

    @property
    def n_active(self) -> int:
        return 1 + self.op.n_active

    def alpha(self, s) -> np.ndarray:
        f, g = self.op.profiles(s)
        r2 = np.asarray(f * f + g * g)
        if np.any(r2 <= 0):
            raise ValueError("operation path closes the gap")
        return 1.0 / np.sqrt(r2)

    def coefficients(self, s) -> tuple[np.ndarray, tuple[PauliString, ...]]:
        s = np.asarray(s, dtype=float)
        alpha = self.alpha(s)
        oc, ops = self.op.coefficients(s)
        one = np.ones_like(s)
        coeffs, paulis = [], []
        for c, p in self.static.terms:
            for ctrl, sign in (("I", 1.0), ("Z", 1.0)):
                coeffs.append(0.5 * sign * c * one)
                paulis.append(PauliString.from_label(ctrl).tensor(p))
        for c, p in zip(oc, ops):
            for ctrl, sign in (("I", 1.0), ("Z", -1.0)):
                coeffs.append(0.5 * sign * alpha * c)
                paulis.append(PauliString.from_label(ctrl).tensor(p))
        return np.array(coeffs), tuple(paulis)

    def ideal(self) -> np.ndarray:
        d = 2**self.op.n_active
        out = np.zeros((2 * d, 2 * d), dtype=complex)
        out[:d, :d] = np.eye(d)
        out[d:, d:] = self.op.ideal()
        return out

    def describe(self) -> dict:
        return {"form": "conditional", "static": self.static.to_json(), "op": self.op.describe()}


Form = Union[BasisBlend, ConjugatedRotation, Conditional]


# ---------------------------------------------------------------------------
# segments and plans


@dataclass(frozen=True)
class ControlSegment:
    """One adiabatic leg ``-H(t) (x) Gt`` on a register of ``passive.n_qubits`` qubits."""

    form: Form
    active_qubits: tuple[int, ...]
    passive: PauliString
    schedule: SmoothSchedule

    def __post_init__(self) -> None:
        object.__setattr__(self, "active_qubits", tuple(int(q) for q in self.active_qubits))
        if len(self.active_qubits) != self.form.n_active:
            raise ValueError("active qubit count does not match the Hamiltonian form")
        if len(set(self.active_qubits)) != len(self.active_qubits):
            raise ValueError("repeated active qubit")
        n = self.passive.n_qubits
        if any(not 0 <= q < n for q in self.active_qubits):
            raise ValueError("active qubit outside the register")
        if set(self.active_qubits) & set(self.passive.support):
            raise ValueError("active and passive supports overlap")
        if not self.passive.is_hermitian:
            raise ValueError("passive factor must be Hermitian")

    @property
    def duration(self) -> float:
        return self.schedule.total_time

    @property
    def n_register(self) -> int:
        return self.passive.n_qubits

    @property
    def active_dim(self) -> int:
        return 2 ** len(self.active_qubits)

    def with_schedule(self, schedule: SmoothSchedule) -> "ControlSegment":
        return ControlSegment(self.form, self.active_qubits, self.passive, schedule)

    def pauli_terms(self, t) -> tuple[np.ndarray, tuple[PauliString, ...]]:
        """Coefficients (one row per term) and active-space Pauli strings of ``H(t)``."""
        return self.form.coefficients(self.schedule.s(t))

    @cached_property
    def _term_matrices(self) -> np.ndarray:
        _, paulis = self.form.coefficients(np.array([0.0]))
        return np.array([p.to_matrix() for p in paulis])

    def operators_at_s(self, s) -> np.ndarray:
        """Stack of active-space matrices ``H(s)`` for an array of ``s`` values."""
        coeffs, _ = self.form.coefficients(np.atleast_1d(np.asarray(s, dtype=float)))
        return np.einsum("kn,kij->nij", coeffs, self._term_matrices)

    def operators_at(self, t) -> np.ndarray:
        return self.operators_at_s(self.schedule.s(np.atleast_1d(t)))

    def start_operator(self) -> np.ndarray:
        return self.operators_at_s([0.0])[0]

    def end_operator(self) -> np.ndarray:
        return self.operators_at_s([1.0])[0]

    def ideal(self) -> np.ndarray:
        return self.form.ideal()

    def to_json(self) -> dict:
        return {
            **self.form.describe(),
            "active_qubits": list(self.active_qubits),
            "passive": self.passive.label,
            "T_h": self.duration,
            "schedule": {"kind": self.schedule.kind, "normalization": self.schedule.normalization},
        }


def hamiltonian_at(seg: ControlSegment, t: float) -> tuple[np.ndarray, PauliString]:
    """Active-space ``H(t)`` plus the passive factor; the full operator is ``-H (x) Gt``."""
    if not 0 <= t <= seg.duration * (1 + 1e-12):
        raise ValueError(f"t={t} outside [0, {seg.duration}]")
    return seg.operators_at_s([seg.schedule.s_quad(t)])[0], seg.passive


def embed_operator(m: np.ndarray, qubits: Sequence[int], within: Sequence[int]) -> np.ndarray:
    """Lift an operator on ``qubits`` to the ordered register ``within`` (identity elsewhere)."""
    within = list(within)
    k = len(within)
    pos = [within.index(q) for q in qubits]
    rest = [j for j in range(k) if j not in pos]
    full = np.kron(m, np.eye(2 ** len(rest)))
    order = pos + rest
    perm = np.argsort(order)
    t = full.reshape([2] * (2 * k))
    t = t.transpose(list(perm) + [k + p for p in perm])
    return t.reshape(2**k, 2**k)


@dataclass(frozen=True)
class GatePlan:
    """Ordered segments on data qubits ``0..n_qubits-1`` plus Pauli corrections.

    ``global_phase`` records the phase convention of ``target``: the composed
    ideal holonomy equals ``global_phase * target`` up to numerical error.
    """

    label: str
    n_qubits: int
    segments: tuple[ControlSegment, ...]
    target: np.ndarray = field(compare=False)
    corrections: tuple[PauliString, ...] = ()
    global_phase: complex = 1.0
    notes: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        object.__setattr__(self, "corrections", tuple(self.corrections))
        for seg in self.segments:
            if any(q >= self.n_qubits for q in seg.active_qubits):
                raise ValueError("segment acts outside the data qubits")
        for c in self.corrections:
            if c.n_qubits != self.n_qubits:
                raise ValueError("correction has the wrong size")

    @property
    def data_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n_qubits))

    def segment_ideals(self) -> list[np.ndarray]:
        return [embed_operator(s.ideal(), s.active_qubits, self.data_qubits) for s in self.segments]

    def holonomy_product(self) -> np.ndarray:
        u = np.eye(2**self.n_qubits, dtype=complex)
        for m in self.segment_ideals():
            u = m @ u
        return u

    def correction_unitary(self) -> np.ndarray:
        u = np.eye(2**self.n_qubits, dtype=complex)
        for c in self.corrections:
            u = c.to_matrix() @ u
        return u

    def ideal_unitary(self) -> np.ndarray:
        """Composed ideal holonomies followed by the recorded corrections."""
        return self.correction_unitary() @ self.holonomy_product()

    def chaining_mismatch(self) -> float:
        """Largest endpoint mismatch between each segment and its predecessor.

        The predecessor of a segment is the most recent earlier segment whose
        active qubits form a subset of, and overlap, the current ones.
        """
        worst = 0.0
        for k, seg in enumerate(self.segments):
            cur = set(seg.active_qubits)
            for prev in reversed(self.segments[:k]):
                ps = set(prev.active_qubits)
                if ps <= cur and ps & cur:
                    end = embed_operator(prev.end_operator(), prev.active_qubits, seg.active_qubits)
                    worst = max(worst, float(np.abs(end - seg.start_operator()).max()))
                    break
        return worst

    def with_duration(self, total_time: float) -> "GatePlan":
        segs = tuple(
            s.with_schedule(SmoothSchedule(total_time, s.schedule.kind)) for s in self.segments
        )
        return GatePlan(
            self.label, self.n_qubits, segs, self.target, self.corrections, self.global_phase, self.notes
        )

    def to_json(self) -> str:
        doc = {
            "label": self.label,
            "n_qubits": self.n_qubits,
            "segments": [s.to_json() for s in self.segments],
            "corrections": [c.label for c in self.corrections],
            "global_phase": [float(np.real(self.global_phase)), float(np.imag(self.global_phase))],
            "notes": list(self.notes),
        }
        return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# gate library


def _register(n_data: int, passive: PauliString | str | None) -> PauliString:
    """Passive factor on the register ``data + extra``; default is Z on one extra qubit."""
    if passive is None:
        passive = "Z"
    if isinstance(passive, str):
        passive = PauliString.from_label(passive)
    return PauliString.identity(n_data).tensor(passive)


def _sched(total_time: float, kind: str) -> SmoothSchedule:
    return SmoothSchedule(total_time, kind)


H45 = PauliSum.parse([(1 / np.sqrt(2), "X"), (1 / np.sqrt(2), "Y")])


def path_rz(
    total_time: float = 50 * T_D,
    passive: PauliString | str | None = None,
    schedule: str = "bump",
    profile: str = "trig",
) -> GatePlan:
    """Single leg Z -> X, giving ``(1/sqrt 2)[[1, -1], [1, 1]]`` (Hadamard times Z)."""
    reg = _register(1, passive)
    seg = ControlSegment(BasisBlend("Z", "X", profile), (0,), reg, _sched(total_time, schedule))
    return GatePlan("rz", 1, (seg,), RZ_TARGET)


def xs_legs(
    qubit: int, reg: PauliString, total_time: float, schedule: str = "bump"
) -> tuple[ControlSegment, ControlSegment]:
    """Two legs Z -> (X+Y)/sqrt2 -> -Z on ``qubit``; their product is ``e^{i pi/4} X S``."""
    s = _sched(total_time, schedule)
    leg1 = ControlSegment(BasisBlend("Z", H45), (qubit,), reg, s)
    leg2 = ControlSegment(BasisBlend(H45, "-Z"), (qubit,), reg, s)
    return leg1, leg2


def path_xs(
    total_time: float = 50 * T_D, passive: PauliString | str | None = None, schedule: str = "bump"
) -> GatePlan:
    reg = _register(1, passive)
    return GatePlan("xs", 1, xs_legs(0, reg, total_time, schedule), XS, global_phase=np.exp(1j * np.pi / 4))


def path_x_benchmark(
    total_time: float = 17 * T_D, passive: PauliString | str | None = None, schedule: str = "bump"
) -> GatePlan:
    """Rotating-frame path ``exp(i s pi/2 X) Z exp(-i s pi/2 X)``; ideal gate ``iX``."""
    reg = _register(1, passive)
    form = ConjugatedRotation("Z", PauliString.from_label("X"), np.pi / 2)
    seg = ControlSegment(form, (0,), reg, _sched(total_time, schedule))
    return GatePlan("x-bench", 1, (seg,), PauliString.from_label("X").to_matrix(), global_phase=1j)


def find_correction_frame(u: np.ndarray, target: np.ndarray, tol: float = 1e-9):
    """Brute-force the Pauli ``P`` and phase with ``P u = phase * target``.

    Returns ``(P, phase)`` for the first match in I/X/Y/Z lexicographic order,
    or ``None`` when no Pauli correction exists.
    """
    n = int(round(np.log2(u.shape[0])))
    for syms in itertools.product("IXYZ", repeat=n):
        p = PauliString.from_label("".join(syms))
        v = p.to_matrix() @ u
        ov = np.trace(target.conj().T @ v) / u.shape[0]
        if abs(abs(ov) - 1) < tol and np.allclose(v, ov * target, atol=1e-8):
            return p, complex(ov)
    return None


def cnot_segments(
    control: int,
    target: int,
    reg: PauliString,
    passive_pair: PauliString | None,
    total_time: float,
    schedule: str = "bump",
    phase_last: bool = False,
) -> list[ControlSegment]:
    """Legs of the holonomic CNOT on a register.

    The inverse phase gate on the control comes from the XS legs (a Pauli
    correction is recorded by the caller).  The target is moved Z -> Y, then
    the two-qubit leg I(x)Y -> Z(x)Z runs.  ``passive_pair`` overrides the
    passive factor of the two-qubit leg.
    """
    s = _sched(total_time, schedule)
    pair = passive_pair if passive_pair is not None else reg
    legs_c = list(xs_legs(control, reg, total_time, schedule))
    leg_t = ControlSegment(BasisBlend("Z", "Y"), (target,), reg, s)
    leg_2 = ControlSegment(BasisBlend("IY", "ZZ"), (control, target), pair, s)
    if phase_last:
        return [leg_t, leg_2] + legs_c
    return legs_c + [leg_t, leg_2]


_CNOT_FRAME = {False: "XX", True: "YI"}


def path_cnot(
    total_time: float = 50 * T_D,
    passive: PauliString | str | None = None,
    schedule: str = "bump",
    phase_last: bool = False,
) -> GatePlan:
    """Holonomic CNOT on (control, target) = (0, 1).

    Corrections found by :func:`find_correction_frame`: ``X_c X_t`` when the
    control phase legs run first, ``Y_c`` when they run last.
    """
    reg = _register(2, passive)
    segs = cnot_segments(0, 1, reg, None, total_time, schedule, phase_last)
    probe = GatePlan("cnot", 2, tuple(segs), CNOT)
    corr = PauliString.from_label(_CNOT_FRAME[phase_last])
    phase = np.trace(CNOT.conj().T @ corr.to_matrix() @ probe.holonomy_product()) / 4
    return GatePlan(
        "cnot",
        2,
        tuple(segs),
        CNOT,
        corrections=(corr,),
        global_phase=complex(phase),
        notes=("phase-last" if phase_last else "phase-first",),
    )


def path_conditional(
    op_plan: GatePlan, static: PauliSum | str | None = None, passive: PauliString | str | None = None
) -> GatePlan:
    """Control-qubit extension of a single-qubit, single-leg BasisBlend plan.

    The control is qubit 0 and the data qubit is qubit 1.  With control |0>
    the data Hamiltonian stays at ``static`` (the operation's start operator
    by default); with control |1> it follows ``alpha(s) H_O(s)``.  The relative
    geometric phase between the control sectors is zero for these paths, but
    at finite duration the two sectors pick up different small adiabatic
    phases; :func:`holoqc.holonomy.analyze_plan` measures that phase and
    removes it with a phase gate on the control.
    """
    if op_plan.n_qubits != 1 or len(op_plan.segments) != 1:
        raise ValueError("path_conditional expects a single-qubit, single-leg plan")
    seg = op_plan.segments[0]
    if not isinstance(seg.form, BasisBlend):
        raise ValueError("conditional construction needs a BasisBlend operation")
    form = Conditional(static if static is not None else seg.form.a, seg.form)
    # the alpha rescaling fails loudly if the operation path closes the gap
    form.alpha(np.linspace(0, 1, 257))
    reg = _register(2, passive)
    new = ControlSegment(form, (0, 1), reg, seg.schedule)
    target = np.zeros((4, 4), dtype=complex)
    target[:2, :2] = np.eye(2)
    target[2:, 2:] = op_plan.target
    return GatePlan(
        f"c-{op_plan.label}",
        2,
        (new,),
        target,
        notes=("relative control-sector phase corrected on the control",),
    )
