"""Round scheduling of transversal holonomic segments.

A segment on qubit ``q`` with passive factor ``Gt`` occupies ``{q} | supp(Gt)``.
Two conflict models are supported:

``"overlap"``
    segments conflict whenever their occupancies intersect;
``"shared-passive"``
    a segment's active qubit may not be touched by any other segment, but two
    segments may share passive qubits when their passive factors commute
    (the summed Hamiltonian terms then commute and evolve independently).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .pauli import GroupMembership, PauliString, SubsystemCode, commutes

__all__ = [
    "InfeasibleAssignment",
    "Schedule",
    "conflict_graph",
    "chromatic_rounds",
    "transversal_schedule",
    "gauge_candidates",
    "best_transversal_schedule",
    "PeriodicSchedule",
]

MODELS = ("overlap", "shared-passive")
EXACT_LIMIT = 16


class InfeasibleAssignment(ValueError):
    """A passive factor acts on its own segment's active qubit, or indices are out of range."""


@dataclass(frozen=True)
class Schedule:
    rounds: tuple[tuple[int, ...], ...]
    slowdown: Fraction
    assignment: tuple[tuple[int, PauliString], ...]
    model: str
    exact: bool


def _occupancy(q: int, g: PauliString) -> frozenset[int]:
    return frozenset(g.support) | {q}


def _conflict(model: str, q1: int, g1: PauliString, q2: int, g2: PauliString) -> bool:
    if model == "overlap":
        return bool(_occupancy(q1, g1) & _occupancy(q2, g2))
    if q1 == q2 or q1 in g2.support or q2 in g1.support:
        return True
    return not commutes(g1, g2)


def conflict_graph(assignment: Mapping[int, PauliString], model: str = "overlap") -> dict[int, set[int]]:
    if model not in MODELS:
        raise ValueError(f"unknown conflict model {model!r}")
    qs = sorted(assignment)
    adj = {q: set() for q in qs}
    for a, b in itertools.combinations(qs, 2):
        if _conflict(model, a, assignment[a], b, assignment[b]):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def _greedy(adj: dict[int, set[int]]) -> dict[int, int]:
    """DSATUR colouring."""
    color: dict[int, int] = {}
    while len(color) < len(adj):
        v = max(
            (v for v in adj if v not in color),
            key=lambda v: (len({color[u] for u in adj[v] if u in color}), len(adj[v]), -v),
        )
        used = {color[u] for u in adj[v] if u in color}
        color[v] = next(c for c in itertools.count() if c not in used)
    return color


def _colorable(adj: dict[int, set[int]], k: int) -> dict[int, int] | None:
    order = sorted(adj, key=lambda v: (-len(adj[v]), v))
    color: dict[int, int] = {}

    def place(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        used = {color[u] for u in adj[v] if u in color}
        # symmetry break: never open more than one new colour
        top = max(color.values(), default=-1) + 1
        for c in range(min(k, top + 1)):
            if c not in used:
                color[v] = c
                if place(i + 1):
                    return True
                del color[v]
        return False

    return dict(color) if place(0) else None


def chromatic_rounds(adj: dict[int, set[int]]) -> tuple[dict[int, int], bool]:
    """Minimal colouring (exact up to ``EXACT_LIMIT`` vertices, DSATUR above)."""
    if not adj:
        return {}, True
    best = _greedy(adj)
    if len(adj) > EXACT_LIMIT:
        return best, False
    k = max(best.values()) + 1
    while k > 1:
        trial = _colorable(adj, k - 1)
        if trial is None:
            break
        best, k = trial, k - 1
    return best, True


def _validate(n: int, assignment: Mapping[int, PauliString]) -> None:
    for q, g in assignment.items():
        if not 0 <= q < n:
            raise InfeasibleAssignment(f"qubit {q} outside the code")
        if g.n_qubits != n:
            raise InfeasibleAssignment(f"passive factor for qubit {q} has the wrong size")
        if q in g.support:
            raise InfeasibleAssignment(f"passive factor {g.label} acts on its own qubit {q}")


def transversal_schedule(
    code: SubsystemCode, gauge_choice: Mapping[int, PauliString], model: str = "overlap"
) -> Schedule:
    """Fewest conflict-free rounds for one segment per qubit of ``gauge_choice``.

    ``gauge_choice`` maps each qubit to the passive factor of its segment.
    The slowdown is the number of rounds relative to running every segment at once.
    """
    _validate(code.n_qubits, gauge_choice)
    adj = conflict_graph(gauge_choice, model)
    color, exact = chromatic_rounds(adj)
    n_rounds = max(color.values(), default=0) + 1
    rounds = tuple(tuple(sorted(q for q, c in color.items() if c == r)) for r in range(n_rounds))
    return Schedule(
        rounds,
        Fraction(n_rounds, 1),
        tuple(sorted(gauge_choice.items())),
        model,
        exact,
    )


def gauge_candidates(code: SubsystemCode, start: str = "Z", max_weight: int = 1) -> dict[int, list[PauliString]]:
    """All passive factors of weight ``<= max_weight`` that complete ``start_q`` into the group.

    When ``start_q`` alone is in the group the identity is the only candidate.
    """
    n = code.n_qubits
    group = GroupMembership(code.group_matrix())
    out: dict[int, list[PauliString]] = {}
    for q in range(n):
        fixed = PauliString.single(n, q, start)
        if group.contains(fixed.symplectic())[0]:
            out[q] = [PauliString.identity(n)]
            continue
        cands = []
        others = [p for p in range(n) if p != q]
        for w in range(1, max_weight + 1):
            for qs in itertools.combinations(others, w):
                for syms in itertools.product("XYZ", repeat=w):
                    g = PauliString.from_sparse(n, dict(zip(qs, syms)))
                    if group.contains((fixed * g).unsigned().symplectic())[0]:
                        cands.append(g)
            if cands:
                break
        if not cands:
            raise InfeasibleAssignment(f"no passive factor of weight <= {max_weight} for qubit {q}")
        out[q] = cands
    return out


@dataclass(frozen=True)
class PeriodicSchedule:
    """``repetitions`` back-to-back transversal gates packed into ``len(rounds)`` rounds.

    ``rounds[r]`` lists ``(qubit, passive factor)`` pairs active in round ``r``.
    """

    rounds: tuple[tuple[tuple[int, PauliString], ...], ...]
    repetitions: int
    model: str

    @property
    def slowdown(self) -> Fraction:
        return Fraction(len(self.rounds), self.repetitions)

    def conflict_free(self) -> bool:
        for rnd in self.rounds:
            for (q1, g1), (q2, g2) in itertools.combinations(rnd, 2):
                if _conflict(self.model, q1, g1, q2, g2):
                    return False
        return True


def _round_feasible(
    active: Sequence[int], candidates: Mapping[int, Sequence[PauliString]], model: str
) -> tuple[tuple[int, PauliString], ...] | None:
    """Pick a passive factor for every active qubit so the round is conflict-free."""
    chosen: list[tuple[int, PauliString]] = []

    def place(i: int) -> bool:
        if i == len(active):
            return True
        q = active[i]
        for g in candidates[q]:
            if any(p in g.support for p in active if p != q):
                continue
            if all(not _conflict(model, q, g, q2, g2) for q2, g2 in chosen):
                chosen.append((q, g))
                if place(i + 1):
                    return True
                chosen.pop()
        return False

    return tuple(chosen) if place(0) else None


def _periodic(
    candidates: Mapping[int, Sequence[PauliString]], repetitions: int, n_rounds: int, model: str
) -> PeriodicSchedule | None:
    """Backtracking search: each qubit is active in ``repetitions`` of the ``n_rounds`` rounds."""
    qubits = sorted(candidates)
    patterns = list(itertools.combinations(range(n_rounds), repetitions))
    members: list[list[int]] = [[] for _ in range(n_rounds)]
    cache: dict[tuple[int, ...], tuple | None] = {}

    def ok(r: int) -> bool:
        key = tuple(members[r])
        if key not in cache:
            cache[key] = _round_feasible(key, candidates, model)
        return cache[key] is not None

    def assign(i: int) -> bool:
        if i == len(qubits):
            return True
        q = qubits[i]
        for pat in patterns:
            # symmetry break on the first qubit
            if i == 0 and pat != patterns[0]:
                break
            for r in pat:
                members[r].append(q)
            if all(ok(r) for r in pat) and assign(i + 1):
                return True
            for r in pat:
                members[r].pop()
        return False

    if not assign(0):
        return None
    rounds = tuple(cache[tuple(m)] for m in members)
    return PeriodicSchedule(rounds, repetitions, model)


def best_transversal_schedule(
    code: SubsystemCode,
    start: str = "Z",
    model: str = "shared-passive",
    max_repetitions: int = 2,
    max_weight: int = 1,
) -> PeriodicSchedule:
    """Lowest slowdown over passive-factor choices and up to ``max_repetitions`` pipelined gates.

    For each repetition count ``k`` the smallest round count is found by
    exhaustive search, letting each segment pick its passive factor per round.
    """
    if model not in MODELS:
        raise ValueError(f"unknown conflict model {model!r}")
    candidates = gauge_candidates(code, start, max_weight)
    best: PeriodicSchedule | None = None
    for k in range(1, max_repetitions + 1):
        lo = k
        hi = k * code.n_qubits
        if best is not None:
            # only round counts that would beat the current best are worth trying
            hi = min(hi, int(best.slowdown * k - Fraction(1, 10**9)))
        for n_rounds in range(lo, hi + 1):
            found = _periodic(candidates, k, n_rounds, model)
            if found is not None:
                if best is None or found.slowdown < best.slowdown:
                    best = found
                break
    assert best is not None
    return best
