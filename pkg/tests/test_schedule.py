from fractions import Fraction

import pytest

from holoqc.pauli import PauliString, bacon_shor_9, trivial_code
from holoqc.schedule import (
    InfeasibleAssignment,
    PeriodicSchedule,
    best_transversal_schedule,
    chromatic_rounds,
    conflict_graph,
    gauge_candidates,
    transversal_schedule,
)


def _register(n):
    code = trivial_code()
    for _ in range(n - 1):
        code = code.tensor(trivial_code())
    return code


def _pairwise_free(schedule, assignment):
    adj = conflict_graph(assignment, schedule.model)
    return all(b not in adj[a] for r in schedule.rounds for a in r for b in r if a != b)


def test_trivial_passive_factors_need_one_round():
    code = bacon_shor_9()
    s = transversal_schedule(code, {q: PauliString.identity(9) for q in range(9)})
    assert len(s.rounds) == 1 and s.slowdown == 1


def test_disjoint_pairs_share_a_round():
    code = _register(4)
    choice = {0: PauliString.single(4, 1, "Z"), 2: PauliString.single(4, 3, "Z")}
    s = transversal_schedule(code, choice)
    assert len(s.rounds) == 1
    assert s.exact


def test_infeasible_assignments_rejected():
    code = _register(4)
    with pytest.raises(InfeasibleAssignment):
        transversal_schedule(code, {0: PauliString.single(4, 0, "Z")})
    with pytest.raises(InfeasibleAssignment):
        transversal_schedule(code, {7: PauliString.identity(4)})
    with pytest.raises(InfeasibleAssignment):
        transversal_schedule(code, {0: PauliString.identity(3)})


def test_unknown_model():
    with pytest.raises(ValueError):
        conflict_graph({}, "nonsense")


def test_chromatic_rounds_odd_cycle():
    adj = {k: {(k - 1) % 5, (k + 1) % 5} for k in range(5)}
    color, exact = chromatic_rounds(adj)
    assert exact and max(color.values()) + 1 == 3
    assert all(color[a] != color[b] for a in adj for b in adj[a])


def test_chromatic_rounds_large_graph_uses_heuristic():
    adj = {k: set() for k in range(20)}
    color, exact = chromatic_rounds(adj)
    assert not exact and set(color.values()) == {0}


def test_bs9_candidates_are_column_partners():
    cands = gauge_candidates(bacon_shor_9())
    assert all(len(c) == 2 for c in cands.values())
    for q, cs in cands.items():
        for g in cs:
            assert g.weight == 1 and g.support[0] % 3 == q % 3


def test_bs9_overlap_model():
    code = bacon_shor_9()
    best = best_transversal_schedule(code, model="overlap")
    assert best.slowdown == 3
    assert best.conflict_free()
    cands = gauge_candidates(code)
    choice = {q: c[0] for q, c in cands.items()}
    s = transversal_schedule(code, choice, "overlap")
    assert len(s.rounds) == 3
    assert _pairwise_free(s, choice)


def test_bs9_shared_passive_model():
    best = best_transversal_schedule(bacon_shor_9(), model="shared-passive")
    assert best.slowdown == Fraction(3, 2)
    assert best.repetitions == 2
    assert best.conflict_free()
    counts = {}
    for rnd in best.rounds:
        for q, _ in rnd:
            counts[q] = counts.get(q, 0) + 1
    assert counts == {q: 2 for q in range(9)}


def test_periodic_conflict_check():
    bad = PeriodicSchedule((((0, PauliString.single(2, 1, "Z")), (1, PauliString.single(2, 0, "Z"))),), 1, "overlap")
    assert not bad.conflict_free()
