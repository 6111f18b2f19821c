import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc import ft
from holoqc.paths import T_D, ControlSegment, embed_operator
from holoqc.pauli import PauliString, bacon_shor_9


@pytest.fixture(scope="module")
def code():
    return bacon_shor_9()


@pytest.fixture(scope="module")
def rz_setup(code):
    plan = ft.transversal_rz(code)
    psi = ft.bell_input(code, 0)
    runner = ft.BlockRunner(plan, n_ref=1)
    ctx = ft.VerdictContext(plan.final_code, runner.ideal(psi), 1)
    return plan, psi, runner, ctx


def _first_step(code, plan):
    seg = plan.segments[0]
    final = ft._conjugate_code(code, seg.ideal(), [0])
    return ft.BlockPlan("one", code, [seg], plan.groups[:1], [], final)


def _random_state(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


@settings(max_examples=40, deadline=None)
@given(st.text(alphabet="IXYZ", min_size=3, max_size=3), st.integers(0, 2**16))
def test_apply_pauli_matches_dense(label, seed):
    p = PauliString.from_label(label)
    psi = _random_state(3, seed)
    assert np.allclose(ft.apply_pauli(psi, p), p.to_matrix() @ psi, atol=1e-12)


def test_apply_local_matches_embedding():
    rng = np.random.default_rng(5)
    u = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    psi = _random_state(4, 2)
    dense = embed_operator(u, (3, 1), tuple(range(4)))
    assert np.allclose(ft.apply_local(psi, u, (3, 1), 4), dense @ psi, atol=1e-12)


def test_expectation_of_stabilizers(code):
    psi = ft.encoded_input(code, 3)
    for s in code.stabilizer_gens:
        assert ft.expectation(psi, s) == pytest.approx(1.0)


def test_identity_plan_preserves_state(code):
    psi = ft.encoded_input(code, 1)
    out = ft.run_plan_on_block(code, ft.identity_plan(code), psi)
    assert abs(np.vdot(psi, out)) ** 2 >= 1 - 1e-10


def test_plan_with_foreign_passive_factor_is_rejected(code):
    plan = ft.transversal_rz(code)
    seg = plan.segments[0]
    bad = ControlSegment(seg.form, seg.active_qubits, PauliString.single(9, 1, "X"), seg.schedule)
    plan.segments = [bad] + plan.segments[1:]
    with pytest.raises(ft.InvalidPlan):
        ft.BlockRunner(plan)


def test_plan_must_match_code(code):
    other = ft.transversal_rz(code.conjugated(lambda p: p))
    object.__setattr__(other, "code", ft._trivial_register(9))
    with pytest.raises(ft.InvalidPlan):
        ft.run_plan_on_block(code, other, ft.encoded_input(code))


def test_transversal_rz_passive_factors(code):
    plan = ft.transversal_rz(code)
    labels = [s.passive.label[1:] for s in plan.segments]
    expected = {0: (3, "Z"), 1: (4, "Z"), 2: (5, "Z"), 3: (0, "X"), 4: (1, "X"), 5: (2, "X"), 6: (0, "X"), 7: (1, "X"), 8: (2, "X")}
    for q, lab in enumerate(labels):
        where, sym = expected[q]
        assert lab == "".join(sym if k == where else "I" for k in range(9))
    assert plan.max_locality() == 2


def test_transversal_cnot_locality(code):
    plan = ft.transversal_cnot(code)
    assert plan.n_qubits == 18
    assert len(plan.segments) == 36
    assert plan.max_locality() <= 4


def test_logical_rz_single_step(code, rz_setup):
    plan, psi, _, _ = rz_setup
    one = _first_step(code, plan)
    runner = ft.BlockRunner(one, n_ref=1)
    ctx = ft.VerdictContext(one.final_code, runner.ideal(psi), 1)
    v = ft.verdict(ctx, runner.run(psi))
    assert v.residual.is_identity
    assert v.dominance >= 1 - 1e-6


def test_logical_rz_full_sequence_after_recovery(rz_setup):
    _, psi, runner, ctx = rz_setup
    v = ft.verdict(ctx, runner.run(psi))
    assert v.correctable and v.residual.is_identity
    assert v.uncorrectable_weight <= 1e-6


@pytest.mark.xfail(strict=True, reason="nine correctable leakage terms of 9.3e-7 each leave 8.4e-6 before recovery")
def test_logical_rz_full_sequence_without_recovery(rz_setup):
    _, psi, runner, ctx = rz_setup
    v = ft.verdict(ctx, runner.run(psi))
    assert v.dominance >= 1 - 1e-6


def test_gauge_passive_choices_have_same_logical_action(code, rz_setup):
    plan, psi, _, _ = rz_setup
    seg = plan.segments[0]
    results = []
    for partner in (3, 6):
        alt = ControlSegment(seg.form, (0,), PauliString.single(9, partner, "Z"), seg.schedule)
        one = ft.BlockPlan("one", code, [alt], [code], [], ft._conjugate_code(code, alt.ideal(), [0]))
        runner = ft.BlockRunner(one, n_ref=1)
        ctx = ft.VerdictContext(one.final_code, runner.ideal(psi), 1)
        results.append(ctx.classes(runner.run(psi)))
    a, b = results
    for key in set(a) | set(b):
        assert a.get(key, 0.0) == pytest.approx(b.get(key, 0.0), abs=1e-9)


def test_event_boundaries_agree(rz_setup):
    _, psi, runner, _ = rz_setup
    before = runner.run(psi, ft.ErrorEvent(4, "Y", 0.0, 3))
    after_prev = runner.run(psi, ft.ErrorEvent(4, "Y", 1.0, 2))
    assert np.linalg.norm(before - after_prev) < 1e-10
    first = runner.run(psi, ft.ErrorEvent(2, "X", 0.0, 0))
    pre = runner.run(ft.apply_pauli(psi, PauliString.single(10, 2, "X")))
    assert np.linalg.norm(first - pre) < 1e-10
    last = runner.run(psi, ft.ErrorEvent(2, "X", 1.0, 8))
    post = ft.apply_pauli(runner.run(psi), PauliString.single(10, 2, "X"))
    assert np.linalg.norm(last - post) < 1e-10


def test_events_are_deterministic(rz_setup):
    _, psi, runner, _ = rz_setup
    ev = ft.ErrorEvent(5, "Z", 0.3, 4)
    assert np.array_equal(runner.run(psi, ev), runner.run(psi, ev))


def test_event_validation(rz_setup):
    _, psi, runner, _ = rz_setup
    with pytest.raises(ValueError):
        ft.ErrorEvent(0, "W", 0.5, 0)
    with pytest.raises(ValueError):
        ft.ErrorEvent(0, "X", 1.5, 0)
    with pytest.raises(ValueError):
        runner.run(psi, ft.ErrorEvent(0, "X", 0.5, 9))
    with pytest.raises(ValueError):
        runner.run(psi, ft.ErrorEvent(9, "X", 0.5, 0))


def test_checkpoints_do_not_change_results(code, rz_setup):
    plan, psi, runner, _ = rz_setup
    cached = ft.BlockRunner(plan, n_ref=1, checkpoint_every=1)
    cached.run(psi)
    ev = ft.ErrorEvent(7, "X", 0.6, 5)
    assert np.linalg.norm(cached.run(psi, ev) - runner.run(psi, ev)) < 1e-12


def test_stepping_matches_sector_propagators(rz_setup):
    plan, psi, runner, _ = rz_setup
    stepper = ft.BlockRunner(plan, n_ref=1, method="stepping", steps=2048)
    a = runner.evolve_segment(psi, 0)
    b = stepper.evolve_segment(psi, 0)
    assert np.linalg.norm(a - b) < 1e-5


def test_verdict_without_injection(rz_setup):
    _, psi, runner, ctx = rz_setup
    v = ft.verdict(ctx, runner.run(psi))
    assert v.correctable
    assert v.residual.is_identity
    assert v.flag == "ok"


def test_verdict_detects_weight_two_error(rz_setup):
    _, psi, runner, ctx = rz_setup
    out = runner.run(psi, extra=PauliString.from_label("XIIIXIIII"))
    v = ft.verdict(ctx, out)
    assert not v.correctable
    assert v.flag == "violation"
    assert max(v.residual_weight_per_block) == 2


def test_verdict_identifies_single_error(rz_setup):
    _, psi, runner, ctx = rz_setup
    out = runner.run(psi, extra=PauliString.from_label("IIIIYIIII"))
    v = ft.verdict(ctx, out)
    assert v.correctable
    assert v.residual_weight_per_block == [1]
    assert v.dominance > 0.999


def test_diagonalizer_matches_projection_tree(rz_setup):
    _, psi, runner, ctx = rz_setup
    out = runner.run(psi, ft.ErrorEvent(3, "X", 0.5, 0))
    a = ctx.classes(out)
    b = ctx.classes_by_projection(out)
    for key in set(a) | set(b):
        assert a.get(key, 0.0) == pytest.approx(b.get(key, 0.0), abs=1e-12)


def test_ambiguity_flags():
    base = dict(residual=PauliString.from_label("I"), residual_weight_per_block=[0], syndrome=())
    assert ft.Verdict(True, dominance=0.95, uncorrectable_weight=0.0, **base).flag == "ok"
    assert ft.Verdict(True, dominance=0.6, uncorrectable_weight=0.0, **base).flag == "mixed"
    assert ft.Verdict(True, dominance=0.6, uncorrectable_weight=0.3, **base).flag == "ambiguous"
    assert ft.Verdict(False, dominance=0.99, uncorrectable_weight=0.99, **base).flag == "violation"


def test_exhaustive_event_grid(rz_setup):
    plan = rz_setup[0]
    events = ft.exhaustive_events(plan, segments=[0])
    assert len(events) == 9 * 3 * 9
    assert len(ft.exhaustive_events(plan)) == 9 * 9 * 3 * 9


def test_sampled_events_reproducible(code):
    plan = ft.transversal_cnot(code)
    assert ft.sample_events(plan, 20, seed=4) == ft.sample_events(plan, 20, seed=4)
    assert all(0 <= e.qubit < 18 for e in ft.sample_events(plan, 50, seed=1))


def test_sweep_row_csv(rz_setup):
    plan = rz_setup[0]
    rows = ft.ft_sweep(plan, [ft.ErrorEvent(0, "Z", 0.5, 0)])
    fields = rows[0].csv_fields()
    assert len(fields) == len(ft.CSV_HEADER)
    assert fields[4] == "true"


# the passive-qubit sector flip leaves a weight-2 dressing mismatch of about 2.8e-3 at 17 T_d


def _passive_flip(rz_setup):
    plan, psi, runner, ctx = rz_setup
    seg = plan.segments[0]
    q = seg.passive.support[0]
    flip = "X" if seg.passive.label[1 + q] == "Z" else "Z"
    return ft.verdict(ctx, runner.run(psi, ft.ErrorEvent(q, flip, 0.5, 0)))


def test_passive_flip_is_correctable(rz_setup):
    v = _passive_flip(rz_setup)
    assert v.correctable
    assert v.residual_weight_per_block == [1]


@pytest.mark.xfail(strict=True, reason="sudden sector flip leaves 2.8e-3 in a weight-2 class at 17 T_d")
def test_passive_flip_dominance(rz_setup):
    assert _passive_flip(rz_setup).dominance >= 1 - 1e-4


@pytest.mark.xfail(strict=True, reason="post-decode fidelity is 0.9972 at 17 T_d; the mismatch falls as 1/T^2")
def test_sector_flip_harmless_after_decoding(rz_setup):
    v = _passive_flip(rz_setup)
    recovered = sum(w for w, rep, _ in v.classes if rep == v.residual)
    assert recovered >= 1 - 1e-6


def test_sector_flip_mismatch_shrinks_with_duration(code):
    weights = []
    for factor in (17, 50):
        plan = ft.transversal_rz(code, factor * T_D)
        rows = ft.ft_sweep(plan, [ft.ErrorEvent(3, "X", 0.5, 0)])
        weights.append(rows[0].verdict.uncorrectable_weight + 1 - rows[0].verdict.dominance)
    assert weights[1] < weights[0] / 5


# gadgets


def test_cat_prep_single_qubit():
    state, fid = ft.cat_prep(1)
    assert fid >= 1 - 1e-5
    assert np.allclose(np.abs(state), [2**-0.5, 2**-0.5], atol=1e-2)


def test_cat_prep_bell_pair():
    _, fid = ft.cat_prep(2)
    assert fid >= 1 - 1e-5


def test_cat_prep_rejects_size():
    with pytest.raises(ValueError):
        ft.cat_prep(5)


def test_cat_prep_converges_at_long_duration():
    _, fid = ft.cat_prep(3, 50 * T_D)
    assert 1 - fid < 1e-9


def test_parity_gadget_even_and_odd_long_duration():
    cat, _ = ft.cat_prep(2, 50 * T_D)
    assert ft.parity_gadget(cat, 50 * T_D)[0] >= 1 - 1e-8
    flipped = ft.apply_pauli(cat, PauliString.from_label("XI"))
    assert ft.parity_gadget(flipped, 50 * T_D)[1] >= 1 - 1e-8


def test_ancilla_phase_irrelevance():
    cat, _ = ft.cat_prep(2)
    clean = ft.parity_gadget(cat)
    hit = ft.parity_gadget(cat, ancilla_error_between="Z")
    assert np.abs(clean - hit).max() < 1e-4
    assert hit[0] >= 1 - 1e-4


def _basis(label):
    v = np.zeros(4, dtype=complex)
    v[int(label, 2)] = 1
    return v


def test_parity_gadget_linearity_at_long_duration():
    t = 50 * T_D
    a, b = 0.6, 0.8j
    pe = ft.parity_gadget(_basis("00"), t)
    po = ft.parity_gadget(_basis("01"), t)
    ps = ft.parity_gadget(a * _basis("00") + b * _basis("01"), t)
    assert np.abs(ps - (abs(a) ** 2 * pe + abs(b) ** 2 * po)).max() < 1e-5


@pytest.mark.xfail(strict=True, reason="coherent leakage interferes across parity branches: 1.3e-3 at 17 T_d")
def test_parity_gadget_linearity():
    a, b = 0.6, 0.8j
    pe = ft.parity_gadget(_basis("00"))
    po = ft.parity_gadget(_basis("01"))
    ps = ft.parity_gadget(a * _basis("00") + b * _basis("01"))
    assert np.abs(ps - (abs(a) ** 2 * pe + abs(b) ** 2 * po)).max() < 1e-8
