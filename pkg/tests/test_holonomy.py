import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from holoqc.evolve import propagate, reduce
from holoqc.holonomy import (
    Holonomy,
    LeakageTooLarge,
    analyze_plan,
    control_phase_gate,
    control_sector_phase,
    equal_phase_check,
    gate_distance,
    gate_metrics,
    geometric_part,
    transport_frames,
    wilczek_zee_transport,
)
from holoqc.paths import (
    RZ_TARGET,
    ConjugatedRotation,
    ControlSegment,
    SmoothSchedule,
    T_D,
    XS,
    path_conditional,
    path_rz,
    path_x_benchmark,
    path_xs,
)
from holoqc.pauli import PauliString

X = np.array([[0, 1], [1, 0]], dtype=complex)


def test_equal_phase_check_artificial():
    h = Holonomy(np.eye(2), np.array([0.0, np.pi]))
    assert equal_phase_check(h) == pytest.approx(2.0)
    h = Holonomy(np.eye(2), np.array([0.3, 0.3]))
    assert equal_phase_check(h) == pytest.approx(0.0, abs=1e-15)


def test_gate_distance_basics():
    u = RZ_TARGET
    assert gate_distance(u, u) < 1e-12
    assert gate_distance(np.exp(0.77j) * u, u) < 1e-9
    assert gate_distance(np.eye(2), X) == pytest.approx(np.sqrt(2), abs=1e-9)
    with pytest.raises(ValueError):
        gate_distance(np.eye(2), np.eye(4))


@settings(max_examples=25, deadline=None)
@given(st.floats(-np.pi, np.pi), st.floats(0.0, 1.0))
def test_gate_distance_phase_invariant(phi, theta):
    u = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], dtype=complex)
    v = np.diag([1, np.exp(1j * theta)])
    assert gate_distance(np.exp(1j * phi) * u, v) == pytest.approx(gate_distance(u, v), abs=1e-9)


def test_gate_metrics_identity():
    m = gate_metrics(XS, XS)
    assert m["trace_fidelity"] == pytest.approx(1.0)
    assert m["infidelity"] == pytest.approx(0.0, abs=1e-14)


def test_transport_frames_gauge_invariant():
    rng = np.random.default_rng(3)
    seg = path_rz(1.0).segments[0]
    h = seg.operators_at_s(np.linspace(0, 1, 257))
    _, v = np.linalg.eigh(h)
    frames = v[:, :, :1]
    base = transport_frames(frames)
    phases = np.exp(1j * rng.uniform(-np.pi, np.pi, len(frames)))
    rephased = transport_frames(frames * phases[:, None, None])
    assert np.linalg.norm(base - rephased, 2) < 1e-8


def test_oracle_constant_path_is_identity():
    form = ConjugatedRotation("Z", PauliString.from_label("X"), 0.0)
    seg = ControlSegment(form, (0,), PauliString.from_label("I"), SmoothSchedule(5.0))
    h = wilczek_zee_transport(seg)
    assert np.allclose(h.geometric_unitary, np.eye(2), atol=1e-10)


def test_oracle_composes_over_legs():
    a, b = path_xs(10.0).segments
    whole = wilczek_zee_transport([a, b]).geometric_unitary
    parts = wilczek_zee_transport(b).geometric_unitary @ wilczek_zee_transport(a).geometric_unitary
    assert gate_distance(whole, parts) < 1e-6


def test_oracle_matches_targets():
    h = wilczek_zee_transport(path_rz(1.0).segments[0])
    assert gate_distance(h.geometric_unitary, RZ_TARGET) < 1e-8
    assert equal_phase_check(h) < 1e-8
    assert gate_distance(wilczek_zee_transport(list(path_xs(1.0).segments)).geometric_unitary, XS) < 1e-8


def test_leakage_guard():
    seg = path_x_benchmark(T_D, schedule="linear").segments[0]
    rs = reduce(seg)
    ev = propagate(rs)
    with pytest.raises(LeakageTooLarge):
        geometric_part(ev, rs)


def test_geometric_part_matches_oracle_at_long_duration():
    seg = path_rz(50 * T_D).segments[0]
    rs = reduce(seg)
    h = geometric_part(propagate(rs), rs)
    assert gate_distance(h.geometric_unitary, RZ_TARGET) < 1e-5
    assert equal_phase_check(h) < 1e-5
    assert gate_distance(h.geometric_unitary, h.excited_unitary) < 1e-5


def test_control_phase_helpers():
    phi = 0.4
    ideal = np.kron(np.diag([1, 0]), np.eye(2)) + np.kron(np.diag([0, 1]), RZ_TARGET)
    u = np.kron(np.diag([1, np.exp(1j * phi)]), np.eye(2)) @ ideal
    assert control_sector_phase(u, ideal) == pytest.approx(phi)
    assert np.allclose(control_phase_gate(phi, 4) @ u, ideal)


def test_conditional_plan_after_phase_correction():
    plan = path_conditional(path_rz(50 * T_D))
    rep = analyze_plan(plan)
    assert rep.delta_spectral < 1e-5
