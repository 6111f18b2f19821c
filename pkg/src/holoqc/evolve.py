"""Time-ordered evolution of control segments on reduced sector spaces.

Because the passive factor ``Gt`` is a Pauli string, the full Hamiltonian
``-H(t) (x) Gt`` splits into the ``Gt = +-1`` eigenspaces, on which it acts
as ``-g H(t)`` on the active qubits alone.  Each sector is integrated with an
exactly unitary product formula and step doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .paths import ControlSegment

__all__ = [
    "Sector",
    "ReducedSystem",
    "EvolutionResult",
    "ConvergenceError",
    "reduce",
    "propagate",
    "propagate_generator",
    "propagate_register",
    "leakage_profile",
    "level_projectors",
    "step_energy_drift",
    "DEFAULT_TOL",
    "STEP_CAP",
]

DEFAULT_TOL = 1e-10
STEP_CAP = 2**20
_CHUNK = 2**15
_ORDER = {"magnus4": 4, "midpoint": 2}


class ConvergenceError(RuntimeError):
    """Step doubling hit the cap before successive results agreed."""

    def __init__(self, message: str, steps: int, estimate: float):
        super().__init__(message)
        self.steps = steps
        self.estimate = estimate


@dataclass(frozen=True)
class Sector:
    g_eigenvalue: int
    generator_sign: int


@dataclass(frozen=True)
class ReducedSystem:
    segment: ControlSegment
    sectors: tuple[Sector, ...]

    @property
    def active_dim(self) -> int:
        return self.segment.active_dim

    def hamiltonians(self, sector: Sector, t: np.ndarray) -> np.ndarray:
        """Stack of sector Hamiltonians ``-g H(t)`` at the times ``t``."""
        return sector.generator_sign * self.segment.operators_at(t)


def reduce(seg: ControlSegment) -> ReducedSystem:
    """Split a segment into its passive-factor sectors."""
    passive = seg.passive
    if set(passive.support) & set(seg.active_qubits):
        raise ValueError("active and passive supports overlap")
    if passive.is_identity:
        g = 1 if passive.phase == 0 else -1
        sectors = (Sector(g, -g),)
    else:
        sectors = (Sector(1, -1), Sector(-1, 1))
    return ReducedSystem(seg, sectors)


# ---------------------------------------------------------------------------
# integrator


def _expm_herm(k: np.ndarray) -> np.ndarray:
    """``exp(-i K)`` for a stack of Hermitian matrices."""
    w, v = np.linalg.eigh(k)
    return (v * np.exp(-1j * w)[..., None, :]) @ np.swapaxes(v.conj(), -1, -2)


def _tree_product(u: np.ndarray) -> np.ndarray:
    """Time-ordered product ``u[-1] @ ... @ u[0]``."""
    while len(u) > 1:
        if len(u) % 2:
            u = np.concatenate([u, np.eye(u.shape[-1], dtype=complex)[None]])
        u = u[1::2] @ u[0::2]
    return u[0]


_GAUSS = np.array([0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6])


def _step_generators(hfun, t0: float, h: float, idx: np.ndarray, scheme: str) -> np.ndarray:
    """Hermitian ``K_k`` with ``U_k = exp(-i K_k)`` for the steps in ``idx``."""
    left = t0 + idx * h
    if scheme == "midpoint":
        return h * hfun(left + 0.5 * h)
    h1 = hfun(left + _GAUSS[0] * h)
    h2 = hfun(left + _GAUSS[1] * h)
    comm = h1 @ h2 - h2 @ h1
    # Omega = -i h/2 (H1+H2) + sqrt(3)/12 h^2 [H1,H2];  K = i Omega
    return 0.5 * h * (h1 + h2) + 1j * (np.sqrt(3) / 12) * h * h * comm


def _fixed_step(hfun, t0: float, t1: float, n: int, scheme: str) -> np.ndarray:
    h = (t1 - t0) / n
    chunks = []
    for start in range(0, n, _CHUNK):
        idx = np.arange(start, min(n, start + _CHUNK))
        chunks.append(_tree_product(_expm_herm(_step_generators(hfun, t0, h, idx, scheme))))
    return _tree_product(np.array(chunks))


@dataclass
class _Converged:
    unitary: np.ndarray
    steps: int
    estimate: float
    history: list[tuple[int, float]]


def propagate_generator(
    hfun: Callable[[np.ndarray], np.ndarray],
    t0: float,
    t1: float,
    steps: int = 64,
    scheme: str = "magnus4",
    tol: float = DEFAULT_TOL,
    max_steps: int = STEP_CAP,
) -> _Converged:
    """Converged propagator of ``i dU/dt = H(t) U`` over ``[t0, t1]``.

    ``hfun`` maps an array of times to a stack of Hermitian matrices.  Step
    counts double from ``steps`` until successive propagators differ by less
    than ``tol`` in spectral norm.
    """
    if scheme not in _ORDER:
        raise ValueError(f"unknown scheme {scheme!r}")
    if steps < 2:
        raise ValueError("need at least 2 steps")
    if t1 == t0:
        d = hfun(np.array([t0])).shape[-1]
        return _Converged(np.eye(d, dtype=complex), 0, 0.0, [])
    p = _ORDER[scheme]
    n = steps
    prev = _fixed_step(hfun, t0, t1, n, scheme)
    history = []
    while True:
        if 2 * n > max_steps:
            est = history[-1][1] / (2**p - 1) if history else math.inf
            raise ConvergenceError(
                f"no convergence to {tol:g} within {max_steps} steps (last change {history[-1][1] if history else math.inf:.3g})",
                n,
                est,
            )
        n *= 2
        cur = _fixed_step(hfun, t0, t1, n, scheme)
        diff = float(np.linalg.norm(cur - prev, 2))
        history.append((n, diff))
        if diff < tol:
            return _Converged(cur, n, diff / (2**p - 1), history)
        prev = cur


# ---------------------------------------------------------------------------
# spectral bookkeeping


def level_projectors(h: np.ndarray, n_levels: int | None = None) -> tuple[np.ndarray, list[np.ndarray], list[np.ndarray]]:
    """Energies and projectors of ``h`` grouped into levels in ascending order.

    Returns ``(level_energies, projectors, bases)`` where ``bases[n]`` holds the
    eigenvectors of level ``n`` as columns.  When ``n_levels`` is given the
    sorted spectrum is split into that many equal blocks, which tracks levels
    by energy order while the gap stays open.
    """
    w, v = np.linalg.eigh(h)
    d = len(w)
    if n_levels is None:
        groups, cur = [], [0]
        for k in range(1, d):
            if abs(w[k] - w[cur[0]]) < 1e-8:
                cur.append(k)
            else:
                groups.append(cur)
                cur = [k]
        groups.append(cur)
    else:
        size = d // n_levels
        groups = [list(range(k * size, (k + 1) * size)) for k in range(n_levels)]
    energies = np.array([w[g].mean() for g in groups])
    bases = [v[:, g] for g in groups]
    projs = [b @ b.conj().T for b in bases]
    return energies, projs, bases


@dataclass
class EvolutionResult:
    """Sector propagators over ``[t0, t1]`` with spectral diagnostics.

    ``dynamical_phases[g][n] = -(integral of the sector energy of level n)``
    where levels are the eigenspaces of ``H`` (not ``-g H``) in ascending
    order.  ``start_projectors`` and ``end_projectors`` are those eigenspaces
    at ``t0`` and ``t1``.
    """

    sector_unitaries: dict[int, np.ndarray]
    dynamical_phases: dict[int, np.ndarray]
    leakage: float
    steps_used: int
    richardson_error_estimate: float
    start_projectors: list[np.ndarray]
    end_projectors: list[np.ndarray]
    level_energies: np.ndarray
    history: dict[int, list[tuple[int, float]]] = field(default_factory=dict)
    t0: float = 0.0
    t1: float = 0.0


def _level_integrals(seg: ControlSegment, t0: float, t1: float, n_levels: int) -> np.ndarray:
    """``integral of eps_n(t) dt`` for each level of ``H`` over ``[t0, t1]``."""
    if t1 == t0:
        return np.zeros(n_levels)
    d = seg.active_dim
    size = d // n_levels

    def level_energy(t: float, n: int) -> float:
        w = np.linalg.eigvalsh(seg.operators_at([t])[0])
        return float(w[n * size : (n + 1) * size].mean())

    out = []
    for n in range(n_levels):
        val, _ = quad(level_energy, t0, t1, args=(n,), epsabs=1e-13, epsrel=1e-12, limit=200)
        out.append(val)
    return np.array(out)


def _leakage(u: np.ndarray, start_bases: list[np.ndarray], end_projs: list[np.ndarray]) -> float:
    worst = 1.0
    for b, p in zip(start_bases, end_projs):
        block = p @ u @ b
        smin = np.linalg.svd(block, compute_uv=False).min()
        worst = min(worst, float(smin**2))
    return max(0.0, 1.0 - worst)


def propagate(
    rs: ReducedSystem,
    steps: int = 64,
    *,
    t0: float = 0.0,
    t1: float | None = None,
    scheme: str = "magnus4",
    tol: float = DEFAULT_TOL,
    max_steps: int = STEP_CAP,
) -> EvolutionResult:
    """Evolve every sector of ``rs`` over ``[t0, t1]`` (default the whole segment)."""
    seg = rs.segment
    if t1 is None:
        t1 = seg.duration
    if not (0 <= t0 <= t1 <= seg.duration * (1 + 1e-12)):
        raise ValueError("interval outside the segment")
    h_start = seg.operators_at([t0])[0]
    energies, start_projs, start_bases = level_projectors(h_start)
    n_levels = len(energies)
    _, end_projs, _ = level_projectors(seg.operators_at([t1])[0], n_levels)

    unitaries, phases, history = {}, {}, {}
    steps_used, estimate, leak = 0, 0.0, 0.0
    integrals = _level_integrals(seg, t0, t1, n_levels)
    for sec in rs.sectors:
        conv = propagate_generator(
            lambda t, sec=sec: rs.hamiltonians(sec, t), t0, t1, steps, scheme, tol, max_steps
        )
        u = conv.unitary
        unitaries[sec.g_eigenvalue] = u
        # sector energy of level n is -g eps_n, so omega = g * integral(eps_n)
        phases[sec.g_eigenvalue] = sec.g_eigenvalue * integrals
        history[sec.g_eigenvalue] = conv.history
        steps_used = max(steps_used, conv.steps)
        estimate = max(estimate, conv.estimate)
        leak = max(leak, _leakage(u, start_bases, end_projs))
    return EvolutionResult(
        unitaries, phases, leak, steps_used, estimate, start_projs, end_projs, energies, history, t0, t1
    )


def propagate_register(
    seg: ControlSegment, steps: int = 64, scheme: str = "magnus4", tol: float = DEFAULT_TOL
) -> EvolutionResult:
    """Sector propagators extracted from a dense evolution of ``-H (x) Gt``.

    The register holds the active qubits followed by the support of the passive
    factor.  No sector reduction is used: the full propagator is integrated and
    then sandwiched with passive eigenvectors, so this is an independent check
    of :func:`reduce`.
    """
    passive = seg.passive
    supp = list(passive.support)
    if not supp:
        raise ValueError("passive factor is the identity; nothing to separate")
    gt = passive.restrict(supp).to_matrix()
    da = seg.active_dim

    def hfun(t):
        h = seg.operators_at(t)
        return -np.einsum("nij,kl->nikjl", h, gt).reshape(len(h), da * len(gt), da * len(gt))

    conv = propagate_generator(hfun, 0.0, seg.duration, steps, scheme, tol)
    u = conv.unitary.reshape(da, len(gt), da, len(gt))
    w, v = np.linalg.eigh(gt)
    energies, start_projs, start_bases = level_projectors(seg.operators_at([0.0])[0])
    _, end_projs, _ = level_projectors(seg.operators_at([seg.duration])[0], len(energies))
    integrals = _level_integrals(seg, 0.0, seg.duration, len(energies))
    unitaries, phases = {}, {}
    leak = 0.0
    for g in (1, -1):
        chi = v[:, int(np.argmin(np.abs(w - g)))]
        ug = np.einsum("k,ikjl,l->ij", chi.conj(), u, chi)
        unitaries[g] = ug
        phases[g] = g * integrals
        leak = max(leak, _leakage(ug, start_bases, end_projs))
    return EvolutionResult(
        unitaries, phases, leak, conv.steps, conv.estimate, start_projs, end_projs, energies,
        {0: conv.history}, 0.0, seg.duration,
    )


def leakage_profile(
    rs: ReducedSystem, n_samples: int, scheme: str = "magnus4", tol: float = DEFAULT_TOL
) -> list[tuple[float, float]]:
    """Instantaneous leakage at ``n_samples`` equally spaced times."""
    if n_samples < 2:
        raise ValueError("need at least two samples")
    seg = rs.segment
    times = np.linspace(0.0, seg.duration, n_samples)
    _, _, start_bases = level_projectors(seg.operators_at([0.0])[0])
    n_levels = len(start_bases)
    cum = {s.g_eigenvalue: np.eye(rs.active_dim, dtype=complex) for s in rs.sectors}
    out = [(0.0, 0.0)]
    for a, b in zip(times[:-1], times[1:]):
        _, projs, _ = level_projectors(seg.operators_at([b])[0], n_levels)
        leak = 0.0
        for sec in rs.sectors:
            conv = propagate_generator(lambda t, sec=sec: rs.hamiltonians(sec, t), a, b, 16, scheme, tol)
            cum[sec.g_eigenvalue] = conv.unitary @ cum[sec.g_eigenvalue]
            leak = max(leak, _leakage(cum[sec.g_eigenvalue], start_bases, projs))
        out.append((float(b), leak))
    return out


def step_energy_drift(rs: ReducedSystem, steps: int, scheme: str = "magnus4") -> float:
    """Largest change of ``<K_k>`` across step ``k``, per unit time.

    ``K_k`` is the Hermitian generator of step ``k`` (``U_k = exp(-i K_k)``),
    the energy the step conserves; the state starts in the lowest level.
    """
    seg = rs.segment
    h = seg.duration / steps
    worst = 0.0
    for sec in rs.sectors:
        ks = _step_generators(lambda t: rs.hamiltonians(sec, t), 0.0, h, np.arange(steps), scheme)
        us = _expm_herm(ks)
        psi = np.linalg.eigh(rs.hamiltonians(sec, np.array([0.0]))[0])[1][:, 0]
        for k in range(steps):
            before = np.vdot(psi, ks[k] @ psi).real
            psi = us[k] @ psi
            after = np.vdot(psi, ks[k] @ psi).real
            worst = max(worst, abs(after - before) / h)
    return worst
