"""Pauli-group algebra, GF(2) helpers and stabilizer/subsystem codes.

A :class:`PauliString` is stored in symplectic form: one X bit and one Z bit
per qubit plus a phase exponent ``k`` for the prefactor ``i**k``.  A qubit with
both bits set denotes the Hermitian ``Y``, so ``PauliString.from_label("Y")``
is exactly the Pauli matrix Y.  Qubit 0 is the leftmost tensor factor.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "PauliString",
    "PauliSum",
    "SubsystemCode",
    "Syndrome",
    "NotCorrectable",
    "pauli_mul",
    "commutes",
    "syndrome",
    "decode_single",
    "bacon_shor_9",
    "trivial_code",
    "bs9_index",
    "conjugate_pauli",
    "pauli_expansion",
    "in_span",
    "gf2_rank",
    "gf2_nullspace",
    "single_qubit_errors",
    "GroupMembership",
    "complete_in_group",
    "iter_paulis",
    "PAULI_MATRICES",
]

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}

_SYMBOL = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _SYMBOL.items()}
_PHASE_TOKENS = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_TOKEN_PHASE = {"": 0, "+": 0, "+i": 1, "i": 1, "-": 2, "-i": 3}


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent of i picked up by the single-qubit product sigma(x1,z1) sigma(x2,z2)."""
    if x1 == 0 and z1 == 0:
        return 0
    if x1 == 1 and z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


@dataclass(frozen=True)
class PauliString:
    """``i**phase`` times a tensor product of I/X/Y/Z."""

    x_bits: tuple[int, ...]
    z_bits: tuple[int, ...]
    phase: int = 0

    def __post_init__(self) -> None:
        if len(self.x_bits) != len(self.z_bits):
            raise ValueError("x_bits and z_bits must have equal length")
        if len(self.x_bits) == 0:
            raise ValueError("a PauliString needs at least one qubit")
        object.__setattr__(self, "x_bits", tuple(int(b) & 1 for b in self.x_bits))
        object.__setattr__(self, "z_bits", tuple(int(b) & 1 for b in self.z_bits))
        object.__setattr__(self, "phase", int(self.phase) % 4)

    # construction -----------------------------------------------------
    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XIZ"``, ``"-iYY"`` or ``"+ZZ"``."""
        body = label.lstrip("+-i")
        token = label[: len(label) - len(body)]
        if token not in _TOKEN_PHASE:
            raise ValueError(f"bad phase token in {label!r}")
        try:
            bits = [_BITS[c] for c in body.upper()]
        except KeyError as exc:
            raise ValueError(f"bad Pauli symbol in {label!r}") from exc
        return cls(tuple(b[0] for b in bits), tuple(b[1] for b in bits), _TOKEN_PHASE[token])

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls((0,) * n, (0,) * n)

    @classmethod
    def single(cls, n: int, qubit: int, symbol: str) -> "PauliString":
        if not 0 <= qubit < n:
            raise ValueError(f"qubit {qubit} out of range for {n} qubits")
        x, z = _BITS[symbol.upper()]
        xs = [0] * n
        zs = [0] * n
        xs[qubit], zs[qubit] = x, z
        return cls(tuple(xs), tuple(zs))

    @classmethod
    def from_sparse(cls, n: int, ops: dict[int, str], phase: int = 0) -> "PauliString":
        xs = [0] * n
        zs = [0] * n
        for q, s in ops.items():
            xs[q], zs[q] = _BITS[s.upper()]
        return cls(tuple(xs), tuple(zs), phase)

    @classmethod
    def from_symplectic(cls, vec: Sequence[int], phase: int = 0) -> "PauliString":
        vec = [int(v) & 1 for v in vec]
        n = len(vec) // 2
        return cls(tuple(vec[:n]), tuple(vec[n:]), phase)

    # views ------------------------------------------------------------
    @property
    def n_qubits(self) -> int:
        return len(self.x_bits)

    @property
    def symbols(self) -> str:
        return "".join(_SYMBOL[(x, z)] for x, z in zip(self.x_bits, self.z_bits))

    @property
    def label(self) -> str:
        return _PHASE_TOKENS[self.phase] + self.symbols

    @property
    def coefficient(self) -> complex:
        return (1, 1j, -1, -1j)[self.phase]

    @property
    def weight(self) -> int:
        return sum(1 for x, z in zip(self.x_bits, self.z_bits) if x or z)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(q for q, (x, z) in enumerate(zip(self.x_bits, self.z_bits)) if x or z)

    @property
    def is_identity(self) -> bool:
        return self.weight == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def symplectic(self) -> np.ndarray:
        return np.array(self.x_bits + self.z_bits, dtype=np.uint8)

    def symbol_at(self, qubit: int) -> str:
        return _SYMBOL[(self.x_bits[qubit], self.z_bits[qubit])]

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"PauliString({self.label!r})"

    # algebra ----------------------------------------------------------
    def __mul__(self, other: "PauliString") -> "PauliString":
        return pauli_mul(self, other)

    def __neg__(self) -> "PauliString":
        return PauliString(self.x_bits, self.z_bits, self.phase + 2)

    def with_phase(self, phase: int) -> "PauliString":
        return PauliString(self.x_bits, self.z_bits, phase)

    def unsigned(self) -> "PauliString":
        """Same operator with the prefactor reset to +1."""
        return PauliString(self.x_bits, self.z_bits, 0)

    def commutes_with(self, other: "PauliString") -> bool:
        return commutes(self, other)

    def tensor(self, other: "PauliString") -> "PauliString":
        return PauliString(
            self.x_bits + other.x_bits, self.z_bits + other.z_bits, self.phase + other.phase
        )

    def restrict(self, qubits: Sequence[int]) -> "PauliString":
        """Factor on ``qubits`` (in the given order), keeping the overall phase."""
        return PauliString(
            tuple(self.x_bits[q] for q in qubits), tuple(self.z_bits[q] for q in qubits), self.phase
        )

    def embed(self, n: int, qubits: Sequence[int]) -> "PauliString":
        """Place this string on positions ``qubits`` of an ``n``-qubit register."""
        if len(qubits) != self.n_qubits:
            raise ValueError("position list does not match string length")
        xs = [0] * n
        zs = [0] * n
        for k, q in enumerate(qubits):
            xs[q], zs[q] = self.x_bits[k], self.z_bits[k]
        return PauliString(tuple(xs), tuple(zs), self.phase)

    def to_matrix(self) -> np.ndarray:
        out = np.array([[self.coefficient]], dtype=complex)
        for s in self.symbols:
            out = np.kron(out, PAULI_MATRICES[s])
        return out


def pauli_mul(p: PauliString, q: PauliString) -> PauliString:
    """Exact group product ``p @ q`` including the phase."""
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"size mismatch: {p.n_qubits} vs {q.n_qubits} qubits")
    phase = p.phase + q.phase
    for x1, z1, x2, z2 in zip(p.x_bits, p.z_bits, q.x_bits, q.z_bits):
        phase += _g(x1, z1, x2, z2)
    xs = tuple(a ^ b for a, b in zip(p.x_bits, q.x_bits))
    zs = tuple(a ^ b for a, b in zip(p.z_bits, q.z_bits))
    return PauliString(xs, zs, phase)


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the symplectic inner product of ``p`` and ``q`` vanishes mod 2."""
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"size mismatch: {p.n_qubits} vs {q.n_qubits} qubits")
    s = 0
    for x1, z1, x2, z2 in zip(p.x_bits, p.z_bits, q.x_bits, q.z_bits):
        s ^= (x1 & z2) ^ (z1 & x2)
    return s == 0


def single_qubit_errors(n: int) -> list[PauliString]:
    """All 3n weight-one Paulis ordered by qubit, then X < Y < Z."""
    return [PauliString.single(n, q, s) for q in range(n) for s in "XYZ"]


@dataclass(frozen=True)
class PauliSum:
    """Real linear combination of Hermitian Pauli strings."""

    terms: tuple[tuple[float, PauliString], ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("empty PauliSum")
        n = self.terms[0][1].n_qubits
        for _, p in self.terms:
            if p.n_qubits != n:
                raise ValueError("mixed register sizes in PauliSum")

    @classmethod
    def of(cls, p: PauliString | str | "PauliSum") -> "PauliSum":
        if isinstance(p, PauliSum):
            return p
        if isinstance(p, str):
            p = PauliString.from_label(p)
        if not p.is_hermitian:
            raise ValueError(f"{p} is not Hermitian")
        sign = 1.0 if p.phase == 0 else -1.0
        return cls(((sign, p.unsigned()),))

    @classmethod
    def parse(cls, terms: Sequence[tuple[float, str]]) -> "PauliSum":
        return cls(tuple((float(c), PauliString.from_label(s)) for c, s in terms))

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def to_matrix(self) -> np.ndarray:
        return sum(c * p.to_matrix() for c, p in self.terms)

    def __neg__(self) -> "PauliSum":
        return PauliSum(tuple((-c, p) for c, p in self.terms))

    def scaled(self, a: float) -> "PauliSum":
        return PauliSum(tuple((a * c, p) for c, p in self.terms))

    def as_pauli(self) -> PauliString | None:
        """The equivalent signed PauliString when this sum has one unit term."""
        if len(self.terms) == 1 and abs(abs(self.terms[0][0]) - 1.0) < 1e-12:
            c, p = self.terms[0]
            return p if c > 0 else -p
        return None

    def to_json(self) -> list[list]:
        return [[c, p.label] for c, p in self.terms]

    def __str__(self) -> str:
        single = self.as_pauli()
        if single is not None:
            return single.label
        return " ".join(f"{c:+.6g}*{p.symbols}" for c, p in self.terms)


# ---------------------------------------------------------------------------
# dense helpers


@lru_cache(maxsize=8)
def _pauli_basis(k: int) -> tuple[tuple[str, np.ndarray], ...]:
    out = []
    for syms in itertools.product("IXYZ", repeat=k):
        m = np.array([[1.0 + 0j]])
        for s in syms:
            m = np.kron(m, PAULI_MATRICES[s])
        out.append(("".join(syms), m))
    return tuple(out)


def pauli_expansion(m: np.ndarray, cutoff: float = 1e-12) -> dict[str, complex]:
    """Coefficients ``c_P = tr(P m) / 2**k`` of a 2**k x 2**k matrix."""
    dim = m.shape[0]
    k = int(round(np.log2(dim)))
    if 2**k != dim:
        raise ValueError("matrix dimension is not a power of two")
    out = {}
    for label, p in _pauli_basis(k):
        c = np.trace(p @ m) / dim
        if abs(c) > cutoff:
            out[label] = complex(c)
    return out


def conjugate_pauli(p: PauliString, unitary: np.ndarray, qubits: Sequence[int]) -> PauliString:
    """Return ``U p U^dagger`` for a Clifford ``U`` acting on ``qubits``.

    Raises ValueError if the image is not a single Pauli string, i.e. ``U`` does
    not normalize the Pauli group on this input.
    """
    qubits = list(qubits)
    local = p.restrict(qubits).unsigned()
    if local.is_identity:
        return p
    image = unitary @ local.to_matrix() @ unitary.conj().T
    terms = pauli_expansion(image, cutoff=1e-9)
    if len(terms) != 1:
        raise ValueError(f"conjugation of {p} is not a Pauli string")
    label, c = next(iter(terms.items()))
    k = {1: 0, 1j: 1, -1: 2, -1j: 3}
    rounded = complex(round(c.real), round(c.imag))
    if abs(c - rounded) > 1e-8 or rounded not in k:
        raise ValueError(f"conjugation of {p} has non-unit coefficient {c}")
    new_local = PauliString.from_label(label)
    xs = list(p.x_bits)
    zs = list(p.z_bits)
    for j, q in enumerate(qubits):
        xs[q], zs[q] = new_local.x_bits[j], new_local.z_bits[j]
    return PauliString(tuple(xs), tuple(zs), p.phase + k[rounded])


# ---------------------------------------------------------------------------
# GF(2) linear algebra on symplectic vectors


def _rref(rows: np.ndarray) -> tuple[np.ndarray, list[int]]:
    m = np.array(rows, dtype=np.uint8) % 2
    if m.ndim == 1:
        m = m[None, :]
    pivots = []
    r = 0
    for c in range(m.shape[1]):
        if r == m.shape[0]:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            m[[r, p]] = m[[p, r]]
        others = np.nonzero(m[:, c])[0]
        for o in others:
            if o != r:
                m[o] ^= m[r]
        pivots.append(c)
        r += 1
    return m[:r], pivots


def gf2_rank(rows: np.ndarray) -> int:
    if len(rows) == 0:
        return 0
    return len(_rref(rows)[1])


def in_span(vec: np.ndarray, rows: np.ndarray) -> bool:
    """Membership of ``vec`` in the GF(2) row space of ``rows``."""
    vec = np.asarray(vec, dtype=np.uint8) % 2
    if not vec.any():
        return True
    if len(rows) == 0:
        return False
    return gf2_rank(np.vstack([rows, vec])) == gf2_rank(rows)


def gf2_nullspace(m: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{v : m v = 0 mod 2}``."""
    m = np.asarray(m, dtype=np.uint8) % 2
    ncols = m.shape[1]
    if m.shape[0] == 0:
        return np.eye(ncols, dtype=np.uint8)
    red, pivots = _rref(m)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = np.zeros(ncols, dtype=np.uint8)
        v[f] = 1
        for row, pc in zip(red, pivots):
            if row[f]:
                v[pc] = 1
        basis.append(v)
    return np.array(basis, dtype=np.uint8).reshape(len(basis), ncols)


def _symplectic_form(rows: np.ndarray) -> np.ndarray:
    """Rows ``(x|z) -> (z|x)`` so that ``a . J(b)`` is the symplectic product."""
    n = rows.shape[1] // 2
    return np.hstack([rows[:, n:], rows[:, :n]])


# ---------------------------------------------------------------------------
# codes


@dataclass(frozen=True)
class Syndrome:
    bits: tuple[int, ...]

    @property
    def is_trivial(self) -> bool:
        return not any(self.bits)

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


class NotCorrectable(Exception):
    """No Pauli of weight at most one reproduces the syndrome."""


@dataclass(frozen=True)
class SubsystemCode:
    """Stabilizer generators, gauge generators and logical representatives.

    A plain stabilizer code is the special case with ``gauge_gens`` empty.
    ``blocks`` partitions the qubits into code blocks.
    """

    n_qubits: int
    stabilizer_gens: tuple[PauliString, ...]
    gauge_gens: tuple[PauliString, ...] = ()
    logical_x: tuple[PauliString, ...] = ()
    logical_z: tuple[PauliString, ...] = ()
    blocks: tuple[tuple[int, ...], ...] = ()
    name: str = field(default="code", compare=False)

    def __post_init__(self) -> None:
        if not self.blocks:
            object.__setattr__(self, "blocks", (tuple(range(self.n_qubits)),))

    def validate(self) -> None:
        """Raise ValueError if any structural invariant fails."""
        ops = self.stabilizer_gens + self.gauge_gens + self.logical_x + self.logical_z
        for p in ops:
            if p.n_qubits != self.n_qubits:
                raise ValueError(f"{p} has the wrong size")
            if not p.is_hermitian:
                raise ValueError(f"{p} is not Hermitian")
        for a, b in itertools.combinations(self.stabilizer_gens, 2):
            if not commutes(a, b):
                raise ValueError(f"stabilizers {a} and {b} anticommute")
        for g in self.gauge_gens:
            for s in self.stabilizer_gens:
                if not commutes(g, s):
                    raise ValueError(f"gauge {g} anticommutes with stabilizer {s}")
        if len(self.logical_x) != len(self.logical_z):
            raise ValueError("need one X and one Z logical per logical qubit")
        for k, (lx, lz) in enumerate(zip(self.logical_x, self.logical_z)):
            if commutes(lx, lz):
                raise ValueError(f"logical pair {k} commutes")
            for s in self.stabilizer_gens:
                if not (commutes(lx, s) and commutes(lz, s)):
                    raise ValueError(f"logical pair {k} is not in the normalizer")
        flat = sorted(q for b in self.blocks for q in b)
        if flat != list(range(self.n_qubits)):
            raise ValueError("blocks do not partition the qubits")

    @property
    def n_logical(self) -> int:
        return len(self.logical_x)

    def group_matrix(self) -> np.ndarray:
        """Symplectic rows spanning the stabilizer-times-gauge group."""
        gens = self.stabilizer_gens + self.gauge_gens
        if not gens:
            return np.zeros((0, 2 * self.n_qubits), dtype=np.uint8)
        return np.array([g.symplectic() for g in gens], dtype=np.uint8)

    def in_gauge_group(self, p: PauliString) -> bool:
        """Whether ``p`` lies in the group generated by stabilizers and gauge operators (up to phase)."""
        return in_span(p.symplectic(), self.group_matrix())

    def in_stabilizer_group(self, p: PauliString) -> bool:
        rows = np.array([g.symplectic() for g in self.stabilizer_gens], dtype=np.uint8)
        return in_span(p.symplectic(), rows)

    def logical_bits(self, p: PauliString) -> tuple[int, ...]:
        """Anticommutation of ``p`` with each (X_k, Z_k) logical pair."""
        out = []
        for lx, lz in zip(self.logical_x, self.logical_z):
            out += [int(not commutes(p, lx)), int(not commutes(p, lz))]
        return tuple(out)

    def tensor(self, other: "SubsystemCode") -> "SubsystemCode":
        """Side-by-side union of two codes; the second occupies the higher indices."""
        n1, n2 = self.n_qubits, other.n_qubits
        left = lambda p: p.tensor(PauliString.identity(n2))  # noqa: E731
        right = lambda p: PauliString.identity(n1).tensor(p)  # noqa: E731
        return SubsystemCode(
            n1 + n2,
            tuple(map(left, self.stabilizer_gens)) + tuple(map(right, other.stabilizer_gens)),
            tuple(map(left, self.gauge_gens)) + tuple(map(right, other.gauge_gens)),
            tuple(map(left, self.logical_x)) + tuple(map(right, other.logical_x)),
            tuple(map(left, self.logical_z)) + tuple(map(right, other.logical_z)),
            self.blocks + tuple(tuple(q + n1 for q in b) for b in other.blocks),
            name=f"{self.name}+{other.name}",
        )

    def conjugated(self, fn) -> "SubsystemCode":
        """Apply a Pauli-to-Pauli map (a Clifford conjugation) to every operator."""
        return SubsystemCode(
            self.n_qubits,
            tuple(map(fn, self.stabilizer_gens)),
            tuple(map(fn, self.gauge_gens)),
            tuple(map(fn, self.logical_x)),
            tuple(map(fn, self.logical_z)),
            self.blocks,
            name=self.name,
        )

    def block_of(self, qubit: int) -> int:
        for k, b in enumerate(self.blocks):
            if qubit in b:
                return k
        raise ValueError(f"qubit {qubit} is in no block")

    def block_code(self, k: int) -> "SubsystemCode":
        """The code restricted to block ``k`` (relabelled to local indices).

        The stabilizer and gauge groups are intersected with Paulis supported on
        the block; logical representatives are taken from the block's share of
        the normalizer.  Requires the groups to factor over blocks.
        """
        qubits = list(self.blocks[k])
        n = self.n_qubits
        stab = _restricted_subgroup(
            np.array([g.symplectic() for g in self.stabilizer_gens], dtype=np.uint8), qubits, n
        )
        group = _restricted_subgroup(self.group_matrix(), qubits, n)
        to_local = lambda v: PauliString.from_symplectic(  # noqa: E731
            np.concatenate([v[qubits], v[[n + q for q in qubits]]])
        )
        stab_ps = tuple(to_local(v) for v in stab)
        gauge_ps = tuple(to_local(v) for v in group)
        lx, lz = _bare_logical_pair(
            np.array([p.symplectic() for p in stab_ps], dtype=np.uint8).reshape(-1, 2 * len(qubits)),
            np.array([p.symplectic() for p in gauge_ps], dtype=np.uint8).reshape(-1, 2 * len(qubits)),
        )
        return SubsystemCode(
            len(qubits), stab_ps, gauge_ps, lx, lz, name=f"{self.name}[block {k}]"
        )


def _restricted_subgroup(rows: np.ndarray, qubits: Sequence[int], n: int) -> np.ndarray:
    """Basis of the elements of span(rows) supported on ``qubits``."""
    if len(rows) == 0:
        return np.zeros((0, 2 * n), dtype=np.uint8)
    red, _ = _rref(rows)
    outside = [q for q in range(n) if q not in qubits]
    cols = outside + [n + q for q in outside]
    if not cols:
        return red
    # combinations c with c @ red vanishing on the outside columns
    coeffs = gf2_nullspace(red[:, cols].T)
    if len(coeffs) == 0:
        return np.zeros((0, 2 * n), dtype=np.uint8)
    sub = (coeffs.astype(np.int64) @ red.astype(np.int64)) % 2
    out, _ = _rref(sub.astype(np.uint8))
    return out


def _bare_logical_pair(stab: np.ndarray, group: np.ndarray):
    """An anticommuting pair of Paulis commuting with ``group`` and outside ``stab``."""
    m = group.shape[1]
    if len(group):
        normalizer = gf2_nullspace(_symplectic_form(group))
    else:
        normalizer = np.eye(m, dtype=np.uint8)
    extra = []
    basis = stab.copy() if len(stab) else np.zeros((0, m), dtype=np.uint8)
    for v in normalizer:
        if not in_span(v, basis):
            extra.append(v)
            basis = np.vstack([basis, v])
    # pick an anticommuting pair among the quotient representatives
    for a, b in itertools.combinations(extra, 2):
        pa, pb = PauliString.from_symplectic(a), PauliString.from_symplectic(b)
        if not commutes(pa, pb):
            return (pa,), (pb,)
    if not extra:
        return (), ()
    raise ValueError("could not find an anticommuting logical pair")


def bs9_index(r: int, c: int) -> int:
    """Row-major index of grid site (r, c) on the 3x3 Bacon-Shor lattice."""
    return 3 * r + c


def bacon_shor_9() -> SubsystemCode:
    """The [[9,1,3]] Bacon-Shor subsystem code on a 3x3 grid.

    Gauge generators are X X on horizontal neighbours and Z Z on vertical
    neighbours; stabilizers are X on two adjacent columns and Z on two adjacent
    rows; logical X is X on a column, logical Z is Z on a row.
    """
    n = 9
    idx = bs9_index
    gauge = []
    for r in range(3):
        for c in range(2):
            gauge.append(PauliString.from_sparse(n, {idx(r, c): "X", idx(r, c + 1): "X"}))
    for r in range(2):
        for c in range(3):
            gauge.append(PauliString.from_sparse(n, {idx(r, c): "Z", idx(r + 1, c): "Z"}))
    stabs = []
    for c in range(2):
        stabs.append(
            PauliString.from_sparse(n, {idx(r, cc): "X" for r in range(3) for cc in (c, c + 1)})
        )
    for r in range(2):
        stabs.append(
            PauliString.from_sparse(n, {idx(rr, c): "Z" for rr in (r, r + 1) for c in range(3)})
        )
    lx = PauliString.from_sparse(n, {idx(r, 0): "X" for r in range(3)})
    lz = PauliString.from_sparse(n, {idx(0, c): "Z" for c in range(3)})
    code = SubsystemCode(n, tuple(stabs), tuple(gauge), (lx,), (lz,), name="bacon-shor-9")
    code.validate()
    return code


def trivial_code() -> SubsystemCode:
    """A freshly prepared qubit treated as a code with stabilizer <Z>."""
    return SubsystemCode(
        1, (PauliString.from_label("Z"),), (), (), (), name="trivial"
    )


def syndrome(code: SubsystemCode, e: PauliString) -> Syndrome:
    if e.n_qubits != code.n_qubits:
        raise ValueError(f"error acts on {e.n_qubits} qubits, code has {code.n_qubits}")
    return Syndrome(tuple(int(not commutes(e, s)) for s in code.stabilizer_gens))


@lru_cache(maxsize=64)
def _decoder_table(code: SubsystemCode) -> dict[tuple[int, ...], PauliString]:
    table = {syndrome(code, PauliString.identity(code.n_qubits)).bits: PauliString.identity(code.n_qubits)}
    for e in single_qubit_errors(code.n_qubits):
        table.setdefault(syndrome(code, e).bits, e)
    return table


def decode_single(code: SubsystemCode, s: Syndrome) -> PauliString:
    """Lowest-index weight <= 1 Pauli with syndrome ``s``.

    Ties break by qubit index, then X < Y < Z.  The correction is only defined
    up to stabilizer and gauge elements.
    """
    if len(s.bits) != len(code.stabilizer_gens):
        raise ValueError("syndrome length does not match the code")
    try:
        return _decoder_table(code)[tuple(s.bits)]
    except KeyError:
        raise NotCorrectable(f"no weight <= 1 Pauli has syndrome {s}") from None


def iter_paulis(n: int, max_weight: int) -> Iterable[PauliString]:
    """All unsigned Paulis on ``n`` qubits with weight at most ``max_weight``."""
    yield PauliString.identity(n)
    for w in range(1, max_weight + 1):
        for qs in itertools.combinations(range(n), w):
            for syms in itertools.product("XYZ", repeat=w):
                yield PauliString.from_sparse(n, dict(zip(qs, syms)))


class GroupMembership:
    """Batched membership test for the GF(2) span of symplectic rows."""

    def __init__(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=np.uint8)
        if len(rows):
            self.rows, self.pivots = _rref(rows)
        else:
            self.rows, self.pivots = rows.reshape(0, rows.shape[-1] if rows.ndim == 2 else 0), []

    def reduce(self, vecs: np.ndarray) -> np.ndarray:
        v = np.array(vecs, dtype=np.uint8) % 2
        for row, p in zip(self.rows, self.pivots):
            hit = v[:, p] == 1
            v[hit] ^= row
        return v

    def contains(self, vecs: np.ndarray) -> np.ndarray:
        return ~self.reduce(np.atleast_2d(vecs)).any(axis=1)


def complete_in_group(
    group: GroupMembership,
    fixed: PauliString,
    exclude: Iterable[int] = (),
    max_weight: int = 3,
) -> PauliString | None:
    """Lowest-weight ``G`` off ``fixed``'s support with ``fixed * G`` in the group.

    Qubits in ``exclude`` are not used.  Returns the identity when ``fixed``
    itself is a member and ``None`` if nothing of weight ``<= max_weight`` works.
    Ties break by enumeration order (qubit indices, then X < Y < Z).
    """
    n = fixed.n_qubits
    base = fixed.unsigned().symplectic()
    if group.contains(base)[0]:
        return PauliString.identity(n)
    free = [q for q in range(n) if q not in set(exclude) | set(fixed.support)]
    codes = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
    for w in range(1, max_weight + 1):
        cands = []
        labels = []
        for qs in itertools.combinations(free, w):
            for syms in itertools.product("XYZ", repeat=w):
                v = base.copy()
                for q, s in zip(qs, syms):
                    v[q] ^= codes[s][0]
                    v[n + q] ^= codes[s][1]
                cands.append(v)
                labels.append((qs, syms))
        if not cands:
            continue
        hits = np.nonzero(group.contains(np.array(cands)))[0]
        if hits.size:
            qs, syms = labels[hits[0]]
            return PauliString.from_sparse(n, dict(zip(qs, syms)))
    return None
