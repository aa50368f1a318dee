"""Efficiently computable sparse operations: column oracles, signed-Pauli
algebra, Clifford conjugation, the four-coefficient single-qubit
decomposition for conjugated rotations, and lightcone-local operators.

Phase convention: a signed Pauli is i**k X^a Z^b with k tracked mod 4, so

    P |x> = i**k (-1)**(b.x) |x XOR a>.

Every operator exposes a scalar column oracle ``columns(x)`` (distinct row
indices, nonzero entries) and a batched ``columns_bits`` used by the
expectation estimator; the batched form may list a row twice where the
scalar form would merge, which leaves row sums unchanged.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from . import _bits
from .circuits import (
    CLIFFORD_MAGIC,
    CONJUGATED_CLIFFORD,
    CONSTANT_DEPTH,
    IQP,
    PAULI_CONJUGATION_KINDS,
    Circuit,
    CtEcsDecomposition,
    Gate,
    rx_matrix,
    rz_matrix,
)
from .errors import ResourceLimitError, ValidationError

COEFF_EPS = 1e-12
DEFAULT_SUPPORT_CAP = 12
DEFAULT_TERM_CAP = 256


class EcsOperation(abc.ABC):
    """Operator with an efficiently computable sparse column oracle."""

    n: int

    @property
    @abc.abstractmethod
    def sparsity(self) -> int:
        """Upper bound on nonzero entries per column."""

    @abc.abstractmethod
    def columns(self, x: int) -> list[tuple[complex, int]]:
        """Nonzero entries of column x as (value, row-index) pairs."""

    @abc.abstractmethod
    def columns_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Batched columns for (B, n) inputs.

        Returns (values (B, s) complex, rows (B, s, n) uint8); zero values
        pad rows that have fewer entries.
        """


@dataclass(frozen=True)
class SignedPauli(EcsOperation):
    """i**k X^xmask Z^zmask on n qubits (masks in big-endian qubit order)."""

    n: int
    k: int
    xmask: int
    zmask: int

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % 4)
        top = 1 << self.n
        if not (0 <= self.xmask < top and 0 <= self.zmask < top):
            raise ValidationError("Pauli mask outside register")

    @classmethod
    def identity(cls, n: int) -> "SignedPauli":
        return cls(n, 0, 0, 0)

    @classmethod
    def z_on(cls, n: int, qubits) -> "SignedPauli":
        return cls(n, 0, 0, _bits.qubits_to_mask(qubits, n))

    @classmethod
    def x_on(cls, n: int, qubits) -> "SignedPauli":
        return cls(n, 0, _bits.qubits_to_mask(qubits, n), 0)

    @classmethod
    def y_on(cls, n: int, qubits) -> "SignedPauli":
        qubits = tuple(qubits)
        mask = _bits.qubits_to_mask(qubits, n)
        return cls(n, len(qubits) % 4, mask, mask)

    @property
    def phase(self) -> complex:
        return 1j ** self.k

    @property
    def is_hermitian(self) -> bool:
        return (self.k % 2) == (_bits.mask_weight(self.xmask & self.zmask) % 2)

    def __matmul__(self, other: "SignedPauli") -> "SignedPauli":
        if self.n != other.n:
            raise ValidationError("Pauli widths disagree")
        k = self.k + other.k + 2 * _bits.parity(self.zmask & other.xmask)
        return SignedPauli(self.n, k, self.xmask ^ other.xmask,
                           self.zmask ^ other.zmask)

    @property
    def sparsity(self) -> int:
        return 1

    def columns(self, x: int) -> list[tuple[complex, int]]:
        sign = -1.0 if _bits.parity(self.zmask & x) else 1.0
        return [(self.phase * sign, x ^ self.xmask)]

    def columns_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bits = np.asarray(bits, dtype=np.uint8)
        xbits = _bits.index_to_bits(np.int64(self.xmask), self.n)
        zbits = _bits.index_to_bits(np.int64(self.zmask), self.n).astype(np.int64)
        par = (bits.astype(np.int64) @ zbits) & 1
        betas = (self.phase * (1.0 - 2.0 * par)).astype(complex)[:, None]
        gammas = (bits ^ xbits)[:, None, :]
        return betas, gammas


def conjugate_pauli_by_clifford(gates, pauli: SignedPauli) -> SignedPauli:
    """E^dag P E for a gate list E over {H, S, CZ, X, Y, Z}.

    Gates are in application order (E = gates[-1] ... gates[0] as a matrix),
    so the per-gate updates run last gate first.
    """
    n = pauli.n
    k, xm, zm = pauli.k, pauli.xmask, pauli.zmask
    for gate in reversed(tuple(gates)):
        if gate.kind not in PAULI_CONJUGATION_KINDS:
            raise ValidationError(
                f"cannot conjugate by non-Clifford kind {gate.kind!r}")
        if gate.kind == "CZ":
            pa = 1 << (n - 1 - gate.qubits[0])
            pb = 1 << (n - 1 - gate.qubits[1])
            xa, xb = bool(xm & pa), bool(xm & pb)
            if xb:
                zm ^= pa
            if xa:
                zm ^= pb
            if xa and xb:
                k += 2
            continue
        pos = 1 << (n - 1 - gate.qubits[0])
        xb, zb = bool(xm & pos), bool(zm & pos)
        if gate.kind == "H":
            # swap X and Z on the wire; XZ -> ZX costs a sign
            if xb != zb:
                xm ^= pos
                zm ^= pos
            if xb and zb:
                k += 2
        elif gate.kind == "S":
            # S^dag X S = -Y = i**3 X Z
            if xb:
                zm ^= pos
                k += 3
        elif gate.kind == "X":
            if zb:
                k += 2
        elif gate.kind == "Y":
            if xb != zb:
                k += 2
        elif gate.kind == "Z":
            if xb:
                k += 2
    return SignedPauli(n, k % 4, xm, zm)


class PauliCombination(EcsOperation):
    """Complex combination of Pauli strings, merged over (xmask, zmask).

    The i**k phases of input terms are folded into the coefficients;
    coefficients below 1e-12 in modulus are dropped so the reported
    sparsity stays honest.
    """

    def __init__(self, n: int, terms, *, term_cap: int = DEFAULT_TERM_CAP):
        self.n = n
        acc: dict[tuple[int, int], complex] = {}
        for coeff, pauli in terms:
            if pauli.n != n:
                raise ValidationError("Pauli widths disagree")
            key = (pauli.xmask, pauli.zmask)
            acc[key] = acc.get(key, 0j) + complex(coeff) * pauli.phase
        kept = sorted(
            (key, val) for key, val in acc.items() if abs(val) > COEFF_EPS)
        if len(kept) > term_cap:
            raise ResourceLimitError(
                f"Pauli combination grew to {len(kept)} terms (cap {term_cap})")
        self._xmasks = np.array([key[0] for key, _ in kept], dtype=np.int64)
        self._zmasks = np.array([key[1] for key, _ in kept], dtype=np.int64)
        self._coeffs = np.array([val for _, val in kept], dtype=complex)
        self._xbits = _bits.mask_bit_matrix(self._xmasks, n)
        self._zbits = _bits.mask_bit_matrix(self._zmasks, n).astype(np.int64)

    @property
    def terms(self) -> list[tuple[complex, SignedPauli]]:
        return [
            (complex(c), SignedPauli(self.n, 0, int(xm), int(zm)))
            for c, xm, zm in zip(self._coeffs, self._xmasks, self._zmasks)
        ]

    @property
    def term_count(self) -> int:
        return len(self._coeffs)

    @property
    def sparsity(self) -> int:
        return len(set(int(x) for x in self._xmasks))

    def __matmul__(self, other: "PauliCombination") -> "PauliCombination":
        if self.n != other.n:
            raise ValidationError("Pauli widths disagree")
        terms = []
        for ca, pa in self.terms:
            for cb, pb in other.terms:
                terms.append((ca * cb, pa @ pb))
        return PauliCombination(self.n, terms)

    def columns(self, x: int) -> list[tuple[complex, int]]:
        acc: dict[int, complex] = {}
        for coeff, xm, zm in zip(self._coeffs, self._xmasks, self._zmasks):
            sign = -1.0 if _bits.parity(int(zm) & x) else 1.0
            row = x ^ int(xm)
            acc[row] = acc.get(row, 0j) + coeff * sign
        return [(val, row) for row, val in sorted(acc.items()) if abs(val) > COEFF_EPS]

    def columns_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bits = np.asarray(bits, dtype=np.uint8)
        par = (bits.astype(np.int64) @ self._zbits.T) & 1  # (B, T)
        betas = self._coeffs[None, :] * (1.0 - 2.0 * par)
        gammas = bits[:, None, :] ^ self._xbits[None, :, :]
        return betas, gammas


@dataclass(frozen=True)
class LocalOperator(EcsOperation):
    """Dense Hermitian-unitary block on a small support, identity elsewhere."""

    n: int
    support: tuple[int, ...]
    block: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple(self.support))
        if sorted(set(self.support)) != list(self.support):
            raise ValidationError("support must be sorted and duplicate-free")
        dim = 1 << len(self.support)
        if self.block.shape != (dim, dim):
            raise ValidationError("block shape disagrees with support size")

    @property
    def sparsity(self) -> int:
        return max(
            int(np.count_nonzero(np.abs(self.block[:, c]) > COEFF_EPS))
            for c in range(self.block.shape[1]))

    def _local_index(self, x: int) -> int:
        m = len(self.support)
        col = 0
        for i, q in enumerate(self.support):
            col |= _bits.qubit_bit(x, q, self.n) << (m - 1 - i)
        return col

    def columns(self, x: int) -> list[tuple[complex, int]]:
        m = len(self.support)
        col = self.block[:, self._local_index(x)]
        out = []
        for row in range(1 << m):
            if abs(col[row]) <= COEFF_EPS:
                continue
            y = x
            for i, q in enumerate(self.support):
                pos = 1 << (self.n - 1 - q)
                if (row >> (m - 1 - i)) & 1:
                    y |= pos
                else:
                    y &= ~pos
            out.append((complex(col[row]), y))
        return out

    def columns_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bits = np.asarray(bits, dtype=np.uint8)
        m = len(self.support)
        dim = 1 << m
        support = list(self.support)
        cols = _bits.bits_to_index(bits[:, support])
        betas = self.block[:, cols].T  # (B, dim)
        row_bits = _bits.index_to_bits(np.arange(dim), m)  # (dim, m)
        gammas = np.repeat(bits[:, None, :], dim, axis=1)
        gammas[:, :, support] = row_bits[None, :, :]
        return betas, gammas


class EcsProduct(EcsOperation):
    """Ordered product of ECS factors: factors[0] @ ... @ factors[-1]."""

    def __init__(self, factors):
        factors = tuple(factors)
        if not factors:
            raise ValidationError("product needs at least one factor")
        n = factors[0].n
        if any(f.n != n for f in factors):
            raise ValidationError("factor widths disagree")
        self.n = n
        self.factors = factors

    @property
    def sparsity(self) -> int:
        out = 1
        for f in self.factors:
            out *= f.sparsity
        return out

    def columns(self, x: int) -> list[tuple[complex, int]]:
        acc: dict[int, complex] = {x: 1.0 + 0j}
        for factor in reversed(self.factors):
            nxt: dict[int, complex] = {}
            for row, coeff in acc.items():
                for beta, gamma in factor.columns(row):
                    nxt[gamma] = nxt.get(gamma, 0j) + coeff * beta
            acc = nxt
        return [(val, row) for row, val in sorted(acc.items()) if abs(val) > COEFF_EPS]

    def columns_bits(self, bits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        bits = np.asarray(bits, dtype=np.uint8)
        batch = bits.shape[0]
        betas = np.ones((batch, 1), dtype=complex)
        gammas = bits[:, None, :]
        for factor in reversed(self.factors):
            width = gammas.shape[1]
            fb, fg = factor.columns_bits(gammas.reshape(batch * width, self.n))
            fw = fb.shape[1]
            betas = (betas[:, :, None] * fb.reshape(batch, width, fw))
            betas = betas.reshape(batch, width * fw)
            gammas = fg.reshape(batch, width * fw, self.n)
        return betas, gammas


# --- conjugated-rotation decomposition ----------------------------------------

def conjugated_z_decomposition(phi: float, theta: float) -> tuple[complex, ...]:
    """Coefficients (a_I, a_Z, a_X, a_Y) with
    sum_P a_P P = Rz(phi) Rx(theta) Z Rx(-theta) Rz(-phi)."""
    z = np.diag([1.0 + 0j, -1.0])
    m = rz_matrix(phi) @ rx_matrix(theta) @ z @ rx_matrix(-theta) @ rz_matrix(-phi)
    paulis = (
        np.eye(2, dtype=complex),
        z,
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]], dtype=complex),
    )
    return tuple(complex(np.trace(p @ m)) / 2.0 for p in paulis)


# --- lightcones -----------------------------------------------------------------

def _lightcone_marked(circuit: Circuit, j: int, cap: int) -> tuple[tuple[int, ...], list[Gate]]:
    if not 0 <= j < circuit.n:
        raise ValidationError(f"qubit {j} outside register")
    support = {j}
    marked: list[Gate] = []
    for gate in reversed(circuit.gates):
        if support.intersection(gate.qubits):
            marked.append(gate)
            support.update(gate.qubits)
            if len(support) > cap:
                raise ResourceLimitError(
                    f"lightcone of qubit {j} exceeds the {cap}-qubit support cap")
    marked.reverse()
    return tuple(sorted(support)), marked


def lightcone(circuit: Circuit, j: int, *, cap: int = DEFAULT_SUPPORT_CAP) -> tuple[int, ...]:
    """Reverse lightcone of qubit j: the support of C^dag Z_j C."""
    return _lightcone_marked(circuit, j, cap)[0]


def local_z_operator(
    circuit: Circuit, j: int, *, cap: int = DEFAULT_SUPPORT_CAP
) -> LocalOperator:
    """C^dag Z_j C as a dense block on the lightcone of j.

    Only gates intersecting the growing support participate; the rest
    cancel against their adjoints.
    """
    from .oracle import apply_circuit_to_matrix  # local import, no cycle

    support, marked = _lightcone_marked(circuit, j, cap)
    m = len(support)
    relabel = {q: i for i, q in enumerate(support)}
    mini = Circuit(m, tuple(
        Gate(g.kind, tuple(relabel[q] for q in g.qubits), g.angle) for g in marked))
    w = apply_circuit_to_matrix(mini, np.eye(1 << m, dtype=complex))
    signs = 1.0 - 2.0 * _bits.index_to_bits(np.arange(1 << m), m)[:, relabel[j]]
    block = w.conj().T @ (signs[:, None] * w)
    return LocalOperator(circuit.n, support, block)


# --- family-specific conjugated observables --------------------------------------

def ecs_for(
    decomp: CtEcsDecomposition,
    mask: int,
    *,
    support_cap: int = DEFAULT_SUPPORT_CAP,
    term_cap: int = DEFAULT_TERM_CAP,
) -> EcsOperation:
    """V^dag Z^mask V for the decomposition's family.

    IQP gives X^mask; Clifford magic a single signed Pauli; conjugated
    Clifford a Pauli combination; constant depth a product of
    lightcone-local blocks.  Raises on mask 0 and on cap violations.
    """
    n = decomp.n
    if not 0 < mask < (1 << n):
        raise ValidationError("mask must be a nonzero n-bit string")
    qubits = _bits.mask_to_qubits(mask, n)
    if decomp.family == IQP:
        return SignedPauli(n, 0, mask, 0)
    if decomp.family == CLIFFORD_MAGIC:
        out = SignedPauli.identity(n)
        for j in qubits:
            out = out @ conjugate_pauli_by_clifford(
                decomp.v_block.gates, SignedPauli.z_on(n, (j,)))
        return out
    if decomp.family == CONJUGATED_CLIFFORD:
        params = decomp.params
        alphas = conjugated_z_decomposition(
            params.phi_radians, params.theta_radians)
        clifford = params.clifford
        out: PauliCombination | None = None
        for j in qubits:
            terms = []
            basis = (
                SignedPauli.identity(n),
                SignedPauli.z_on(n, (j,)),
                SignedPauli.x_on(n, (j,)),
                SignedPauli.y_on(n, (j,)),
            )
            for alpha, pauli in zip(alphas, basis):
                if abs(alpha) <= COEFF_EPS:
                    continue
                terms.append((alpha, conjugate_pauli_by_clifford(clifford, pauli)))
            factor = PauliCombination(n, terms, term_cap=term_cap)
            out = factor if out is None else out @ factor
        return out
    if decomp.family == CONSTANT_DEPTH:
        try:
            factors = [
                local_z_operator(decomp.v_block, j, cap=support_cap) for j in qubits
            ]
        except ResourceLimitError as exc:
            raise ResourceLimitError(
                f"{exc} (while conjugating Z^s with |s|={len(qubits)})") from exc
        return factors[0] if len(factors) == 1 else EcsProduct(factors)
    raise ValidationError(f"unknown family {decomp.family!r}")


# --- checks ----------------------------------------------------------------------

def dense_from_columns(op: EcsOperation) -> np.ndarray:
    """Materialize the operator from its column oracle (test helper)."""
    dim = 1 << op.n
    mat = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        for beta, gamma in op.columns(x):
            mat[gamma, x] = beta
    return mat


def check_ecs_observable(
    op: EcsOperation,
    rng: np.random.Generator,
    *,
    trials: int = 4,
    tol: float = 1e-9,
) -> None:
    """Spot-check Hermiticity and A @ A = I on sampled basis columns.

    Every conjugated Z^s observable satisfies both; operators failing
    either are rejected at the estimator boundary.
    """
    dim = 1 << op.n
    for _ in range(trials):
        x = int(rng.integers(dim))
        column = op.columns(x)
        acc: dict[int, complex] = {}
        for beta, gamma in column:
            mirror = dict((row, val) for val, row in op.columns(gamma))
            if abs(mirror.get(x, 0j) - np.conj(beta)) > tol:
                raise ValidationError(
                    "operator is not Hermitian on sampled columns")
            for beta2, row in op.columns(gamma):
                acc[row] = acc.get(row, 0j) + beta * beta2
        acc[x] = acc.get(x, 0j) - 1.0
        if any(abs(v) > tol for v in acc.values()):
            raise ValidationError(
                "operator squared is not the identity on sampled columns")
