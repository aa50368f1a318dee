"""Computationally tractable states: exact amplitudes and exact Born
sampling for product states and diagonal-circuit phase states.

Support is deliberately limited to U-blocks of the recognized shape
"single-qubit gates, then diagonal gates" (the shapes the four circuit
families produce); ``CtState`` is the extension point for anything else.
All amplitude routines are vectorized over (batch, n) uint8 bit arrays,
which is what the expectation estimator consumes.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from . import _bits
from .circuits import Circuit, Gate, gate_matrix
from .errors import ValidationError


class CtState(abc.ABC):
    """State with computable amplitudes and exactly samplable Born law."""

    n: int

    @abc.abstractmethod
    def amplitudes(self, bits: np.ndarray) -> np.ndarray:
        """<x|phi> for an (..., n) bit array, shape (...) complex."""

    @abc.abstractmethod
    def sample_bits(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """(size, n) uint8 samples drawn from |<x|phi>|**2."""

    def amplitude(self, x) -> complex:
        bits = _coerce_bits(x, self.n)
        return complex(self.amplitudes(bits))

    def sample(self, rng: np.random.Generator) -> str:
        return _bits.bits_to_string(self.sample_bits(rng, 1)[0])


def _coerce_bits(x, n: int) -> np.ndarray:
    if isinstance(x, str):
        bits = _bits.string_to_bits(x)
    elif isinstance(x, (int, np.integer)):
        bits = _bits.index_to_bits(np.int64(x), n)
    else:
        bits = np.asarray(x, dtype=np.uint8)
    if bits.shape[-1] != n:
        raise ValidationError(f"expected {n} bits, got shape {bits.shape}")
    return bits


@dataclass(frozen=True)
class ProductState(CtState):
    """Tensor product of per-qubit states (a_j |0> + b_j |1>)."""

    amp0: np.ndarray
    amp1: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amp0, dtype=complex)
        b = np.asarray(self.amp1, dtype=complex)
        object.__setattr__(self, "amp0", a)
        object.__setattr__(self, "amp1", b)
        if a.shape != b.shape or a.ndim != 1:
            raise ValidationError("amplitude arrays must be equal-length vectors")
        norms = np.abs(a) ** 2 + np.abs(b) ** 2
        if np.max(np.abs(norms - 1.0)) > 1e-12:
            raise ValidationError("per-qubit amplitudes must be normalized")

    @property
    def n(self) -> int:
        return len(self.amp0)

    @classmethod
    def zero(cls, n: int) -> "ProductState":
        return cls(np.ones(n), np.zeros(n))

    @classmethod
    def plus(cls, n: int) -> "ProductState":
        amp = np.full(n, 1.0 / math.sqrt(2))
        return cls(amp, amp.copy())

    def amplitudes(self, bits) -> np.ndarray:
        bits = np.asarray(bits)
        return np.where(bits > 0, self.amp1, self.amp0).prod(axis=-1)

    def sample_bits(self, rng: np.random.Generator, size: int) -> np.ndarray:
        p1 = np.abs(self.amp1) ** 2
        return (rng.random((size, self.n)) < p1).astype(np.uint8)


@dataclass(frozen=True)
class PhaseState(CtState):
    """Diagonal gates applied to a product state.

    amplitude(x) = phase(x) * base_amplitude(x) with |phase(x)| = 1, so
    the Born distribution is the base state's.
    """

    base: ProductState
    diagonal: tuple[Gate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "diagonal", tuple(self.diagonal))
        for gate in self.diagonal:
            if not gate.is_diagonal:
                raise ValidationError(f"{gate.kind} is not diagonal")
            if any(q >= self.base.n for q in gate.qubits):
                raise ValidationError("diagonal gate outside register")

    @property
    def n(self) -> int:
        return self.base.n

    def phases(self, bits) -> np.ndarray:
        bits = np.asarray(bits)
        phase = np.ones(bits.shape[:-1], dtype=complex)
        for gate in self.diagonal:
            kind = gate.kind
            if kind == "Z":
                phase = phase * np.where(bits[..., gate.qubits[0]] > 0, -1.0, 1.0)
            elif kind in ("S", "T", "RZ"):
                theta = {"S": math.pi / 2, "T": math.pi / 4}.get(kind)
                if theta is None:
                    theta = gate.angle.radians
                # Rz(theta)|x> = exp(i theta (x - 1/2)) |x>
                exps = np.exp(1j * theta * (bits[..., gate.qubits[0]] - 0.5))
                phase = phase * exps
            elif kind == "CZ":
                a, b = gate.qubits
                both = (bits[..., a] > 0) & (bits[..., b] > 0)
                phase = phase * np.where(both, -1.0, 1.0)
            elif kind == "CCZ":
                a, b, c = gate.qubits
                allset = (bits[..., a] > 0) & (bits[..., b] > 0) & (bits[..., c] > 0)
                phase = phase * np.where(allset, -1.0, 1.0)
            else:
                raise ValidationError(f"unsupported diagonal kind {kind!r}")
        return phase

    def amplitudes(self, bits) -> np.ndarray:
        return self.base.amplitudes(bits) * self.phases(bits)

    def sample_bits(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return self.base.sample_bits(rng, size)


def ct_state_of(u_block: Circuit) -> PhaseState:
    """State U|0^n> for a recognized U-block shape.

    Recognized: any prefix of single-qubit gates (composed per wire)
    followed by diagonal gates only.  Anything else is rejected.
    """
    gates = u_block.gates
    split = 0
    for i, gate in enumerate(gates):
        if not gate.is_diagonal:
            split = i + 1
    prefix, suffix = gates[:split], gates[split:]
    for gate in prefix:
        if len(gate.qubits) != 1:
            raise ValidationError(
                "unrecognized U-block: a multi-qubit gate precedes the last "
                "non-diagonal gate")
    n = u_block.n
    mats = [np.eye(2, dtype=complex) for _ in range(n)]
    for gate in prefix:
        q = gate.qubits[0]
        mats[q] = gate_matrix(gate) @ mats[q]
    amp0 = np.array([m[0, 0] for m in mats])
    amp1 = np.array([m[1, 0] for m in mats])
    return PhaseState(ProductState(amp0, amp1), suffix)
