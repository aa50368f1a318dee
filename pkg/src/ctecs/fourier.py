"""Fourier-side machinery: coefficient tables, the sampled expectation
estimator, degree and rate selection, and noise attenuation on tables.

The estimator draws x from the state's Born law and averages

    f(x) = Re[ sum_j conj(beta_j(x)) <gamma_j(x)|phi> / <x|phi> ]

whose mean is <phi|O|phi> exactly and whose second moment is ||O|phi>||**2
(= 1 for the Hermitian-unitary observables used here).  A median of K
batch means of size B then satisfies a Chebyshev-plus-Chernoff tail bound:
with B = ceil(4/tau**2) each batch errs by more than tau with probability
at most 1/4, and the median errs with probability at most exp(-K/8).

Two coefficient sources sit behind one interface: the estimator above, and
a dense exact source so end-to-end tests can separate truncation error
from estimation error.  Base-2 logarithms throughout.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass

import numpy as np

from . import _bits, oracle
from .circuits import CtEcsDecomposition
from .ctstate import CtState, ct_state_of
from .ecs import EcsOperation, check_ecs_observable, ecs_for
from .errors import ResourceLimitError, ValidationError

DEFAULT_MASK_BUDGET = 100_000


# --- coefficient tables ---------------------------------------------------------

class FourierTable:
    """Sparse map from low-weight masks to real coefficients.

    The all-zeros entry is pinned to exactly 1/2**n (so the represented
    function sums to 1); masks above the degree cutoff are implicitly 0.
    Immutable after construction.
    """

    def __init__(self, n: int, c: int, entries: dict[int, float]):
        if not 0 <= c <= n:
            raise ValidationError(f"degree cutoff {c} outside [0, {n}]")
        self.n = n
        self.c = c
        pinned = 0.5 ** n
        zero = entries.get(0)
        if zero is None or abs(zero - pinned) > 1e-15 * pinned:
            raise ValidationError("table must carry exactly 1/2**n at the zero mask")
        for mask, value in entries.items():
            if not 0 <= mask < (1 << n):
                raise ValidationError(f"mask {mask} outside register")
            if _bits.mask_weight(mask) > c:
                raise ValidationError(
                    f"mask of weight {_bits.mask_weight(mask)} exceeds cutoff {c}")
            if not np.isfinite(value):
                raise ValidationError("coefficients must be finite")
        items = sorted(entries.items())
        self._masks = np.array([m for m, _ in items], dtype=np.int64)
        self._values = np.array([float(v) for _, v in items])

    @property
    def masks(self) -> np.ndarray:
        return self._masks.copy()

    @property
    def values(self) -> np.ndarray:
        return self._values.copy()

    @property
    def entries(self) -> dict[int, float]:
        return {int(m): float(v) for m, v in zip(self._masks, self._values)}

    def coefficient(self, mask: int) -> float:
        pos = np.searchsorted(self._masks, mask)
        if pos < len(self._masks) and self._masks[pos] == mask:
            return float(self._values[pos])
        return 0.0

    def evaluate(self, x) -> float:
        """q(x) = sum_s v_s (-1)**(s.x) for one integer or bitstring x."""
        if isinstance(x, str):
            x = _bits.string_to_index(x)
        signs = _bits.sign_character(self._masks, [x], self.n)[:, 0]
        return float(signs @ self._values)

    def dense_values(self) -> np.ndarray:
        """The represented function on all 2**n points (index order)."""
        coeffs = np.zeros(1 << self.n)
        coeffs[self._masks] = self._values
        return oracle.inverse_fourier(coeffs)

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "c": self.c,
            "entries": [
                {"s": _bits.index_to_string(int(m), self.n), "v": float(v)}
                for m, v in zip(self._masks, self._values)
            ],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "FourierTable":
        entries = {
            _bits.string_to_index(e["s"]): float(e["v"]) for e in d["entries"]}
        return cls(int(d["n"]), int(d["c"]), entries)


def uniform_table(n: int) -> FourierTable:
    return FourierTable(n, 0, {0: 0.5 ** n})


def attenuate(table: FourierTable, rate: float) -> FourierTable:
    """Multiply each entry by (1-rate)**|s|; the zero entry is unchanged."""
    if not 0.0 <= rate < 1.0:
        raise ValidationError(f"attenuation rate must lie in [0, 1), got {rate}")
    entries = {
        int(m): float(v) * (1.0 - rate) ** _bits.mask_weight(int(m))
        for m, v in zip(table.masks, table.values)
    }
    return FourierTable(table.n, table.c, entries)


# --- theory-side constants --------------------------------------------------------

def choose_degree(alpha: float, delta: float, lam: float) -> int:
    """Degree cutoff c = ceil((1/lam) * log2(10*sqrt(alpha)/delta)).

    Always exceeds 3 on the valid ranges alpha >= 1, 0 < delta < 1,
    0 < lam < 1.
    """
    if alpha < 1.0:
        raise ValidationError(f"alpha must be >= 1, got {alpha}")
    if not 0.0 < delta < 1.0:
        raise ValidationError(f"delta must lie in (0, 1), got {delta}")
    if not 0.0 < lam < 1.0:
        raise ValidationError(f"lambda must lie in (0, 1), got {lam}")
    c = math.ceil(math.log2(10.0 * math.sqrt(alpha) / delta) / lam)
    assert c > 3
    return c


def theory_accuracy_denominator(n: int, c: int, delta: float) -> float:
    """f(n) = 10 (n**c + 1) / delta, the per-coefficient accuracy scale."""
    return 10.0 * (float(n) ** c + 1.0) / delta


@dataclass(frozen=True)
class LambdaCheck:
    ok: bool
    ratio: float
    bound: float
    slack: float

    def to_json_dict(self) -> dict:
        return {"ok": self.ok, "ratio": self.ratio, "bound": self.bound,
                "slack": self.slack}


def validate_lambda(alpha: float, delta: float, lam: float, epsilon: float) -> LambdaCheck:
    """Check 1 <= epsilon/lam <= 1 + 1/((10 sqrt(alpha)/delta) log2(10 sqrt(alpha)/delta))."""
    if alpha < 1.0 or not 0.0 < delta < 1.0:
        raise ValidationError("alpha must be >= 1 and delta in (0, 1)")
    if not 0.0 < lam < 1.0 or not 0.0 < epsilon < 1.0:
        raise ValidationError("rates must lie in (0, 1)")
    base = 10.0 * math.sqrt(alpha) / delta
    bound = 1.0 + 1.0 / (base * math.log2(base))
    ratio = epsilon / lam
    ok = 1.0 <= ratio <= bound
    return LambdaCheck(ok=ok, ratio=ratio, bound=bound, slack=bound - ratio)


# --- the sampled estimator ---------------------------------------------------------

@dataclass(frozen=True)
class EstimatorConfig:
    """Median-of-means parameters.

    ``target_accuracy`` and ``confidence`` document the statistical
    contract; the executed work is batch_count batches of batch_size.
    """

    batch_size: int
    batch_count: int = 9
    seed: int = 0
    target_accuracy: float | None = None
    confidence: float | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.batch_count < 1 or self.batch_count % 2 == 0:
            raise ValidationError("batch_count must be odd and >= 1")

    @classmethod
    def from_accuracy(cls, tau: float, eta: float, seed: int = 0) -> "EstimatorConfig":
        """B = ceil(4/tau**2), K = smallest odd integer >= 8 ln(2/eta)."""
        if not 0.0 < tau < 1.0 or not 0.0 < eta < 1.0:
            raise ValidationError("tau and eta must lie in (0, 1)")
        batch = math.ceil(4.0 / tau ** 2)
        k = math.ceil(8.0 * math.log(2.0 / eta))
        if k % 2 == 0:
            k += 1
        return cls(batch_size=batch, batch_count=k, seed=seed,
                   target_accuracy=tau, confidence=eta)

    def to_json_dict(self) -> dict:
        return {"batch_size": self.batch_size, "batch_count": self.batch_count,
                "seed": self.seed, "target_accuracy": self.target_accuracy,
                "confidence": self.confidence}


@dataclass
class EstimatorStats:
    value: float
    batch_means: np.ndarray
    second_moment: float
    samples: int
    resampled: int


def _row_functional(state: CtState, op: EcsOperation, rows: np.ndarray) -> np.ndarray:
    """f on distinct sampled rows: row-x inner product over the column oracle."""
    amps = state.amplitudes(rows)
    betas, gammas = op.columns_bits(rows)
    b, width = betas.shape
    gamma_amps = state.amplitudes(gammas.reshape(b * width, state.n))
    gamma_amps = gamma_amps.reshape(b, width)
    return (np.conj(betas) * gamma_amps).sum(axis=1) / amps


def _one_batch(
    state: CtState, op: EcsOperation, size: int, rng: np.random.Generator
) -> tuple[float, float, int, int]:
    bits = state.sample_bits(rng, size)
    resampled = 0
    for _ in range(64):
        amps = state.amplitudes(bits)
        bad = np.abs(amps) == 0.0
        if not bad.any():
            break
        # exact Born sampling cannot land on a zero-amplitude string; redraw
        # rows whose amplitude underflowed and keep count
        resampled += int(bad.sum())
        bits[bad] = state.sample_bits(rng, int(bad.sum()))
    packed = _bits.bits_to_index(bits)
    uniq, counts = np.unique(packed, return_counts=True)
    rows = _bits.index_to_bits(uniq, state.n)
    f = _row_functional(state, op, rows).real
    mean = float((f * counts).sum() / size)
    second = float(((f ** 2) * counts).sum())
    return mean, second, size, resampled


def estimate_expectation_detailed(
    state: CtState,
    op: EcsOperation,
    cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
    *,
    validate: bool = True,
    max_workers: int = 1,
) -> EstimatorStats:
    """Median of batch means of f, with per-batch RNG substreams.

    Batch streams are spawned from the parent generator up front, so the
    result is identical whether batches run sequentially or in a pool.
    """
    if state.n != op.n:
        raise ValidationError("state and operator widths disagree")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if validate:
        check_ecs_observable(op, rng)
    streams = rng.spawn(cfg.batch_count)
    if max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(
                lambda g: _one_batch(state, op, cfg.batch_size, g), streams))
    else:
        results = [_one_batch(state, op, cfg.batch_size, g) for g in streams]
    means = np.array([r[0] for r in results])
    total = sum(r[2] for r in results)
    second = sum(r[1] for r in results) / total
    resampled = sum(r[3] for r in results)
    return EstimatorStats(
        value=float(np.median(means)),
        batch_means=means,
        second_moment=second,
        samples=total,
        resampled=resampled,
    )


def estimate_expectation(
    state: CtState,
    op: EcsOperation,
    cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """<phi|O|phi> for a CT state and Hermitian-unitary ECS observable."""
    return estimate_expectation_detailed(state, op, cfg, rng).value


def estimate_fourier_coefficient(
    decomp: CtEcsDecomposition,
    mask: int,
    cfg: EstimatorConfig,
    rng: np.random.Generator | None = None,
) -> float:
    """p_hat(s) estimate = <phi| V^dag Z^s V |phi> / 2**n for nonzero s."""
    if mask == 0:
        raise ValidationError(
            "the zero mask is pinned to 1/2**n by the table constructor")
    state = ct_state_of(decomp.u_block)
    op = ecs_for(decomp, mask)
    return estimate_expectation(state, op, cfg, rng) / (1 << decomp.n)


# --- coefficient sources -------------------------------------------------------------

class CoefficientSource(abc.ABC):
    """Produces <0|U^dag V^dag Z^s V U|0> values for one decomposition."""

    @abc.abstractmethod
    def expectation(self, mask: int, rng: np.random.Generator) -> float: ...

    @abc.abstractmethod
    def describe(self) -> dict: ...


class ExactCoefficients(CoefficientSource):
    """Dense route: one state-vector simulation and Walsh transform."""

    def __init__(self, decomp: CtEcsDecomposition, *, dense_cap: int = oracle.DENSE_CAP):
        self.decomp = decomp
        p = oracle.output_distribution(decomp.circuit, dense_cap=dense_cap)
        self._expectations = oracle.walsh_hadamard(p.p)

    def expectation(self, mask: int, rng: np.random.Generator) -> float:
        return float(self._expectations[mask])

    def describe(self) -> dict:
        return {"type": "exact"}


class EstimatedCoefficients(CoefficientSource):
    """Sampled route through the CT-state / column-oracle estimator."""

    def __init__(self, decomp: CtEcsDecomposition, cfg: EstimatorConfig,
                 *, support_cap: int = 12, term_cap: int = 256,
                 max_workers: int = 1):
        self.decomp = decomp
        self.cfg = cfg
        self.support_cap = support_cap
        self.term_cap = term_cap
        self.max_workers = max_workers
        self._state = ct_state_of(decomp.u_block)

    def expectation(self, mask: int, rng: np.random.Generator) -> float:
        op = ecs_for(self.decomp, mask, support_cap=self.support_cap,
                     term_cap=self.term_cap)
        return estimate_expectation_detailed(
            self._state, op, self.cfg, rng, max_workers=self.max_workers).value

    def describe(self) -> dict:
        return {"type": "estimator", "config": self.cfg.to_json_dict()}


def build_low_degree_table(
    decomp: CtEcsDecomposition,
    c: int,
    source: CoefficientSource,
    rng: np.random.Generator | None = None,
    *,
    mask_budget: int = DEFAULT_MASK_BUDGET,
) -> FourierTable:
    """Coefficient table over all masks of weight <= c.

    The zero mask is pinned to 1/2**n; the rest come from the source, each
    with its own spawned RNG substream (deterministic in enumeration
    order: weight-major, lexicographic within weight).
    """
    n = decomp.n
    count = _bits.mask_count(n, c)
    if count > mask_budget:
        raise ResourceLimitError(
            f"degree {c} needs {count} masks, over the budget of {mask_budget}; "
            "lower c (or c_max) or switch to the exact-oracle source")
    if rng is None:
        rng = np.random.default_rng(0)
    scale = 0.5 ** n
    entries: dict[int, float] = {0: scale}
    masks = [m for m in _bits.masks_up_to_weight(n, c) if m != 0]
    streams = rng.spawn(len(masks))
    for mask, stream in zip(masks, streams):
        entries[mask] = source.expectation(mask, stream) * scale
    return FourierTable(n, c, entries)


# --- dual-route identity check --------------------------------------------------------

def exact_fourier_identity_check(
    circuit, mask: int, *, unitary_cap: int = oracle.UNITARY_CAP
) -> tuple[float, float]:
    """Both sides of p_hat(s) = <0|C^dag Z^s C|0> / 2**n, independently.

    Left: Born distribution from state-vector simulation, transformed by
    the fast Walsh butterfly.  Right: the dense kron-built unitary, with
    the character sum evaluated directly.
    """
    n = circuit.n
    if not 0 <= mask < (1 << n):
        raise ValidationError("mask outside register")
    p = oracle.output_distribution(circuit)
    lhs = float(oracle.fourier_transform(p)[mask])
    unitary = oracle.circuit_unitary(circuit, unitary_cap=unitary_cap)
    weights = np.abs(unitary[:, 0]) ** 2
    signs = _bits.sign_character([mask], np.arange(1 << n), n)[0]
    rhs = float((weights * signs).sum() / (1 << n))
    return lhs, rhs
