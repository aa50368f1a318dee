"""Shared helpers for the test suite.

Conventions: every randomized test seeds its own generator; dense ground
truth comes from ctecs.oracle (state-vector simulation, kron-built
unitaries, Walsh transforms), never from the code path under test.
"""

import numpy as np

from ctecs import FourierTable
from ctecs import _bits, oracle


def dense_z_string(mask: int, n: int) -> np.ndarray:
    """Dense Z^mask as a diagonal sign matrix."""
    signs = np.array([
        (-1.0) ** _bits.mask_weight(mask & ix) for ix in range(1 << n)])
    return np.diag(signs).astype(complex)


def dense_conjugated_z(v_block, mask: int) -> np.ndarray:
    """Dense V^dag Z^mask V via the kron-built unitary."""
    v = oracle.circuit_unitary(v_block)
    return v.conj().T @ dense_z_string(mask, v_block.n) @ v


def random_table(rng: np.random.Generator, n: int, c: int,
                 density: float = 0.6, scale: float | None = None) -> FourierTable:
    """Random normalized coefficient table with both-sign entries."""
    if scale is None:
        scale = 0.5 ** n
    entries = {0: 0.5 ** n}
    for mask in _bits.masks_up_to_weight(n, c):
        if mask and rng.random() < density:
            entries[mask] = float(rng.normal(scale=scale))
    return FourierTable(n, c, entries)


def columns_as_dict(op, x: int) -> dict[int, complex]:
    return {row: val for val, row in op.columns(x)}
