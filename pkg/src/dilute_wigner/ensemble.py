"""Dilute Wigner ensembles: entry laws, dilution masks and sampled matrices.

A realization is stored as the upper triangle (diagonal included) of a real
symmetric matrix, with values already divided by ``sqrt(p)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from . import rng
from .errors import (
    InvalidParameterError,
    InvariantViolation,
    MissingMomentError,
    UnsupportedDistributionError,
)

# Cells per counter-based block. Fixed: changing it changes every sample.
BLOCK_CELLS = 1 << 22
# Above this cell probability a per-cell uniform draw is cheaper than skipping.
_DENSE_Q = 0.1


class DistKind(enum.Enum):
    RADEMACHER = "rademacher"
    GAUSSIAN = "gaussian"
    MOMENT_TABLE = "moment_table"


def double_factorial_odd(j: int) -> int:
    """(2j - 1)!! = 1 * 3 * ... * (2j - 1), with (-1)!! = 1."""
    out = 1
    for i in range(1, 2 * j, 2):
        out *= i
    return out


@dataclass(frozen=True)
class EntryDistribution:
    """Law of the symmetric entries a(x, y).

    ``moment_bounds`` holds V_2, V_4, ... for ``MOMENT_TABLE`` only; the two
    samplable kinds know their moments in closed form.
    """

    kind: DistKind
    moment_bounds: tuple[Fraction, ...] = ()
    delta: float | None = None

    def __post_init__(self):
        if self.kind is DistKind.MOMENT_TABLE:
            table = tuple(Fraction(v) for v in self.moment_bounds)
            object.__setattr__(self, "moment_bounds", table)
            if not table or table[0] != 1:
                raise InvariantViolation("moment table must start with V_2 = 1")
            if any(v < 0 for v in table):
                raise InvariantViolation("even moments must be non-negative")
        elif self.moment_bounds:
            raise InvalidParameterError(f"{self.kind.value} moments are fixed; drop moment_bounds")
        if self.delta is not None:
            if self.delta < 0:
                raise InvalidParameterError("delta must be non-negative")
            for k in range(1, self.stored_orders() + 1):
                if float(self.even_moment(k)) > k ** (self.delta * k) * (1 + 1e-12):
                    raise InvariantViolation(f"V_{2 * k} exceeds k^(delta k) for delta={self.delta}")

    @classmethod
    def rademacher(cls) -> "EntryDistribution":
        return cls(DistKind.RADEMACHER)

    @classmethod
    def gaussian(cls) -> "EntryDistribution":
        return cls(DistKind.GAUSSIAN)

    @classmethod
    def from_table(cls, moments: Sequence, delta: float | None = None) -> "EntryDistribution":
        return cls(DistKind.MOMENT_TABLE, tuple(moments), delta)

    @classmethod
    def by_name(cls, name: str) -> "EntryDistribution":
        try:
            kind = DistKind(name.lower())
        except ValueError:
            raise InvalidParameterError(f"unknown distribution {name!r}") from None
        if kind is DistKind.MOMENT_TABLE:
            raise InvalidParameterError("moment tables cannot be built from a name")
        return cls(kind)

    @property
    def name(self) -> str:
        return self.kind.value

    def stored_orders(self) -> int:
        """How many V_{2k} a delta check should cover (10 for closed-form kinds)."""
        if self.kind is DistKind.MOMENT_TABLE:
            return len(self.moment_bounds)
        return 10

    def even_moment(self, k: int) -> Fraction:
        """V_{2k} = E a^{2k} as an exact rational."""
        if k < 0:
            raise InvalidParameterError("moment order must be non-negative")
        if k == 0:
            return Fraction(1)
        if self.kind is DistKind.RADEMACHER:
            return Fraction(1)
        if self.kind is DistKind.GAUSSIAN:
            return Fraction(double_factorial_odd(k))
        if k > len(self.moment_bounds):
            raise MissingMomentError(2 * k)
        return self.moment_bounds[k - 1]

    def moment(self, order: int) -> Fraction:
        if order % 2:
            return Fraction(0)
        return self.even_moment(order // 2)

    def log_even_moment(self, k: int) -> float:
        """log V_{2k}; stays finite where the exact value would overflow a float."""
        if self.kind is DistKind.GAUSSIAN:
            return math.lgamma(2 * k + 1) - k * math.log(2) - math.lgamma(k + 1)
        v = self.even_moment(k)
        return -math.inf if v == 0 else math.log(v.numerator) - math.log(v.denominator)

    def sampler(self) -> Callable[[np.random.Generator, int], np.ndarray]:
        if self.kind is DistKind.RADEMACHER:
            return lambda g, size: 2.0 * g.integers(0, 2, size=size) - 1.0
        if self.kind is DistKind.GAUSSIAN:
            return lambda g, size: g.standard_normal(size)
        raise UnsupportedDistributionError("moment tables describe a law for bounds only; they cannot be sampled")


@dataclass(frozen=True)
class EnsembleSpec:
    n: int
    p: float
    dist: EntryDistribution = field(default_factory=EntryDistribution.rademacher)
    seed: int = 0
    include_diagonal: bool = True

    def __post_init__(self):
        _check_np(self.n, self.p)
        if not 0 <= self.seed <= rng.UINT64_MASK:
            raise InvalidParameterError("seed must fit in 64 unsigned bits")


def _check_np(n: int, p: float) -> None:
    if n < 1:
        raise InvalidParameterError(f"n must be positive, got {n}")
    if not (p > 0 and p <= n):
        raise InvalidParameterError(f"need 0 < p <= n, got p={p}, n={n}")


@dataclass(frozen=True, eq=False)
class SparseSymmetricMatrix:
    """Upper-triangle coordinate storage of a real symmetric matrix.

    Indices are 0-based (``rows[i] <= cols[i]``); the lower triangle is the
    implicit mirror. The text file format uses 1-based indices.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        values = np.asarray(self.values, dtype=np.float64)
        if not (rows.shape == cols.shape == values.shape):
            raise InvariantViolation("triplet arrays must have equal length")
        if rows.size:
            if rows.min() < 0 or cols.max() >= self.n or np.any(rows > cols):
                raise InvariantViolation("triplets must satisfy 0 <= x <= y < n")
            keys = rows * self.n + cols
            if np.unique(keys).size != keys.size:
                raise InvariantViolation("duplicate (x, y) cell")
        for name, arr in (("rows", rows), ("cols", cols), ("values", values)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def triplets(self) -> list[tuple[int, int, float]]:
        """1-based ``(x, y, value)`` triplets with ``x <= y``."""
        return [(int(x) + 1, int(y) + 1, float(v)) for x, y, v in zip(self.rows, self.cols, self.values)]

    def to_csr(self) -> sp.csr_matrix:
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.values, self.values[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.n, self.n))

    def to_dense(self) -> np.ndarray:
        a = np.zeros((self.n, self.n))
        a[self.rows, self.cols] = self.values
        a[self.cols, self.rows] = self.values
        return a

    def scaled(self, factor: float) -> "SparseSymmetricMatrix":
        return SparseSymmetricMatrix(self.n, self.rows, self.cols, self.values * factor)

    def same_as(self, other: "SparseSymmetricMatrix") -> bool:
        """Equal triplet sets, irrespective of storage order."""
        if self.n != other.n or self.nnz != other.nnz:
            return False
        a = np.argsort(self.rows * self.n + self.cols, kind="stable")
        b = np.argsort(other.rows * other.n + other.cols, kind="stable")
        return (
            np.array_equal(self.rows[a], other.rows[b])
            and np.array_equal(self.cols[a], other.cols[b])
            and np.array_equal(self.values[a], other.values[b])
        )

    @classmethod
    def from_dense(cls, a) -> "SparseSymmetricMatrix":
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or not np.array_equal(a, a.T):
            raise InvalidParameterError("expected a square symmetric array")
        r, c = np.nonzero(np.triu(a))
        return cls(a.shape[0], r, c, a[r, c])

    @classmethod
    def from_triplets(cls, n: int, triplets: Iterable[tuple[int, int, float]]) -> "SparseSymmetricMatrix":
        """Build from 1-based triplets; cells below the diagonal are mirrored up."""
        rows, cols, vals = [], [], []
        for x, y, v in triplets:
            x, y = min(x, y), max(x, y)
            rows.append(x - 1)
            cols.append(y - 1)
            vals.append(v)
        return cls(n, np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64), np.array(vals))

    def write(self, path: str | Path) -> None:
        lines = [f"{self.n} {self.nnz}"]
        lines += [f"{x} {y} {v:.17g}" for x, y, v in self.triplets()]
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def read(cls, path: str | Path) -> "SparseSymmetricMatrix":
        with open(path) as fh:
            n, nnz = (int(t) for t in fh.readline().split())
            trip = []
            for line in fh:
                if line.strip():
                    x, y, v = line.split()
                    trip.append((int(x), int(y), float(v)))
        if len(trip) != nnz:
            raise InvariantViolation(f"header says {nnz} triplets, file has {len(trip)}")
        return cls.from_triplets(n, trip)


# -- cell indexing ----------------------------------------------------------

def n_cells(n: int, include_diagonal: bool = True) -> int:
    return n * (n + 1) // 2 if include_diagonal else n * (n - 1) // 2


def n_blocks(n: int, include_diagonal: bool = True) -> int:
    return -(-n_cells(n, include_diagonal) // BLOCK_CELLS)


def cell_coordinates(lin: np.ndarray, n: int, include_diagonal: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Map row-major linear indices of the upper triangle to ``(x, y)``."""
    lin = np.asarray(lin, dtype=np.int64)
    b = 2 * n + 1 if include_diagonal else 2 * n - 1

    def offset(x):
        return x * (b - x) // 2

    x = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * lin, 0.0))) / 2).astype(np.int64)
    # float sqrt can land one row off in either direction
    x = np.where(offset(x) > lin, x - 1, x)
    x = np.where(offset(x + 1) <= lin, x + 1, x)
    y = x + (lin - offset(x)) + (0 if include_diagonal else 1)
    return x, y


def _block_cells(n: int, q: float, seed: int, block: int, include_diagonal: bool) -> np.ndarray:
    total = n_cells(n, include_diagonal)
    start = block * BLOCK_CELLS
    size = min(BLOCK_CELLS, total - start)
    g = rng.substream(seed, rng.MASK, block)
    if q >= _DENSE_Q:
        return start + np.flatnonzero(g.random(size) < q)
    # geometric skipping: gaps between successive retained cells
    chunk = max(16, int(size * q + 6 * math.sqrt(size * q) + 16))
    pos = []
    last = -1
    while True:
        gaps = g.geometric(q, size=chunk)
        run = last + np.cumsum(gaps)
        pos.append(run[run < size])
        if run[-1] >= size:
            break
        last = int(run[-1])
    return start + np.concatenate(pos)


def mask_block(n: int, p: float, seed: int, block: int, include_diagonal: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Retained ``(x, y)`` cells of one counter block; blocks are independent."""
    _check_np(n, p)
    lin = _block_cells(n, p / n, seed, block, include_diagonal)
    return cell_coordinates(lin, n, include_diagonal)


def sample_dilution_mask(
    n: int, p: float, seed: int, include_diagonal: bool = True, blocks: Iterable[int] | None = None
) -> SparseSymmetricMatrix:
    """0/1 mask with each upper-triangle cell kept independently with probability p/n.

    ``blocks`` restricts generation to a subset of counter blocks, which is how
    parallel workers split the work; the union over all blocks is the full mask.
    """
    _check_np(n, p)
    if blocks is None:
        blocks = range(n_blocks(n, include_diagonal))
    xs, ys = [], []
    for b in blocks:
        x, y = mask_block(n, p, seed, b, include_diagonal)
        xs.append(x)
        ys.append(y)
    x = np.concatenate(xs) if xs else np.zeros(0, dtype=np.int64)
    y = np.concatenate(ys) if ys else np.zeros(0, dtype=np.int64)
    return SparseSymmetricMatrix(n, x, y, np.ones(x.size))


def sample_matrix(spec: EnsembleSpec) -> SparseSymmetricMatrix:
    """Realization of a(x, y) d(x, y) / sqrt(p) for the given spec."""
    draw = spec.dist.sampler()
    scale = 1.0 / math.sqrt(spec.p)
    xs, ys, vs = [], [], []
    for b in range(n_blocks(spec.n, spec.include_diagonal)):
        x, y = mask_block(spec.n, spec.p, spec.seed, b, spec.include_diagonal)
        xs.append(x)
        ys.append(y)
        vs.append(draw(rng.substream(spec.seed, rng.VALUES, b), x.size) * scale)
    if not xs:
        return SparseSymmetricMatrix(spec.n, np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0))
    return SparseSymmetricMatrix(spec.n, np.concatenate(xs), np.concatenate(ys), np.concatenate(vs))


def row_degree_histogram(mask: SparseSymmetricMatrix) -> np.ndarray:
    """Number of nonzeros in each full row, mirror included."""
    off = mask.rows != mask.cols
    deg = np.bincount(mask.rows, minlength=mask.n)
    deg += np.bincount(mask.cols[off], minlength=mask.n)
    return deg


def degree_distribution(degrees: np.ndarray) -> np.ndarray:
    """Empirical pmf of the row degrees, indexed by degree."""
    degrees = np.asarray(degrees)
    return np.bincount(degrees) / degrees.size
