"""Random design matrices, signal vectors, and synthetic responses.

Three design families are supported: independent Gaussian entries,
independent Rademacher (sign-flip) entries, and Gaussian rows with a
common column covariance (equicorrelated or geometrically decaying).
Responses follow the linear model y = X @ beta + noise.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Family",
    "Equi",
    "Decaying",
    "DesignSpec",
    "SignalSpec",
    "Dataset",
    "generate_dataset",
    "standardize_columns",
    "load_design_csv",
    "write_matrix_csv",
]

_SEED_MASK = 0xFFFFFFFFFFFFFFFF


class Family(str, Enum):
    """Distribution of the design-matrix entries."""

    GAUSSIAN_IID = "gaussian_iid"
    BERNOULLI_RADEMACHER = "bernoulli_rademacher"
    GAUSSIAN_CORRELATED = "gaussian_correlated"


@dataclass(frozen=True)
class Equi:
    """Equicorrelated columns: Cov[X_i, X_j] = rho * scale for i != j."""

    rho: float

    def __post_init__(self):
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"equicorrelation rho must be in [0, 1), got {self.rho}")


@dataclass(frozen=True)
class Decaying:
    """Geometrically decaying correlation: Cov[X_i, X_j] = rho**|i-j| * scale."""

    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError(f"decaying rho must be in (-1, 1), got {self.rho}")


@dataclass(frozen=True)
class DesignSpec:
    """Shape and distribution of a random design matrix.

    Parameters
    ----------
    n, p : int
        Number of rows and columns.
    family : Family
        Entry distribution.
    scale : float or None
        Per-entry variance.  Defaults to 1/n when omitted.
    correlation : Equi or Decaying, optional
        Column covariance structure; required for (and only valid with)
        the correlated Gaussian family.
    """

    n: int
    p: int
    family: Family = Family.GAUSSIAN_IID
    scale: float | None = None
    correlation: Equi | Decaying | None = None

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError(f"n and p must be >= 1, got n={self.n}, p={self.p}")
        if self.scale is None:
            object.__setattr__(self, "scale", 1.0 / self.n)
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        corr = self.correlation is not None
        if (self.family is Family.GAUSSIAN_CORRELATED) != corr:
            raise ValueError(
                "correlation must be given exactly when family is gaussian_correlated"
            )


@dataclass(frozen=True)
class SignalSpec:
    """Nonzero coefficient blocks laid over a p-dimensional zero vector.

    ``blocks`` is a list of (count, magnitude) pairs; block entries are
    placed consecutively starting at index 0 unless placement is shuffled
    at generation time.  ``noise_sigma = 0`` gives a noiseless response.
    """

    p: int
    blocks: tuple[tuple[int, float], ...] = field(default_factory=tuple)
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "blocks", tuple((int(c), float(m)) for c, m in self.blocks)
        )
        for count, mag in self.blocks:
            if count < 1:
                raise ValueError(f"block count must be positive, got {count}")
            if mag == 0.0:
                raise ValueError("block magnitude must be nonzero")
        if self.total_nonzeros > self.p:
            raise ValueError(
                f"blocks place {self.total_nonzeros} coefficients but p={self.p}"
            )
        if self.noise_sigma < 0:
            raise ValueError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")

    @property
    def total_nonzeros(self) -> int:
        return sum(count for count, _ in self.blocks)


@dataclass(frozen=True)
class Dataset:
    """A realized linear-model instance.

    The response was built as ``y = X @ beta + z`` with i.i.d. mean-zero
    noise of standard deviation ``sigma``; the noise vector itself is not
    retained.  ``support`` is exactly the set of indices with nonzero
    coefficients.  Arrays are read-only.
    """

    X: np.ndarray
    beta: np.ndarray
    y: np.ndarray
    support: frozenset[int]
    sigma: float

    def __post_init__(self):
        for arr in (self.X, self.beta, self.y):
            arr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


def _correlation_matrix(spec: DesignSpec) -> np.ndarray:
    p, scale, corr = spec.p, spec.scale, spec.correlation
    if isinstance(corr, Equi):
        sigma = np.full((p, p), corr.rho * scale)
        np.fill_diagonal(sigma, scale)
    else:
        idx = np.arange(p)
        sigma = scale * corr.rho ** np.abs(idx[:, None] - idx[None, :])
    return sigma


def _pivoted_cholesky(sigma: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with an explicit pivot check.

    A leading minor counts as non-positive when its pivot falls below
    1e-12 * trace(sigma)/p; the failing index is reported.
    """
    p = sigma.shape[0]
    floor = 1e-12 * np.trace(sigma) / p
    try:
        L = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        L = None
    if L is not None:
        pivots = np.diag(L) ** 2
        bad = np.nonzero(pivots < floor)[0]
        if bad.size == 0:
            return L
        raise ValueError(
            f"covariance is not positive definite: leading minor {int(bad[0])} "
            f"has pivot {pivots[bad[0]]:.3e} below {floor:.3e}"
        )
    # Redo column by column to locate the failing minor.
    L = np.zeros_like(sigma)
    for j in range(p):
        d = sigma[j, j] - L[j, :j] @ L[j, :j]
        if d < floor:
            raise ValueError(
                f"covariance is not positive definite: leading minor {j} "
                f"has pivot {d:.3e} below {floor:.3e}"
            )
        L[j, j] = math.sqrt(d)
        if j + 1 < p:
            L[j + 1 :, j] = (sigma[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def _draw_design(spec: DesignSpec, rng: np.random.Generator) -> np.ndarray:
    root = math.sqrt(spec.scale)
    if spec.family is Family.GAUSSIAN_IID:
        return rng.standard_normal((spec.n, spec.p)) * root
    if spec.family is Family.BERNOULLI_RADEMACHER:
        signs = rng.integers(0, 2, size=(spec.n, spec.p)) * 2 - 1
        return signs.astype(np.float64) * root
    L = _pivoted_cholesky(_correlation_matrix(spec))
    return rng.standard_normal((spec.n, spec.p)) @ L.T


def generate_dataset(
    design: DesignSpec,
    signal: SignalSpec,
    seed: int,
    shuffle_support: bool = False,
    stream: tuple[int, ...] = (),
) -> Dataset:
    """Draw a design, lay out the signal, and synthesize the response.

    Deterministic in (design, signal, seed, shuffle_support, stream): two
    calls with identical arguments return bit-identical datasets.  By
    default the nonzero coefficients occupy indices 0..k-1 in block
    order; with ``shuffle_support`` the k positions are drawn uniformly
    at random instead.  ``stream`` selects an independent substream of
    the seed, so replicate workers can share one experiment seed without
    coordination.
    """
    if design.p != signal.p:
        raise ValueError(
            f"design has p={design.p} columns but signal is for p={signal.p}"
        )
    ss = np.random.SeedSequence(int(seed) & _SEED_MASK, spawn_key=tuple(stream))
    rng = np.random.Generator(np.random.Philox(ss))

    X = _draw_design(design, rng)
    beta = np.zeros(design.p)
    if shuffle_support:
        positions = rng.permutation(design.p)[: signal.total_nonzeros]
    else:
        positions = np.arange(signal.total_nonzeros)
    offset = 0
    for count, mag in signal.blocks:
        beta[positions[offset : offset + count]] = mag
        offset += count
    y = X @ beta
    if signal.noise_sigma > 0:
        y = y + rng.standard_normal(design.n) * signal.noise_sigma
    support = frozenset(int(j) for j in positions)
    return Dataset(X=X, beta=beta, y=y, support=support, sigma=signal.noise_sigma)


def standardize_columns(X: np.ndarray) -> np.ndarray:
    """Center every column to mean zero and rescale to unit Euclidean norm.

    Requires at least two rows and no constant column; a constant column
    is reported with its index.  Idempotent up to rounding.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {X.shape}")
    if X.shape[0] < 2:
        raise ValueError("standardization needs at least 2 rows")
    for j in range(X.shape[1]):
        if np.ptp(X[:, j]) == 0.0:
            raise ValueError(f"column {j} is constant (zero variance)")
    centered = X - X.mean(axis=0)
    return centered / np.linalg.norm(centered, axis=0)


def load_design_csv(path, standardize: bool = False) -> np.ndarray:
    """Read a rectangular numeric CSV into an n x p matrix.

    A first row that fails numeric parsing is treated as a header and
    skipped.  Ragged rows and non-numeric cells are reported with their
    row (and column) position.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ValueError(f"{path}: file is empty")

    def parse_row(row, index):
        out = []
        for j, cell in enumerate(row):
            try:
                out.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric value {cell!r} at row {index}, column {j}"
                ) from None
        return out

    try:
        data = [parse_row(rows[0], 0)]
        start = 1
    except ValueError:
        # First row does not parse: treat it as a header.
        if len(rows) == 1:
            raise ValueError(f"{path}: no data rows after header") from None
        data = [parse_row(rows[1], 1)]
        start = 2
    width = len(data[0])
    for i in range(start, len(rows)):
        row = parse_row(rows[i], i)
        if len(row) != width:
            raise ValueError(
                f"{path}: ragged row {i} has {len(row)} cells, expected {width}"
            )
        data.append(row)
    X = np.array(data, dtype=np.float64)
    if standardize:
        X = standardize_columns(X)
    return X


def write_matrix_csv(path, X: np.ndarray, header: list[str] | None = None) -> None:
    """Write a matrix as CSV using shortest round-trip float formatting."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if header is not None:
            writer.writerow(header)
        for row in X:
            writer.writerow([repr(float(v)) for v in row])
