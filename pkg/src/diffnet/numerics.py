"""Dense matrix utilities shared by every engine in the package.

Kronecker products, commutation matrices, tolerance-based numerical rank,
eigenvalues, sampled generic rank, and PBH controllability/observability
tests. Everything operates on plain numpy arrays and treats them as
immutable values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NumericError

DEFAULT_RANK_REL_TOL = 1e-9
DEFAULT_EIG_MATCH_TOL = 1e-7
DEFAULT_GENERIC_RANK_TRIALS = 3

#: Sampled parameter draws avoid (-0.1, 0.1) so generic-rank probes and weight
#: draws stay clear of zero without biasing sign or scale.
SAMPLE_GAP_FRACTION = 0.1

_UINT64_MASK = 0xFFFFFFFFFFFFFFFF
_STREAM_MIX = 0x9E3779B97F4A7C15
_STREAM_FINALIZE = 0xBF58476D1CE4E5B9


@dataclass(frozen=True)
class ToleranceConfig:
    """Numeric thresholds for rank and eigenvalue decisions.

    ``rank_rel_tol`` cuts singular values relative to the largest one, so
    rank verdicts are invariant under uniform scaling. ``eig_match_tol`` is
    the absolute radius used when matching or deduplicating eigenvalues.
    """

    rank_rel_tol: float = DEFAULT_RANK_REL_TOL
    eig_match_tol: float = DEFAULT_EIG_MATCH_TOL

    def __post_init__(self) -> None:
        if not 0.0 < self.rank_rel_tol < 1.0:
            raise ValueError(
                f"rank_rel_tol must lie strictly in (0, 1), got {self.rank_rel_tol}"
            )
        if self.eig_match_tol <= 0.0:
            raise ValueError(
                f"eig_match_tol must be positive, got {self.eig_match_tol}"
            )


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class RandomSource:
    """Deterministic random stream.

    Identical (seed, stream_id) pairs produce identical draw sequences;
    distinct stream ids are statistically independent, so parallel trials
    can each take their own derived source.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        root = np.random.SeedSequence(
            self.seed & _UINT64_MASK, spawn_key=(self.stream_id & _UINT64_MASK,)
        )
        return np.random.default_rng(root)

    def derive(self, index: int) -> "RandomSource":
        """Child source whose stream is disjoint from other indices."""
        mixed = (self.stream_id ^ ((index + 1) * _STREAM_MIX)) & _UINT64_MASK
        mixed = (mixed * _STREAM_FINALIZE + 1) & _UINT64_MASK
        return RandomSource(self.seed, mixed)


def sample_away_from_zero(
    gen: np.random.Generator, shape, scale: float = 1.0
) -> np.ndarray:
    """Uniform draw on [-scale, -0.1*scale] U [0.1*scale, scale]."""
    if scale <= 0.0:
        raise ValueError(f"scale must be positive, got {scale}")
    magnitude = gen.uniform(SAMPLE_GAP_FRACTION * scale, scale, size=shape)
    sign = np.where(gen.random(size=shape) < 0.5, -1.0, 1.0)
    return magnitude * sign


def ensure_finite_matrix(name: str, value) -> np.ndarray:
    """Coerce to a 2-D float array, rejecting NaN/Inf and wrong rank."""
    arr = np.array(value, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def kron(a, b) -> np.ndarray:
    """Kronecker product: block (i, j) equals a[i, j] * b."""
    return np.kron(np.asarray(a), np.asarray(b))


def commutation_permutation(m: int, p: int) -> np.ndarray:
    """Column-index map of the (m, p) commutation matrix.

    Row i*p + j of the materialized permutation carries its single 1 in
    column j*m + i; applying it to a column-stacked m x p matrix yields the
    column stacking of the transpose.
    """
    if m < 1 or p < 1:
        raise ValueError(f"commutation matrix needs m, p >= 1, got ({m}, {p})")
    rows = np.arange(m * p)
    i, j = divmod(rows, p)
    return j * m + i


def commutation_matrix(m: int, p: int) -> np.ndarray:
    """Permutation P(m, p) with P(m,p)^T (A kron B) P(n,r) = B kron A.

    Holds for every A of shape (m, n) and B of shape (p, r). Stored as an
    index map internally; this materializes the dense 0/1 matrix.
    """
    cols = commutation_permutation(m, p)
    out = np.zeros((m * p, m * p))
    out[np.arange(m * p), cols] = 1.0
    return out


def numerical_rank(matrix, tol: ToleranceConfig = DEFAULT_TOL) -> int:
    """Singular values above rank_rel_tol * (largest singular value).

    The zero matrix has rank 0 under the strict cutoff without any special
    casing.
    """
    m = np.asarray(matrix)
    if m.ndim != 2 or m.size == 0:
        raise ValueError(f"rank needs a nonempty 2-D matrix, got shape {m.shape}")
    try:
        sv = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"SVD failed on a {m.shape[0]}x{m.shape[1]} matrix: {exc}"
        ) from exc
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol.rank_rel_tol * sv[0]))


def eigenvalues(matrix) -> np.ndarray:
    """Spectrum with multiplicity, as a complex vector."""
    m = np.asarray(matrix)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"eigenvalues need a square matrix, got shape {m.shape}")
    try:
        return np.asarray(np.linalg.eigvals(m), dtype=complex)
    except np.linalg.LinAlgError as exc:
        raise NumericError(
            f"eigenvalue iteration failed on a {m.shape[0]}x{m.shape[0]} matrix: {exc}"
        ) from exc


def dedupe_eigenvalues(values, tol: ToleranceConfig = DEFAULT_TOL) -> np.ndarray:
    """One representative per cluster of eigenvalues within eig_match_tol."""
    vals = np.atleast_1d(np.asarray(values, dtype=complex))
    reps: list[complex] = []
    for lam in sorted(vals, key=lambda z: (z.real, z.imag)):
        if not reps or abs(lam - reps[-1]) > tol.eig_match_tol:
            reps.append(complex(lam))
    return np.array(reps, dtype=complex)


def spectra_match(left, right, tol: ToleranceConfig = DEFAULT_TOL) -> bool:
    """Multiset equality of two spectra under greedy nearest matching."""
    xs = list(np.atleast_1d(np.asarray(left, dtype=complex)))
    ys = list(np.atleast_1d(np.asarray(right, dtype=complex)))
    if len(xs) != len(ys):
        return False
    remaining = ys[:]
    for lam in sorted(xs, key=lambda z: (z.real, z.imag)):
        if not remaining:
            return False
        dists = [abs(lam - mu) for mu in remaining]
        j = int(np.argmin(dists))
        if dists[j] > tol.eig_match_tol:
            return False
        remaining.pop(j)
    return not remaining


@dataclass(frozen=True)
class PbhCheck:
    """One PBH rank evaluation at a single eigenvalue (multiplicity kept)."""

    eigenvalue: complex
    rank: int
    full: bool


def pbh_eigen_checks(a, b, tol: ToleranceConfig = DEFAULT_TOL) -> list[PbhCheck]:
    """Rank of [lambda*I - A, B] at every eigenvalue of A.

    Complex arithmetic throughout; one check per eigenvalue as returned by
    the spectrum routine, so repeated eigenvalues yield repeated checks.
    """
    am = np.asarray(a, dtype=complex)
    bm = np.asarray(b, dtype=complex)
    if bm.ndim == 1:
        bm = bm[:, None]
    if am.ndim != 2 or am.shape[0] != am.shape[1]:
        raise ValueError(f"PBH needs a square state matrix, got shape {am.shape}")
    n = am.shape[0]
    if bm.ndim != 2 or bm.shape[0] != n:
        raise ValueError(
            f"input matrix must have {n} rows to match the state matrix, "
            f"got shape {bm.shape}"
        )
    eye = np.eye(n, dtype=complex)
    checks = []
    for lam in eigenvalues(am):
        pencil = np.hstack([lam * eye - am, bm])
        r = numerical_rank(pencil, tol)
        checks.append(PbhCheck(complex(lam), r, r == n))
    return checks


def pbh_controllable(a, b, tol: ToleranceConfig = DEFAULT_TOL):
    """(controllable, deficient eigenvalues deduplicated within tolerance)."""
    checks = pbh_eigen_checks(a, b, tol)
    deficient = [c.eigenvalue for c in checks if not c.full]
    if not deficient:
        return True, ()
    return False, tuple(dedupe_eigenvalues(deficient, tol))


def pbh_observable(a, c, tol: ToleranceConfig = DEFAULT_TOL):
    """Dual PBH test: rank of [lambda*I - A; C] via transposes."""
    am = np.asarray(a)
    cm = np.asarray(c)
    if cm.ndim == 1:
        cm = cm[None, :]
    return pbh_controllable(am.T, cm.T, tol)


def generic_rank(
    matfn: Callable[[np.ndarray], np.ndarray],
    num_params: int,
    trials: int = DEFAULT_GENERIC_RANK_TRIALS,
    rng: RandomSource = RandomSource(0),
    tol: ToleranceConfig = DEFAULT_TOL,
) -> int:
    """Max numerical rank of matfn(s) over sampled parameter vectors.

    Draws come sequentially from a single stream, so a run with more trials
    extends the draw prefix of a run with fewer; the result is monotone in
    the trial count for a fixed source.
    """
    if trials < 1:
        raise ValueError(f"generic rank needs at least one trial, got {trials}")
    if num_params < 0:
        raise ValueError(f"parameter count cannot be negative, got {num_params}")
    gen = rng.generator()
    best = 0
    for _ in range(trials):
        s = sample_away_from_zero(gen, (num_params,))
        best = max(best, numerical_rank(matfn(s), tol))
    return best
