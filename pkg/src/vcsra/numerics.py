"""Shared numerical kernel: seeded RNG streams, Hadamard codes,
integer-order upper incomplete gamma, dB conversions, orthonormal bases,
and complex pseudo-inverse / projector primitives.

Complex matrices are plain ``numpy`` arrays throughout the package;
``as_complex_matrix`` is the boundary validator (finite entries, expected
shape). Every sampling routine takes an explicit :class:`RngStream` and is a
pure function of its inputs: calling it twice with the same stream yields
bit-identical output.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, DomainError, NonPowerOfTwo, SingularMatrix

#: Relative condition number beyond which a matrix is treated as singular.
CONDITION_LIMIT = 1e12

_U64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """Deterministic, splittable random stream.

    Identical ``(master_seed, stream_id)`` reproduce the same sample
    sequence on every run and platform; distinct stream ids give
    statistically independent streams. Substreams for indexed work
    (e.g. Monte-Carlo trials) come from :meth:`child`.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self) -> None:
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or not 0 <= int(v) < _U64:
                raise DomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.default_rng(np.random.SeedSequence([self.master_seed, self.stream_id]))

    def child(self, index: int) -> "RngStream":
        """Derive an independent substream keyed by ``index``."""
        ss = np.random.SeedSequence([self.master_seed, self.stream_id, int(index)])
        return RngStream(self.master_seed, int(ss.generate_state(1, np.uint64)[0]))


@dataclass(frozen=True)
class OrthogonalCode:
    """Real +/-1 spreading matrix with exactly orthogonal columns."""

    matrix: np.ndarray  # (n, n) int64, entries in {+1, -1}

    def __post_init__(self) -> None:
        s = self.matrix
        n = s.shape[0]
        gram = s.T @ s
        if not np.array_equal(gram, n * np.eye(n, dtype=s.dtype)):
            raise DomainError("code matrix is not exactly orthogonal")
        self.matrix.setflags(write=False)

    @property
    def length(self) -> int:
        return self.matrix.shape[0]


def hadamard(n: int) -> OrthogonalCode:
    """Sylvester-construction Hadamard matrix of order ``n`` (a power of two).

    Integer arithmetic throughout, so ``S.T @ S == n * I`` holds exactly.
    """
    if n < 1 or (n & (n - 1)) != 0:
        raise NonPowerOfTwo(f"Hadamard order must be a power of two, got {n}")
    s = np.ones((1, 1), dtype=np.int64)
    while s.shape[0] < n:
        s = np.block([[s, s], [s, -s]])
    return OrthogonalCode(s)


def upper_incomplete_gamma_int(s: int, x: float) -> float:
    """Upper incomplete gamma Gamma(s, x) for integer order s >= 1.

    Uses the exact identity Gamma(s, x) = (s-1)! e^{-x} sum_{k<s} x^k / k!,
    accumulated with pre-scaled terms t_k = e^{-x} x^k / k! so no
    intermediate overflows for any x >= 0.
    """
    if not isinstance(s, (int, np.integer)) or s < 1:
        raise DomainError(f"order must be a positive integer, got {s!r}")
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"argument must be finite and nonnegative, got {x!r}")
    term = math.exp(-x)
    acc = term
    for k in range(1, int(s)):
        term *= x / k
        acc += term
    return math.factorial(int(s) - 1) * acc


def db_to_linear(v_db: float) -> float:
    """Power ratio for a value in dB."""
    return 10.0 ** (v_db / 10.0)


def linear_to_db(v: float) -> float:
    """dB value of a positive power ratio."""
    if v <= 0:
        raise DomainError(f"linear power must be positive, got {v!r}")
    return 10.0 * math.log10(v)


def sample_complex_gaussian(rng: RngStream, n: int) -> np.ndarray:
    """n i.i.d. circularly symmetric complex Gaussians, unit variance."""
    if n < 1:
        raise DomainError(f"sample count must be >= 1, got {n}")
    g = rng.generator()
    return standard_complex_gaussian(g, (n,))


def standard_complex_gaussian(g: np.random.Generator, shape) -> np.ndarray:
    """CN(0, 1) array of the given shape from an already-positioned generator.

    Real and imaginary parts are drawn in one interleaved block so the
    layout is independent of how callers slice the result.
    """
    block = g.standard_normal(tuple(shape) + (2,))
    return (block[..., 0] + 1j * block[..., 1]) / math.sqrt(2.0)


def orthonormal_real_basis(m: int, q: int, rng: RngStream) -> np.ndarray:
    """Real m x q matrix with orthonormal columns from a seeded Gaussian draw.

    Householder QR (numpy) rather than Gram-Schmidt; the R-diagonal sign is
    folded in so the basis is a deterministic function of the stream.
    """
    if q > m:
        raise DimensionError(f"cannot build {q} orthonormal columns in dimension {m}")
    if m < 1 or q < 1:
        raise DomainError("dimensions must be positive")
    g = rng.generator()
    raw = g.standard_normal((m, q))
    qmat, r = np.linalg.qr(raw)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return qmat * signs


def as_complex_matrix(a: np.ndarray, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Validate and return ``a`` as a finite complex 2-D array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D array, got shape {arr.shape}")
    if rows is not None and arr.shape[0] != rows:
        raise DimensionError(f"expected {rows} rows, got {arr.shape[0]}")
    if cols is not None and arr.shape[1] != cols:
        raise DimensionError(f"expected {cols} columns, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise DomainError("matrix entries must all be finite")
    return arr


def pseudo_inverse_left(h: np.ndarray) -> np.ndarray:
    """Left pseudo-inverse (H^H H)^{-1} H^H of a tall full-column-rank matrix.

    Computed from the SVD; raises :class:`SingularMatrix` when the condition
    estimate exceeds ``CONDITION_LIMIT``.
    """
    h = as_complex_matrix(h)
    m, n = h.shape
    if m < n:
        raise DimensionError(f"need rows >= cols for a left inverse, got {h.shape}")
    u, sv, vh = np.linalg.svd(h, full_matrices=False)
    if sv[-1] <= 0 or sv[0] / sv[-1] > CONDITION_LIMIT:
        raise SingularMatrix(f"condition estimate {sv[0] / max(sv[-1], 1e-300):.3e} exceeds {CONDITION_LIMIT:.0e}")
    return (vh.conj().T * (1.0 / sv)) @ u.conj().T
