"""Product quantization for complex frequency vectors.

A d-dimensional complex frequency column is viewed as 2d reals (re, im
interleaved), split into p subvectors and each subvector quantized to one of
k centroids, so a whole column costs p bytes.  Codebooks are trained on
synthetic Gaussian data: whitened, unit-normalized frequency vectors are
close enough to Gaussian that no real training corpus is needed.  At query
time a lookup table folds the query's regularization filter into the
per-centroid partial products, so scoring a compressed item needs only p
table lookups per stored frequency plus one inverse FFT.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CorruptCodeError, FormatError, TruncatedFileError, ValidationError, ZeroDenominatorError
from .matcher import ScoreVector, assemble_scores
from .spectral import SpectralDescriptor

CTEQ_MAGIC = b"CTEQ"
CTEC_MAGIC = b"CTEC"
CPQ_VERSION = 1

DEFAULT_K = 256
DEFAULT_SAMPLES = 100_000
DEFAULT_ITERS = 25


@dataclass(frozen=True)
class PQCodebook:
    """Per-subquantizer centroids; ``centroids[j]`` is (k x sub_dim) float32."""

    p: int
    k: int
    sub_dim: int
    centroids: np.ndarray
    seed: int

    def __post_init__(self):
        if self.k > 256:
            raise ValidationError(f"k = {self.k} does not fit single-byte codes")
        if self.sub_dim % 2 != 0:
            raise ValidationError(
                f"subvector width {self.sub_dim} must be even to cover whole complex dimensions"
            )
        if self.centroids.shape != (self.p, self.k, self.sub_dim):
            raise ValidationError(f"centroid array has shape {self.centroids.shape}")
        self.centroids.setflags(write=False)

    @property
    def d(self) -> int:
        """Complex dimensionality of the vectors this codebook quantizes."""
        return self.p * self.sub_dim // 2

    def complex_centroids(self, j: int) -> np.ndarray:
        """Centroids of subquantizer j as (k x sub_dim/2) complex values."""
        c = self.centroids[j].astype(np.float64)
        return c[:, 0::2] + 1j * c[:, 1::2]


@dataclass(frozen=True)
class PQCode:
    """Byte codes of one video: (n_kept x p) centroid indices."""

    video_id: str
    n_kept: int
    codes: np.ndarray

    def __post_init__(self):
        if self.codes.dtype != np.uint8 or self.codes.shape != (self.n_kept, self.p):
            raise ValidationError(f"code array {self.codes.shape}/{self.codes.dtype} is malformed")
        self.codes.setflags(write=False)

    @property
    def p(self) -> int:
        return self.codes.shape[1]

    @property
    def nbytes(self) -> int:
        return self.codes.size


@dataclass(frozen=True)
class LookupTable:
    """Per-frequency, per-subquantizer, per-centroid complex partial products."""

    entries: np.ndarray  # (n_kept, p, k) complex
    query_id: str
    N: int

    def __post_init__(self):
        if not np.isfinite(self.entries.view(np.float64)).all():
            raise ValidationError("lookup table holds non-finite entries")
        self.entries.setflags(write=False)

    @property
    def n_kept(self) -> int:
        return self.entries.shape[0]

    @property
    def p(self) -> int:
        return self.entries.shape[1]

    @property
    def k(self) -> int:
        return self.entries.shape[2]


def _kmeans(data: np.ndarray, k: int, iters: int, rng: np.random.Generator) -> np.ndarray:
    """Lloyd's algorithm with distance-weighted seeding.

    Empty clusters are re-seeded with the member of the largest cluster
    farthest from its centroid, keeping the run deterministic for a given
    generator state.
    """
    n, dim = data.shape
    centroids = np.empty((k, dim))
    first = int(rng.integers(n))
    centroids[0] = data[first]
    d2 = ((data - centroids[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            pick = int(rng.choice(n, p=probs))
        else:
            pick = int(rng.integers(n))
        centroids[c] = data[pick]
        d2 = np.minimum(d2, ((data - centroids[c]) ** 2).sum(axis=1))

    for _ in range(iters):
        # Squared distances via expansion; argmin takes the lowest index on ties.
        dist2 = (
            (data**2).sum(axis=1, keepdims=True)
            - 2.0 * data @ centroids.T
            + (centroids**2).sum(axis=1)
        )
        assign = np.argmin(dist2, axis=1)
        counts = np.bincount(assign, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            largest = int(np.argmax(counts))
            members = np.flatnonzero(assign == largest)
            off = ((data[members] - centroids[largest]) ** 2).sum(axis=1)
            steal = members[int(np.argmax(off))]
            assign[steal] = empty
            counts[largest] -= 1
            counts[empty] += 1
        for c in range(k):
            centroids[c] = data[assign == c].mean(axis=0)
    return centroids


def train(
    d: int,
    p: int,
    k: int = DEFAULT_K,
    samples: int = DEFAULT_SAMPLES,
    iters: int = DEFAULT_ITERS,
    seed: int = 0,
) -> PQCodebook:
    """Train a codebook for d-dimensional complex columns on Gaussian data.

    Samples are standard normal vectors in R^{2d} scaled by 1/sqrt(2d) so
    their norms match unit-normalized frequency columns.  Each of the p
    subquantizers is trained independently on its slice of the samples.
    """
    if (2 * d) % p != 0:
        raise ValidationError(f"2*d = {2 * d} is not divisible by p = {p}")
    sub_dim = 2 * d // p
    if sub_dim % 2 != 0:
        raise ValidationError(f"subvector width {sub_dim} must be even (got d={d}, p={p})")
    if samples < k:
        raise ValidationError(f"need at least k = {k} samples, got {samples}")
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((samples, 2 * d)) / np.sqrt(2 * d)
    centroids = np.empty((p, k, sub_dim), dtype=np.float32)
    for j in range(p):
        block = data[:, j * sub_dim : (j + 1) * sub_dim]
        centroids[j] = _kmeans(block, k, iters, rng).astype(np.float32)
    return PQCodebook(p=p, k=k, sub_dim=sub_dim, centroids=centroids, seed=seed)


def _real_layout(spec: SpectralDescriptor) -> np.ndarray:
    """Columns as (n_kept x 2d) reals with re/im interleaved per dimension."""
    out = np.empty((spec.n_kept, 2 * spec.d))
    out[:, 0::2] = spec.coeffs.real.T
    out[:, 1::2] = spec.coeffs.imag.T
    return out


def encode_pq(spec: SpectralDescriptor, cb: PQCodebook) -> PQCode:
    """Quantize every stored frequency column to p centroid indices."""
    if spec.d != cb.d:
        raise ValidationError(f"descriptor dim {spec.d} does not match codebook dim {cb.d}")
    if not spec.normalized:
        raise ValidationError("frequency columns must be unit-normalized before quantization")
    x = _real_layout(spec).reshape(spec.n_kept, cb.p, cb.sub_dim)
    codes = np.empty((spec.n_kept, cb.p), dtype=np.uint8)
    for j in range(cb.p):
        c = cb.centroids[j].astype(np.float64)
        dist2 = (
            (x[:, j] ** 2).sum(axis=1, keepdims=True)
            - 2.0 * x[:, j] @ c.T
            + (c**2).sum(axis=1)
        )
        codes[:, j] = np.argmin(dist2, axis=1)
    return PQCode(video_id=spec.video_id, n_kept=spec.n_kept, codes=codes)


def decode_pq(code: PQCode, cb: PQCodebook) -> np.ndarray:
    """Reconstruct quantized columns as a (d x n_kept) complex matrix."""
    real = np.empty((code.n_kept, cb.p * cb.sub_dim))
    for j in range(cb.p):
        real[:, j * cb.sub_dim : (j + 1) * cb.sub_dim] = cb.centroids[j][code.codes[:, j]]
    return (real[:, 0::2] + 1j * real[:, 1::2]).T


def build_table(qspec: SpectralDescriptor, lam: float, cb: PQCodebook) -> LookupTable:
    """Precompute regularized partial products for every possible centroid.

    The query column at frequency i is conjugated and divided by its summed
    power spectrum plus ``lam``; the table entry (i, j, c) is the complex
    product of that filtered subvector with centroid c of subquantizer j.
    Summing one entry per subquantizer reproduces the full regularized
    numerator at that frequency exactly when the database column equals its
    centroids.
    """
    if qspec.d != cb.d:
        raise ValidationError(f"query dim {qspec.d} does not match codebook dim {cb.d}")
    if lam < 0:
        raise ValidationError(f"lambda must be >= 0, got {lam}")
    denominator = np.einsum("ji,ji->i", np.conj(qspec.coeffs), qspec.coeffs).real + lam
    if lam == 0.0:
        zero = np.flatnonzero(denominator == 0.0)
        if zero.size:
            raise ZeroDenominatorError(
                f"zero denominator at frequency {int(zero[0])} with lambda = 0"
            )
    q_reg = np.conj(qspec.coeffs) / denominator  # (d, n_kept)

    half = cb.sub_dim // 2
    entries = np.empty((qspec.n_kept, cb.p, cb.k), dtype=np.complex128)
    for j in range(cb.p):
        block = q_reg[j * half : (j + 1) * half, :]  # (half, n_kept)
        entries[:, j, :] = block.T @ cb.complex_centroids(j).T
    return LookupTable(entries=entries, query_id=qspec.video_id, N=qspec.N)


def score_pq(table: LookupTable, code: PQCode, expand_factor: int = 1) -> ScoreVector:
    """Score one compressed item against a query table.

    With ``expand_factor`` f > 1 the item stands in for its f-fold
    self-concatenation: its r-th stored frequency lines up with query
    frequency f*r and all other frequencies carry no energy (their
    normalized columns are zero).  The assembled spectrum is
    inverse-transformed exactly like the uncompressed pruned path.
    """
    f = int(expand_factor)
    if f < 1 or table.n_kept != code.n_kept * f:
        raise ValidationError(
            f"table holds {table.n_kept} frequencies, code {code.n_kept} x factor {f}"
        )
    if int(code.codes.max(initial=0)) >= table.k:
        raise CorruptCodeError(
            f"code byte {int(code.codes.max())} out of range for k = {table.k}"
        )
    sub = table.entries[::f]  # rows f*r, r = 0..code.n_kept-1
    picked = np.take_along_axis(sub, code.codes[:, :, None].astype(np.intp), axis=2)
    spectrum = np.zeros(table.n_kept, dtype=np.complex128)
    spectrum[::f] = picked[:, :, 0].sum(axis=1)
    return assemble_scores(spectrum, table.N, full=False)


def write_codebook(cb: PQCodebook, path) -> None:
    header = struct.pack("<4sBIIIq", CTEQ_MAGIC, CPQ_VERSION, cb.d, cb.p, cb.k, cb.seed)
    Path(path).write_bytes(header + codebook_payload(cb))


def codebook_payload(cb: PQCodebook) -> bytes:
    return np.ascontiguousarray(cb.centroids, dtype="<f4").tobytes()


def read_codebook(path) -> PQCodebook:
    raw = Path(path).read_bytes()
    return parse_codebook(raw)


def parse_codebook(raw: bytes, offset: int = 0) -> PQCodebook:
    fmt = "<4sBIIIq"
    try:
        magic, version, d, p, k, seed = struct.unpack_from(fmt, raw, offset)
    except struct.error as exc:
        raise TruncatedFileError("codebook header truncated") from exc
    if magic != CTEQ_MAGIC:
        raise FormatError(f"bad codebook magic {magic!r}")
    if version != CPQ_VERSION:
        raise FormatError(f"unsupported codebook version {version}")
    sub_dim = 2 * d // p
    count = p * k * sub_dim
    start = offset + struct.calcsize(fmt)
    if len(raw) - start < count * 4:
        raise TruncatedFileError("codebook centroid payload truncated")
    centroids = np.frombuffer(raw, dtype="<f4", count=count, offset=start).reshape(p, k, sub_dim)
    return PQCodebook(p=p, k=k, sub_dim=sub_dim, centroids=centroids.copy(), seed=seed)


def codebook_size(cb: PQCodebook) -> int:
    """On-disk byte size of a serialized codebook, header included."""
    return struct.calcsize("<4sBIIIq") + cb.centroids.size * 4


def write_code(code: PQCode, path) -> None:
    vid = code.video_id.encode("utf-8")
    header = struct.pack("<4sBI", CTEC_MAGIC, CPQ_VERSION, len(vid)) + vid
    header += struct.pack("<II", code.n_kept, code.p)
    Path(path).write_bytes(header + code.codes.tobytes())


def read_code(path) -> PQCode:
    raw = Path(path).read_bytes()
    try:
        magic, version, id_len = struct.unpack_from("<4sBI", raw, 0)
    except struct.error as exc:
        raise TruncatedFileError(f"{path}: truncated header") from exc
    if magic != CTEC_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CPQ_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = struct.calcsize("<4sBI")
    video_id = raw[offset : offset + id_len].decode("utf-8")
    offset += id_len
    n_kept, p = struct.unpack_from("<II", raw, offset)
    offset += struct.calcsize("<II")
    if len(raw) - offset < n_kept * p:
        raise TruncatedFileError(f"{path}: code payload truncated")
    codes = np.frombuffer(raw, dtype=np.uint8, count=n_kept * p, offset=offset).reshape(n_kept, p)
    return PQCode(video_id=video_id, n_kept=n_kept, codes=codes.copy())
