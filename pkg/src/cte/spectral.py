"""Frequency-domain representation of descriptor sequences.

Each descriptor dimension is treated as a real-valued signal over time,
zero-padded to a power of two and transformed.  Only the lower half-spectrum
needs storing for real input, and low-frequency pruning keeps a fixed
fraction of the columns so localization accuracy stays proportional to the
sequence length.  Expansion rebuilds the spectrum of a signal concatenated
with itself without touching the time domain, which lets a short database
item be compared against a longer query at no cost.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, TruncatedFileError, ValidationError
from .seqdesc import DescriptorSequence

CTES_MAGIC = b"CTES"
CTES_VERSION = 1

MODE_FULL = "full"
MODE_PRUNED = "pruned"

# Pruned mode keeps coefficients strictly inside the lower half-spectrum,
# so the kept fraction may not exceed 1/4.
MAX_BETA = 0.25


def is_pow2(x: int) -> bool:
    return x >= 1 and (x & (x - 1)) == 0


def next_pow2(n: int) -> int:
    """Smallest power of two >= n."""
    if n < 1:
        raise ValidationError(f"need a positive length, got {n}")
    return 1 << (n - 1).bit_length()


def dft(signal, inverse: bool = False) -> np.ndarray:
    """Discrete Fourier transform of a power-of-two-length vector.

    Forward: X_k = sum_t x_t * exp(-2*pi*i*k*t/L).  The inverse carries the
    1/L factor, so ``dft(dft(x), inverse=True)`` returns x.
    """
    x = np.asarray(signal, dtype=np.complex128)
    if x.ndim != 1:
        raise ValidationError(f"expected a 1-D signal, got shape {x.shape}")
    if not is_pow2(x.shape[0]):
        raise ValidationError(f"length {x.shape[0]} is not a power of two")
    return np.fft.ifft(x) if inverse else np.fft.fft(x)


def validate_beta(beta: float) -> int:
    """Check that beta is a negative power of two <= 1/4; return log2(1/beta)."""
    if not (0.0 < beta <= MAX_BETA):
        raise ValidationError(f"pruning fraction must be in (0, {MAX_BETA}], got {beta}")
    exponent = math.log2(1.0 / beta)
    if exponent != int(exponent):
        raise ValidationError(f"pruning fraction must be a negative power of two, got {beta}")
    return int(exponent)


@dataclass(frozen=True)
class SpectralDescriptor:
    """Per-dimension Fourier coefficients of a zero-padded sequence.

    ``coeffs`` is a (d x n_kept) complex matrix; column i is the
    d-dimensional frequency vector at index i.  In full mode all N/2 + 1
    half-spectrum columns are present; in pruned mode only the beta*N
    lowest frequencies.  ``freq_norms`` records pre-normalization column
    norms when the columns were scaled to unit length.
    """

    video_id: str
    n: int
    N: int
    mode: str
    beta: float | None
    n_kept: int
    coeffs: np.ndarray
    freq_norms: np.ndarray | None = None

    def __post_init__(self):
        if not is_pow2(self.N):
            raise ValidationError(f"padded length {self.N} is not a power of two")
        if self.mode not in (MODE_FULL, MODE_PRUNED):
            raise ValidationError(f"unknown mode {self.mode!r}")
        if self.coeffs.ndim != 2 or self.coeffs.shape[1] != self.n_kept:
            raise ValidationError(
                f"coefficient matrix {self.coeffs.shape} does not hold {self.n_kept} columns"
            )
        self.coeffs.setflags(write=False)
        if self.freq_norms is not None:
            self.freq_norms.setflags(write=False)

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    @property
    def normalized(self) -> bool:
        return self.freq_norms is not None


def encode(
    seq: DescriptorSequence,
    beta: float | None = None,
    normalize_freqs: bool = False,
    size: int | None = None,
) -> SpectralDescriptor:
    """Transform a sequence into its (optionally pruned) spectrum.

    ``beta=None`` selects full mode (lossless half-spectrum).  ``size``
    overrides the padded length, which must be a power of two >= n; by
    default the next power of two is used.  With ``normalize_freqs`` every
    stored column is scaled to unit norm (zero columns are left untouched)
    and the original norms are kept alongside.
    """
    n = seq.n
    N = next_pow2(n) if size is None else int(size)
    if not is_pow2(N) or N < n:
        raise ValidationError(f"padded length {N} must be a power of two >= {n}")
    if beta is None:
        n_kept = N // 2 + 1
        mode = MODE_FULL
    else:
        validate_beta(beta)
        kept = beta * N
        if kept < 1 or kept != int(kept):
            raise ValidationError(
                f"pruning fraction {beta} keeps {kept} of {N} coefficients; need an integer >= 1"
            )
        n_kept = int(kept)
        mode = MODE_PRUNED

    spectrum = np.fft.rfft(seq.frames.astype(np.float64), n=N, axis=0)  # (N/2+1, d)
    coeffs = spectrum[:n_kept].T.copy()  # (d, n_kept)

    freq_norms = None
    if normalize_freqs:
        norms = np.linalg.norm(coeffs, axis=0)
        nonzero = norms > 0
        coeffs[:, nonzero] /= norms[nonzero]
        freq_norms = norms

    return SpectralDescriptor(
        video_id=seq.video_id,
        n=n,
        N=N,
        mode=mode,
        beta=beta,
        n_kept=n_kept,
        coeffs=coeffs,
        freq_norms=freq_norms,
    )


def encode_query_multisize(
    seq: DescriptorSequence,
    sizes,
    beta: float | None = None,
    normalize_freqs: bool = False,
) -> list[SpectralDescriptor]:
    """Encode one query at several padded lengths (one descriptor per size)."""
    out = []
    for size in sizes:
        if size < seq.n:
            raise ValidationError(f"size {size} is smaller than the query length {seq.n}")
        out.append(encode(seq, beta=beta, normalize_freqs=normalize_freqs, size=int(size)))
    return out


def expand(spec: SpectralDescriptor, factor: int) -> SpectralDescriptor:
    """Spectrum of the padded signal concatenated with itself ``factor`` times.

    Repeating a length-N signal f times leaves energy only at frequency
    indices that are multiples of f, where the coefficient equals f times
    the original one.  For a column-normalized descriptor the scale factor
    moves into ``freq_norms`` and the unit columns are kept as-is, matching
    what encoding the repeated signal directly would produce.
    """
    factor = int(factor)
    if not is_pow2(factor):
        raise ValidationError(f"expansion factor {factor} is not a power of two")
    if factor == 1:
        return spec

    if spec.mode == MODE_FULL:
        # New half-spectrum has factor*N/2 + 1 columns; the old Nyquist
        # lands exactly on the new one.
        new_kept = factor * (spec.n_kept - 1) + 1
    else:
        new_kept = factor * spec.n_kept

    coeffs = np.zeros((spec.d, new_kept), dtype=spec.coeffs.dtype)
    scale = 1.0 if spec.normalized else float(factor)
    coeffs[:, ::factor] = spec.coeffs * scale

    freq_norms = None
    if spec.freq_norms is not None:
        freq_norms = np.zeros(new_kept, dtype=spec.freq_norms.dtype)
        freq_norms[::factor] = spec.freq_norms * factor

    return SpectralDescriptor(
        video_id=spec.video_id,
        n=factor * spec.N,
        N=factor * spec.N,
        mode=spec.mode,
        beta=spec.beta,
        n_kept=new_kept,
        coeffs=coeffs,
        freq_norms=freq_norms,
    )


def write_spectral(spec: SpectralDescriptor, path) -> None:
    """Serialize a spectral descriptor (CTES format, interleaved f32 re/im)."""
    vid = spec.video_id.encode("utf-8")
    beta_exp = 0 if spec.beta is None else validate_beta(spec.beta)
    header = struct.pack(
        "<4sBI", CTES_MAGIC, CTES_VERSION, len(vid)
    ) + vid + struct.pack(
        "<IIIBBIB",
        spec.d,
        spec.n,
        spec.N,
        0 if spec.mode == MODE_FULL else 1,
        beta_exp,
        spec.n_kept,
        1 if spec.freq_norms is not None else 0,
    )
    body = np.ascontiguousarray(spec.coeffs, dtype="<c8").tobytes()
    if spec.freq_norms is not None:
        body += np.ascontiguousarray(spec.freq_norms, dtype="<f4").tobytes()
    Path(path).write_bytes(header + body)


def read_spectral(path) -> SpectralDescriptor:
    raw = Path(path).read_bytes()
    try:
        magic, version, id_len = struct.unpack_from("<4sBI", raw, 0)
    except struct.error as exc:
        raise TruncatedFileError(f"{path}: truncated header") from exc
    if magic != CTES_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != CTES_VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    offset = struct.calcsize("<4sBI")
    video_id = raw[offset : offset + id_len].decode("utf-8")
    offset += id_len
    d, n, N, mode_flag, beta_exp, n_kept, has_norms = struct.unpack_from("<IIIBBIB", raw, offset)
    offset += struct.calcsize("<IIIBBIB")
    count = d * n_kept
    if len(raw) - offset < count * 8:
        raise TruncatedFileError(f"{path}: coefficient payload truncated")
    coeffs = np.frombuffer(raw, dtype="<c8", count=count, offset=offset).reshape(d, n_kept)
    offset += count * 8
    freq_norms = None
    if has_norms:
        if len(raw) - offset < n_kept * 4:
            raise TruncatedFileError(f"{path}: norm payload truncated")
        freq_norms = np.frombuffer(raw, dtype="<f4", count=n_kept, offset=offset).astype(np.float64)
    return SpectralDescriptor(
        video_id=video_id,
        n=n,
        N=N,
        mode=MODE_FULL if mode_flag == 0 else MODE_PRUNED,
        beta=None if mode_flag == 0 else 2.0 ** (-beta_exp),
        n_kept=n_kept,
        coeffs=coeffs.astype(np.complex128),
        freq_norms=freq_norms,
    )
