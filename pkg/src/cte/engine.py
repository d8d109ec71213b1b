"""Index lifecycle and the query pipeline.

Offline, every database video is padded, transformed, pruned and (optionally)
compressed to byte codes.  At query time the submitted sequence is encoded at
every padded length present in the database, shorter database items are
expanded on the fly, every entry is scored in one pass (table lookups in the
compressed case) and the per-entry peak offsets are ranked.  Boundary
refinement re-reads the raw descriptors of the shortlist, so the index keeps
a reference to the directory it was built from.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import cpq, matcher, spectral
from .errors import FormatError, TruncatedFileError, ValidationError
from .matcher import MatchCandidate
from .seqdesc import DescriptorSequence, read_sequence

CTEI_MAGIC = b"CTEI"
CTEI_VERSION = 1


@dataclass
class EngineConfig:
    """Knobs shared by index building and querying.

    ``beta=None`` keeps the full half-spectrum; otherwise the fraction of
    low frequencies retained.  ``pq_p=0`` stores exact spectra; a positive
    value compresses every frequency column to that many bytes.
    ``normalize_freqs=None`` resolves to True exactly when compression is
    on, which is the only path that requires unit columns.
    """

    beta: float | None = 0.25
    lam: float = 0.1
    pq_p: int = 0
    pq_k: int = 256
    fps: float = 15.0
    min_score: float = 0.0
    tau: float = 0.5
    seed: int = 0
    regularize: bool = True
    normalize_freqs: bool | None = None
    pq_samples: int = cpq.DEFAULT_SAMPLES
    pq_iters: int = cpq.DEFAULT_ITERS

    @property
    def compressed(self) -> bool:
        return self.pq_p > 0

    @property
    def resolved_normalize(self) -> bool:
        if self.normalize_freqs is None:
            return self.compressed
        return self.normalize_freqs

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EngineConfig":
        return cls(**json.loads(text))


@dataclass
class IndexEntry:
    video_id: str
    source_file: str
    n: int
    N: int
    n_kept: int
    spec: spectral.SpectralDescriptor | None = None
    code: cpq.PQCode | None = None

    @property
    def payload_bytes(self) -> int:
        if self.code is not None:
            return self.code.nbytes
        return self.spec.coeffs.size * 8 + (
            self.spec.freq_norms.size * 4 if self.spec.freq_norms is not None else 0
        )


class Index:
    """Immutable after construction; safe to query from several threads."""

    def __init__(
        self,
        config: EngineConfig,
        d: int,
        entries: list[IndexEntry],
        descriptor_dir: str,
        codebook: cpq.PQCodebook | None = None,
    ):
        self.config = config
        self.d = d
        self.entries = entries
        self.descriptor_dir = descriptor_dir
        self.codebook = codebook
        self._sequences: dict[str, DescriptorSequence] = {}

    @property
    def n_max(self) -> int:
        return max((e.n for e in self.entries), default=0)

    def entry(self, video_id: str) -> IndexEntry:
        for e in self.entries:
            if e.video_id == video_id:
                return e
        raise KeyError(video_id)

    def load_sequence(self, video_id: str) -> DescriptorSequence:
        """Raw descriptors for boundary refinement, cached per video."""
        if video_id not in self._sequences:
            entry = self.entry(video_id)
            path = Path(self.descriptor_dir) / entry.source_file
            self._sequences[video_id] = read_sequence(path)
        return self._sequences[video_id]

    def save(self, path) -> None:
        cfg = self.config.to_json().encode("utf-8")
        ddir = str(self.descriptor_dir).encode("utf-8")
        blob = struct.pack("<4sBI", CTEI_MAGIC, CTEI_VERSION, self.d)
        blob += struct.pack("<I", len(cfg)) + cfg
        blob += struct.pack("<I", len(ddir)) + ddir
        if self.codebook is not None:
            payload = cpq.codebook_payload(self.codebook)
            blob += struct.pack("<BIIIq", 1, self.codebook.p, self.codebook.k,
                                self.codebook.sub_dim, self.codebook.seed)
            blob += payload
        else:
            blob += struct.pack("<B", 0)
        blob += struct.pack("<I", len(self.entries))
        for e in self.entries:
            vid = e.video_id.encode("utf-8")
            src = e.source_file.encode("utf-8")
            blob += struct.pack("<I", len(vid)) + vid
            blob += struct.pack("<I", len(src)) + src
            blob += struct.pack("<III", e.n, e.N, e.n_kept)
            if e.code is not None:
                blob += e.code.codes.tobytes()
            else:
                spec = e.spec
                blob += struct.pack(
                    "<BB", 0 if spec.mode == spectral.MODE_FULL else 1,
                    1 if spec.freq_norms is not None else 0,
                )
                blob += np.ascontiguousarray(spec.coeffs, dtype="<c16").tobytes()
                if spec.freq_norms is not None:
                    blob += np.ascontiguousarray(spec.freq_norms, dtype="<f8").tobytes()
        Path(path).write_bytes(blob)

    @classmethod
    def load(cls, path) -> "Index":
        raw = Path(path).read_bytes()
        try:
            magic, version, d = struct.unpack_from("<4sBI", raw, 0)
        except struct.error as exc:
            raise TruncatedFileError(f"{path}: truncated header") from exc
        if magic != CTEI_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if version != CTEI_VERSION:
            raise FormatError(f"{path}: unsupported version {version}")
        offset = struct.calcsize("<4sBI")

        def take_bytes() -> bytes:
            nonlocal offset
            (length,) = struct.unpack_from("<I", raw, offset)
            start = offset + 4
            if len(raw) < start + length:
                raise TruncatedFileError(f"{path}: truncated string")
            chunk = raw[start : start + length]
            offset = start + length
            return chunk

        config = EngineConfig.from_json(take_bytes().decode("utf-8"))
        descriptor_dir = take_bytes().decode("utf-8")
        (has_cb,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        codebook = None
        if has_cb:
            p, k, sub_dim, seed = struct.unpack_from("<IIIq", raw, offset)
            offset += struct.calcsize("<IIIq")
            count = p * k * sub_dim
            centroids = np.frombuffer(raw, dtype="<f4", count=count, offset=offset)
            offset += count * 4
            codebook = cpq.PQCodebook(
                p=p, k=k, sub_dim=sub_dim, centroids=centroids.reshape(p, k, sub_dim).copy(), seed=seed
            )
        (n_entries,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        entries = []
        for _ in range(n_entries):
            video_id = take_bytes().decode("utf-8")
            source_file = take_bytes().decode("utf-8")
            n, N, n_kept = struct.unpack_from("<III", raw, offset)
            offset += struct.calcsize("<III")
            if codebook is not None:
                count = n_kept * codebook.p
                if len(raw) < offset + count:
                    raise TruncatedFileError(f"{path}: truncated code payload")
                codes = np.frombuffer(raw, dtype=np.uint8, count=count, offset=offset)
                offset += count
                entry = IndexEntry(
                    video_id, source_file, n, N, n_kept,
                    code=cpq.PQCode(video_id=video_id, n_kept=n_kept, codes=codes.reshape(n_kept, codebook.p).copy()),
                )
            else:
                mode_flag, has_norms = struct.unpack_from("<BB", raw, offset)
                offset += 2
                count = d * n_kept
                coeffs = np.frombuffer(raw, dtype="<c16", count=count, offset=offset)
                offset += count * 16
                freq_norms = None
                if has_norms:
                    freq_norms = np.frombuffer(raw, dtype="<f8", count=n_kept, offset=offset).copy()
                    offset += n_kept * 8
                entry = IndexEntry(
                    video_id, source_file, n, N, n_kept,
                    spec=spectral.SpectralDescriptor(
                        video_id=video_id,
                        n=n,
                        N=N,
                        mode=spectral.MODE_FULL if mode_flag == 0 else spectral.MODE_PRUNED,
                        beta=config.beta if mode_flag == 1 else None,
                        n_kept=n_kept,
                        coeffs=coeffs.reshape(d, n_kept).copy(),
                        freq_norms=freq_norms,
                    ),
                )
            entries.append(entry)
        return cls(config, d, entries, descriptor_dir, codebook)


def build_index(descriptor_dir, config: EngineConfig) -> Index:
    """Encode every ``.cted`` file in a directory into one index.

    Files are processed in name order; all sequences must share one
    descriptor dimensionality.  Deterministic for a fixed config.
    """
    root = Path(descriptor_dir)
    files = sorted(root.glob("*.cted"))
    entries: list[IndexEntry] = []
    codebook = None
    d = None
    normalize = config.resolved_normalize
    sequences = []
    for f in files:
        seq = read_sequence(f)
        if d is None:
            d = seq.d
        elif seq.d != d:
            raise ValidationError(f"{f.name}: dimension {seq.d} differs from {d}")
        sequences.append((f.name, seq))
    if config.compressed and d is not None:
        codebook = cpq.train(
            d, config.pq_p, config.pq_k,
            samples=config.pq_samples, iters=config.pq_iters, seed=config.seed,
        )
    for name, seq in sequences:
        spec = spectral.encode(seq, beta=config.beta, normalize_freqs=normalize)
        entry = IndexEntry(seq.video_id, name, seq.n, spec.N, spec.n_kept)
        if codebook is not None:
            entry.code = cpq.encode_pq(spec, codebook)
        else:
            entry.spec = spec
        entries.append(entry)
    return Index(config, d if d is not None else 0, entries, str(descriptor_dir), codebook)


def _score_entries(
    index: Index, qseq: DescriptorSequence, entries: list[IndexEntry]
) -> list[MatchCandidate]:
    """Score the query against the given entries; one candidate per entry."""
    if not entries:
        return []
    if qseq.d != index.d:
        raise ValidationError(f"query dimension {qseq.d} does not match index dimension {index.d}")
    cfg = index.config
    m0 = spectral.next_pow2(qseq.n)
    sizes = sorted({max(m0, e.N) for e in entries})
    qspecs = {
        size: spectral.encode(qseq, beta=cfg.beta, normalize_freqs=cfg.resolved_normalize, size=size)
        for size in sizes
    }
    tables = {}
    if index.codebook is not None:
        tables = {size: cpq.build_table(qspecs[size], cfg.lam, index.codebook) for size in sizes}

    out = []
    for e in entries:
        size = max(m0, e.N)
        factor = size // e.N
        if index.codebook is not None:
            sv = cpq.score_pq(tables[size], e.code, expand_factor=factor)
        else:
            bspec = e.spec if factor == 1 else spectral.expand(e.spec, factor)
            sv = matcher.score(qspecs[size], bspec, lam=cfg.lam, regularize=cfg.regularize)
        delta, peak = matcher.find_peak(sv)
        out.append(MatchCandidate(query_id=qseq.video_id, db_id=e.video_id, delta=delta, score=peak))
    return out


def _refine(index: Index, qseq: DescriptorSequence, cands: list[MatchCandidate]) -> None:
    cfg = index.config
    # Pruned scoring quantizes offsets to 1/(2*beta) frames; widen the
    # time-domain search accordingly.
    window = 1 if cfg.beta is None else int(round(1.0 / (2.0 * cfg.beta)))
    for cand in cands:
        bseq = index.load_sequence(cand.db_id)
        refined = matcher.refine_boundaries(qseq, bseq, cand.delta, search_window=window)
        cand.refined = refined
        cand.delta = refined.delta


def query(
    index: Index, qseq: DescriptorSequence, top_k: int = 100, refine: bool = False
) -> list[MatchCandidate]:
    """Rank all database entries against one query by peak offset score.

    With ``refine`` the shortlist is re-scored in the time domain (summed
    per-frame similarity over the matched segment) and re-ranked by that.
    """
    if top_k <= 0:
        return []
    cands = _score_entries(index, qseq, index.entries)
    cands.sort(key=lambda c: (-c.score, c.db_id))
    cands = cands[:top_k]
    if refine:
        _refine(index, qseq, cands)
        cands.sort(key=lambda c: (-c.refined.score, c.db_id))
    return cands


def all_pairs_match(index: Index, refine: bool = True) -> list[MatchCandidate]:
    """One candidate per unordered pair of database videos.

    Each video acts as the query against all entries after it in the index
    order, so N videos produce N*(N-1)/2 candidates.
    """
    out = []
    for i, e in enumerate(index.entries):
        rest = index.entries[i + 1 :]
        if not rest:
            continue
        qseq = index.load_sequence(e.video_id)
        cands = _score_entries(index, qseq, rest)
        if refine:
            _refine(index, qseq, cands)
        out.extend(cands)
    return out
