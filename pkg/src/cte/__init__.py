"""Circulant temporal encoding: frequency-domain matching, compressed search
and global timeline alignment for frame-descriptor sequences."""

from .align import (
    AnchorSegment,
    GlobalAlignment,
    MatchEdge,
    build_anchor_graph,
    resolve_frame_offsets,
    solve_alignment,
    solve_unedited,
)
from .cpq import LookupTable, PQCode, PQCodebook, build_table, encode_pq, score_pq, train
from .engine import EngineConfig, Index, all_pairs_match, build_index, query
from .evalkit import (
    PasReport,
    match_pr,
    mean_average_precision,
    mean_descriptor,
    mean_similarity,
    pas_fractional,
    pas_unedited,
)
from .matcher import (
    MatchCandidate,
    RefinedMatch,
    ScoreVector,
    find_peak,
    match_pair,
    refine_boundaries,
    score,
    score_direct,
)
from .seqdesc import (
    DescriptorSequence,
    GroundTruthEntry,
    GroundTruthTimeline,
    read_sequence,
    synth_event,
    write_sequence,
)
from .spectral import SpectralDescriptor, dft, encode, encode_query_multisize, expand

__version__ = "0.1.0"
