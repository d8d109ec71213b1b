"""Command-line interface: build, query, align, eval, synth, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import engine
from .align import build_anchor_graph, solve_alignment
from .errors import CteError
from .evalkit import match_pr, mean_average_precision, pas_unedited, pr_area
from .matcher import MatchCandidate
from .seqdesc import GroundTruthTimeline, read_sequence, synth_event, write_sequence


def _parse_beta(text: str) -> float | None:
    if text == "full":
        return None
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _load_index(path: str) -> engine.Index:
    return engine.Index.load(path)


def cmd_build(args) -> int:
    config = engine.EngineConfig(
        beta=_parse_beta(args.beta),
        lam=args.lam,
        pq_p=args.pq,
        pq_k=args.pq_k,
        fps=args.fps,
        min_score=args.min_score,
        tau=args.tau,
        seed=args.seed,
        pq_samples=args.pq_samples,
        pq_iters=args.pq_iters,
    )
    index = engine.build_index(args.descriptor_dir, config)
    index.save(args.out)
    payload = sum(e.payload_bytes for e in index.entries)
    print(f"indexed {len(index.entries)} videos (d={index.d}), payload {payload} bytes -> {args.out}")
    return 0


def cmd_query(args) -> int:
    index = _load_index(args.index)
    qseq = read_sequence(args.query)
    cands = engine.query(index, qseq, top_k=args.topk, refine=args.refine)
    print(f"{'rank':>4}  {'db_id':<16} {'delta':>8}  {'score':>12}")
    for rank, c in enumerate(cands, start=1):
        print(f"{rank:>4}  {c.db_id:<16} {c.delta:>8}  {c.score:>12.6f}")
    if args.json_out:
        Path(args.json_out).write_text(
            json.dumps([c.to_json_dict() for c in cands], indent=2, sort_keys=True)
        )
    return 0


def cmd_align(args) -> int:
    index = _load_index(args.index)
    matches = engine.all_pairs_match(index, refine=True)
    anchors, edges = build_anchor_graph(matches, index.config.fps, args.min_score)
    alignment = solve_alignment(anchors, edges, args.tau)
    Path(args.out).write_text(alignment.to_json())
    kept = len(alignment.retained)
    print(
        f"aligned {len(anchors)} anchors in {len(alignment.components)} components; "
        f"retained {kept}/{len(edges)} edges, max residual {alignment.max_residual:.4f}s -> {args.out}"
    )
    return 0


def cmd_synth(args) -> int:
    clips, gt = synth_event(
        master_len=args.master_len,
        d=args.d,
        n_clips=args.clips,
        clip_len_range=(args.min_len, args.max_len),
        rho=args.rho,
        sigma=args.sigma,
        seed=args.seed,
        fps=args.fps,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for clip in clips:
        write_sequence(clip, out / f"{clip.video_id}.cted")
    (out / "ground_truth.json").write_text(gt.to_json())
    print(f"wrote {len(clips)} clips and ground_truth.json to {out}")
    return 0


def _load_alignment_json(path: str):
    from .align import AnchorSegment, GlobalAlignment, MatchEdge

    data = json.loads(Path(path).read_text())
    anchors, start_times, components, retained = [], {}, [], []
    for comp in data["components"]:
        members = []
        for a in comp["anchors"]:
            anchors.append(
                AnchorSegment(a["anchor_id"], a["video_id"], a["start_frame"], a["end_frame"],
                              score=a.get("score", 0.0))
            )
            start_times[a["anchor_id"]] = a["t_sec"]
            members.append(a["anchor_id"])
        components.append(members)
        for e in comp["retained_edges"]:
            retained.append(MatchEdge(e["i"], e["j"], e["delta_sec"], e["score"], e["kind"]))
    return GlobalAlignment(start_times, components, retained, anchors)


def cmd_eval(args) -> int:
    if args.metric == "pas":
        gt = GroundTruthTimeline.from_json(Path(args.gt).read_text(), fps=args.fps)
        alignment = _load_alignment_json(args.alignment)
        report = pas_unedited(gt, alignment, tolerance=args.tolerance)
        print(f"{'metric':<12} {'value':>10} {'out of':>8}")
        print(f"{'pas':<12} {report.pas:>10.2f} {report.gt_pairs:>8}")
    elif args.metric == "pr":
        gt = GroundTruthTimeline.from_json(Path(args.gt).read_text(), fps=args.fps)
        rows = json.loads(Path(args.matches).read_text())
        matches = [MatchCandidate.from_json_dict(r) for r in rows]
        curve = match_pr(matches, gt, tolerance=args.tolerance)
        print(f"{'recall':>8} {'precision':>10}")
        for recall, precision in curve:
            print(f"{recall:>8.3f} {precision:>10.3f}")
        print(f"area under curve: {pr_area(curve):.4f}")
    elif args.metric == "map":
        rankings = json.loads(Path(args.rankings).read_text())
        relevance = {k: set(v) for k, v in json.loads(Path(args.relevance).read_text()).items()}
        value = mean_average_precision(rankings, relevance)
        print(f"{'metric':<12} {'value':>10}")
        print(f"{'mAP':<12} {value:>10.4f}")
    return 0


def cmd_serve(args) -> int:
    from . import service

    index = _load_index(args.index)
    session = args.session or (args.index + ".session.json")
    ui = args.ui if args.ui else None
    print(f"serving on {args.host}:{args.port} (session: {session})")
    service.serve(index, args.host, args.port, session, ui_dir=ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cte", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="index a directory of .cted files")
    b.add_argument("descriptor_dir")
    b.add_argument("--out", required=True)
    b.add_argument("--beta", default="1/4", help="'full' or a fraction like 1/4")
    b.add_argument("--pq", type=int, default=0, help="subquantizers per column (0 = exact)")
    b.add_argument("--pq-k", type=int, default=256)
    b.add_argument("--pq-samples", type=int, default=100_000)
    b.add_argument("--pq-iters", type=int, default=25)
    b.add_argument("--lambda", dest="lam", type=float, default=0.1)
    b.add_argument("--fps", type=float, default=15.0)
    b.add_argument("--min-score", type=float, default=0.0)
    b.add_argument("--tau", type=float, default=0.5)
    b.add_argument("--seed", type=int, default=0)
    b.set_defaults(func=cmd_build)

    q = sub.add_parser("query", help="rank database videos against one query")
    q.add_argument("index")
    q.add_argument("query")
    q.add_argument("--topk", type=int, default=100)
    q.add_argument("--refine", action="store_true")
    q.add_argument("--json-out")
    q.set_defaults(func=cmd_query)

    a = sub.add_parser("align", help="solve a global timeline for the whole index")
    a.add_argument("index")
    a.add_argument("--tau", type=float, default=0.5)
    a.add_argument("--min-score", type=float, default=0.0)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_align)

    s = sub.add_parser("synth", help="generate synthetic clips with ground truth")
    s.add_argument("--clips", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--master-len", type=int, default=900)
    s.add_argument("--d", type=int, default=32)
    s.add_argument("--min-len", type=int, default=150)
    s.add_argument("--max-len", type=int, default=300)
    s.add_argument("--rho", type=float, default=0.8)
    s.add_argument("--sigma", type=float, default=0.1)
    s.add_argument("--fps", type=float, default=15.0)
    s.set_defaults(func=cmd_synth)

    e = sub.add_parser("eval", help="score retrieval or alignment output")
    esub = e.add_subparsers(dest="metric", required=True)
    ep = esub.add_parser("pas")
    ep.add_argument("gt")
    ep.add_argument("alignment")
    ep.add_argument("--tolerance", type=float, default=0.5)
    ep.add_argument("--fps", type=float, default=15.0)
    epr = esub.add_parser("pr")
    epr.add_argument("matches")
    epr.add_argument("gt")
    epr.add_argument("--tolerance", type=float, default=0.5)
    epr.add_argument("--fps", type=float, default=15.0)
    em = esub.add_parser("map")
    em.add_argument("rankings")
    em.add_argument("relevance")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("serve", help="run the alignment review service")
    v.add_argument("index")
    v.add_argument("--host", default="127.0.0.1")
    v.add_argument("--port", type=int, default=8650)
    v.add_argument("--session", default=None)
    v.add_argument("--ui", default=None, help="static directory to serve at /")
    v.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
