"""Batch driver for the offline stages and the HTTP service.

Subcommands:
  ingest      parse a raw descriptor file and run the cleaning pipeline
  precompute  expand the projection grid and build all artifacts
  serve       run the HTTP API over a precomputed store
  export      write the taxonomy export document

Exit codes: 0 success, 1 usage error, 2 partial grid failure,
3 artifact integrity failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .ingest import IngestConfig, IngestError, corpus_content_hash, parse_corpus, run_pipeline
from .precompute import PrecomputeError, load_grid_config, run_precompute
from .store import ArtifactStore, IntegrityError, StoreError
from .workspace import WorkspaceError, export_from_store

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_INTEGRITY = 3


class CliParser(argparse.ArgumentParser):
    """argparse with the usage exit code pinned to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_globals(parser, suppress: bool):
    # Accepted both before and after the subcommand; the sub-level copies
    # default to SUPPRESS so they never clobber values parsed earlier.
    kw = {"default": argparse.SUPPRESS} if suppress else {}
    parser.add_argument("--store", help="artifact store directory", **kw)
    parser.add_argument("--seed", type=int, help="seed for builders", **kw)
    parser.add_argument("--workers", type=int, help="parallel grid workers", **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(prog="taxolab", description=__doc__.strip().splitlines()[0])
    _add_globals(parser, suppress=False)
    parser.set_defaults(seed=0, workers=1)
    shared = CliParser(add_help=False)
    _add_globals(shared, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser(
        "ingest", help="run the five-step cleaning pipeline", parents=[shared]
    )
    p_ingest.add_argument("--input", required=True, help="raw descriptor file")
    p_ingest.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p_ingest.add_argument(
        "--stopwords",
        action="append",
        default=[],
        metavar="LANG=PATH",
        help="stopword list; repeatable (bare PATH defaults the language)",
    )
    p_ingest.add_argument("--gazetteer", default=None, help="place-name list")
    p_ingest.add_argument("--min-count", type=int, default=4)
    p_ingest.add_argument("--lev-max-distance", type=int, default=1)
    p_ingest.add_argument("--lev-min-length", type=int, default=5)

    p_pre = sub.add_parser(
        "precompute", help="compute the full projection grid", parents=[shared]
    )
    p_pre.add_argument("--grid-config", required=True, help="grid config JSON")

    p_serve = sub.add_parser("serve", help="serve the HTTP API", parents=[shared])
    p_serve.add_argument("--bind", default="127.0.0.1:8000", metavar="HOST:PORT")
    p_serve.add_argument(
        "--ui", default=None, metavar="DIR",
        help="also serve the built workbench from this directory",
    )

    p_export = sub.add_parser(
        "export", help="write the taxonomy export document", parents=[shared]
    )
    p_export.add_argument("--out", required=True, help="output file path")

    return parser


def cmd_ingest(args) -> int:
    store = ArtifactStore(args.store)
    stopword_paths = {}
    for entry in args.stopwords:
        lang, _, path = entry.partition("=")
        if not path:
            lang, path = f"lang{len(stopword_paths)}", lang
        stopword_paths[lang] = path
    config = IngestConfig(
        stopword_paths=stopword_paths,
        gazetteer_path=args.gazetteer,
        levenshtein_max_distance=args.lev_max_distance,
        levenshtein_min_length=args.lev_min_length,
        min_count=args.min_count,
    )
    raw = parse_corpus(args.input, args.format)
    corpus = run_pipeline(raw, config)
    store.save_artifact(
        "corpus", "corpus", corpus.to_json_bytes(), f"ingest taxolab-{__version__}"
    )
    store.record_config(
        "ingest",
        {
            "input": str(args.input),
            "format": args.format,
            "stopwords": {k: str(v) for k, v in stopword_paths.items()},
            "gazetteer": str(args.gazetteer) if args.gazetteer else None,
            "min_count": args.min_count,
            "levenshtein_max_distance": args.lev_max_distance,
            "levenshtein_min_length": args.lev_min_length,
        },
    )
    report = corpus.pipeline_report
    print(f"ingested {report['raw_items']} raw items -> {len(corpus)} canonical descriptors")
    for step in report["steps"]:
        kept = step.get("kept_items")
        print(f"  {step['step']}: {step['input_items']} -> {kept}")
    print(f"corpus hash {corpus_content_hash(corpus)[:16]}")
    return EXIT_OK


def cmd_precompute(args) -> int:
    store = ArtifactStore(args.store)
    grid_config = load_grid_config(args.grid_config)
    result = run_precompute(
        store, grid_config, seed=args.seed, workers=args.workers, progress=print
    )
    print(
        f"grid: {result['total_cells']} cells "
        f"({result['computed']} computed, {result['skipped']} skipped, "
        f"{len(result['failed'])} failed)"
    )
    return EXIT_PARTIAL if result["failed"] else EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .workspace import Workspace

    store = ArtifactStore(args.store)
    broken = store.verify_all()
    if broken:
        print(f"store integrity check failed: {', '.join(broken)}", file=sys.stderr)
        return EXIT_INTEGRITY
    workspace = Workspace(store)
    app = create_app(workspace, ui_dir=args.ui)
    host, _, port = args.bind.rpartition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port))
    return EXIT_OK


def cmd_export(args) -> int:
    store = ArtifactStore(args.store)
    document = export_from_store(store)
    payload = (
        json.dumps(document, sort_keys=True, ensure_ascii=False, indent=1) + "\n"
    ).encode("utf-8")
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(payload)
    print(
        f"exported {len(document['classes'])} classes, "
        f"{len(document['unassigned'])} unassigned items -> {out}"
    )
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "store", None) is None:
        parser.error("--store is required")
    handlers = {
        "ingest": cmd_ingest,
        "precompute": cmd_precompute,
        "serve": cmd_serve,
        "export": cmd_export,
    }
    try:
        return handlers[args.command](args)
    except IntegrityError as exc:
        print(f"integrity failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except (IngestError, PrecomputeError, StoreError, WorkspaceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
