"""Headless driver: batch generation, risk reports, export, serving."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .core import GenerationConfig, WorkbenchError
from .engine import generate_batch
from .mlm import PromptTemplate
from .models import resolve_filler, resolve_model
from .rationale import DEFAULT_SALIENCY_RATIO, instance_from_record
from .risk import report_from_ratings
from .store import read_dataset_file, read_ratings, read_trails, write_trails


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cfrisk")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="batch-generate counterfactual trails")
    gen.add_argument("--dataset", required=True, help="dataset JSONL file")
    gen.add_argument("--model", required=True, help="model descriptor, e.g. ref:linear:weights.json")
    gen.add_argument("--method", choices=["hotflip", "mlm"], default="hotflip")
    gen.add_argument("--max-steps", type=int, default=5)
    gen.add_argument("--top-p", type=int, default=3)
    gen.add_argument("--beam", type=int, default=3)
    gen.add_argument("--limit", type=int, default=10)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="output trail JSONL file")
    gen.add_argument("--filler", default="ref:filler", help="fill model descriptor (mlm only)")
    gen.add_argument("--saliency-ratio", type=float, default=DEFAULT_SALIENCY_RATIO)
    gen.add_argument("--prompt-template", default=None)
    gen.add_argument("--scope", choices=["sentence", "document"], default="sentence")

    rsk = sub.add_parser("risk", help="compute a risk report from a ratings file")
    rsk.add_argument("--ratings", required=True, help="ratings JSONL file")
    rsk.add_argument("--model", default="(unscoped)", help="model id to scope/label the report")
    rsk.add_argument("--instance", default=None, help="restrict to trails of one instance")
    rsk.add_argument("--trails", default=None, help="trail JSONL file used for scope filters")

    exp = sub.add_parser("export", help="export the rated counterfactual dataset")
    exp.add_argument("--data-dir", required=True, help="store directory")
    exp.add_argument("--min-plausibility", type=int, default=None)
    exp.add_argument("--min-meaningfulness", type=int, default=None)
    exp.add_argument("--flipped-only", action="store_true")
    exp.add_argument("--out", default=None, help="output file (default: stdout)")

    srv = sub.add_parser("serve", help="run the HTTP API")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--data-dir", required=True)
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--prompt-template", default=None)
    srv.add_argument("--timeout", type=float, default=30.0, help="generation timeout seconds")
    srv.add_argument("--ui", default=None, help="frontend directory to mount at /ui")
    return parser


def cmd_generate(args: argparse.Namespace) -> int:
    records = read_dataset_file(args.dataset)
    model = resolve_model(args.model)
    config = GenerationConfig(
        method=args.method,
        max_steps=args.max_steps,
        top_p_positions=args.top_p,
        beam_width=args.beam,
        prediction_scope=args.scope,
    )
    filler = None
    if args.method == "mlm":
        filler = resolve_filler(args.filler, corpus=[r.token_list() for r in records])
    template = PromptTemplate(text=args.prompt_template) if args.prompt_template else None
    instances = [instance_from_record(r, model, args.saliency_ratio) for r in records]
    trails = generate_batch(
        instances,
        config,
        model,
        filler,
        template,
        limit=args.limit,
        seed=args.seed,
        model_id=args.model,
    )
    write_trails(trails, args.out)
    n = len(trails)
    flip_rate = sum(t.flipped for t in trails) / n if n else 0.0
    mean_steps = sum(len(t.steps) for t in trails) / n if n else 0.0
    print(f"n={n} flip-rate={flip_rate:.3f} mean-steps={mean_steps:.2f}")
    return 0


def cmd_risk(args: argparse.Namespace) -> int:
    ratings = read_ratings(args.ratings)
    if not ratings:
        print(json.dumps({"scope": {"model_id": args.model, "instance_id": args.instance},
                          "per_annotator": [], "aggregate": 0.0, "total_count": 0}))
        print("no ratings", file=sys.stderr)
        return 0
    if args.instance is not None or args.trails is not None:
        trails_path = args.trails or Path(args.ratings).with_name("trails.jsonl")
        if not Path(trails_path).exists():
            print(f"error: scope filters need a trails file ({trails_path} missing)", file=sys.stderr)
            return 1
        trails = {t.trail_id: t for t in read_trails(trails_path)}
        ratings = [
            r
            for r in ratings
            if r.trail_id in trails
            and (args.instance is None or trails[r.trail_id].instance_id == args.instance)
        ]
    report = report_from_ratings(ratings, args.model, args.instance)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    from .store import Store

    store = Store(args.data_dir)
    sink = open(args.out, "w") if args.out else sys.stdout
    try:
        for record in store.export_counterfactuals(
            args.min_plausibility, args.min_meaningfulness, args.flipped_only
        ):
            sink.write(json.dumps(record) + "\n")
    finally:
        if args.out:
            sink.close()
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        args.data_dir,
        prompt_template=args.prompt_template,
        generation_timeout=args.timeout,
        ui_dir=args.ui,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "generate": cmd_generate,
        "risk": cmd_risk,
        "export": cmd_export,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except WorkbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
