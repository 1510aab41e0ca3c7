"""Command-line shell: ingest, train, xdnn-fit, index, eval, explain, serve."""

from __future__ import annotations

import argparse
import json
import sys

from ..errors import MemeclfError
from .config import ProjectConfig, load_config
from .pipeline import (
    ExplanationBundle,
    cmd_eval,
    cmd_fit_xdnn,
    cmd_index,
    cmd_ingest,
    cmd_train,
)
from .service import serve_forever


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", "-c", required=True, help="project config TOML")
    parser.add_argument("--seed", type=int, default=None, help="override config seed")
    parser.add_argument("--task", default=None, help="restrict to one task")
    parser.add_argument("--model", default=None, help="restrict to one model")


def _selected(cfg: ProjectConfig, args) -> list[tuple[str, str]]:
    tasks = [args.task] if args.task else cfg.tasks
    models = [args.model] if args.model else cfg.models
    return [(t, m) for t in tasks for m in models]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memeclf",
        description="Explainable case-based meme classification pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("ingest", "validate manifests/features and write canonical stores"),
        ("train", "train the classification head per (task, model)"),
        ("xdnn-fit", "fit prototype models per (task, model)"),
        ("index", "build cosine indexes over trained embeddings"),
        ("eval", "evaluate both methods and refresh comparison tables"),
    ):
        p = sub.add_parser(name, help=help_text)
        _common(p)
        if name == "eval":
            p.add_argument("--split", default=None, choices=("dev", "test"))

    p_explain = sub.add_parser("explain", help="print the explanation payload for one meme")
    _common(p_explain)
    p_explain.add_argument("meme_id")
    p_explain.add_argument("--k", type=int, default=None)

    p_serve = sub.add_parser("serve", help="serve the explanation API over HTTP")
    _common(p_serve)
    p_serve.add_argument("--listen", default=None, help="host:port (overrides config)")
    p_serve.add_argument("--static", default=None, help="directory of UI assets to serve at /")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed

        if args.command == "ingest":
            result = cmd_ingest(cfg)
            for report in result.reports:
                status = "ok" if report["ok"] else "FAILED"
                print(f"[{status}] {report['task']}/{report['split']}: total={report['total']} "
                      f"positives={report['positives']}")
                for finding in report["findings"]:
                    print(f"  {finding['severity']}: {finding['message']}")
            if not result.ok:
                print("ingest failed validation", file=sys.stderr)
                return 1
        elif args.command == "train":
            for task, model in _selected(cfg, args):
                path = cmd_train(cfg, task, model)
                print(f"trained {task}/{model} -> {path}")
        elif args.command == "xdnn-fit":
            for task, model in _selected(cfg, args):
                path = cmd_fit_xdnn(cfg, task, model)
                print(f"fitted prototypes {task}/{model} -> {path}")
        elif args.command == "index":
            for task, model in _selected(cfg, args):
                path = cmd_index(cfg, task, model)
                print(f"indexed {task}/{model} -> {path}")
        elif args.command == "eval":
            for task, model in _selected(cfg, args):
                for report in cmd_eval(cfg, task, model, split=args.split):
                    wf = "-" if report.weighted_f1 is None else f"{report.weighted_f1:.4f}"
                    print(
                        f"{report.model_tag}: macro_f1={report.macro_f1:.4f} weighted_f1={wf} "
                        f"(n={report.sample_count})"
                    )
                table = (cfg.artifacts_dir / "eval" / f"{task}.comparison.txt")
                if table.is_file():
                    print(table.read_text(encoding="utf-8"))
        elif args.command == "explain":
            bundle = ExplanationBundle(cfg)
            task = args.task or cfg.tasks[0]
            models = [args.model] if args.model else None
            payload = bundle.explain(args.meme_id, task, models=models, k=args.k)
            print(json.dumps(payload, indent=2, sort_keys=True))
        elif args.command == "serve":
            serve_forever(cfg, listen=args.listen, static_dir=args.static)
    except MemeclfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
