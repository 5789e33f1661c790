"""``forge`` command line.

Exit codes: 0 success, 2 configuration error, 3 missing upstream artifact,
4 external tool failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..errors import NotTrained, ToolSpawnError
from ..toy import write_toy_corpus
from .commands import (
    STAGE_ORDER,
    MissingArtifact,
    Workspace,
    cmd_build,
    cmd_evaluate,
    cmd_generate,
    cmd_ingest,
    cmd_report,
    cmd_train,
    timed,
)
from .config import ConfigError, PipelineConfig

EXIT_OK, EXIT_CONFIG, EXIT_MISSING, EXIT_TOOL = 0, 2, 3, 4

log = logging.getLogger("solforge")

TOY_CONFIG = """\
# Desk-scale run on the synthetic vault corpus.
corpus_dir = "corpus"
labels_path = "labels.jsonl"
tasks_path = "tasks.jsonl"
output_dir = "out"
seed = {seed}
samples_per_task = 5

[model]
context_len = 384

[train]
optimizer = "adam"
learning_rate = 3e-3

[sampler]
max_new_tokens = 320
"""


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="forge", description="Staged secure code generation pipeline for Solidity.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser, stage: bool = False) -> None:
        sp.add_argument("--config", type=Path, help="TOML configuration file")
        sp.add_argument("--seed", type=int, help="override the configured seed")
        sp.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="override any config key, e.g. train.lora_r=8")
        if stage:
            sp.add_argument("--stage", choices=["ci", "vd", "ti"], help="restrict to one stage (default: all enabled)")

    common(sub.add_parser("ingest", help="filter the corpus to single-contract files"))
    common(sub.add_parser("build", help="build the staged datasets"), stage=True)
    common(sub.add_parser("train", help="train adapters stage by stage"), stage=True)
    common(sub.add_parser("generate", help="sample code for every task under the security tag"))
    ev = sub.add_parser("evaluate", help="score samples against task references")
    common(ev)
    ev.add_argument("--samples", type=Path, help="samples.jsonl to score (default: the generated one)")
    common(sub.add_parser("report", help="write the markdown summary table"))
    toy = sub.add_parser("toy", help="write a synthetic corpus, tasks and a matching config")
    toy.add_argument("directory", type=Path)
    toy.add_argument("--size", type=int, default=200)
    toy.add_argument("--tasks", type=int, default=10)
    toy.add_argument("--seed", type=int, default=0)
    return p


def _stages(cfg: PipelineConfig, stage: str | None) -> list[str]:
    if stage is not None:
        return [stage.upper()]
    return [s for s in STAGE_ORDER if s in cfg.enabled_stages()]


def run(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "toy":
        write_toy_corpus(args.directory, args.size, args.seed, args.tasks)
        (args.directory / "forge.toml").write_text(TOY_CONFIG.format(seed=args.seed), encoding="utf-8")
        print(f"wrote {args.size} contracts, {args.tasks} tasks and forge.toml to {args.directory}")
        return EXIT_OK
    try:
        cfg = PipelineConfig.load(args.config, args.overrides, args.seed)
        ws = Workspace(cfg)
        if args.command == "ingest":
            result = timed(ws, "ingest", cmd_ingest)
            print(json.dumps({k: result[k] for k in ("total", "kept", "dropped")}, sort_keys=True))
        elif args.command == "build":
            print(json.dumps(timed(ws, "build", cmd_build, _stages(cfg, args.stage)), sort_keys=True))
        elif args.command == "train":
            losses = timed(ws, "train", cmd_train, _stages(cfg, args.stage))
            for stage, values in losses.items():
                last = f"{values[-1]:.4f}" if values else "n/a"
                print(f"{stage}: {len(values)} epoch(s), final mean loss {last}")
        elif args.command == "generate":
            print(f"{timed(ws, 'generate', cmd_generate)} samples")
        elif args.command == "evaluate":
            print(json.dumps(timed(ws, "evaluate", cmd_evaluate, args.samples), sort_keys=True))
        elif args.command == "report":
            print(timed(ws, "report", cmd_report), end="")
    except ConfigError as exc:
        print(f"forge: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (MissingArtifact, NotTrained) as exc:
        print(f"forge: missing upstream artifact: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except ToolSpawnError as exc:
        print(f"forge: external tool failure: {exc}", file=sys.stderr)
        return EXIT_TOOL
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
