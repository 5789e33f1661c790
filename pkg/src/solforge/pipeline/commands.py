"""The six pipeline commands. Each reads its upstream artifacts from the output directory."""

from __future__ import annotations

import hashlib
import json
import logging
import time
from pathlib import Path

from ..data.builders import (
    SECURITY,
    VULNERABLE,
    TrainingRecord,
    build_ci_dataset,
    build_ti_dataset,
    build_vd_dataset,
    split_811,
)
from ..data.corpus import filter_single_contract, instruction_examples, load_corpus
from ..errors import NotTrained
from ..frontend.lexer import ContractSource
from ..lm.checkpoint import load_checkpoint, save_checkpoint
from ..lm.sample import generate_secure
from ..lm.staged import PROMPT_TEXTS, init_base, run_stage
from ..lm.tokenizer import BpeTokenizer
from ..metrics.codebleu import aggregate, codebleu
from ..security.compile import compile_check
from ..security.detectors import detect
from ..security.labels import label_corpus
from ..security.slither import slither_adapter
from ..security.summary import security_metrics
from ..util import derive_seed, read_jsonl, sha256_file, write_json, write_jsonl
from .config import PipelineConfig
from .manifest import RunManifest

log = logging.getLogger(__name__)

STAGE_ORDER = ("CI", "VD", "TI")
REPORT_COLUMNS = ("AvgBLEU", "BestBLEU", "AvgCB", "BestCB", "ComPass(%)", "VulRate(%)", "SafeAval(%)")


class MissingArtifact(Exception):
    pass


def _require(path: Path, hint: str) -> Path:
    if not path.exists():
        raise MissingArtifact(f"{path} not found; run `forge {hint}` first")
    return path


class Workspace:
    """Artifact locations under ``output_dir``."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.root = cfg.output_dir
        self.root.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest.open(self.root, cfg)

    @property
    def corpus(self) -> Path:
        return self.root / "corpus.jsonl"

    def dataset_dir(self, stage: str) -> Path:
        return self.root / "datasets" / stage.lower()

    def checkpoint(self, stage: str) -> Path:
        return self.root / "models" / f"{stage.lower()}.ckpt"

    def train_log(self, stage: str) -> Path:
        return self.root / "logs" / f"train_{stage.lower()}.jsonl"

    @property
    def samples(self) -> Path:
        return self.root / "samples.jsonl"

    def record(self, path: Path) -> None:
        self.manifest.add_artifact(path)


# -- ingest -------------------------------------------------------------------

def cmd_ingest(ws: Workspace) -> dict:
    cfg = ws.cfg
    labels_path = cfg.path("labels_path")
    ws.manifest.add_inputs(cfg.path("corpus_dir"), "*.sol")
    if labels_path is not None:
        ws.manifest.add_input(labels_path)
    corpus = load_corpus(cfg.path("corpus_dir"), labels_path)
    kept, stats = filter_single_contract(corpus)
    if labels_path is None:
        rows = {r["id"]: r["label"] for r in label_corpus(kept, detect)}
        kept = [ContractSource(s.text, s.origin, rows[s.origin]) for s in kept if s.origin in rows]
    unlabeled = [s.origin for s in kept if s.label is None]
    if unlabeled:
        log.warning("%d kept contracts have no label and are excluded from detection and instruction data", len(unlabeled))
    write_jsonl(ws.corpus, ({"id": s.origin, "label": s.label, "text": s.text} for s in kept))
    manifest = {**stats.to_dict(), "dropped_ids": dict(sorted(stats.dropped_ids.items()))}
    write_json(ws.root / "corpus_manifest.json", manifest)
    ws.record(ws.corpus)
    ws.record(ws.root / "corpus_manifest.json")
    log.info("ingest: %d files, %d kept", stats.total, stats.kept)
    return manifest


def _load_ingested(ws: Workspace) -> list[ContractSource]:
    _require(ws.corpus, "ingest")
    return [ContractSource(r["text"], r["id"], r["label"]) for r in read_jsonl(ws.corpus)]


# -- build --------------------------------------------------------------------

def _stage_records(stage: str, corpus: list[ContractSource], seed: int) -> list[TrainingRecord]:
    labeled = [s for s in corpus if s.label in (SECURITY, VULNERABLE)]
    if stage == "CI":
        return build_ci_dataset([s for s in corpus if s.label in (None, SECURITY)], seed)
    if stage == "VD":
        return build_vd_dataset(labeled)
    return build_ti_dataset(instruction_examples(labeled))


def cmd_build(ws: Workspace, stages: list[str]) -> dict:
    corpus = _load_ingested(ws)
    sizes = {}
    for stage in stages:
        split = split_811(_stage_records(stage, corpus, ws.cfg.seed), ws.cfg.seed)
        out = ws.dataset_dir(stage)
        out.mkdir(parents=True, exist_ok=True)
        for name in ("train", "valid", "test"):
            path = out / f"{name}.jsonl"
            write_jsonl(path, (r.to_dict() for r in getattr(split, name)))
            ws.record(path)
        sizes[stage] = dict(zip(("train", "valid", "test"), split.sizes()))
        log.info("build %s: train/valid/test = %s", stage, split.sizes())
    return sizes


def _load_split(ws: Workspace, stage: str, name: str) -> list[TrainingRecord]:
    path = _require(ws.dataset_dir(stage) / f"{name}.jsonl", f"build --stage {stage.lower()}")
    return [TrainingRecord.from_dict(r) for r in read_jsonl(path)]


# -- train --------------------------------------------------------------------

def _tokenizer_texts(corpus: list[ContractSource]) -> list[str]:
    return [s.text for s in corpus] + PROMPT_TEXTS


def _base_key(ws: Workspace) -> str:
    """Identity of a base model: model settings, seed and the ingested corpus."""
    blob = json.dumps({"model": ws.cfg.raw["model"], "seed": ws.cfg.seed, "corpus": sha256_file(ws.corpus)}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _base(ws: Workspace):
    path = ws.checkpoint("base")
    _require(ws.corpus, "ingest")
    key = _base_key(ws)
    if path.exists():
        bundle = load_checkpoint(path)
        if bundle.rng_state.get("base_key") == key:
            return bundle
        log.info("base model is stale; rebuilding")
    corpus = _load_ingested(ws)
    cfg = ws.cfg
    m = cfg.raw["model"]
    tok = BpeTokenizer.train(_tokenizer_texts(corpus), int(m["vocab_size"]))
    entries = []
    bundle = init_base(
        tok,
        cfg.model_config(),
        [s.text for s in corpus],
        int(m["pretrain_epochs"]),
        float(m["pretrain_learning_rate"]),
        seed=cfg.seed,
        on_epoch=entries.append,
    )
    bundle.rng_state["base_key"] = key
    path.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(path, bundle)
    ws.record(path)
    _write_log(ws, "base", entries)
    return bundle


def _write_log(ws: Workspace, stage: str, entries: list[dict]) -> None:
    path = ws.train_log(stage)
    path.parent.mkdir(parents=True, exist_ok=True)
    write_jsonl(path, entries)
    ws.record(path)


def _previous(ws: Workspace, stage: str) -> str:
    enabled = ws.cfg.enabled_stages()
    earlier = [s for s in STAGE_ORDER[: STAGE_ORDER.index(stage)] if s in enabled]
    return earlier[-1] if earlier else "base"


def cmd_train(ws: Workspace, stages: list[str]) -> dict:
    losses = {}
    tcfg = ws.cfg.train_config()
    for stage in stages:
        records = _load_split(ws, stage, "train")
        prev = _previous(ws, stage)
        if prev == "base" or tcfg.fresh_adapters_per_stage:
            bundle = _base(ws)
        else:
            bundle = load_checkpoint(_require(ws.checkpoint(prev), f"train --stage {prev.lower()}"))
        entries: list[dict] = []
        bundle = run_stage(bundle, records, tcfg, stage, on_epoch=entries.append)
        path = ws.checkpoint(stage)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_checkpoint(path, bundle)
        ws.record(path)
        _write_log(ws, stage, entries)
        losses[stage] = [e["mean_loss"] for e in entries]
    return losses


# -- generate -----------------------------------------------------------------

def _tasks(ws: Workspace) -> list[dict]:
    path = ws.cfg.path("tasks_path")
    if path is None:
        raise MissingArtifact("tasks_path is not configured")
    ws.manifest.add_input(_require(path, "toy"))
    return list(read_jsonl(path))


def cmd_generate(ws: Workspace) -> int:
    enabled = ws.cfg.enabled_stages()
    final = enabled[-1] if enabled else None
    if final is None:
        raise MissingArtifact("no training stage is enabled")
    bundle = load_checkpoint(_require(ws.checkpoint(final), f"train --stage {final.lower()}"))
    if "TI" not in bundle.lineage:
        raise NotTrained("the final checkpoint was not trained through the instruction stage")
    rows = []
    for task in _tasks(ws):
        for idx in range(ws.cfg.samples_per_task):
            seed = derive_seed(ws.cfg.seed, task["task_id"], idx) % 2**63
            code = generate_secure(bundle.model, bundle.adapters, bundle.tok, task["instruction"], bundle.lineage, ws.cfg.sampler_config(seed))
            rows.append({"task_id": task["task_id"], "sample_index": idx, "code": code})
    rows.sort(key=lambda r: (r["task_id"], r["sample_index"]))
    write_jsonl(ws.samples, rows)
    ws.record(ws.samples)
    return len(rows)


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(ws: Workspace, samples_path: Path | None = None) -> dict:
    tasks = {t["task_id"]: t for t in _tasks(ws)}
    samples_path = samples_path or ws.samples
    samples = sorted(read_jsonl(_require(samples_path, "generate")), key=lambda r: (r["task_id"], r["sample_index"]))
    mcfg = ws.cfg.metric_config()
    solc = ws.cfg.solc_config()
    scores, findings_rows, security = [], [], []
    per_task: dict[str, list] = {}
    for s in samples:
        task = tasks.get(s["task_id"])
        if task is None:
            log.warning("sample for unknown task %s skipped", s["task_id"])
            continue
        sc = codebleu(s["code"], task["reference_code"], mcfg)
        cr = compile_check(s["code"], solc)
        if cr.compiled and ws.cfg.slither_path:
            findings = slither_adapter(s["code"], ws.cfg.slither_path)
        else:
            findings = detect(s["code"]) if cr.compiled else []
        security.append((cr, findings))
        per_task.setdefault(s["task_id"], []).append(sc)
        scores.append({"task_id": s["task_id"], "sample_index": s["sample_index"], **sc.to_dict(), **{"compiled": cr.compiled, "compile_tool": cr.tool}, "findings": len(findings)})
        findings_rows.append({"task_id": s["task_id"], "sample_index": s["sample_index"], "findings": [f.to_dict() for f in findings]})
    sec = security_metrics(security)
    agg = [aggregate(v, k) for k, v in sorted(per_task.items())]
    n = len(agg)
    summary = {
        "AvgBLEU": round(100 * sum(a[0] for a in agg) / n, 2),
        "BestBLEU": round(100 * sum(a[1] for a in agg) / n, 2),
        "AvgCB": round(100 * sum(a[2] for a in agg) / n, 2),
        "BestCB": round(100 * sum(a[3] for a in agg) / n, 2),
        "ComPass(%)": round(sec.com_pass, 2),
        "VulRate(%)": round(sec.vul_rate, 2),
        "SafeAval(%)": round(sec.safe_aval, 2),
    }
    for name, rows in (("scores.jsonl", scores), ("findings.jsonl", findings_rows)):
        write_jsonl(ws.root / name, rows)
        ws.record(ws.root / name)
    write_json(ws.root / "security_summary.json", sec.to_dict())
    write_json(ws.root / "summary.json", summary)
    ws.record(ws.root / "security_summary.json")
    ws.record(ws.root / "summary.json")
    return summary


# -- report -------------------------------------------------------------------

def render_report(summary: dict, approximate: bool) -> str:
    header = "| " + " | ".join(REPORT_COLUMNS) + " |"
    rule = "|" + "|".join("---:" for _ in REPORT_COLUMNS) + "|"
    row = "| " + " | ".join(f"{summary[c]:.2f}" for c in REPORT_COLUMNS) + " |"
    lines = ["# Evaluation report", "", header, rule, row, ""]
    if approximate:
        lines += ["Compile verdicts come from the internal parser and are approximate.", ""]
    return "\n".join(lines)


def cmd_report(ws: Workspace) -> str:
    _require(ws.root / "scores.jsonl", "evaluate")
    summary = json.loads(_require(ws.root / "summary.json", "evaluate").read_text(encoding="utf-8"))
    sec = json.loads(_require(ws.root / "security_summary.json", "evaluate").read_text(encoding="utf-8"))
    text = render_report(summary, bool(sec.get("approximate")))
    path = ws.root / "report.md"
    path.write_text(text, encoding="utf-8", newline="\n")
    ws.record(path)
    return text


def timed(ws: Workspace, name: str, fn, *args):
    start = time.perf_counter()
    try:
        return fn(ws, *args)
    finally:
        ws.manifest.add_timing(name, time.perf_counter() - start)
        ws.manifest.save()


__all__ = [
    "MissingArtifact",
    "REPORT_COLUMNS",
    "Workspace",
    "cmd_build",
    "cmd_evaluate",
    "cmd_generate",
    "cmd_ingest",
    "cmd_report",
    "cmd_train",
    "render_report",
    "timed",
]
