"""Pipeline configuration: a TOML file, validated, with dotted-key overrides.

Sections and keys (all optional except ``corpus_dir``)::

    corpus_dir = "corpus"          # *.sol files, searched recursively
    labels_path = "labels.jsonl"   # {"id","label"} lines; omitted -> label with the detectors
    tasks_path = "tasks.jsonl"     # {"task_id","instruction","reference_code"} lines
    output_dir = "out"
    seed = 0
    samples_per_task = 5

    [stages]   ci = true, vd = true, ti = true
    [model]    vocab_size, embed_dim, num_layers, num_heads, context_len, ffn_mult,
               pretrain_epochs, pretrain_learning_rate
    [train]    learning_rate, epochs_ci, epochs_vd, epochs_ti, lora_r, lora_alpha,
               batch_size, optimizer, fresh_adapters_per_stage
    [sampler]  temperature, top_p, max_new_tokens
    [metrics]  max_n, codebleu_weights, keyword_weight, smoothing_epsilon
    [tools]    solc_path, slither_path, solc_versions (table of version -> path), timeout

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..lm.model import TinyLmConfig
from ..lm.sample import SamplerConfig
from ..lm.train import TrainConfig
from ..metrics.bleu import MetricConfig
from ..security.compile import SolcConfig


class ConfigError(Exception):
    pass


DEFAULTS: dict = {
    "corpus_dir": None,
    "labels_path": None,
    "tasks_path": None,
    "output_dir": "out",
    "seed": 0,
    "samples_per_task": 5,
    "stages": {"ci": True, "vd": True, "ti": True},
    "model": {
        "vocab_size": 518,
        "embed_dim": 128,
        "num_layers": 4,
        "num_heads": 4,
        "context_len": 512,
        "ffn_mult": 4,
        "pretrain_epochs": 5,
        "pretrain_learning_rate": 1e-3,
    },
    "train": {
        "learning_rate": 1e-4,
        "epochs_ci": 10,
        "epochs_vd": 10,
        "epochs_ti": 1,
        "lora_r": 4,
        "lora_alpha": 32.0,
        "batch_size": 8,
        "optimizer": "sgd",
        "fresh_adapters_per_stage": False,
    },
    "sampler": {"temperature": 0.2, "top_p": 0.95, "max_new_tokens": 384},
    "metrics": {"max_n": 4, "codebleu_weights": [0.25, 0.25, 0.25, 0.25], "keyword_weight": 4.0, "smoothing_epsilon": 1e-9},
    "tools": {"solc_path": None, "slither_path": None, "solc_versions": {}, "timeout": 60.0},
}


def _merge(base: dict, override: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key!r}")
        if isinstance(base[key], dict) and key != "solc_versions":
            if not isinstance(value, dict):
                raise ConfigError(f"{where}{key} must be a table")
            out[key] = _merge(base[key], value, f"{where}{key}.")
        else:
            out[key] = value
    return out


def parse_override(text: str) -> tuple[list[str], object]:
    """``section.key=value``; the value is read as a TOML scalar or array when possible."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw
    return key.strip().split("."), value


def _nest(keys: list[str], value) -> dict:
    for k in reversed(keys):
        value = {k: value}
    return value


@dataclass
class PipelineConfig:
    raw: dict
    base_dir: Path

    @classmethod
    def load(cls, path: str | Path | None, overrides: list[str] = (), seed: int | None = None) -> "PipelineConfig":
        data: dict = {}
        base_dir = Path.cwd()
        if path is not None:
            path = Path(path)
            try:
                data = tomllib.loads(path.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            base_dir = path.resolve().parent
        raw = _merge(DEFAULTS, data)
        for item in overrides:
            keys, value = parse_override(item)
            raw = _merge(raw, _nest(keys, value))
        if seed is not None:
            raw["seed"] = seed
        cfg = cls(raw, base_dir)
        cfg.validate()
        return cfg

    # -- typed views -------------------------------------------------------
    def path(self, key: str) -> Path | None:
        value = self.raw.get(key)
        if value is None:
            return None
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self) -> Path:
        return self.path("output_dir")

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def samples_per_task(self) -> int:
        return int(self.raw["samples_per_task"])

    def enabled_stages(self) -> list[str]:
        return [s.upper() for s in ("ci", "vd", "ti") if self.raw["stages"][s]]

    def model_config(self) -> TinyLmConfig:
        m = self.raw["model"]
        return TinyLmConfig(
            vocab_size=int(m["vocab_size"]),
            embed_dim=int(m["embed_dim"]),
            num_layers=int(m["num_layers"]),
            num_heads=int(m["num_heads"]),
            context_len=int(m["context_len"]),
            ffn_mult=int(m["ffn_mult"]),
            seed=self.seed,
        )

    def train_config(self) -> TrainConfig:
        t = self.raw["train"]
        return TrainConfig(
            learning_rate=float(t["learning_rate"]),
            epochs={"CI": int(t["epochs_ci"]), "VD": int(t["epochs_vd"]), "TI": int(t["epochs_ti"])},
            lora_r=int(t["lora_r"]),
            lora_alpha=float(t["lora_alpha"]),
            batch_size=int(t["batch_size"]),
            optimizer=str(t["optimizer"]),
            fresh_adapters_per_stage=bool(t["fresh_adapters_per_stage"]),
            seed=self.seed,
        )

    def sampler_config(self, seed: int | None = None) -> SamplerConfig:
        s = self.raw["sampler"]
        return SamplerConfig(float(s["temperature"]), float(s["top_p"]), int(s["max_new_tokens"]), self.seed if seed is None else seed)

    def metric_config(self) -> MetricConfig:
        m = self.raw["metrics"]
        return MetricConfig(int(m["max_n"]), tuple(m["codebleu_weights"]), float(m["keyword_weight"]), float(m["smoothing_epsilon"]))

    def solc_config(self) -> SolcConfig | None:
        tools = self.raw["tools"]
        if not tools["solc_path"] and not tools["solc_versions"]:
            return None
        return SolcConfig(tools["solc_path"], dict(tools["solc_versions"]), float(tools["timeout"]))

    @property
    def slither_path(self) -> str | None:
        return self.raw["tools"]["slither_path"]

    def digest(self) -> str:
        """Hash of the effective configuration (paths as written, not resolved)."""
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def validate(self) -> None:
        if self.raw["corpus_dir"] is None:
            raise ConfigError("corpus_dir is required")
        corpus = self.path("corpus_dir")
        if not corpus.is_dir():
            raise ConfigError(f"corpus_dir {corpus} is not a readable directory")
        for key in ("labels_path", "tasks_path"):
            p = self.path(key)
            if p is not None and not p.is_file():
                raise ConfigError(f"{key} {p} does not exist")
        if self.samples_per_task < 1:
            raise ConfigError("samples_per_task must be at least 1")
        for key in self.raw["stages"]:
            if key not in ("ci", "vd", "ti"):
                raise ConfigError(f"unknown stage toggle {key!r}")
        try:
            self.model_config()
            self.train_config()
            self.sampler_config()
            self.metric_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        if int(self.raw["model"]["pretrain_epochs"]) < 0:
            raise ConfigError("model.pretrain_epochs must be non-negative")
