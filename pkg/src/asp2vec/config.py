"""Training hyperparameters."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

SELECTIONS = ("gumbel", "softmax")
REG_SCOPES = ("batch", "full")


class ConfigError(ValueError):
    pass


@dataclass
class TrainerConfig:
    # defaults follow the experimental settings for d x K = 100
    d: int = 20
    K: int = 5
    walks_per_node: int = 10
    walk_length: int = 80
    window: int = 3
    negatives: int = 2
    tau: float = 0.5
    lam: float = 0.01
    epsilon: float = 0.9
    lr: float = 0.025
    min_lr: float = 1e-4
    epochs: int = 5
    batch_size: int = 100
    seed: int = 0
    warmup: bool = True
    warmup_epochs: int | None = None
    warmup_sigma: float = 0.01
    reg_enabled: bool = True
    reg_scope: str = "batch"
    hard_sample: bool = False
    selection: str = "gumbel"
    init_scale: float | None = None
    threads: int = 1
    deterministic: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        problems = []
        if self.d < 1 or self.K < 1:
            problems.append("d and K must be >= 1")
        if self.tau <= 0:
            problems.append("tau must be > 0")
        if not 0 <= self.epsilon <= 1:
            problems.append("epsilon must lie in [0, 1]")
        if self.negatives < 0:
            problems.append("negatives must be >= 0")
        if self.lam < 0:
            problems.append("lambda must be >= 0")
        if self.window < 1:
            problems.append("window must be >= 1")
        if self.walks_per_node < 1 or self.walk_length < 2:
            problems.append("need walks_per_node >= 1 and walk_length >= 2")
        if self.lr <= 0 or self.min_lr < 0:
            problems.append("learning rates must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.threads < 1:
            problems.append("epochs >= 0, batch_size >= 1 and threads >= 1 required")
        if self.selection not in SELECTIONS:
            problems.append(f"selection must be one of {SELECTIONS}")
        if self.reg_scope not in REG_SCOPES:
            problems.append(f"reg_scope must be one of {REG_SCOPES}")
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def effective_threads(self) -> int:
        return 1 if self.deterministic else self.threads

    def replace(self, **changes) -> "TrainerConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["lambda"] = out.pop("lam")
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TrainerConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path) -> "TrainerConfig":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
