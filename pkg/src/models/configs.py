"""
Pydantic models for run configuration.
Every section forbids unknown keys; validators enforce the cross-field invariants.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src import config
from src.errors import ConfigError

PairId = Literal["av", "va", "aa", "vv"]
LossTerm = Literal["focal", "diou", "smooth_l1", "det_bce", "rec_mae"]

# Canonical concatenation order of discrepancy pairs: (source, target)
PAIR_ORDER: Tuple[str, ...] = ("av", "va", "aa", "vv")
DEFAULT_PAIRS = ["av", "aa", "vv"]
DEFAULT_LOSS_TERMS = ["focal", "diou", "rec_mae"]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class ModelConfig(StrictModel):
    """Architecture and loss-composition hyperparameters."""
    d: int = Field(16, ge=1)
    d_a: int = Field(config.DEFAULT_MODEL_DIM, ge=1)
    k: int = Field(config.DEFAULT_KERNEL_SIZE, ge=1)
    q: Optional[int] = Field(None, ge=1)
    l_pre_r: int = Field(2, ge=1)
    l_down_r: int = Field(3, ge=1)
    l_up_r: int = Field(3, ge=1)
    l_post_r: int = Field(2, ge=1)
    l_retain_e: int = Field(2, ge=1)
    l_down_e: int = Field(2, ge=1)
    pair_set: List[PairId] = Field(default_factory=lambda: list(DEFAULT_PAIRS))
    discrepancy_op: Literal["difference", "product"] = "difference"
    loss_terms: List[LossTerm] = Field(default_factory=lambda: list(DEFAULT_LOSS_TERMS))
    focal_alpha: float = Field(config.FOCAL_ALPHA, gt=0.0, lt=1.0)
    focal_gamma: float = Field(config.FOCAL_GAMMA, ge=0.0)
    smooth_l1_beta: float = Field(config.SMOOTH_L1_BETA, gt=0.0)
    layer_norm_eps: float = Field(config.LAYER_NORM_EPS, gt=0.0)
    init_seed: int = 0

    @field_validator("k")
    @classmethod
    def kernel_must_be_odd(cls, value: int) -> int:
        if value % 2 != 1:
            raise ValueError(f"kernel size k must be odd, got {value}")
        return value

    @field_validator("pair_set")
    @classmethod
    def canonical_pairs(cls, value: List[str]) -> List[str]:
        if not value:
            raise ValueError("pair_set must not be empty")
        if len(set(value)) != len(value):
            raise ValueError(f"pair_set has duplicates: {value}")
        return [p for p in PAIR_ORDER if p in value]

    @field_validator("loss_terms")
    @classmethod
    def valid_loss_composition(cls, value: List[str]) -> List[str]:
        terms = set(value)
        if "focal" not in terms:
            raise ValueError("loss_terms must include focal")
        if ("diou" in terms) == ("smooth_l1" in terms):
            raise ValueError("loss_terms must include exactly one of diou, smooth_l1")
        if len(terms) != len(value):
            raise ValueError(f"loss_terms has duplicates: {value}")
        return sorted(value, key=["focal", "diou", "smooth_l1", "rec_mae", "det_bce"].index)

    @property
    def pyramid_dim(self) -> int:
        return self.q if self.q is not None else self.d_a

    @property
    def regression_term(self) -> str:
        return "diou" if "diou" in self.loss_terms else "smooth_l1"

    @property
    def levels(self) -> int:
        return self.l_retain_e + self.l_down_e

    def level_strides(self) -> List[int]:
        return [1] * self.l_retain_e + [2 ** j for j in range(1, self.l_down_e + 1)]

    @classmethod
    def lavdf(cls, **overrides) -> "ModelConfig":
        """Instance trained on the smaller benchmark."""
        values = dict(l_pre_r=2, l_down_r=3, l_up_r=3, l_post_r=2, l_retain_e=2, l_down_e=2)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def avdf1m(cls, **overrides) -> "ModelConfig":
        """Instance trained on the larger benchmark: down/up/retain/down counts of 1."""
        values = dict(l_pre_r=2, l_down_r=1, l_up_r=1, l_post_r=2, l_retain_e=1, l_down_e=1)
        values.update(overrides)
        return cls(**values)

    @classmethod
    def toy(cls, **overrides) -> "ModelConfig":
        """Gradient-check scale: d=4, d_a=8, every layer count 1."""
        values = dict(
            d=4, d_a=8, k=3, l_pre_r=1, l_down_r=1, l_up_r=1, l_post_r=1,
            l_retain_e=1, l_down_e=1,
        )
        values.update(overrides)
        return cls(**values)

    @classmethod
    def ablation(cls, name: str, base: Optional["ModelConfig"] = None) -> "ModelConfig":
        """Variant of ``base`` for a named ablation, e.g. ``pairs:vv`` or ``loss:focal+diou``."""
        base = base or cls()
        kind, _, spec = name.partition(":")
        values = base.model_dump()
        if kind == "pairs":
            values["pair_set"] = spec.split("+")
        elif kind == "loss":
            values["loss_terms"] = spec.split("+")
        elif kind == "op":
            values["discrepancy_op"] = spec
        else:
            raise ConfigError(f"unknown ablation {name!r}; expected pairs:, loss: or op:")
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(f"invalid ablation {name!r}: {exc}") from exc


class TrainConfig(StrictModel):
    """Optimizer, schedule and checkpoint selection settings."""
    max_epochs: int = Field(config.DEFAULT_MAX_EPOCHS, ge=1, le=100)
    lr: float = Field(config.DEFAULT_LEARNING_RATE, gt=0.0)
    batch_size: int = Field(config.DEFAULT_BATCH_SIZE, ge=1)
    plateau_factor: float = Field(config.PLATEAU_FACTOR, gt=0.0, lt=1.0)
    plateau_patience: int = Field(config.PLATEAU_PATIENCE, ge=1)
    early_stop_patience: int = Field(config.EARLY_STOP_PATIENCE, ge=1)
    improvement_threshold: float = Field(config.IMPROVEMENT_THRESHOLD, ge=0.0)
    adam_beta1: float = Field(0.9, gt=0.0, lt=1.0)
    adam_beta2: float = Field(0.999, gt=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    criterion_ap: List[float] = Field(default_factory=lambda: list(config.CRITERION_AP))
    criterion_ar: List[int] = Field(default_factory=lambda: list(config.CRITERION_AR))
    criterion_weights: Dict[str, float] = Field(default_factory=dict)
    dtype: Literal["float64", "float32"] = "float64"
    seed: int = 0

    @model_validator(mode="after")
    def patience_order(self) -> "TrainConfig":
        if self.early_stop_patience < self.plateau_patience:
            raise ValueError("early_stop_patience must be >= plateau_patience")
        return self

    def criterion_keys(self) -> List[str]:
        return [f"ap@{t}" for t in self.criterion_ap] + [f"ar@{k}" for k in self.criterion_ar]


class SyntheticConfig(StrictModel):
    """Synthetic paired-feature dataset settings."""
    n_samples: int = Field(100, ge=1)
    t: int = Field(128, ge=2)
    d: int = Field(16, ge=1)
    fps: float = Field(config.DEFAULT_FPS, gt=0.0)
    latent_dim: int = Field(4, ge=1)
    noise_sigma: float = Field(0.05, ge=0.0)
    walk_sigma: float = Field(0.3, gt=0.0)
    smooth_window: int = Field(5, ge=1)
    crossfade_frames: int = Field(3, ge=0)
    real_fraction: float = Field(0.5, ge=0.0, le=1.0)
    n_fake_min: int = Field(1, ge=1)
    n_fake_max: int = Field(2, ge=1)
    fake_duration_s: Tuple[float, float] = (0.8, 2.4)
    manipulated_modality: Literal["audio", "visual", "either"] = "either"
    split_ratios: Tuple[float, float, float] = (0.7, 0.15, 0.15)
    seed: int = 0

    @model_validator(mode="after")
    def feasible(self) -> "SyntheticConfig":
        if self.latent_dim > self.d:
            raise ValueError(f"latent_dim {self.latent_dim} exceeds d {self.d}")
        if self.n_fake_min > self.n_fake_max:
            raise ValueError("n_fake_min must be <= n_fake_max")
        low, high = self.fake_duration_s
        if not 0.0 < low <= high:
            raise ValueError(f"fake_duration_s must satisfy 0 < low <= high, got {self.fake_duration_s}")
        if high * self.n_fake_max > self.t / self.fps:
            raise ValueError("fake segments cannot fit in the sequence duration")
        if any(r < 0 for r in self.split_ratios) or abs(sum(self.split_ratios) - 1.0) > 1e-9:
            raise ValueError(f"split_ratios must be non-negative and sum to 1, got {self.split_ratios}")
        return self

    @property
    def duration(self) -> float:
        return self.t / self.fps


class ValiditySpec(StrictModel):
    """In-the-wild validity and chunking thresholds."""
    min_segment_s: float = Field(config.MIN_SEGMENT_SECONDS, gt=0.0)
    chunk_s: float = Field(config.CHUNK_SECONDS, gt=0.0)
    talk_threshold: float = Field(config.TALK_THRESHOLD, ge=0.0)

    @model_validator(mode="after")
    def chunk_longer_than_segment(self) -> "ValiditySpec":
        if self.chunk_s <= self.min_segment_s:
            raise ValueError("chunk_s must exceed min_segment_s")
        return self


class EvalConfig(StrictModel):
    """Decoding, suppression and aggregation settings."""
    sigma_nms: float = Field(config.SOFT_NMS_SIGMA, gt=0.0)
    min_score: float = Field(config.SOFT_NMS_MIN_SCORE, ge=0.0)
    pre_nms_top_n: int = Field(config.PRE_NMS_TOP_N, ge=1)
    theta: float = Field(config.PSI_M_THETA, ge=0.0, le=1.0)
    max_len: int = Field(config.MAX_SEQUENCE_LENGTH, ge=1)
    mode: Literal["psi_m", "psi_s", "video"] = "psi_m"


class PathsConfig(StrictModel):
    out_dir: str = str(Path(config.RUNS_DIR) / "default")
    manifest: Optional[str] = None
    checkpoint: Optional[str] = None
    db_path: Optional[str] = None


class RunConfig(StrictModel):
    """Fully merged configuration for one command invocation."""
    seed: Optional[int] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    synthetic: SyntheticConfig = Field(default_factory=SyntheticConfig)
    validity: ValiditySpec = Field(default_factory=ValiditySpec)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @model_validator(mode="after")
    def consistent(self) -> "RunConfig":
        if self.synthetic.d != self.model.d:
            raise ValueError(f"synthetic.d={self.synthetic.d} differs from model.d={self.model.d}")
        if self.synthetic.t > self.eval.max_len:
            raise ValueError(f"synthetic.t={self.synthetic.t} exceeds eval.max_len={self.eval.max_len}")
        return self

    @classmethod
    def from_file(cls, path: Optional[str], overrides: Optional[Dict[str, Any]] = None) -> "RunConfig":
        """Load a JSON config file (or defaults when ``path`` is None) and apply dotted overrides.

        Raises:
            ConfigError: unreadable file, unknown keys, or any invariant violation
        """
        data: Dict[str, Any] = {}
        if path is not None:
            try:
                data = json.loads(Path(path).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for key, value in (overrides or {}).items():
            _set_dotted(data, key, value)
        try:
            resolved = cls(**data)
        except ValidationError as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc
        if resolved.seed is not None:
            resolved = resolved.with_seed(resolved.seed)
        return resolved

    def with_seed(self, seed: int) -> "RunConfig":
        data = self.model_dump()
        data["seed"] = seed
        data["train"]["seed"] = seed
        data["synthetic"]["seed"] = seed
        data["model"]["init_seed"] = seed
        return RunConfig(**data)

    def with_overrides(self, overrides: Dict[str, Any]) -> "RunConfig":
        """Copy with dotted-key overrides applied and every invariant re-checked."""
        data = self.model_dump()
        for key, value in overrides.items():
            _set_dotted(data, key, value)
        try:
            return RunConfig(**data)
        except ValidationError as exc:
            raise ConfigError(f"invalid configuration: {exc}") from exc

    def dump(self, path: str) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(json.dumps(self.model_dump(mode="json"), indent=2, sort_keys=True))


def _set_dotted(data: Dict[str, Any], key: str, value: Any) -> None:
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot override {key}: {part} is not a section")
    node[parts[-1]] = value


def parse_override(text: str) -> Tuple[str, Any]:
    """Parse ``key=value``; the value is read as JSON when possible, else kept as a string."""
    if "=" not in text:
        raise ConfigError(f"override must look like key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value
