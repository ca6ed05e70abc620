"""Flat ``key = value`` run configuration covering every tunable default."""

import dataclasses
from dataclasses import dataclass, field

from .errors import ConfigError

MODALITIES = ("audio", "visual", "linguistic")
MODALITY_ALIASES = {"a": "audio", "v": "visual", "l": "linguistic", **{m: m for m in MODALITIES}}
TASKS = ("classification", "regression")
ENCODERS = ("ccnn", "lstm", "mean")
TASK_LEARNING_RATE = {"classification": 1e-3, "regression": 1e-5}


@dataclass
class RunConfig:
    # runtime
    seed: int = 0
    threads: int = 1
    # audio framing and features
    sample_rate: int = 16000
    frame_length: float = 0.025
    hop: float = 0.010
    window: str = "hann"
    fft_size: int = 512
    n_mels: int = 80
    mel_low_hz: float = 0.0
    mel_high_hz: float = 8000.0
    n_mfcc: int = 13
    audio_features: str = "logmel"
    resample: bool = False
    max_sentence_seconds: float = 60.0
    # visual
    confidence_threshold: float = 0.5
    # text and transcript
    participant_label: str = "Participant"
    lexicon: str = ""
    embeddings: str = ""
    sentence_vectors: str = ""
    # encoder and heads
    encoder: str = "ccnn"
    modalities: tuple = MODALITIES
    layers: int = 10
    hidden: int = 128
    kernel: int = 5
    dilation_base: int = 2
    dropout: float = 0.5
    readout: str = "last"
    head_hidden: int = 128
    init: str = "glorot_uniform"
    standardize: bool = True
    # training
    task: str = "classification"
    epochs: int = 100
    batch_size: int = 16
    learning_rate: float | None = None
    weight_decay: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    bce_eps: float = 1e-7
    decision_threshold: float = 0.5
    early_stopping: bool = False
    patience: int = 10
    oversample_positive: bool = False
    snapshot_every: int = 0
    eval_every: int = 1

    def __post_init__(self):
        self.validate()

    @property
    def lr(self):
        """Learning rate in effect: explicit override or the task default."""
        return self.learning_rate if self.learning_rate is not None else TASK_LEARNING_RATE[self.task]

    def validate(self):
        if isinstance(self.modalities, str):
            self.modalities = parse_modalities(self.modalities)
        else:
            self.modalities = parse_modalities(",".join(self.modalities))
        _choice("task", self.task, TASKS)
        _choice("encoder", self.encoder, ENCODERS)
        _choice("audio_features", self.audio_features, ("logmel", "mfcc"))
        _choice("readout", self.readout, ("last", "max"))
        _choice("init", self.init, ("glorot_uniform",))
        for name in ("epochs", "snapshot_every", "patience"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        for name in ("batch_size", "layers", "hidden", "kernel", "head_hidden", "threads", "fft_size",
                     "n_mels", "n_mfcc", "eval_every"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive")
        if self.dilation_base < 1:
            raise ConfigError("dilation_base must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError("dropout must be in [0, 1)")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if self.n_mfcc > self.n_mels:
            raise ConfigError("n_mfcc cannot exceed n_mels")
        if self.encoder == "mean" and len(self.modalities) != 1:
            raise ConfigError("the mean encoder takes exactly one modality")
        return self

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def dumps(self):
        return "".join(f"{f.name} = {_format(getattr(self, f.name))}\n" for f in dataclasses.fields(self))

    @classmethod
    def loads(cls, text, base=None):
        values = {}
        known = {f.name: f for f in dataclasses.fields(cls)}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in line.split("=", 1))
            if key not in known:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
            if key in values:
                raise ConfigError(f"line {lineno}: duplicate config key {key!r}")
            values[key] = _parse(known[key], raw, lineno)
        start = dataclasses.asdict(base) if base is not None else {}
        start.update(values)
        return cls(**start)

    @classmethod
    def load(cls, path, base=None):
        try:
            with open(path, encoding="utf-8") as fh:
                return cls.loads(fh.read(), base=base)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())


def _choice(name, value, options):
    if value not in options:
        raise ConfigError(f"{name} must be one of {', '.join(options)}; got {value!r}")


def parse_modalities(text):
    tokens = [t.strip().lower() for t in text.split(",") if t.strip()]
    if not tokens:
        raise ConfigError("at least one modality is required (valid: a, v, l, audio, visual, linguistic)")
    bad = [t for t in tokens if t not in MODALITY_ALIASES]
    if bad:
        raise ConfigError(f"unknown modality {bad[0]!r}; valid tokens: a, v, l, audio, visual, linguistic")
    chosen = {MODALITY_ALIASES[t] for t in tokens}
    return tuple(m for m in MODALITIES if m in chosen)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, tuple):
        return ",".join(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(f, raw, lineno):
    kind = f.type if isinstance(f.type, str) else getattr(f.type, "__name__", str(f.type))
    try:
        if kind == "bool":
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind.startswith("float |"):
            return None if raw == "" else float(raw)
        if kind == "tuple":
            return parse_modalities(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: bad value {raw!r} for {f.name}") from None
