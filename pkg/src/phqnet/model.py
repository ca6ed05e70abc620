"""Sentence encoders (causal CNN, stacked LSTM, mean), late fusion, task heads, checkpoints."""

import struct
from pathlib import Path

import numpy as np

from . import numerics as nx
from .config import MODALITIES, RunConfig
from .corpus import PHQ_MAX
from .errors import CheckpointError, ConfigError, DimensionError, InputError
from .seeding import derive_rng

MAGIC = b"PHQM"
VERSION = 1


def dilations(config):
    return [config.dilation_base**i for i in range(config.layers)]


def receptive_field(kernel, dilation_list):
    return 1 + (kernel - 1) * sum(dilation_list)


# ------------------------------------------------------------ functional parts


def encode_ccnn(x, lengths, params, prefix, config, train=False, rng=None):
    """Projection to the trunk width, causal dilated conv stack, readout per sequence."""
    h = nx.dense(x, params[f"{prefix}.proj.W"], params[f"{prefix}.proj.b"])
    for i, d in enumerate(dilations(config)):
        h = nx.causal_conv1d(h, params[f"{prefix}.conv{i}.W"], params[f"{prefix}.conv{i}.b"], d)
        h = nx.relu(h)
        h = nx.dropout(h, config.dropout, train, rng)
    return readout(h, lengths, config.readout)


def encode_lstm(x, lengths, params, prefix, config, train=False, rng=None):
    h = nx.lstm_forward(x, params, config.layers, prefix=f"{prefix}.lstm",
                        dropout_p=config.dropout, train=train, rng=rng)
    return readout(h, lengths, config.readout)


def encode_mean(x, lengths):
    """Temporal average of the valid frames; no parameters."""
    return nx.masked_mean(x, lengths)


def readout(h, lengths, kind="last"):
    return nx.take_last(h, lengths) if kind == "last" else nx.masked_max(h, lengths)


def head_hidden(emb, params, dropout_p, train=False, rng=None):
    w = params["head.fc1.W"]
    if emb.shape[-1] != w.shape[0]:
        raise DimensionError(f"embedding width {emb.shape[-1]} does not match head input {w.shape[0]}")
    h = nx.relu(nx.dense(emb, w, params["head.fc1.b"]))
    h = nx.dropout(h, dropout_p, train, rng)
    out = nx.dense(h, params["head.fc2.W"], params["head.fc2.b"])
    return nx.reshape(out, out.shape[:-1])


def classify(emb, params, dropout_p=0.0, train=False, rng=None):
    """MDD probability per embedding row."""
    return nx.sigmoid(head_hidden(emb, params, dropout_p, train, rng))


def regress(emb, params, dropout_p=0.0, train=False, rng=None):
    """Raw (unclamped) PHQ estimate per embedding row."""
    return head_hidden(emb, params, dropout_p, train, rng)


def clamp_phq(raw):
    return np.clip(raw, 0.0, float(PHQ_MAX))


# ---------------------------------------------------------------------- model


def _param_shapes(config, feature_dims):
    shapes = []  # (name, shape, fan_in, fan_out)
    H, k = config.hidden, config.kernel
    for m in config.modalities:
        F = feature_dims[m]
        if config.encoder == "ccnn":
            shapes.append((f"{m}.proj.W", (F, H), F, H))
            shapes.append((f"{m}.proj.b", (H,), None, None))
            for i in range(config.layers):
                shapes.append((f"{m}.conv{i}.W", (k, H, H), k * H, k * H))
                shapes.append((f"{m}.conv{i}.b", (H,), None, None))
        elif config.encoder == "lstm":
            n_in = F
            for i in range(config.layers):
                shapes.append((f"{m}.lstm{i}.W", (n_in, 4 * H), n_in, 4 * H))
                shapes.append((f"{m}.lstm{i}.U", (H, 4 * H), H, 4 * H))
                shapes.append((f"{m}.lstm{i}.b", (4 * H,), None, None))
                n_in = H
    D = embedding_width(config, feature_dims)
    shapes.append(("head.fc1.W", (D, config.head_hidden), D, config.head_hidden))
    shapes.append(("head.fc1.b", (config.head_hidden,), None, None))
    shapes.append(("head.fc2.W", (config.head_hidden, 1), config.head_hidden, 1))
    shapes.append(("head.fc2.b", (1,), None, None))
    return shapes


def embedding_width(config, feature_dims):
    if config.encoder == "mean":
        return sum(feature_dims[m] for m in config.modalities)
    return config.hidden * len(config.modalities)


class Model:
    """Per-modality encoders, concatenated in audio, visual, linguistic order, and one head.

    ``feature_dims`` maps each active modality to its frame width. Input
    standardization statistics live in ``buffers`` as ``norm.<modality>.mean``
    and ``norm.<modality>.std``; they are identity until :meth:`fit_normalization`.
    """

    def __init__(self, config, feature_dims, dtype=nx.DEFAULT_DTYPE, init=True):
        config.validate()
        missing = [m for m in config.modalities if m not in feature_dims]
        if missing:
            raise ConfigError(f"no feature width for modalities {missing}")
        self.config = config
        self.feature_dims = {m: int(feature_dims[m]) for m in config.modalities}
        self.dtype = np.dtype(dtype)
        self.params = nx.ParamSet()
        self.buffers = {}
        for m in config.modalities:
            F = self.feature_dims[m]
            self.buffers[f"norm.{m}.mean"] = np.zeros(F, dtype=self.dtype)
            self.buffers[f"norm.{m}.std"] = np.ones(F, dtype=self.dtype)
        rng = derive_rng(config.seed, "model/init")
        for name, shape, fan_in, fan_out in _param_shapes(config, self.feature_dims):
            if fan_in is None or not init:
                value = np.zeros(shape, dtype=self.dtype)
            else:
                value = nx.glorot_uniform(shape, fan_in, fan_out, rng, self.dtype)
            self.params.add(name, value, dtype=self.dtype)

    @property
    def task(self):
        return self.config.task

    @property
    def modalities(self):
        return self.config.modalities

    def count_parameters(self, prefix=""):
        return int(sum(p.data.size for n, p in self.params.items() if n.startswith(prefix)))

    def fit_normalization(self, samples):
        """Per-channel mean and standard deviation over all training frames."""
        if not self.config.standardize:
            return
        for m in self.modalities:
            frames = np.concatenate([s.features(m) for s in samples]).astype(np.float64)
            std = frames.std(axis=0)
            std[std < 1e-6] = 1.0
            self.buffers[f"norm.{m}.mean"] = frames.mean(axis=0).astype(self.dtype)
            self.buffers[f"norm.{m}.std"] = std.astype(self.dtype)

    def _inputs(self, batch, m):
        x = batch.features.get(m)
        if x is None:
            raise InputError(f"batch lacks {m} features")
        if x.shape[-1] != self.feature_dims[m]:
            raise DimensionError(f"{m} features have width {x.shape[-1]}, model expects {self.feature_dims[m]}")
        x = (x.astype(self.dtype, copy=False) - self.buffers[f"norm.{m}.mean"]) / self.buffers[f"norm.{m}.std"]
        return nx.Tensor(np.ascontiguousarray(x, dtype=self.dtype))

    def embed(self, batch, train=False, rng=None):
        parts = []
        for m in MODALITIES:
            if m not in self.modalities:
                continue
            x, lengths = self._inputs(batch, m), batch.lengths[m]
            if self.config.encoder == "ccnn":
                parts.append(encode_ccnn(x, lengths, self.params, m, self.config, train, rng))
            elif self.config.encoder == "lstm":
                parts.append(encode_lstm(x, lengths, self.params, m, self.config, train, rng))
            else:
                parts.append(encode_mean(x, lengths))
        return parts[0] if len(parts) == 1 else nx.concat(parts, axis=-1)

    def forward(self, batch, train=False, rng=None):
        """Probability (classification) or raw estimate (regression) per sentence."""
        if train and rng is None:
            raise InputError("train-mode forward needs an rng for dropout")
        emb = self.embed(batch, train, rng)
        head = classify if self.task == "classification" else regress
        return head(emb, self.params, self.config.dropout, train, rng)

    def loss(self, batch, train=False, rng=None):
        out = self.forward(batch, train, rng)
        if self.task == "classification":
            return nx.bce_loss(out, batch.label_mdd, self.config.bce_eps)
        return nx.mse_loss(out, batch.label_phq)

    def predict(self, batch):
        """Eval-mode outputs as float64: probabilities, or estimates clamped to [0, 24]."""
        out = self.forward(batch, train=False).data.astype(np.float64)
        return out if self.task == "classification" else clamp_phq(out)

    def state(self):
        tensors = {n: p.data for n, p in self.params.items()}
        tensors.update(self.buffers)
        return tensors

    def load_state(self, tensors):
        for name, p in self.params.items():
            if name not in tensors:
                raise CheckpointError(f"checkpoint lacks parameter {name!r}")
            if tensors[name].shape != p.data.shape:
                raise CheckpointError(f"{name}: shape {tensors[name].shape} vs model {p.data.shape}")
            p.data = np.ascontiguousarray(tensors[name], dtype=self.dtype)
        for name in self.buffers:
            if name not in tensors:
                raise CheckpointError(f"checkpoint lacks buffer {name!r}")
            self.buffers[name] = np.asarray(tensors[name], dtype=self.dtype)
        extra = set(tensors) - set(self.params.names()) - set(self.buffers)
        if extra:
            raise CheckpointError(f"unexpected tensors in checkpoint: {sorted(extra)}")


# ----------------------------------------------------------------- checkpoint


def save_checkpoint(model, path):
    cfg = model.config.dumps().encode("utf-8")
    out = [MAGIC, struct.pack("<II", VERSION, len(cfg)), cfg]
    tensors = model.state()
    out.append(struct.pack("<I", len(tensors)))
    for name, arr in tensors.items():
        key = name.encode("utf-8")
        out.append(struct.pack("<H", len(key)) + key)
        out.append(struct.pack("<B", arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(out))


class _Reader:
    def __init__(self, data):
        self.data, self.pos = data, 0

    def take(self, n, what):
        if self.pos + n > len(self.data):
            raise CheckpointError(f"checkpoint truncated while reading {what}")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_checkpoint(path):
    """Parse a checkpoint into ``(RunConfig, {name: float32 array})``."""
    r = _Reader(Path(path).read_bytes())
    if r.data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    r.pos = 4
    version, cfg_len = r.unpack("<II", "header")
    if version != VERSION:
        raise CheckpointError(f"{path}: checkpoint version {version} is not supported (this build reads version {VERSION})")
    try:
        config = RunConfig.loads(r.take(cfg_len, "config").decode("utf-8"))
    except (UnicodeDecodeError, ConfigError) as exc:
        raise CheckpointError(f"{path}: bad config block: {exc}") from exc
    (n,) = r.unpack("<I", "tensor count")
    tensors = {}
    for i in range(n):
        (klen,) = r.unpack("<H", f"tensor {i} name")
        name = r.take(klen, f"tensor {i} name").decode("utf-8")
        (rank,) = r.unpack("<B", f"{name} rank")
        dims = r.unpack(f"<{rank}I", f"{name} dims")
        size = int(np.prod(dims, dtype=np.int64))
        raw = r.take(4 * size, f"{name} data")
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).astype(np.float32)
    if r.pos != len(r.data):
        raise CheckpointError(f"{path}: {len(r.data) - r.pos} trailing bytes after last tensor")
    return config, tensors


def load_checkpoint(path):
    config, tensors = read_checkpoint(path)
    dims = {}
    for m in config.modalities:
        key = f"norm.{m}.mean"
        if key not in tensors:
            raise CheckpointError(f"{path}: missing {key}")
        dims[m] = tensors[key].shape[0]
    model = Model(config, dims, dtype=np.float32, init=False)
    model.load_state(tensors)
    return model
