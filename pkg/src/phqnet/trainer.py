"""Training loop, patient-level aggregation and evaluation metrics."""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nx
from .corpus import MDD_THRESHOLD, PHQ_MAX, batch_sentences, mdd_label
from .errors import AggregationError, NonFiniteError, TrainingAborted
from .seeding import derive_rng

log = logging.getLogger(__name__)

UNDEFINED = "—"
TRACE_HEADER = ["epoch", "split", "task", "metric", "value"]


@dataclass(frozen=True)
class TraceRow:
    epoch: int | str
    split: str
    task: str
    metric: str
    value: float | None


@dataclass
class TrainResult:
    model: object
    trace: list = field(default_factory=list)
    best_epoch: int | None = None

    def losses(self, split="train", metric="loss"):
        return [r.value for r in self.trace if r.split == split and r.metric == metric]


def _oversample(samples, rng):
    pos = [s for s in samples if s.label_mdd == 1]
    neg = [s for s in samples if s.label_mdd == 0]
    if not pos or not neg or len(pos) >= len(neg):
        return samples
    extra = rng.choice(len(pos), size=len(neg) - len(pos), replace=True)
    return samples + [pos[i] for i in extra]


def mean_loss(model, samples, batch_size=64):
    """Eval-mode sentence-level loss averaged over ``samples``."""
    total, n = 0.0, 0
    for batch in batch_sentences(samples, batch_size, modalities=model.modalities, shuffle=False):
        total += float(model.loss(batch).data) * len(batch)
        n += len(batch)
    return total / n


def train(model, train_samples, config=None, validation=None, track_train_eval=False, snapshot=None):
    """Fit ``model`` on sentence-level weak labels.

    ``validation`` maps patient id to its samples and is scored every
    ``eval_every`` epochs. ``snapshot(epoch, model)`` is called every
    ``snapshot_every`` epochs when given. Raises :class:`TrainingAborted` on a
    non-finite batch loss.
    """
    config = config or model.config
    samples = list(train_samples)
    result = TrainResult(model)
    if config.epochs == 0:
        return result
    if not samples:
        raise AggregationError("training split has no sentences")
    model.fit_normalization(samples)
    if model.task == "regression":
        # start the linear output at the mean target rather than at zero
        bias = model.params["head.fc2.b"]
        bias.data = np.full_like(bias.data, np.mean([s.label_phq for s in samples]))
    shuffle_rng = derive_rng(config.seed, "trainer/shuffle")
    drop_rng = derive_rng(config.seed, "trainer/dropout")
    over_rng = derive_rng(config.seed, "trainer/oversample")
    opt = nx.AdamState(config.lr, config.beta1, config.beta2, config.adam_eps, config.weight_decay)
    task = model.task
    best, best_state, stale = math.inf, None, 0
    for epoch in range(1, config.epochs + 1):
        epoch_samples = _oversample(samples, over_rng) if config.oversample_positive else samples
        total, seen = 0.0, 0
        for b, batch in enumerate(batch_sentences(epoch_samples, config.batch_size, shuffle_rng, model.modalities)):
            try:
                loss = model.loss(batch, train=True, rng=drop_rng)
            except NonFiniteError:
                raise TrainingAborted(epoch, b, math.nan) from None
            value = float(loss.data)
            if not math.isfinite(value):
                raise TrainingAborted(epoch, b, value)
            nx.backward(loss, model.params)
            nx.adam_step(model.params, opt)
            model.params.zero_grad()
            total += value * len(batch)
            seen += len(batch)
        result.trace.append(TraceRow(epoch, "train", task, "loss", total / seen))
        if track_train_eval:
            result.trace.append(TraceRow(epoch, "train", task, "eval_loss", mean_loss(model, samples)))
        if validation and (epoch % config.eval_every == 0 or epoch == config.epochs):
            val_samples = [s for group in validation.values() for s in group]
            vloss = mean_loss(model, val_samples)
            result.trace.append(TraceRow(epoch, "validation", task, "loss", vloss))
            report = evaluate(model, validation)
            for metric, value in report.metric_items():
                result.trace.append(TraceRow(epoch, "validation", task, metric, value))
            if config.early_stopping:
                if vloss < best:
                    best, stale, result.best_epoch = vloss, 0, epoch
                    best_state = {n: p.data.copy() for n, p in model.params.items()}
                else:
                    stale += 1
                    if stale > config.patience:
                        log.info("early stop at epoch %d (best %d)", epoch, result.best_epoch)
                        break
        if snapshot is not None and config.snapshot_every and epoch % config.snapshot_every == 0:
            snapshot(epoch, model)
    if best_state is not None:
        for name, p in model.params.items():
            p.data = best_state[name]
    return result


# ---------------------------------------------------------------- evaluation


def sentence_outputs(model, samples, batch_size=64):
    """Eval-mode outputs in sample order (probabilities or clamped estimates)."""
    out = []
    for batch in batch_sentences(samples, batch_size, modalities=model.modalities, shuffle=False):
        out.append(model.predict(batch))
    return np.concatenate(out)


def aggregate_patient(outputs, task, threshold=0.5):
    """Mean over a patient's sentence outputs; returns ``(score, mdd_label)``."""
    values = np.asarray(outputs, dtype=np.float64)
    if values.size == 0:
        raise AggregationError("cannot aggregate a patient with no sentence outputs")
    if task == "classification":
        mean = float(values.mean())
        return mean, int(mean >= threshold)
    mean = float(np.clip(values, 0.0, PHQ_MAX).mean())
    return mean, int(mean >= MDD_THRESHOLD)


def _pct(num, den):
    return None if den == 0 else 100.0 * num / den


def metrics_from_counts(tp, fp, tn, fn):
    """Percent rates; a zero denominator yields None (undefined), never 0."""
    f1_den = 2 * tp + fp + fn
    return {
        "precision": _pct(tp, tp + fp),
        "recall": _pct(tp, tp + fn),
        "specificity": _pct(tn, tn + fp),
        "f1": _pct(2 * tp, f1_den),
    }


def f1_from_rates(precision, recall):
    if precision is None or recall is None or precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def relative_error(average_error):
    return None if average_error is None else 100.0 * average_error / PHQ_MAX


@dataclass
class EvalReport:
    task: str
    n_patients: int
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float | None
    recall: float | None
    specificity: float | None
    f1: float | None
    average_error: float | None = None
    predictions: list = field(default_factory=list)  # (patient_id, score, label, phq)

    @property
    def sensitivity(self):
        return self.recall

    @property
    def relative_error(self):
        return relative_error(self.average_error)

    @classmethod
    def from_counts(cls, task, tp, fp, tn, fn, average_error=None, predictions=None):
        return cls(task, tp + fp + tn + fn, tp, fp, tn, fn, **metrics_from_counts(tp, fp, tn, fn),
                   average_error=average_error, predictions=predictions or [])

    def metric_items(self):
        return [
            ("f1", self.f1),
            ("precision", self.precision),
            ("recall_sensitivity", self.recall),
            ("specificity", self.specificity),
            ("average_error", self.average_error),
            ("relative_error", self.relative_error),
            ("tp", self.tp),
            ("fp", self.fp),
            ("tn", self.tn),
            ("fn", self.fn),
            ("n_patients", self.n_patients),
        ]

    def summary(self):
        lines = [f"task: {self.task}  patients: {self.n_patients}  tp={self.tp} fp={self.fp} tn={self.tn} fn={self.fn}"]
        for name, value in self.metric_items()[:6]:
            unit = "" if value is None else (" points" if name == "average_error" else "%")
            lines.append(f"  {name:<20}{format_value(value)}{unit}")
        return "\n".join(lines)


def format_value(value):
    if value is None:
        return UNDEFINED
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{value:.4f}"


def evaluate(model, patients, task=None):
    """Patient-level metrics over ``{patient_id: [SentenceSample, ...]}``.

    Classification models report the confusion-matrix rates; regression
    models additionally report the mean absolute PHQ error, with MDD decided
    by thresholding the aggregated estimate at 10.
    """
    task = task or model.task
    if not patients:
        raise AggregationError("no patients to evaluate")
    tp = fp = tn = fn = 0
    errors, preds = [], []
    for pid in sorted(patients):
        group = patients[pid]
        if not group:
            raise AggregationError(f"patient {pid} has no sentences")
        score, label = aggregate_patient(sentence_outputs(model, group), task, model.config.decision_threshold)
        phq = group[0].label_phq
        truth = mdd_label(phq)
        tp += label and truth
        fp += label and not truth
        tn += (not label) and (not truth)
        fn += (not label) and truth
        if task == "regression":
            errors.append(abs(score - phq))
        preds.append((pid, score, label, phq))
    avg = float(np.mean(errors)) if errors else None
    return EvalReport.from_counts(task, int(tp), int(fp), int(tn), int(fn), avg, preds)


# ----------------------------------------------------------------------- I/O


def _cell(value):
    if value is None:
        return UNDEFINED
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_trace(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for r in rows:
            w.writerow([r.epoch, r.split, r.task, r.metric, _cell(r.value)])


def report_rows(report, split="validation", epoch="final"):
    return [TraceRow(epoch, split, report.task, m, v) for m, v in report.metric_items()]


def write_report(path, report, split="validation"):
    write_trace(path, report_rows(report, split))
