"""``phqnet`` command line: synth, train, eval, predict.

Exit codes: 0 ok, 2 bad arguments or config, 3 I/O or ingestion failure,
4 training aborted on a non-finite loss, 5 evaluation or checkpoint mismatch.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from threadpoolctl import threadpool_limits

from . import corpus, text, trainer
from .config import RunConfig, parse_modalities
from .errors import (
    AggregationError,
    CheckpointError,
    ConfigError,
    DimensionError,
    FormatError,
    IngestionError,
    InputError,
    ParameterError,
    TrainingAborted,
)
from .model import Model, load_checkpoint, save_checkpoint

EXIT_OK, EXIT_ARGS, EXIT_IO, EXIT_ABORT, EXIT_MISMATCH = 0, 2, 3, 4, 5

log = logging.getLogger("phqnet")


class UsageError(Exception):
    pass


def _min_patients(value):
    n = int(value)
    if n < 4:
        raise argparse.ArgumentTypeError(f"need at least 4 patients, got {n}")
    return n


def _modalities(value):
    try:
        return parse_modalities(value)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser():
    p = argparse.ArgumentParser(prog="phqnet", description="Multi-modal depression screening from interview sentences.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a deterministic synthetic corpus")
    s.add_argument("--patients", type=_min_patients, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", type=Path, required=True)

    def model_flags(q):
        q.add_argument("--config", type=Path, help="key = value run configuration file")
        q.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        q.add_argument("--threads", type=int, help="BLAS/OpenMP thread limit (default 1)")

    t = sub.add_parser("train", help="train a classifier or regressor")
    t.add_argument("--corpus", type=Path, required=True)
    t.add_argument("--task", choices=("classification", "regression"))
    t.add_argument("--encoder", choices=("ccnn", "lstm", "mean"))
    t.add_argument("--modalities", type=_modalities, help="comma list of a, v, l")
    t.add_argument("--seed", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--learning-rate", type=float)
    t.add_argument("--out", type=Path, required=True, help="checkpoint path")
    t.add_argument("--trace", type=Path, help="loss trace CSV (default: <out>.trace.csv)")
    model_flags(t)

    e = sub.add_parser("eval", help="score a checkpoint on a corpus split")
    e.add_argument("--corpus", type=Path, required=True)
    e.add_argument("--split", choices=("train", "validation"), default="validation")
    e.add_argument("--ckpt", type=Path, required=True)
    e.add_argument("--task", choices=("classification", "regression"),
                   help="ignored; the task is read from the checkpoint")
    e.add_argument("--report", type=Path, help="report CSV path")
    e.add_argument("--threads", type=int)

    r = sub.add_parser("predict", help="score one interview")
    r.add_argument("--ckpt", type=Path, required=True)
    r.add_argument("--audio", type=Path)
    r.add_argument("--keypoints", type=Path)
    r.add_argument("--transcript", type=Path, required=True)
    r.add_argument("--embeddings", type=Path, help="word-vector file (default: path stored in the checkpoint)")
    r.add_argument("--patient-id", default="interview")
    r.add_argument("--threads", type=int)
    return p


def resolve_config(args):
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = "\n".join(args.set)
    if overrides:
        config = RunConfig.loads(overrides, base=config)
    flags = {
        "task": args.task,
        "encoder": args.encoder,
        "modalities": args.modalities,
        "seed": args.seed,
        "epochs": args.epochs,
        "learning_rate": args.learning_rate,
        "threads": args.threads,
    }
    return config.replace(**{k: v for k, v in flags.items() if v is not None})


def cmd_synth(args):
    manifest = corpus.generate_synthetic_corpus(args.patients, args.seed, args.out)
    print(f"wrote {len(manifest.train)} train / {len(manifest.validation)} validation patients to {args.out}")
    return EXIT_OK


def cmd_train(args):
    config = resolve_config(args)
    with threadpool_limits(limits=config.threads):
        return _train(args, config)


def _train(args, config):
    data = corpus.load_corpus(args.corpus, config)
    model = Model(config, data.feature_dims)
    validation = data.split("validation") or None
    trace_path = args.trace or args.out.with_name(args.out.name + ".trace.csv")

    def snapshot(epoch, m):
        save_checkpoint(m, args.out.with_name(f"{args.out.name}.epoch{epoch}"))

    log.info("training %s %s on %s", config.encoder, ",".join(config.modalities), args.corpus)
    try:
        result = trainer.train(model, data.flat("train"), config, validation, snapshot=snapshot)
    except TrainingAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    save_checkpoint(model, args.out)
    trainer.write_trace(trace_path, result.trace)
    print(f"checkpoint: {args.out}\ntrace: {trace_path}")
    if validation:
        print(trainer.evaluate(model, validation).summary())
    return EXIT_OK


def cmd_eval(args):
    model = load_checkpoint(args.ckpt)
    if args.task and args.task != model.task:
        log.warning("--task %s ignored; checkpoint was trained for %s", args.task, model.task)
    data = corpus.load_corpus(args.corpus, model.config, splits=(args.split,))
    if data.feature_dims != model.feature_dims:
        raise DimensionError(f"corpus features {data.feature_dims} do not match checkpoint {model.feature_dims}")
    report = trainer.evaluate(model, data.split(args.split))
    print(report.summary())
    if args.report:
        trainer.write_report(args.report, report, args.split)
    return EXIT_OK


def cmd_predict(args):
    model = load_checkpoint(args.ckpt)
    config = model.config
    record = corpus.load_interview_files(args.patient_id, 0, args.transcript, args.audio, args.keypoints,
                                         config.modalities, config.resample)
    embeddings = None
    if "linguistic" in config.modalities and not config.sentence_vectors:
        path = args.embeddings or (Path(config.embeddings) if config.embeddings else None)
        if path is None:
            raise UsageError("--embeddings is required for a linguistic checkpoint without a stored path")
        try:
            embeddings = text.load_embeddings(path)
        except OSError as exc:
            raise IngestionError(f"cannot read word vectors ({exc.strerror})", path=path) from exc
    samples = corpus.FeaturePipeline(config, embeddings).assemble(record)
    if not samples:
        raise AggregationError("interview has no scorable participant sentences")
    outputs = trainer.sentence_outputs(model, samples)
    score, label = trainer.aggregate_patient(outputs, model.task, config.decision_threshold)
    col = "mdd_probability" if model.task == "classification" else "phq_estimate"
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["patient_id", "sentence_index", "start", "stop", col, "mdd_label"])
    for s, out in zip(samples, outputs):
        _, lab = trainer.aggregate_patient([out], model.task, config.decision_threshold)
        w.writerow([s.patient_id, s.sentence_index, f"{s.start:.3f}", f"{s.stop:.3f}", f"{out:.6f}", lab])
    w.writerow([args.patient_id, "all", "", "", f"{score:.6f}", label])
    return EXIT_OK


COMMANDS = {"synth": cmd_synth, "train": cmd_train, "eval": cmd_eval, "predict": cmd_predict}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_ARGS
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    threads = getattr(args, "threads", None) or 1
    try:
        with threadpool_limits(limits=threads):
            return COMMANDS[args.command](args)
    except (UsageError, ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except (IngestionError, FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (CheckpointError, AggregationError, DimensionError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
