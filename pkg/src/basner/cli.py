"""Command-line interface.

Subcommands: train, eval-ner, eval-seg, segment, tag, gradcheck, inspect.
Exit codes: 0 success, 1 check/threshold failure, 2 usage or input error.
Configuration precedence: flags > config file (--config, "key = value"
lines) > built-in defaults. Every run prints its resolved configuration
before doing any work.
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields as dataclass_fields

from . import kernels
from .boundary import load_lexicon_file
from .checkpoint import load_checkpoint, save_checkpoint
from .corpus import parse_ner_conll, parse_sighan, segmentation_to_words
from .gradcheck import TOLERANCE, run_suite
from .metrics import score_mentions, score_spans
from .model import load_embeddings
from .pipeline import (TrainConfig, decode_bies, evaluate_ner,
                       predict_ner, predict_segmentation, train)

_FLAG_TO_FIELD = {
    "lr": "learning_rate",
    "dropout": "dropout",
    "max_epochs": "max_epochs",
    "cws_subsample": "cws_subsample",
    "ner_subsample": "ner_subsample",
    "hidden": "hidden",
    "emb_dim": "embedding_dim",
    "seed": "seed",
    "patience": "patience",
}


def _read_config_file(path) -> dict:
    known = {f.name: f.type for f in dataclass_fields(TrainConfig)}
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
    except OSError as exc:
        raise ValueError(f"--config: cannot read {path}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}: line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ValueError(f"{path}: line {lineno}: unknown key {key!r}")
        current = getattr(TrainConfig(), key)
        if isinstance(current, bool):
            out[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(current, int):
            out[key] = int(value)
        else:
            out[key] = float(value)
    return out


def _resolve_config(args) -> TrainConfig:
    values = TrainConfig().as_dict()
    if getattr(args, "config", None):
        values.update(_read_config_file(args.config))
    for flag, field in _FLAG_TO_FIELD.items():
        v = getattr(args, flag, None)
        if v is not None:
            values[field] = v
    for flag, field in (("no_boundary_features", "boundary_features"),
                        ("no_chain_merge", "chain_merge"),
                        ("no_finetune_embeddings", "finetune_embeddings")):
        if getattr(args, flag, False):
            values[field] = False
    return TrainConfig.from_dict(values)


def _print_config(cfg: TrainConfig):
    print("resolved configuration:")
    for key, value in sorted(cfg.as_dict().items()):
        print(f"  {key} = {value}")
    print(f"  kernels_backend = {kernels.BACKEND}")


def _load_file(path, flag: str) -> bytes:
    try:
        with open(path, "rb") as fh:
            return fh.read()
    except OSError as exc:
        raise ValueError(f"{flag}: cannot read {path}: {exc}") from None


def _write_report(path, pairs: dict):
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(pairs):
            fh.write(f"{key} = {pairs[key]!r}\n")


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    _print_config(cfg)
    cws_corpus = parse_sighan(_load_file(args.cws_train, "--cws-train"))
    ner_train = parse_ner_conll(_load_file(args.ner_train, "--ner-train"))
    ner_dev = parse_ner_conll(_load_file(args.ner_dev, "--ner-dev"))
    embeddings = None
    if args.embeddings:
        _load_file(args.embeddings, "--embeddings")
        embeddings = load_embeddings(args.embeddings,
                                     expected_dim=cfg.embedding_dim)
    lexicon = None
    if args.lexicon:
        _load_file(args.lexicon, "--lexicon")
        lexicon = load_lexicon_file(args.lexicon,
                                    positions=cfg.lexicon_positions)
    best, best_epoch, best_f1, history = train(
        cws_corpus, ner_train, ner_dev, cfg,
        embeddings=embeddings, lexicon=lexicon, log=print)
    save_checkpoint(args.out, best, epoch=best_epoch, best_f1=best_f1)
    print(f"best epoch {best_epoch} dev_f1={best_f1:.4f}; "
          f"checkpoint written to {args.out}")
    if args.report_path:
        pairs = {"best_epoch": best_epoch, "best_f1": best_f1}
        for rec in history:
            pairs[f"epoch_{rec.epoch:03d}.cws_loss"] = rec.cws_loss
            pairs[f"epoch_{rec.epoch:03d}.ner_loss"] = rec.ner_loss
            pairs[f"epoch_{rec.epoch:03d}.dev_f1"] = rec.dev_f1
        _write_report(args.report_path, pairs)
    return 0


def _load_model(args):
    _load_file(args.model, "--model")
    tagger, epoch, best_f1 = load_checkpoint(args.model)
    _print_config(tagger.config)
    return tagger, epoch, best_f1


def _map_sentences(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))  # merged in corpus order
    return [fn(s) for s in items]


def cmd_eval_ner(args) -> int:
    tagger, _, _ = _load_model(args)
    corpus = parse_ner_conll(_load_file(args.corpus, "--corpus"))
    preds = _map_sentences(lambda s: predict_ner(tagger, s.chars),
                           corpus, args.threads)
    report = score_mentions([s.gold_ner for s in corpus], preds)
    print(report.format_table())
    if args.report_path:
        _write_report(args.report_path, report.as_dict())
    return 0


def cmd_eval_seg(args) -> int:
    tagger, _, _ = _load_model(args)
    corpus = parse_sighan(_load_file(args.corpus, "--corpus"))
    preds = _map_sentences(lambda s: predict_segmentation(tagger, s.chars),
                           corpus, args.threads)
    prf = score_spans([decode_bies(s.gold_seg) for s in corpus], preds)
    print(f"segmentation: P={prf.precision:.4f} R={prf.recall:.4f} "
          f"F1={prf.f1:.4f} (correct={prf.correct} predicted={prf.predicted} "
          f"gold={prf.gold})")
    if args.report_path:
        _write_report(args.report_path, {
            "seg.precision": prf.precision, "seg.recall": prf.recall,
            "seg.f1": prf.f1, "seg.correct": prf.correct,
            "seg.predicted": prf.predicted, "seg.gold": prf.gold})
    return 0


def cmd_segment(args) -> int:
    tagger, _, _ = _load_model(args)
    for line in sys.stdin:
        chars = line.rstrip("\n")
        if not chars:
            print()
            continue
        spans = predict_segmentation(tagger, chars,
                                     use_boundary=not args.no_assemble)
        print(" ".join(segmentation_to_words(chars, spans)))
    return 0


def cmd_tag(args) -> int:
    tagger, _, _ = _load_model(args)
    first = True
    for line in sys.stdin:
        chars = line.rstrip("\n")
        if not chars:
            continue
        if not first:
            print()
        first = False
        for ch, tag in zip(chars, predict_ner(tagger, chars)):
            print(f"{ch} {tag}")
    return 0


def cmd_gradcheck(args) -> int:
    print(f"resolved configuration:\n  seed = {args.seed}\n"
          f"  instances = {args.instances}\n"
          f"  kernels_backend = {kernels.BACKEND}")
    results = run_suite(seed=args.seed, instances=args.instances,
                        corrupt=args.corrupt)
    worst_name, worst = max(results.items(), key=lambda kv: kv[1])
    for name in sorted(results):
        status = "ok" if results[name] <= TOLERANCE else "FAIL"
        print(f"{name:24s} max_rel_err={results[name]:.3e} {status}")
    if worst > TOLERANCE:
        print(f"gradient check failed: worst group {worst_name} "
              f"({worst:.3e} > {TOLERANCE:g})")
        return 1
    return 0


def cmd_inspect(args) -> int:
    tagger, epoch, best_f1 = _load_model(args)
    print(f"epoch = {epoch}")
    print(f"best_f1 = {best_f1:.6f}")
    print(f"vocabulary = {len(tagger.embeddings.tokens)} tokens")
    print(f"lexicon = {len(tagger.lexicon.nouns)} nouns "
          f"(positions={tagger.lexicon.positions})")
    for name, arr in (("lstm.wx", tagger.lstm.wx), ("lstm.wh", tagger.lstm.wh),
                      ("lstm.b", tagger.lstm.b),
                      ("proj_cws.w", tagger.proj_cws.w),
                      ("proj_ner.w", tagger.proj_ner.w),
                      ("crf_cws.trans", tagger.crf_cws.trans),
                      ("crf_ner.trans", tagger.crf_ner.trans)):
        print(f"{name} shape = {arr.shape}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="basner",
        description="Chinese word segmentation and NER with boundary "
                    "assembling")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="two-stage alternating training")
    p.add_argument("--cws-train", required=True)
    p.add_argument("--ner-train", required=True)
    p.add_argument("--ner-dev", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--lexicon")
    p.add_argument("--config")
    p.add_argument("--report-path")
    p.add_argument("--lr", type=float)
    p.add_argument("--dropout", type=float)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--cws-subsample", type=int)
    p.add_argument("--ner-subsample", type=int)
    p.add_argument("--hidden", type=int)
    p.add_argument("--emb-dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--no-boundary-features", action="store_true")
    p.add_argument("--no-chain-merge", action="store_true")
    p.add_argument("--no-finetune-embeddings", action="store_true")
    p.set_defaults(func=cmd_train)

    for name, func in (("eval-ner", cmd_eval_ner), ("eval-seg", cmd_eval_seg)):
        p = sub.add_parser(name, help=f"evaluate a checkpoint ({name[5:]})")
        p.add_argument("--model", required=True)
        p.add_argument("--corpus", required=True)
        p.add_argument("--report-path")
        p.add_argument("--threads", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("segment", help="segment stdin, one sentence per line")
    p.add_argument("--model", required=True)
    p.add_argument("--no-assemble", action="store_true",
                   help="bypass the boundary module for A/B comparison")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("tag", help="tag stdin; two-column char/tag output")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("gradcheck", help="finite-difference gradient suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("inspect", help="print checkpoint metadata")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
