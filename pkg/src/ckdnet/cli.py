"""Command-line interface: ``ckdnet {synth,balance,train,eval,explain}``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import imgdata, metrics, model_io
from .errors import CKDError, ConfigError
from .gradcam import DEFAULT_ALPHA, explain
from .imgdata import CLASS_NAMES
from .nn import TrainConfig, build_model, fit, predict_proba
from .pipeline import SMOTE_MODES, prepare, stage_seed
from .smote import BalancePlan, balance

log = logging.getLogger("ckdnet")

CHECKPOINT_NAME = "model.ckdm"


def _counts(text: str):
    try:
        counts = [int(x) for x in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected four integers a,b,c,d, got {text!r}")
    if len(counts) != 4 or any(c < 0 for c in counts):
        raise argparse.ArgumentTypeError(f"expected four non-negative integers, got {text!r}")
    return counts


def _unit(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _add_seed(p):
    p.add_argument("--seed", type=int, default=42,
                   help="master seed; every stage derives from it (default: 42)")


def _add_source(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--dataset", type=Path, metavar="DIR",
                     help="root with Cyst/ Normal/ Stone/ Tumor/ image folders")
    src.add_argument("--synthetic", type=_counts, metavar="a,b,c,d",
                     help="generate a synthetic set with these per-class counts")
    p.add_argument("--bgr-input", action="store_true",
                   help="swap channels 0 and 2 after decoding (for BGR-ordered sources)")
    p.add_argument("--on-error", choices=("abort", "skip"), default="abort",
                   help="what to do with files that fail to decode (default: abort)")
    _add_seed(p)


def _add_pipeline(p):
    p.add_argument("--smote-mode", choices=SMOTE_MODES, default="faithful",
                   help="faithful (DEFAULT): SMOTE the whole set, then split 80/20 and "
                        "90/10; this leaks synthetic neighbours of test images into "
                        "training. no-leak: split first, balance only the training part")
    p.add_argument("--no-leak", dest="smote_mode", action="store_const", const="no-leak",
                   help="shorthand for --smote-mode no-leak")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ckdnet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset in the class-folder layout")
    p.add_argument("--synthetic", type=_counts, required=True, metavar="a,b,c,d",
                   help="per-class counts (Cyst,Normal,Stone,Tumor)")
    _add_seed(p)
    p.add_argument("--out", type=Path, required=True, help="output dataset root")

    p = sub.add_parser("balance", help="report SMOTE class counts before and after")
    _add_source(p)
    p.add_argument("--k", type=int, default=5, help="SMOTE neighbours (default: 5)")

    p = sub.add_parser("train", help="balance, split, train; write checkpoint and history.csv")
    _add_source(p)
    _add_pipeline(p)
    p.add_argument("--epochs", type=int, default=20, help="default: 20")
    p.add_argument("--batch", type=int, default=42, help="mini-batch size (default: 42)")
    p.add_argument("--lr", type=float, default=0.001, help="Adam learning rate (default: 0.001)")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("eval", help="rebuild the test split and write the evaluation report")
    _add_source(p)
    _add_pipeline(p)
    p.add_argument("--checkpoint", type=Path,
                   help=f"model file (default: OUT/{CHECKPOINT_NAME})")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = sub.add_parser("explain", help="write Grad-CAM overlays for image files")
    p.add_argument("images", nargs="+", type=Path, help="PNG/JPEG files")
    p.add_argument("--checkpoint", type=Path, required=True, help="model file")
    p.add_argument("--class", dest="target", default="predicted",
                   help="class name, 'predicted' (default) or 'all'")
    p.add_argument("--alpha", type=_unit, default=DEFAULT_ALPHA,
                   help=f"overlay weight in [0, 1] (default: {DEFAULT_ALPHA})")
    p.add_argument("--bgr-input", action="store_true", help="swap channels 0 and 2 after decoding")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def load_source(args) -> imgdata.LabeledSet:
    if args.synthetic is not None:
        return imgdata.generate_synthetic_dataset(args.synthetic, stage_seed(args.seed, "synth"))
    return imgdata.load_directory_dataset(args.dataset, on_error=args.on_error,
                                          bgr_input=args.bgr_input)


def cmd_synth(args) -> None:
    data = imgdata.generate_synthetic_dataset(args.synthetic, stage_seed(args.seed, "synth"))
    paths = imgdata.write_dataset(data, args.out)
    print(f"wrote {len(paths)} images to {args.out}")


def cmd_balance(args) -> None:
    data = load_source(args)
    plan = BalancePlan.to_majority(data.labels, args.k)
    print(plan.describe())
    balanced, _ = balance(data, args.k, stage_seed(args.seed, "smote"))
    counts = balanced.counts()
    print("after SMOTE: " + ", ".join(f"{n}={c}" for n, c in zip(CLASS_NAMES, counts))
          + f" (total {sum(counts)})")


def cmd_train(args) -> None:
    prepared = prepare(load_source(args), args.seed, args.smote_mode)
    config = TrainConfig(epochs=args.epochs, batch_size=args.batch, learning_rate=args.lr,
                         seed=stage_seed(args.seed, "shuffle"))
    model = build_model(stage_seed(args.seed, "init"))
    history = fit(model, prepared.train, prepared.val, config)
    args.out.mkdir(parents=True, exist_ok=True)
    model_io.save_checkpoint(model, args.out / CHECKPOINT_NAME)
    history.to_csv(args.out / "history.csv")
    print(f"SMOTE ({prepared.mode}): {prepared.plan.describe()}")
    print(f"train {len(prepared.train)}, val {len(prepared.val)}, test {len(prepared.test)}")
    print(f"final train_acc={history.train_acc[-1]:.4f} val_acc={history.val_acc[-1]:.4f}")
    print(f"wrote {args.out / CHECKPOINT_NAME} and {args.out / 'history.csv'}")


def cmd_eval(args) -> None:
    checkpoint = args.checkpoint or args.out / CHECKPOINT_NAME
    model = model_io.load_checkpoint(checkpoint)
    test = prepare(load_source(args), args.seed, args.smote_mode).test
    probs = predict_proba(model, test.images)
    report = metrics.classification_report(test.labels, probs)
    args.out.mkdir(parents=True, exist_ok=True)
    report.to_csv(args.out / "report.csv")
    (args.out / "report.txt").write_text(report.to_text())
    metrics.write_confusion_csv(report.confusion, args.out / "confusion.csv")
    for c, name in enumerate(CLASS_NAMES):
        stem = name.lower()
        try:
            metrics.roc_curve_ovr(probs, test.labels, c).to_csv(
                args.out / f"roc_{stem}.csv", "fpr", "tpr")
            metrics.pr_curve_ovr(probs, test.labels, c).to_csv(
                args.out / f"pr_{stem}.csv", "recall", "precision")
        except metrics.DegenerateError as exc:
            log.warning("no curves for %s: %s", name, exc)
    print(report.to_text(), end="")


def _targets(target: str, probs: np.ndarray) -> list[int]:
    if target == "predicted":
        return [int(np.argmax(probs))]
    if target == "all":
        return list(range(len(CLASS_NAMES)))
    return [imgdata.encode_label(target)]


def cmd_explain(args) -> None:
    model = model_io.load_checkpoint(args.checkpoint)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in args.images:
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        image = imgdata.preprocess(imgdata.decode_image(raw, str(path)), args.bgr_input)
        probs = predict_proba(model, image[None])[0]
        for c in _targets(args.target, probs):
            _, overlay = explain(model, image, c, args.alpha)
            dest = args.out / f"{path.stem}.gradcam.{CLASS_NAMES[c]}.png"
            imgdata.write_png(overlay, dest)
            print(f"{dest}  p({CLASS_NAMES[c]})={probs[c]:.4f}")


COMMANDS = {"synth": cmd_synth, "balance": cmd_balance, "train": cmd_train,
            "eval": cmd_eval, "explain": cmd_explain}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "epochs", 1) < 1 or getattr(args, "batch", 1) < 1:
        print("error: --epochs and --batch must be >= 1", file=sys.stderr)
        return 2
    try:
        COMMANDS[args.command](args)
    except (CKDError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0
