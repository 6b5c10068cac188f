"""Command line surface: split, extract, train, fuse, predict, evaluate,
and bench subcommands binding the pipeline together.

Logs go to stderr, data to files or stdout. Exit codes: 0 success,
1 runtime failure, 2 usage error. A TOML file passed via --config supplies
defaults for any long flag (dashes as underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import classifiers, dataset, descriptors, fusion, imaging, metrics, nnet

log = logging.getLogger("giclassify")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(ValueError):
    """Flag values that parse but are out of contract (exit code 2)."""


def _load_config(path: str) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="giclassify",
        description="Gastrointestinal image classification pipeline")
    parser.add_argument("--config", help="TOML file with flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="stratified train/val split of a class-folder dataset")
    p.add_argument("--root", required=True, help="dataset root directory")
    p.add_argument("--ratio", type=float, default=0.7, help="train fraction")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--distractors", default=None,
                   help="directory of out-of-patient replacement images")
    p.add_argument("--no-out-of-patient-policy", action="store_true",
                   help="keep out-of-patient images where the split put them")
    p.add_argument("--out", required=True, help="split CSV to write")

    p = sub.add_parser("extract", help="compute 702-value feature vectors")
    p.add_argument("--split", required=True, help="split CSV")
    p.add_argument("--images-root", required=True, help="image directory root")
    p.add_argument("--distractors", default=None,
                   help="directory resolving distractors/* image ids")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--debug-dump-dir", default=None,
                   help="write the standardized 512x512 PNGs here")
    p.add_argument("--out", required=True, help="feature CSV to write")

    p = sub.add_parser("train", help="fit a classifier on the train subset")
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--split", required=True, help="split CSV")
    p.add_argument("--classifier", choices=["sl", "lmt"], required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--model-out", required=True, help="model JSON to write")
    p.add_argument("--report-dir", default=None,
                   help="directory for validation report files")

    p = sub.add_parser("predict", help="apply a trained model to features")
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--features", required=True, help="feature CSV")
    p.add_argument("--out", required=True, help="predictions CSV to write")
    p.add_argument("--probs-out", default=None,
                   help="optional branch-probability CSV to write")

    p = sub.add_parser("fuse", help="fuse two branch probability files")
    p.add_argument("--branch1", required=True, help="branch probability CSV")
    p.add_argument("--branch2", required=True, help="branch probability CSV")
    p.add_argument("--labels", required=True,
                   help="split CSV supplying labels (and train/val subsets)")
    p.add_argument("--mode", choices=["avg", "mlp"], required=True)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--epochs", type=int, default=60)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-factor", type=float, default=0.1)
    p.add_argument("--lr-patience", type=int, default=3)
    p.add_argument("--min-lr", type=float, default=1e-5)
    p.add_argument("--predictions-out", required=True)
    p.add_argument("--report-dir", required=True)
    p.add_argument("--weights-out", default=None,
                   help="fusion MLP weights JSON (mlp mode)")
    p.add_argument("--history-out", default=None,
                   help="fusion MLP training history CSV (mlp mode)")

    p = sub.add_parser("evaluate", help="score a predictions file")
    p.add_argument("--predictions", required=True, help="predictions CSV")
    p.add_argument("--labels", required=True, help="split CSV supplying labels")
    p.add_argument("--subset", choices=["train", "val", "all"], default="val")
    p.add_argument("--report-dir", required=True)

    p = sub.add_parser("bench", help="measure descriptor throughput")
    p.add_argument("--images-root", required=True)
    p.add_argument("--limit", type=int, default=0,
                   help="cap on images benchmarked (0 = all)")
    p.add_argument("--threads", type=int, default=1)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    parser = build_parser()
    config_probe = argparse.ArgumentParser(add_help=False)
    config_probe.add_argument("--config")
    probed, _ = config_probe.parse_known_args(argv)
    if probed.config:
        try:
            defaults = _load_config(probed.config)
        except (OSError, ValueError) as exc:
            log.error("cannot read config %s: %s", probed.config, exc)
            return EXIT_RUNTIME
        for action in parser._actions:
            if isinstance(action, argparse._SubParsersAction):
                for sp in action.choices.values():
                    known = {a.dest for a in sp._actions}
                    sp.set_defaults(**{k: v for k, v in defaults.items()
                                       if k in known})
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except (ValueError, KeyError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return EXIT_RUNTIME


def _cmd_split(args) -> int:
    if not 0.0 < args.ratio < 1.0:
        raise UsageError(f"--ratio must be in (0, 1), got {args.ratio}")
    index = dataset.scan_dataset(args.root)
    split = dataset.stratified_split(index, args.ratio, args.seed)
    if not args.no_out_of_patient_policy:
        split = dataset.apply_out_of_patient_policy(split, index,
                                                    args.distractors)
    dataset.write_split(args.out, split, index)
    log.info("split written to %s: %d train, %d val", args.out,
             len(split.train), len(split.val))
    return EXIT_OK


def _resolve_image_path(image_id: str, images_root: Path,
                        distractors: Path | None) -> Path:
    if image_id.startswith(dataset.DISTRACTOR_PREFIX):
        if distractors is None:
            raise ValueError(f"{image_id}: pass --distractors to resolve "
                             f"distractor image ids")
        return distractors / image_id[len(dataset.DISTRACTOR_PREFIX):]
    return images_root / image_id


def _cmd_extract(args) -> int:
    split = dataset.read_split(args.split)
    images_root = Path(args.images_root)
    distractors = Path(args.distractors) if args.distractors else None
    dump_dir = Path(args.debug_dump_dir) if args.debug_dump_dir else None
    if dump_dir:
        dump_dir.mkdir(parents=True, exist_ok=True)
    ids = sorted(split)

    def extract_one(image_id: str):
        path = _resolve_image_path(image_id, images_root, distractors)
        try:
            img = imaging.decode_file(path)
            if dump_dir:
                size = descriptors.STANDARD_SIZE
                standardized = imaging.resize(img, size, size)
                dump = dump_dir / (image_id.replace("/", "__") + ".png")
                dump.write_bytes(imaging.to_png_bytes(standardized))
            return image_id, split[image_id][0], descriptors.extract_all(img)
        except (OSError, ValueError) as exc:
            log.warning("skipping %s: %s", image_id, exc)
            return None

    started = time.perf_counter()
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(extract_one, ids))
    else:
        results = [extract_one(i) for i in ids]
    elapsed = time.perf_counter() - started
    rows = [r for r in results if r is not None]
    skipped = len(results) - len(rows)
    descriptors.write_features(args.out, rows)
    rate = metrics.fps(len(rows), elapsed) if elapsed > 0 else 0.0
    log.info("extracted %d vectors to %s in %.2fs (%.1f FPS); %d skipped",
             len(rows), args.out, elapsed, rate, skipped)
    return EXIT_OK


def _split_matrices(features_path: str, split_path: str):
    ids, labels, matrix = descriptors.read_features(features_path)
    split = dataset.read_split(split_path)
    subsets = {"train": ([], []), "val": ([], [])}
    for i, image_id in enumerate(ids):
        if image_id not in split:
            continue
        label, subset = split[image_id]
        subsets[subset][0].append(i)
        subsets[subset][1].append(label)
    (train_idx, train_labels), (val_idx, val_labels) = \
        subsets["train"], subsets["val"]
    return ((matrix[train_idx], train_labels, [ids[i] for i in train_idx]),
            (matrix[val_idx], val_labels, [ids[i] for i in val_idx]))


def _evaluate_to_report(name: str, pred_idx, actual_idx, report_dir) -> None:
    cm = metrics.confusion_matrix(pred_idx, actual_idx)
    row = metrics.micro_metrics(cm)
    written = metrics.render_report([(name, row)], cm, report_dir)
    log.info("REC %.4f SPEC %.4f ACC %.4f MCC %.4f -> %s", row.rec, row.spec,
             row.acc_overall, row.mcc, written["markdown"])


def _cmd_train(args) -> int:
    (train_x, train_labels, _), (val_x, val_labels, _) = \
        _split_matrices(args.features, args.split)
    if len(train_labels) == 0:
        raise ValueError("split has no training rows present in the features")
    cfg = classifiers.ClassifierConfig(max_iterations=args.max_iterations,
                                       seed=args.seed)
    fit = (classifiers.train_simple_logistic if args.classifier == "sl"
           else classifiers.train_lmt)
    model = fit(train_x, train_labels, cfg)
    classifiers.save_model(args.model_out, model)
    log.info("%s model written to %s", args.classifier, args.model_out)
    if args.report_dir and len(val_labels):
        proba = model.predict_proba(val_x)
        pred_idx = [dataset.CLASS_INDEX[model.classes[k]]
                    for k in proba.argmax(axis=1)]
        actual_idx = [dataset.CLASS_INDEX[v] for v in val_labels]
        _evaluate_to_report(f"train-{args.classifier}", pred_idx, actual_idx,
                            args.report_dir)
    return EXIT_OK


def _cmd_predict(args) -> int:
    model = classifiers.load_model(args.model)
    ids, _, matrix = descriptors.read_features(args.features)
    proba = np.atleast_2d(model.predict_proba(matrix))
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("image_id,predicted_label,confidence\n")
        for image_id, p in zip(ids, proba):
            k = int(p.argmax())
            fh.write(f"{image_id},{model.classes[k]},{p[k]:.9g}\n")
    log.info("predictions for %d rows written to %s", len(ids), args.out)
    if args.probs_out:
        unknown = [c for c in model.classes if c not in dataset.CLASS_INDEX]
        if unknown:
            raise ValueError(f"--probs-out needs the fixed class vocabulary; "
                             f"model has {unknown}")
        # Classes absent from training (e.g. out-of-patient after the
        # substitution policy) get probability 0.
        columns = [dataset.CLASS_INDEX[c] for c in model.classes]
        probs = {}
        for image_id, p in zip(ids, proba):
            vec = np.zeros(dataset.N_CLASSES)
            vec[columns] = p
            probs[image_id] = vec
        fusion.write_branch_probs(
            args.probs_out, fusion.BranchOutputs(probs, args.model))
        log.info("branch probabilities written to %s", args.probs_out)
    return EXIT_OK


def _read_label_file(path: str) -> dict[str, tuple[str, str]]:
    return dataset.read_split(path)


def _cmd_fuse(args) -> int:
    branch1 = fusion.import_branch_probs(args.branch1)
    branch2 = fusion.import_branch_probs(args.branch2)
    labels = _read_label_file(args.labels)
    covered = sorted(set(labels) & set(branch1.probs) & set(branch2.probs))
    missing = sorted(set(labels) - set(covered))
    if missing:
        log.warning("%d labelled ids missing from a branch (e.g. %s)",
                    len(missing), missing[:5])
    train_ids = [i for i in covered if labels[i][1] == "train"]
    val_ids = [i for i in covered if labels[i][1] == "val"]
    eval_ids = val_ids if val_ids else covered
    if not eval_ids:
        raise ValueError(f"no labelled ids are covered by both branches; "
                         f"missing ids start with {missing[:10]}")

    if args.mode == "avg":
        fused = fusion.average_fusion(branch1.matrix(eval_ids),
                                      branch2.matrix(eval_ids))
        name = "fusion-avg"
    else:
        if not train_ids or not val_ids:
            raise ValueError("mlp fusion needs both train and val subsets "
                             "in the labels file")
        mlp = fusion.build_fusion_mlp(args.seed)
        cfg = nnet.TrainConfig(epochs=args.epochs, batch_size=args.batch_size,
                               seed=args.seed, initial_lr=args.lr,
                               lr_factor=args.lr_factor,
                               lr_patience=args.lr_patience,
                               min_lr=args.min_lr)
        train_labels = np.array([dataset.CLASS_INDEX[labels[i][0]]
                                 for i in train_ids])
        val_labels = np.array([dataset.CLASS_INDEX[labels[i][0]]
                               for i in val_ids])
        mlp, history = fusion.train_fusion(mlp, branch1, branch2, train_ids,
                                           train_labels, val_ids, val_labels,
                                           cfg)
        if args.weights_out:
            nnet.save_net(args.weights_out, mlp)
        if args.history_out:
            nnet.write_history(args.history_out, history)
        fused = nnet.forward(mlp, fusion.fusion_inputs(branch1, branch2,
                                                       eval_ids))
        name = "fusion-mlp"

    pred_idx = fused.argmax(axis=1)
    with open(args.predictions_out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("image_id,predicted_label,confidence\n")
        for image_id, p in zip(eval_ids, np.atleast_2d(fused)):
            k = int(p.argmax())
            fh.write(f"{image_id},{dataset.CLASS_NAMES[k]},{p[k]:.9g}\n")
    actual_idx = [dataset.CLASS_INDEX[labels[i][0]] for i in eval_ids]
    _evaluate_to_report(name, pred_idx, actual_idx, args.report_dir)
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    labels = _read_label_file(args.labels)
    pred: dict[str, str] = {}
    with open(args.predictions, encoding="utf-8", newline="") as fh:
        header = fh.readline().strip().split(",")
        if header[:2] != ["image_id", "predicted_label"]:
            raise ValueError(f"{args.predictions}: malformed header")
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(",")
            if len(parts) < 2:
                raise ValueError(f"{args.predictions}:{lineno}: short row")
            pred[parts[0]] = parts[1]
    wanted = {i for i, (_, subset) in labels.items()
              if args.subset in ("all", subset)}
    ids = sorted(wanted)
    missing = [i for i in ids if i not in pred]
    if missing:
        raise ValueError(f"predictions missing {len(missing)} labelled ids "
                         f"(e.g. {missing[:5]})")
    pred_idx = [dataset.CLASS_INDEX[pred[i]] for i in ids]
    actual_idx = [dataset.CLASS_INDEX[labels[i][0]] for i in ids]
    _evaluate_to_report("evaluate", pred_idx, actual_idx, args.report_dir)
    return EXIT_OK


def _cmd_bench(args) -> int:
    root = Path(args.images_root)
    paths = sorted(p for p in root.rglob("*")
                   if p.is_file() and p.suffix.lower() in dataset.IMAGE_EXTENSIONS)
    if args.limit:
        paths = paths[:args.limit]
    if not paths:
        raise ValueError(f"no images under {root}")
    images = [imaging.decode_file(p) for p in paths]
    timings: dict[str, float] = {}

    def run(name, fn, imgs):
        started = time.perf_counter()
        if args.threads > 1:
            with ThreadPoolExecutor(max_workers=args.threads) as pool:
                list(pool.map(fn, imgs))
        else:
            for im in imgs:
                fn(im)
        timings[name] = time.perf_counter() - started

    standardized = [
        imaging.resize(im, descriptors.STANDARD_SIZE, descriptors.STANDARD_SIZE)
        if (im.width, im.height) != (descriptors.STANDARD_SIZE,) * 2 else im
        for im in images]
    for name, fn in (("tamura", descriptors.tamura),
                     ("color_layout", descriptors.color_layout),
                     ("edge_histogram", descriptors.edge_histogram),
                     ("auto_color_correlogram", descriptors.auto_color_correlogram),
                     ("phog", descriptors.phog),
                     ("jcd", descriptors.jcd)):
        run(name, fn, standardized)
    run("extract_all", descriptors.extract_all, images)

    print("| stage | images | seconds | FPS |")
    print("|---|---|---|---|")
    for name, seconds in timings.items():
        rate = metrics.fps(len(images), seconds)
        print(f"| {name} | {len(images)} | {seconds:.3f} | {rate:.0f} |")
    return EXIT_OK


_COMMANDS = {
    "split": _cmd_split,
    "extract": _cmd_extract,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "fuse": _cmd_fuse,
    "evaluate": _cmd_evaluate,
    "bench": _cmd_bench,
}


if __name__ == "__main__":
    sys.exit(main())
