"""Command-line driver: ``hahn train | eval | encode | sweep | render-filters``."""

import argparse
import csv
import os
import sys
import time
from pathlib import Path

from . import dataset
from .classifier import evaluate, per_class_accuracy
from .config import Config
from .persistence import export_features, load_bundle, save_bundle
from .pipeline import (
    bundle_features,
    child_seed,
    fit_classifier,
    online_accuracy,
    sweep,
    train_networks,
)
from .visualize import save_filter_grid


def _log(msg):
    print(msg, flush=True)


def _config(args):
    cfg = Config.from_file(getattr(args, "config", None), getattr(args, "set", None) or ())
    if getattr(args, "data_dir", None):
        cfg.set_override(f"data.dir={args.data_dir}")
    return cfg


def _data_dir(cfg):
    return cfg.get("data", "dir") or os.environ.get(dataset.DATA_DIR_ENV)


def _load(cfg):
    train, test = dataset.load_cifar10(_data_dir(cfg))
    seed = cfg.int("experiment", "seed")
    n_train = cfg.int("experiment", "train_images")
    n_test = cfg.int("experiment", "test_images")
    if 0 < n_train < len(train):
        train = dataset.subset(train, n_train, child_seed(seed, "subset.train"))
    if 0 < n_test < len(test):
        test = dataset.subset(test, n_test, child_seed(seed, "subset.test"))
    return train, test


def _out_dir(path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_train(args):
    cfg = _config(args)
    out = _out_dir(args.out)
    (out / "config.ini").write_text(cfg.dumps())
    seed = cfg.int("experiment", "seed")
    n_jobs = cfg.int("experiment", "n_jobs")

    t0 = time.perf_counter()
    train, test = _load(cfg)
    _log(f"loaded {len(train)} training / {len(test)} test images "
         f"in {time.perf_counter() - t0:.1f}s")

    snapshots = cfg.list("experiment", "snapshots", int)
    if snapshots and cfg.get("experiment", "mode") in ("single", "two_layer"):
        _log("online training snapshots (layer 1, held-out accuracy):")
        spec = cfg.layer_spec("layer1", train.images.shape[1])
        rows = online_accuracy(train, test, spec, snapshots, seed,
                               cfg.float("svm", "reg"), cfg.int("svm", "epochs"), n_jobs,
                               log=lambda m: _log("  " + m))
        with open(out / "snapshots.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["patches", "accuracy"])
            w.writerows(rows)

    bundle = train_networks(cfg, train.images, log=_log)
    bundle.provenance["train_images"] = len(train)
    bundle.provenance["dataset_sha256"] = train.checksum()

    t0 = time.perf_counter()
    F = bundle_features(bundle, train.images, n_jobs)
    _log(f"encoded training set ({F.shape[1]} features) in {time.perf_counter() - t0:.1f}s")
    t0 = time.perf_counter()
    bundle.classifier = fit_classifier(
        F, train.labels, cfg.float("svm", "reg"), cfg.int("svm", "epochs"),
        cfg.bool("svm", "tune"), child_seed(seed, "svm"),
    )
    _log(f"svm fitted in {time.perf_counter() - t0:.1f}s; "
         f"training accuracy {evaluate(bundle.classifier, F, train.labels):.4f}")
    save_bundle(bundle, out / "model.hahn")
    _log(f"wrote {out / 'model.hahn'}")
    return 0


def cmd_eval(args):
    cfg = _config(args)
    out = _out_dir(args.out)
    bundle = load_bundle(args.bundle)
    if bundle.classifier is None:
        raise SystemExit("bundle has no classifier; train one with `hahn train`")
    _, test = _load(cfg)
    G = bundle_features(bundle, test.images, cfg.int("experiment", "n_jobs"))
    acc = evaluate(bundle.classifier, G, test.labels)
    per_class = per_class_accuracy(bundle.classifier, G, test.labels)
    with open(out / "metrics.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["class", "accuracy"])
        for k, a in enumerate(per_class):
            w.writerow([k, f"{a:.6f}"])
        w.writerow(["all", f"{acc:.6f}"])
    _log(f"test accuracy {acc:.4f} on {len(test)} images")
    return 0


def cmd_encode(args):
    cfg = _config(args)
    bundle = load_bundle(args.bundle)
    train, test = _load(cfg)
    data = train if args.split == "train" else test
    F = bundle_features(bundle, data.images, cfg.int("experiment", "n_jobs"))
    export_features(F, data.labels, args.out)
    _log(f"wrote {F.shape[0]} x {F.shape[1]} features to {args.out}")
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    out = _out_dir(args.out)
    (out / "config.ini").write_text(cfg.dumps())
    train, test = _load(cfg)
    rows = sweep(cfg, train, test, log=_log)
    with open(out / "sweep.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["receptive_field", "neurons", "whiten", "accuracy"])
        for rf, m, wh, acc in rows:
            w.writerow([rf, m, str(wh).lower(), f"{acc:.6f}"])
    _log(f"wrote {len(rows)} rows to {out / 'sweep.csv'}")
    return 0


def cmd_render_filters(args):
    bundle = load_bundle(args.bundle)
    try:
        layer = bundle.resolutions[args.resolution][args.layer]
    except IndexError:
        raise SystemExit(f"bundle has no resolution {args.resolution} / layer {args.layer}")
    if layer.spec.channels not in (1, 3):
        raise SystemExit(f"cannot render {layer.spec.channels}-channel filters as an image")
    shape = save_filter_grid(layer, args.out, args.scale)
    _log(f"wrote {layer.state.m} filters as a {shape[1]}x{shape[0]} image to {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="hahn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="INI configuration file")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
        sp.add_argument("--data-dir", help=f"CIFAR-10 binary directory (default ${dataset.DATA_DIR_ENV})")

    sp = sub.add_parser("train", help="train networks and classifier, write model.hahn")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="test-set accuracy of a bundle, write metrics.csv")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("encode", help="export pooled features as CSV")
    common(sp)
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--split", choices=("train", "test"), default="test")
    sp.add_argument("--out", required=True, help="output CSV path")
    sp.set_defaults(func=cmd_encode)

    sp = sub.add_parser("sweep", help="accuracy grid over receptive field, neurons, whitening")
    common(sp)
    sp.add_argument("--out", required=True, help="output directory")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("render-filters", help="tile feed-forward weights into a PNG")
    sp.add_argument("--bundle", required=True)
    sp.add_argument("--out", required=True, help="output PNG path")
    sp.add_argument("--resolution", type=int, default=0)
    sp.add_argument("--layer", type=int, default=0)
    sp.add_argument("--scale", type=int, default=8)
    sp.set_defaults(func=cmd_render_filters)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
