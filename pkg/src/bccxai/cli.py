"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 I/O error. Errors are printed to
stderr as a JSON object. Each run writes ``manifest.json`` into the output
directory with the resolved options, input digests and a timestamp; no other
artifact carries a timestamp, so reruns produce identical files.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from . import formats
from .augment import AugmentConfig, augment
from .consensus import EmConfig, infer_sr
from .errors import BccXaiError, SchemaError, ValidationError
from .folds import fold_balance_report, stratified_kfold
from .metrics import evaluate
from .reports import (
    plot_densities,
    plot_saliency_summary,
    render_balance_table,
    render_metrics_table,
    render_saliency_table,
)
from .rules import explain
from .saliency import SaliencyPair, batch_saliency, bin_centers
from .simulate import simulate

log = logging.getLogger("bccxai")

IMAGE_SUFFIXES = {".png", ".bmp", ".tif", ".tiff"}


def _pkg_version():
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.inputs: list[Path] = []
        self.outputs: list[Path] = []

    def input(self, path) -> Path:
        path = Path(path)
        self.inputs.append(path)
        return path

    def output(self, name) -> Path:
        path = self.out / name
        self.outputs.append(path)
        return path

    def write_manifest(self):
        opts = {
            k: (str(v) if isinstance(v, Path) else v)
            for k, v in sorted(vars(self.args).items())
            if k not in ("func",)
        }
        manifest = {
            "command": self.args.command,
            "version": _pkg_version(),
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "options": opts,
            "inputs": {str(p): formats.sha256_file(p) for p in self.inputs if p.is_file()},
            "outputs": sorted(str(p.relative_to(self.out)) for p in self.outputs),
        }
        formats.write_json(self.out / "manifest.json", manifest)


# commands ------------------------------------------------------------------

def cmd_simulate(args, run: Run):
    sim = simulate(
        n_raters=args.raters,
        n_images=args.images,
        sensitivity=tuple(args.sensitivity),
        specificity=tuple(args.specificity),
        prior=tuple(args.prior),
        seed=args.seed,
        missing_rate=args.missing_rate,
    )
    formats.write_annotations(run.output("annotations.csv"), sim.dataset)
    formats.write_labels(run.output("truth.csv"), sim.truth, with_diagnosis=True)
    formats.write_json(run.output("planted.json"), sim.planted_dict())
    log.info("simulated %d records", len(sim.dataset))


def cmd_consensus(args, run: Run):
    ds = formats.read_annotations(run.input(args.annotations))
    cfg = EmConfig(max_iters=args.max_iters, tol=args.tol, smoothing=args.smoothing, seed=args.seed)
    result = infer_sr(ds, cfg)
    if not result.converged:
        log.warning("EM stopped at max_iters=%d before converging", cfg.max_iters)
    formats.write_json(run.output("consensus.json"), result.to_dict())
    formats.write_labels(run.output("sr.csv"), result.hard_labels, with_diagnosis=True)


def cmd_split(args, run: Run):
    labels = formats.read_labels(run.input(args.labels))
    fa = stratified_kfold(labels, k=args.k, seed=args.seed)
    formats.write_folds(run.output("folds.csv"), fa.assignment)
    balance = fold_balance_report(fa, labels)
    formats.write_json(run.output("balance.json"), balance)
    run.output("balance.md").write_text(render_balance_table(balance), encoding="utf-8")


def cmd_metrics(args, run: Run):
    pred = formats.read_labels(run.input(args.pred))
    sr = formats.read_labels(run.input(args.sr))
    folds = formats.read_folds(run.input(args.folds))
    report = evaluate(pred, sr, folds)
    formats.write_json(run.output("metrics.json"), report.to_dict())
    run.output("table.md").write_text(render_metrics_table(report.table_cells()), encoding="utf-8")


def cmd_saliency(args, run: Run):
    if args.bins < 2:
        raise ValidationError("bins must be >= 2", bins=args.bins)
    rows = formats.read_manifest(run.input(args.manifest))
    pairs = [SaliencyPair(r["image_id"], r["heatmap_path"], r["mask_path"], r["correct"]) for r in rows]

    def loader(pair):
        hm = formats.load_gray(run.input(pair.heatmap))
        return hm, formats.load_mask(run.input(pair.mask), shape=hm.shape)

    report = batch_saliency(pairs, bins=args.bins, threshold=args.threshold, loader=loader)
    for w in report.warnings:
        log.warning(w)
    formats.write_json(run.output("saliency.json"), report.to_dict())
    run.output("table.md").write_text(render_saliency_table(report.groups), encoding="utf-8")
    centers = bin_centers(args.bins)
    for img, st in sorted(report.pairs.items()):
        rows = ([f"{c:.10g}", repr(float(f)), repr(float(b))] for c, f, b in zip(centers, st.pdf_fg, st.pdf_bg))
        formats.write_rows(run.output(f"densities/{img}.csv"), ("bin_center", "pdf_fg", "pdf_bg"), rows)
        if args.figures:
            plot_densities(st.pdf_fg, st.pdf_bg, run.output(f"figures/{img}.png"), title=img)
    if args.figures:
        plot_saliency_summary(report, run.output("figures/summary.png"))


def cmd_explain(args, run: Run):
    labels = formats.read_labels(run.input(args.labels))
    path = run.output("explanations.jsonl")
    with open(path, "w", encoding="utf-8") as fh:
        for img in sorted(labels):
            fh.write(json.dumps({"image_id": img, **explain(labels[img]).to_dict()}) + "\n")


def cmd_augment(args, run: Run):
    cfg = AugmentConfig(
        seed=args.seed,
        rotation_max_deg=args.rotation_max_deg,
        perspective_distortion=args.perspective_distortion,
        blur_sigma_range=tuple(args.blur_sigma),
        p_rotation=args.p_rotation,
        p_perspective=args.p_perspective,
        p_blur=args.p_blur,
    )
    src = Path(args.input_dir)
    if not src.is_dir():
        raise FileNotFoundError(f"no such directory: {src}")
    files = sorted(p for p in src.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES)
    for i, path in enumerate(files):
        img = formats.load_rgb(run.input(path))
        for n in range(args.copies):
            out = augment(img, cfg, index=i * args.copies + n)
            formats.save_image(run.output(f"{path.stem}_aug{n}.png"), out)


# parsing -------------------------------------------------------------------

def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="seed for every random draw (default: 0)")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="output directory (default: .)")
    p.add_argument("--config", type=Path, help="key = value file; flags override its values")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="bccxai", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common()
    subs = {}

    def add(name, func, help):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        sp.set_defaults(func=func)
        subs[name] = sp
        return sp

    sp = add("simulate", cmd_simulate, "generate a multi-rater annotation set with planted rater accuracy")
    sp.add_argument("--raters", type=int, default=5)
    sp.add_argument("--images", type=int, default=500)
    sp.add_argument("--sensitivity", type=float, nargs=2, default=[0.7, 0.95], metavar=("LO", "HI"))
    sp.add_argument("--specificity", type=float, nargs=2, default=[0.7, 0.95], metavar=("LO", "HI"))
    sp.add_argument("--prior", type=float, nargs=2, default=[0.1, 0.5], metavar=("LO", "HI"))
    sp.add_argument("--missing-rate", type=float, default=0.0)

    sp = add("consensus", cmd_consensus, "infer the standard reference from rater annotations by EM")
    sp.add_argument("annotations", type=Path, help="CSV: image_id,rater_id,pn,u,on,mg,ml,sw,at")
    sp.add_argument("--max-iters", type=int, default=100)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--smoothing", type=float, default=0.01)

    sp = add("split", cmd_split, "multilabel stratified k-fold assignment")
    sp.add_argument("labels", type=Path, help="CSV: image_id,pn,u,on,mg,ml,sw,at")
    sp.add_argument("--k", type=int, default=5)

    sp = add("metrics", cmd_metrics, "binary, per-pattern and clinical-group metrics per fold")
    sp.add_argument("pred", type=Path)
    sp.add_argument("sr", type=Path)
    sp.add_argument("folds", type=Path)

    sp = add("saliency", cmd_saliency, "Grad-CAM versus expert mask agreement statistics")
    sp.add_argument("manifest", type=Path, help="CSV: image_id,heatmap_path,mask_path,correct")
    sp.add_argument("--bins", type=int, default=64)
    sp.add_argument("--threshold", type=float, default=0.5, help="dice/jaccard binarization threshold")
    sp.add_argument("--figures", action="store_true", help="also render PNG density plots")

    sp = add("explain", cmd_explain, "per-image diagnosis, clinical group and present patterns")
    sp.add_argument("labels", type=Path)

    sp = add("augment", cmd_augment, "write seeded augmented copies of every image in a folder")
    sp.add_argument("input_dir", type=Path)
    sp.add_argument("--copies", type=int, default=1)
    sp.add_argument("--rotation-max-deg", type=float, default=180.0)
    sp.add_argument("--perspective-distortion", type=float, default=0.3)
    sp.add_argument("--blur-sigma", type=float, nargs=2, default=[0.5, 1.5], metavar=("LO", "HI"))
    sp.add_argument("--p-rotation", type=float, default=0.5)
    sp.add_argument("--p-perspective", type=float, default=0.5)
    sp.add_argument("--p-blur", type=float, default=0.5)
    return parser, subs


_BOOL = {"1": True, "true": True, "yes": True, "on": True, "0": False, "false": False, "no": False, "off": False}


def read_config(path, sub: argparse.ArgumentParser) -> dict:
    """Parse a ``key = value`` file into typed defaults for ``sub``."""
    cp = configparser.ConfigParser(interpolation=None)
    with open(path, encoding="utf-8") as fh:
        cp.read_string("[config]\n" + fh.read())
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    out = {}
    for key, raw in cp["config"].items():
        dest = key.strip().replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            raise SchemaError(f"{path}: unknown option {key!r}", key=key)
        act = actions[dest]
        if isinstance(act, argparse._StoreTrueAction):
            if raw.strip().lower() not in _BOOL:
                raise SchemaError(f"{path}: {key} must be a boolean", key=key, value=raw)
            out[dest] = _BOOL[raw.strip().lower()]
            continue
        conv = act.type or str
        try:
            if act.nargs == 2:
                parts = raw.replace(",", " ").split()
                if len(parts) != 2:
                    raise ValueError(raw)
                out[dest] = [conv(x) for x in parts]
            else:
                out[dest] = conv(raw.strip())
        except ValueError:
            raise SchemaError(f"{path}: bad value for {key}: {raw!r}", key=key, value=raw) from None
    return out


def _fail(exc, code):
    payload = exc.to_dict() if isinstance(exc, BccXaiError) else {"error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    try:
        if args.config:
            subs[args.command].set_defaults(**read_config(args.config, subs[args.command]))
            args = parser.parse_args(argv)
        logging.basicConfig(
            level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)],
            format="%(levelname)s %(name)s: %(message)s",
        )
        run = Run(args)
        args.func(args, run)
        run.write_manifest()
    except ValidationError as exc:
        return _fail(exc, 1)
    except (OSError, UnicodeDecodeError) as exc:
        return _fail(exc, 2)
    except (BccXaiError, ValueError, configparser.Error) as exc:
        return _fail(exc, 1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
