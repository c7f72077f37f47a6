"""``scenechar`` command line: denoise, hog, train, eval, synth.

Effective configuration = defaults <- ``--config`` file <- command-line flags.
Data goes to files; diagnostics go to stderr. Exit status is 0 on success,
1 on runtime errors and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from scenechar import __version__
from scenechar.classify import load_dictionary, save_dictionary
from scenechar.config import PipelineConfig, apply_overrides, dump_config, load_config
from scenechar.image import GrayImage, load_image, resize_bilinear, write_pgm
from scenechar.matrix_ops import norms, read_matrix, write_matrix
from scenechar.pipeline import (
    build_dictionary,
    evaluate,
    extract_features,
    read_manifest,
    write_descriptors,
)
from scenechar.rpca import rpca_decompose
from scenechar.synth import GLYPHS, NoiseSpec, synth_corpus

log = logging.getLogger("scenechar")

LAMBDA_SWEEP = (1e-3, 1e-2, 1e-1)
MATRIX_SUFFIXES = (".txt", ".mat", ".dat")


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value config file")
    p.add_argument("--workers", type=int, help="worker processes (results do not depend on this)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")
    p.add_argument("-v", "--verbose", action="store_true")


def _effective_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    over = {}
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    for flag, key in (("workers", "workers"), ("seed", "seed"), ("denoise", "denoise"),
                      ("classifier", "classifier"), ("lam", "src.lambda")):
        v = getattr(args, flag, None)
        if v is not None:
            over[key] = v
    return apply_overrides(cfg, over)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def cmd_denoise(args) -> int:
    cfg = _effective_config(args)
    src = Path(args.input)
    if not src.exists():
        raise FileNotFoundError(f"input not found: {src}")
    out_dir = Path(args.out_dir) if args.out_dir else src.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = args.prefix or src.stem
    is_matrix = src.suffix.lower() in MATRIX_SUFFIXES
    if is_matrix:
        x = read_matrix(src)
    else:
        x = np.asarray(resize_bilinear(load_image(src), cfg.side).pixels)
    res = rpca_decompose(x, cfg.rpca)
    low = res.low_rank if is_matrix else np.clip(res.low_rank, 0.0, 1.0)
    write_matrix(out_dir / f"{stem}_clean.txt", low)
    write_matrix(out_dir / f"{stem}_noise.txt", res.sparse)
    if not is_matrix:
        write_pgm(out_dir / f"{stem}_clean.pgm", low)
    if args.panel:
        # original | clean | noise shown around mid-gray
        panel = np.hstack([np.clip(x, 0, 1), np.clip(low, 0, 1), np.clip(0.5 + res.sparse, 0, 1)])
        write_pgm(out_dir / f"{stem}_panel.pgm", panel)
    nn = norms(res.sparse)
    _write_json(out_dir / f"{stem}_denoise.json", {
        "input": str(src),
        "config_fingerprint": cfg.fingerprint(),
        "iterations": res.iterations,
        "converged": res.converged,
        "residual": res.residual,
        "noise_l0_fraction": nn["l0"] / res.sparse.size,
    })
    return 0


def cmd_hog(args) -> int:
    cfg = _effective_config(args)
    if args.manifest:
        man = read_manifest(args.manifest)
        paths = [e.path for e in man.entries]
    else:
        paths = [Path(p) for p in args.inputs]
    if not paths:
        raise UsageError("hog needs input images or --manifest")
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"input not found: {p}")
    feats = extract_features(paths, cfg)
    write_descriptors(args.out, paths, feats, cfg)
    return 0


def cmd_train(args) -> int:
    cfg = _effective_config(args)
    man = read_manifest(args.manifest)
    d = build_dictionary(man, cfg)
    save_dictionary(args.out, d)
    if d.skipped:
        print(f"warning: skipped {len(d.skipped)} flat training images", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    cfg = _effective_config(args)
    man = read_manifest(args.manifest)
    d = load_dictionary(args.dictionary)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lams = LAMBDA_SWEEP if args.lambda_sweep else (cfg.src_lambda,)
    if args.lambda_sweep and cfg.classifier != "src":
        raise UsageError("--lambda-sweep applies to the src classifier only")
    for lam in lams:
        rep = evaluate(man, d, cfg, lam=lam)
        tag = f"_lambda{lam:g}" if args.lambda_sweep else ""
        rep.write(out / f"report{tag}.json", out / f"confusion{tag}.csv")
        print(f"{cfg.classifier} lambda={lam:g} accuracy={rep.accuracy:.4f}", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    cfg = _effective_config(args)
    if args.per_class < 2:
        raise UsageError(f"--per-class must be at least 2, got {args.per_class}")
    classes = tuple(args.classes)
    noise = NoiseSpec(args.sigma, args.salt_pepper)
    out = Path(args.out)
    manifest = synth_corpus(out, classes, args.per_class, noise, cfg.seed, args.test_per_class, cfg.side)
    _write_json(out / "synth.json", {
        "classes": "".join(classes),
        "per_class": args.per_class,
        "test_per_class": args.test_per_class if args.test_per_class is not None else args.per_class,
        "gaussian_sigma": args.sigma,
        "salt_pepper": args.salt_pepper,
        "seed": cfg.seed,
        "side": cfg.side,
        "config_fingerprint": cfg.fingerprint(),
    })
    print(str(manifest), file=sys.stderr)
    return 0


def cmd_config(args) -> int:
    sys.stdout.write(dump_config(_effective_config(args)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scenechar", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="low-rank + sparse split of a matrix text file or an image")
    p.add_argument("input")
    p.add_argument("--out-dir")
    p.add_argument("--prefix")
    p.add_argument("--panel", action="store_true", help="also write an original|clean|noise PGM")
    _common(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("hog", help="write HOG descriptors as CSV")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--denoise", choices=("on", "off"))
    _common(p)
    p.set_defaults(func=cmd_hog)

    p = sub.add_parser("train", help="build a dictionary from the train split")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--denoise", choices=("on", "off"))
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="classify the test split and write reports")
    p.add_argument("--manifest", required=True)
    p.add_argument("--dictionary", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--classifier", choices=("src", "nn"))
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--lambda-sweep", action="store_true", help=f"one report per lambda in {LAMBDA_SWEEP}")
    p.add_argument("--denoise", choices=("on", "off"))
    _common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="render a synthetic glyph corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", default="0123456789", help=f"glyphs to render, from {''.join(sorted(GLYPHS))}")
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--test-per-class", type=int)
    p.add_argument("--sigma", type=float, default=0.0, help="gaussian noise std")
    p.add_argument("--salt-pepper", type=float, default=0.0, help="salt-and-pepper fraction")
    _common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("config", help="print the effective config")
    _common(p)
    p.set_defaults(func=cmd_config)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        ap.print_usage(sys.stderr)
        print(f"scenechar {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"scenechar {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
