"""Corpus ingestion, feature extraction, dictionary building and evaluation.

Every image, train or test, follows the same path::

    load_image -> resize_bilinear -> [denoise_image] -> hog_descriptor

Per-image work is farmed out to a process pool when ``workers > 1``; results
are always gathered in manifest order, so outputs do not depend on the
worker count.
"""
from __future__ import annotations

import csv
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from scenechar.classify import Dictionary, nn_classify, src_classify
from scenechar.config import PipelineConfig
from scenechar.hog import hog_descriptor
from scenechar.image import GrayImage, load_image, resize_bilinear
from scenechar.rpca import denoise_image, denoise_stack

log = logging.getLogger(__name__)

SPLITS = ("train", "test")


class ManifestError(ValueError):
    pass


class FingerprintMismatch(ValueError):
    def __init__(self, expected: dict, found: dict):
        self.expected, self.found = expected, found
        super().__init__(
            f"config fingerprint mismatch: dictionary has {json.dumps(found, sort_keys=True)}, "
            f"current config gives {json.dumps(expected, sort_keys=True)}"
        )


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    cls: str
    split: str


@dataclass(frozen=True)
class CorpusManifest:
    entries: tuple
    image_side: int = 32

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]

    def classes(self, split: Optional[str] = None) -> List[str]:
        es = self.entries if split is None else self.split(split)
        return list(dict.fromkeys(e.cls for e in es))


def read_manifest(path, image_side: int = 32) -> CorpusManifest:
    """Parse a ``path,class,split`` CSV. Relative paths resolve against the
    manifest's directory. Errors name the offending line."""
    path = Path(path)
    base = path.parent
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise ManifestError(f"cannot open manifest {path}: {exc}") from exc
    entries, seen = [], set()
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["path", "class", "split"]:
            raise ManifestError(f"{path}:1: header must be 'path,class,split', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ManifestError(f"{path}:{lineno}: expected 3 fields, got {len(row)}: {row}")
            p, c, s = (x.strip() for x in row)
            if not p or not c:
                raise ManifestError(f"{path}:{lineno}: empty path or class: {row}")
            if s not in SPLITS:
                raise ManifestError(f"{path}:{lineno}: split must be train or test, got {s!r}")
            full = Path(p) if Path(p).is_absolute() else base / p
            if full in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate path {p}")
            seen.add(full)
            entries.append(ManifestEntry(full, c, s))
    return CorpusManifest(tuple(entries), image_side)


def write_manifest(path, manifest: CorpusManifest) -> None:
    base = Path(path).parent.resolve()
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path", "class", "split"])
        for e in manifest.entries:
            p = e.path.resolve()
            try:
                p = p.relative_to(base)
            except ValueError:
                pass
            w.writerow([p.as_posix(), e.cls, e.split])


# -- feature extraction ------------------------------------------------------


def preprocess(path, cfg: PipelineConfig, label=None) -> GrayImage:
    return resize_bilinear(load_image(path, label=label), cfg.side)


def features(img: GrayImage, cfg: PipelineConfig) -> np.ndarray:
    if cfg.denoise:
        img, _ = denoise_image(img, cfg.rpca, side=cfg.side)
    return hog_descriptor(img, cfg.hog).values


def _extract_one(args):
    path, cfg = args
    return features(preprocess(path, cfg), cfg)


def _hog_one(args):
    img, cfg = args
    return hog_descriptor(img, cfg.hog).values


def _pmap(fn, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def extract_features(paths: Sequence, cfg: PipelineConfig, groups: Optional[Sequence] = None) -> List[np.ndarray]:
    """HOG vectors for ``paths`` in order.

    In ``stacked`` RPCA mode, images sharing a ``groups`` key are denoised
    jointly (all together when ``groups`` is None).
    """
    paths = list(paths)
    if not (cfg.denoise and cfg.rpca.mode == "stacked"):
        return _pmap(_extract_one, [(p, cfg) for p in paths], cfg.workers)
    imgs = _pmap(_preprocess_one, [(p, cfg) for p in paths], cfg.workers)
    keys = list(groups) if groups is not None else [None] * len(paths)
    clean: List[Optional[GrayImage]] = [None] * len(paths)
    for key in dict.fromkeys(keys):
        idx = [i for i, k in enumerate(keys) if k == key]
        for i, (c, _) in zip(idx, denoise_stack([imgs[i] for i in idx], cfg.rpca)):
            clean[i] = c
    return _pmap(_hog_one, [(c, cfg) for c in clean], cfg.workers)


def _preprocess_one(args):
    path, cfg = args
    return preprocess(path, cfg)


def build_dictionary(manifest: CorpusManifest, cfg: PipelineConfig = PipelineConfig()) -> Dictionary:
    """Dictionary from every train entry, columns in manifest order.

    Images whose descriptor is identically zero (flat images) are skipped
    with a warning; their paths are kept in ``Dictionary.skipped``.
    """
    train = manifest.split("train")
    if not train:
        raise ManifestError("manifest has no train entries")
    feats = extract_features([e.path for e in train], cfg, groups=[e.cls for e in train])
    cols, labels, skipped = [], [], []
    for e, f in zip(train, feats):
        if not np.any(f):
            log.warning("skipping %s: zero HOG descriptor (flat image)", e.path)
            skipped.append(str(e.path))
            continue
        cols.append(f)
        labels.append(e.cls)
    if not cols:
        raise ManifestError("no usable training images")
    class_ids = [c for c in manifest.classes("train") if c in set(labels)]
    for c in manifest.classes("train"):
        if c not in class_ids:
            log.warning("class %s lost all training images to the flat-image filter", c)
    return Dictionary.from_columns(
        np.array(cols).T,
        labels,
        class_ids,
        cfg.feature_fingerprints(),
        skipped=tuple(skipped),
        meta={"config_fingerprint": cfg.fingerprint()},
    )


# -- evaluation --------------------------------------------------------------


@dataclass
class EvalReport:
    accuracy: float
    per_class_accuracy: Dict[str, float]
    confusion: np.ndarray
    class_ids: List[str]
    classifier: str
    lam: Optional[float]
    config_fingerprint: str
    feature_fingerprints: Dict[str, str]
    per_sample: List[dict] = field(default_factory=list)
    skipped: List[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "per_class_accuracy": self.per_class_accuracy,
            "confusion": self.confusion.tolist(),
            "class_ids": self.class_ids,
            "classifier": self.classifier,
            "lambda": self.lam,
            "config_fingerprint": self.config_fingerprint,
            "feature_fingerprints": self.feature_fingerprints,
            "per_sample": self.per_sample,
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, json_path, confusion_path) -> None:
        Path(json_path).write_text(self.to_json())
        with Path(confusion_path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["truth\\predicted"] + self.class_ids)
            for c, row in zip(self.class_ids, self.confusion):
                w.writerow([c] + [int(v) for v in row])


_WORKER_DICT: Optional[Dictionary] = None


def _init_worker(d):
    global _WORKER_DICT
    _WORKER_DICT = d


def _classify_one(args):
    f, classifier, lam = args
    return _classify(_WORKER_DICT, f, classifier, lam)


def _classify(d: Dictionary, f, classifier: str, lam: float):
    if classifier == "nn":
        sims = d.atoms.T @ (f / np.linalg.norm(f))
        best = {}
        for lab, s in zip(d.labels, sims):
            best[lab] = max(best.get(lab, -np.inf), s)
        ranked = sorted(best.values(), reverse=True)
        margin = float(ranked[0] - ranked[1]) if len(ranked) > 1 else None
        return nn_classify(d, f), margin
    code = src_classify(d, f, lam)
    return code.predicted, (code.margin if len(d.class_ids) > 1 else None)


def evaluate(
    manifest: CorpusManifest,
    dictionary: Dictionary,
    cfg: PipelineConfig = PipelineConfig(),
    classifier: Optional[str] = None,
    lam: Optional[float] = None,
) -> EvalReport:
    """Classify every test entry and tabulate accuracy and confusion.

    Test entries whose class is absent from the dictionary are skipped and
    listed in ``EvalReport.skipped``.
    """
    classifier = classifier or cfg.classifier
    lam = cfg.src_lambda if lam is None else float(lam)
    expected = cfg.feature_fingerprints()
    if dictionary.fingerprints != expected:
        raise FingerprintMismatch(expected, dict(dictionary.fingerprints))
    known = set(dictionary.class_ids)
    test, skipped = [], []
    for e in manifest.split("test"):
        if e.cls in known:
            test.append(e)
        else:
            log.warning("skipping %s: class %s not in training set", e.path, e.cls)
            skipped.append(str(e.path))
    if not test:
        raise ManifestError("no test entries with a known class")

    feats = extract_features([e.path for e in test], cfg)
    kept = []
    for e, f in zip(test, feats):
        if np.any(f):
            kept.append((e, f))
        else:
            log.warning("skipping %s: zero HOG descriptor (flat image)", e.path)
            skipped.append(str(e.path))
    if not kept:
        raise ManifestError("every test image has a zero descriptor")
    test = [e for e, _ in kept]
    jobs = [(f, classifier, lam) for _, f in kept]
    if cfg.workers <= 1 or len(jobs) <= 1:
        results = [_classify(dictionary, *j) for j in jobs]
    else:
        chunk = max(1, len(jobs) // (4 * cfg.workers))
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker, initargs=(dictionary,)) as ex:
            results = list(ex.map(_classify_one, jobs, chunksize=chunk))

    ids = [str(c) for c in dictionary.class_ids]
    pos = {c: i for i, c in enumerate(dictionary.class_ids)}
    conf = np.zeros((len(ids), len(ids)), dtype=np.int64)
    per_sample = []
    for e, (pred, margin) in zip(test, results):
        conf[pos[e.cls], pos[pred]] += 1
        per_sample.append({"path": str(e.path), "truth": e.cls, "predicted": pred, "margin": margin})
    totals = conf.sum(axis=1)
    per_class = {c: float(conf[i, i] / totals[i]) for i, c in enumerate(ids) if totals[i] > 0}
    return EvalReport(
        accuracy=float(np.trace(conf) / conf.sum()),
        per_class_accuracy=per_class,
        confusion=conf,
        class_ids=ids,
        classifier=classifier,
        lam=lam if classifier == "src" else None,
        config_fingerprint=cfg.fingerprint(),
        feature_fingerprints=expected,
        per_sample=per_sample,
        skipped=skipped,
    )


def write_descriptors(path, paths: Sequence, feats: Sequence[np.ndarray], cfg: PipelineConfig) -> None:
    """Descriptor CSV: one comment line of layout metadata, a header, then
    ``path, v0, v1, ...`` per image."""
    n = len(feats[0]) if feats else cfg.hog.descriptor_length(cfg.side)
    _, nb = cfg.hog.geometry(cfg.side)
    meta = {
        "layout": [nb, nb, cfg.hog.block_size**2, cfg.hog.bins],
        "config_fingerprint": cfg.fingerprint(),
        "feature_fingerprints": cfg.feature_fingerprints(),
    }
    with Path(path).open("w", newline="") as fh:
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["path"] + [f"f{i}" for i in range(n)])
        for p, f in zip(paths, feats):
            w.writerow([str(p)] + [repr(float(v)) for v in f])
