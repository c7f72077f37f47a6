"""Pipeline configuration, the flat ``key = value`` config file, and config
fingerprints.

Config file keys (``#`` starts a comment, unknown keys are an error)::

    side              image side after resize              (32)
    denoise           on | off                             (on)
    classifier        src | nn                             (src)
    src.lambda        SRC l1 weight                        (0.01)
    workers           worker processes                     (1)
    seed              generator seed                       (0)
    rpca.lambda       auto | positive real                 (auto)
    rpca.mu0          auto | positive real                 (auto)
    rpca.rho          growth factor, > 1                   (1.5)
    rpca.mu_cap       penalty ceiling                      (1e5)
    rpca.tol          relative feasibility tolerance       (1e-7)
    rpca.max_iter     iteration limit                      (500)
    rpca.mode         per_image | stacked                  (per_image)
    hog.cell_size     pixels per cell side                 (8)
    hog.bins          orientation bins                     (9)
    hog.block_size    cells per block side                 (2)
    hog.block_stride  block step in cells                  (1)
    hog.signed        true | false                         (false)
    hog.norm_epsilon  block normalization epsilon          (1e-6)
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from scenechar.classify import DEFAULT_LAMBDA
from scenechar.hog import HogConfig
from scenechar.rpca import RpcaConfig


@dataclass(frozen=True)
class PipelineConfig:
    side: int = 32
    denoise: bool = True
    classifier: str = "src"
    src_lambda: float = DEFAULT_LAMBDA
    workers: int = 1
    seed: int = 0
    rpca: RpcaConfig = field(default_factory=RpcaConfig)
    hog: HogConfig = field(default_factory=HogConfig)

    def __post_init__(self):
        if int(self.side) < 1:
            raise ValueError("side must be positive")
        if self.classifier not in ("src", "nn"):
            raise ValueError(f"classifier must be 'src' or 'nn', got {self.classifier!r}")
        if not self.src_lambda > 0:
            raise ValueError("src.lambda must be positive")
        if int(self.workers) < 1:
            raise ValueError("workers must be >= 1")
        self.hog.geometry(self.side)

    def to_dict(self) -> dict:
        return asdict(self)

    def feature_fingerprints(self) -> dict:
        """Digests of everything that shapes a feature vector.

        A dictionary built under one set of fingerprints must not be used to
        classify features computed under another.
        """
        rpca = {"denoise": self.denoise, "side": self.side}
        if self.denoise:
            rpca["rpca"] = self.rpca.to_dict()
        return {"hog": digest({"side": self.side, "hog": self.hog.to_dict()}), "rpca": digest(rpca)}

    def fingerprint(self) -> str:
        """Digest of the effective config. ``workers`` is excluded: results
        must not depend on it."""
        d = self.to_dict()
        del d["workers"]
        return digest(d)


def digest(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {v!r}")


def _auto(v: str):
    return None if v.strip().lower() == "auto" else float(v)


_TOP = {
    "side": ("side", int),
    "denoise": ("denoise", _bool),
    "classifier": ("classifier", str),
    "src.lambda": ("src_lambda", float),
    "workers": ("workers", int),
    "seed": ("seed", int),
}
_RPCA = {
    "rpca.lambda": ("lam", _auto),
    "rpca.mu0": ("mu0", _auto),
    "rpca.rho": ("rho", float),
    "rpca.mu_cap": ("mu_cap", float),
    "rpca.tol": ("tol", float),
    "rpca.max_iter": ("max_iter", int),
    "rpca.mode": ("mode", str),
}
_HOG = {
    "hog.cell_size": ("cell_size", int),
    "hog.bins": ("bins", int),
    "hog.block_size": ("block_size", int),
    "hog.block_stride": ("block_stride", int),
    "hog.signed": ("signed", _bool),
    "hog.norm_epsilon": ("norm_epsilon", float),
}
KEYS = tuple(_TOP) + tuple(_RPCA) + tuple(_HOG)


def apply_overrides(base: PipelineConfig, values: dict) -> PipelineConfig:
    """Return ``base`` with string ``values`` keyed by config-file names applied."""
    top, rp, hg = {}, {}, {}
    for key, raw in values.items():
        for table, dest in ((_TOP, top), (_RPCA, rp), (_HOG, hg)):
            if key in table:
                name, conv = table[key]
                try:
                    dest[name] = conv(str(raw))
                except ValueError as exc:
                    raise ValueError(f"bad value for {key}: {exc}") from None
                break
        else:
            raise ValueError(f"unknown config key {key!r}")
    return replace(base, **top, rpca=replace(base.rpca, **rp), hog=replace(base.hog, **hg))


def load_config(path, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    path = Path(path)
    parser = configparser.ConfigParser(
        delimiters=("=",), comment_prefixes=("#",), inline_comment_prefixes=("#",), interpolation=None
    )
    parser.optionxform = str
    try:
        parser.read_string("[config]\n" + path.read_text(), source=str(path))
    except (OSError, configparser.Error) as exc:
        raise ValueError(f"cannot parse config {path}: {exc}") from exc
    return apply_overrides(base, dict(parser["config"]))


def dump_config(cfg: PipelineConfig) -> str:
    """Render ``cfg`` in config-file syntax (round-trips through load_config)."""
    r, h = cfg.rpca, cfg.hog
    fmt = lambda v: "auto" if v is None else repr(v)
    onoff = lambda b: "on" if b else "off"
    lines = [
        f"side = {cfg.side}",
        f"denoise = {onoff(cfg.denoise)}",
        f"classifier = {cfg.classifier}",
        f"src.lambda = {cfg.src_lambda!r}",
        f"workers = {cfg.workers}",
        f"seed = {cfg.seed}",
        f"rpca.lambda = {fmt(r.lam)}",
        f"rpca.mu0 = {fmt(r.mu0)}",
        f"rpca.rho = {r.rho!r}",
        f"rpca.mu_cap = {r.mu_cap!r}",
        f"rpca.tol = {r.tol!r}",
        f"rpca.max_iter = {r.max_iter}",
        f"rpca.mode = {r.mode}",
        f"hog.cell_size = {h.cell_size}",
        f"hog.bins = {h.bins}",
        f"hog.block_size = {h.block_size}",
        f"hog.block_stride = {h.block_stride}",
        f"hog.signed = {onoff(h.signed)}",
        f"hog.norm_epsilon = {h.norm_epsilon!r}",
    ]
    return "\n".join(lines) + "\n"
