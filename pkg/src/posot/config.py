"""Declarative experiment configuration (JSON, versioned, strict keys)."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

from .corpus import featurize, read_transcript
from .errors import ConfigError, ParseError
from .eval import BilingualData, FeatureTable, RegimeSpec, Settings, SynthCorpusSpec, SyntheticData
from .eval.regimes import OT_METHODS, REGIMES
from .models import CLASSIFIERS

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
TRANSCRIPT_SUFFIXES = {".conllu": "conllu", ".cha": "chat"}

_TOP_KEYS = {"version", "output_dir", "seeds", "baseline", "synthetic", "inputs", "segment_len",
             "settings", "regimes", "workers"}
_SETTINGS_KEYS = {"smote_k", "unilingual_folds", "classifier_params", "reg", "mu", "ot_max_iter",
                  "ot_tol", "k_oos", "cost_normalization", "autoencoder_hidden"}
_REGIME_KEYS = {"name", "regime", "classifiers", "include_aphasic_in_ot", "paired", "accent_mix",
                "train_fraction", "compare_to", "seeds"}
_POOL_KEYS = {"source": {"clinical", "ood", "ood_paired"}, "target": {"clinical", "ood"}}


@dataclass(frozen=True)
class ExperimentConfig:
    output_dir: Path
    seeds: tuple
    regimes: tuple
    settings: Settings
    synthetic: SynthCorpusSpec | None = None
    inputs: dict | None = None
    segment_len: int | None = 25
    baseline: str | None = None
    workers: int | None = None


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _unknown(d, allowed, where, problems):
    for k in sorted(set(d) - allowed):
        problems.append(f"{where}: unknown key {k!r}")


def _seed_list(v, where, problems):
    if not isinstance(v, list) or not v or not all(_is_int(s) for s in v):
        problems.append(f"{where}: seeds must be a nonempty list of integers")
        return None
    if len(set(v)) != len(v):
        problems.append(f"{where}: seeds contain duplicates")
        return None
    return tuple(sorted(v))


def _settings(d, problems):
    if not isinstance(d, dict):
        problems.append("settings: expected an object")
        return Settings()
    _unknown(d, _SETTINGS_KEYS, "settings", problems)
    kw = {k: v for k, v in d.items() if k in _SETTINGS_KEYS}
    for k in ("smote_k", "unilingual_folds", "ot_max_iter", "k_oos"):
        if k in kw and (not _is_int(kw[k]) or kw[k] < 1):
            problems.append(f"settings.{k}: expected a positive integer")
    if "unilingual_folds" in kw and _is_int(kw["unilingual_folds"]) and kw["unilingual_folds"] < 2:
        problems.append("settings.unilingual_folds: need at least 2 folds")
    for k in ("reg", "ot_tol"):
        if k in kw and (not _is_num(kw[k]) or kw[k] <= 0):
            problems.append(f"settings.{k}: expected a positive number")
    if "mu" in kw and (not _is_num(kw["mu"]) or kw["mu"] < 0):
        problems.append("settings.mu: expected a nonnegative number")
    if kw.get("cost_normalization") not in (None, "max", "mean", "median"):
        problems.append("settings.cost_normalization: expected null, max, mean or median")
    if "autoencoder_hidden" in kw:
        h = kw["autoencoder_hidden"]
        if not isinstance(h, list) or not h or not all(_is_int(x) and x > 0 for x in h):
            problems.append("settings.autoencoder_hidden: expected a list of positive integers")
        else:
            kw["autoencoder_hidden"] = tuple(h)
    cp = kw.get("classifier_params", {})
    if not isinstance(cp, dict) or not all(isinstance(v, dict) for v in cp.values()):
        problems.append("settings.classifier_params: expected an object of objects")
    else:
        for k in sorted(set(cp) - set(CLASSIFIERS)):
            problems.append(f"settings.classifier_params: unknown classifier {k!r}")
    try:
        return Settings(**kw)
    except TypeError as exc:
        problems.append(f"settings: {exc}")
        return Settings()


def _regimes(items, seeds, problems):
    if not isinstance(items, list) or not items:
        problems.append("regimes: expected a nonempty list")
        return ()
    out = []
    for i, d in enumerate(items):
        where = f"regimes[{i}]"
        if not isinstance(d, dict):
            problems.append(f"{where}: expected an object")
            continue
        _unknown(d, _REGIME_KEYS, where, problems)
        regime = d.get("regime")
        if regime not in REGIMES:
            problems.append(f"{where}: regime must be one of {', '.join(REGIMES)}")
            continue
        clfs = d.get("classifiers", ["SVM"])
        if not isinstance(clfs, list) or not clfs or any(c not in CLASSIFIERS for c in clfs):
            problems.append(f"{where}: classifiers must be a nonempty subset of {list(CLASSIFIERS)}")
            continue
        own = seeds
        if "seeds" in d:
            own = _seed_list(d["seeds"], where, problems)
            if own is None:
                continue
        mix = d.get("accent_mix")
        for c in clfs:
            try:
                out.append(RegimeSpec(
                    regime=regime, classifier=c,
                    include_aphasic_in_ot=bool(d.get("include_aphasic_in_ot", False)),
                    paired=bool(d.get("paired", False)),
                    accent_mix=tuple(mix) if isinstance(mix, list) else mix,
                    train_fraction=d.get("train_fraction", 1.0), seeds=own,
                    name=d.get("name"), compare_to=d.get("compare_to")))
            except (ValueError, TypeError) as exc:
                problems.append(f"{where}: {exc}")
                break
    keys = [(r.label, r.classifier) for r in out]
    for k in sorted({k for k in keys if keys.count(k) > 1}):
        problems.append(f"regimes: duplicate row {k[0]!r} for classifier {k[1]}")
    names = {r.label for r in out}
    for r in out:
        if r.compare_to is not None and r.compare_to not in names:
            problems.append(f"regimes: {r.label!r} compares to unknown row {r.compare_to!r}")
    return tuple(dict.fromkeys(out))


def _inputs(d, base, problems):
    if not isinstance(d, dict):
        problems.append("inputs: expected an object")
        return None
    _unknown(d, set(_POOL_KEYS), "inputs", problems)
    out = {}
    for lang, keys in _POOL_KEYS.items():
        pools = d.get(lang)
        if not isinstance(pools, dict):
            problems.append(f"inputs.{lang}: expected an object")
            continue
        _unknown(pools, keys, f"inputs.{lang}", problems)
        for key in sorted(keys):
            if key not in pools:
                if key != "ood_paired":
                    problems.append(f"inputs.{lang}.{key}: missing")
                continue
            p = base / pools[key] if isinstance(pools[key], str) else None
            if p is None:
                problems.append(f"inputs.{lang}.{key}: expected a path string")
            elif not p.exists():
                problems.append(f"inputs.{lang}.{key}: path does not exist: {p}")
            else:
                out[f"{lang}_{key}"] = p
    return out


def parse_config(raw, base_dir="."):
    """Validate a decoded config document; every problem is reported at once."""
    base = Path(base_dir)
    problems = []
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    _unknown(raw, _TOP_KEYS, "config", problems)
    if raw.get("version") != CONFIG_VERSION:
        problems.append(f"version: expected {CONFIG_VERSION}, got {raw.get('version')!r}")
    out_dir = raw.get("output_dir", "results")
    if not isinstance(out_dir, str):
        problems.append("output_dir: expected a path string")
        out_dir = "results"
    seeds = _seed_list(raw.get("seeds", [0, 1, 2, 3, 4]), "config", problems) or (0,)
    settings = _settings(raw.get("settings", {}), problems)
    regimes = _regimes(raw.get("regimes"), seeds, problems)

    synthetic = inputs = None
    if ("synthetic" in raw) == ("inputs" in raw):
        problems.append("exactly one of 'synthetic' and 'inputs' must be given")
    elif "synthetic" in raw:
        try:
            if not isinstance(raw["synthetic"], dict):
                raise ValueError("expected an object")
            synthetic = SynthCorpusSpec.from_dict(raw["synthetic"])
        except (ValueError, TypeError) as exc:
            problems.append(f"synthetic: {exc}")
    else:
        inputs = _inputs(raw["inputs"], base, problems)

    seg = raw.get("segment_len", 25)
    if seg is not None and (not _is_int(seg) or seg < 1):
        problems.append("segment_len: expected a positive integer or null")
    workers = raw.get("workers")
    if workers is not None and (not _is_int(workers) or workers < 1):
        problems.append("workers: expected a positive integer")
    baseline = raw.get("baseline")
    if baseline is not None and baseline not in {r.label for r in regimes}:
        problems.append(f"baseline: no regime row named {baseline!r}")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(base / out_dir, seeds, regimes, settings, synthetic, inputs, seg,
                            baseline, workers)


def load_config(path):
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    return parse_config(raw, path.parent)


def transcript_files(path):
    path = Path(path)
    if path.is_file():
        return [path]
    return sorted(p for p in path.rglob("*") if p.suffix in TRANSCRIPT_SUFFIXES and p.is_file())


def featurize_paths(paths, fmt=None, segment_len=25, speaker="PAR"):
    """Feature samples for every transcript under ``paths`` (files or directories)."""
    samples = []
    for root in paths:
        for f in transcript_files(root):
            kind = fmt or TRANSCRIPT_SUFFIXES.get(f.suffix, "conllu")
            samples.extend(featurize(read_transcript(f, kind, speaker=speaker), segment_len))
    return samples


def load_table(path, segment_len=25):
    """A feature CSV, or a transcript directory featurized on the fly."""
    path = Path(path)
    if path.is_dir():
        samples = featurize_paths([path], segment_len=segment_len)
        if not samples:
            raise ParseError("no samples", source=str(path))
        return FeatureTable.from_samples(samples)
    return FeatureTable.read_csv(path)


def load_data(cfg):
    """The data object regimes draw from: a per-seed synthetic corpus or fixed tables."""
    if cfg.synthetic is not None:
        return SyntheticData(cfg.synthetic)
    t = {k: load_table(p, cfg.segment_len) for k, p in cfg.inputs.items()}
    return BilingualData(t["source_clinical"], t["source_ood"], t["target_clinical"],
                         t["target_ood"], t.get("source_ood_paired"))


def needs_paired(cfg):
    return any(r.paired for r in cfg.regimes if r.regime in OT_METHODS)
