"""Hyper-parameter search: sampling, the convexity-ranked search, and plain random search.

The convexity-ranked search probes ``n1`` sampled configurations for a single
epoch, scores each by its maximum mini-batch convexity proxy, drops the ones
whose proxy is zero, and fully trains only the ``n2`` lowest-scoring
survivors.
"""
import json
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .convexity import ConvexityRecord, mu_max
from .data import Dataset, split
from .errors import AllDiscardedError
from .nn import Model, init_model, predict_proba, train


@dataclass(frozen=True)
class HyperSpace:
    """Inclusive ranges. Width and batch size are log2-uniform, learning rate log10-uniform."""

    depth: tuple = (1, 4)
    width: tuple = (16, 1024)
    batch_size: tuple = (4, 256)
    learning_rate: tuple = (1e-5, 1.0)

    def __post_init__(self):
        for name in ("depth", "width", "batch_size", "learning_rate"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name}: empty range ({lo}, {hi})")
        if min(self.width[0], self.batch_size[0], self.learning_rate[0]) <= 0 or self.depth[0] < 1:
            raise ValueError("log-sampled ranges must be strictly positive and depth >= 1")


@dataclass(frozen=True)
class HyperConfig:
    config_id: int
    depth: int
    width: int
    batch_size: int
    learning_rate: float

    def layer_dims(self, n_features, n_classes) -> list:
        return [n_features] + [self.width] * self.depth + [n_classes]

    def hyperparams(self) -> dict:
        return {"depth": self.depth, "width": self.width, "batch_size": self.batch_size, "learning_rate": self.learning_rate}


@dataclass
class ConfigRecord:
    config: HyperConfig
    convexity: Optional[ConvexityRecord] = None
    full_score: Optional[float] = None
    epochs_used: int = 0
    wall_ms: float = 0.0

    def to_json(self, timing=False) -> dict:
        d = {
            "config_id": self.config.config_id,
            "hyperparams": self.config.hyperparams(),
            "mu_max": None if self.convexity is None else _json_float(self.convexity.mu_max),
            "discarded": None if self.convexity is None else self.convexity.discarded,
            "full_score": self.full_score,
            "epochs_used": self.epochs_used,
        }
        if timing:
            d["wall_ms"] = round(self.wall_ms, 3)
        return d


@dataclass
class SearchResult:
    records: list
    best: HyperConfig
    best_score: float
    budget_epochs: int
    wall_seconds: float = 0.0
    best_model: Optional[Model] = field(default=None, repr=False)
    selected: list = field(default_factory=list)

    @property
    def n_full_runs(self) -> int:
        return sum(r.full_score is not None for r in self.records)

    def jsonl(self, timing=False) -> str:
        return "".join(json.dumps(r.to_json(timing), sort_keys=True) + "\n" for r in self.records)

    def summary(self) -> dict:
        return {
            "best_config_id": self.best.config_id,
            "best_hyperparams": self.best.hyperparams(),
            "best_score": self.best_score,
            "budget_epochs": self.budget_epochs,
            "full_runs": self.n_full_runs,
        }


def _json_float(x):
    return x if math.isfinite(x) else None


def config_seed(master_seed: int, config_id: int) -> int:
    """Per-config seed; independent of evaluation order."""
    return int(np.random.SeedSequence([master_seed, config_id]).generate_state(1)[0])


def _log_uniform_int(rng, lo, hi, base_log):
    v = base_log ** rng.uniform(math.log(lo, base_log), math.log(hi, base_log))
    return int(min(max(round(v), lo), hi))


def sample_configs(space: HyperSpace, n: int, seed: int) -> list:
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        depth = int(rng.integers(space.depth[0], space.depth[1] + 1))
        width = _log_uniform_int(rng, *space.width, 2)
        bs = _log_uniform_int(rng, *space.batch_size, 2)
        lo, hi = space.learning_rate
        lr = float(10 ** rng.uniform(math.log10(lo), math.log10(hi)))
        out.append(HyperConfig(i, depth, width, bs, min(max(lr, lo), hi)))
    return out


def lowest_k(scores: dict, k: int) -> list:
    """Ids of the ``k`` smallest scores, ties broken by ascending id."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return [cid for cid, _ in sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))[:k]]


def _full_run(cfg: HyperConfig, train_data, valid_data, seed, epochs, metric, init=None):
    mseed = config_seed(seed, cfg.config_id)
    model = init if init is not None else init_model(cfg.layer_dims(train_data.n, train_data.k), mseed)
    trained, hist = train(model, train_data, cfg, epochs, early_stop_on_fit=True, seed=mseed)
    s = metrics.score(metric, predict_proba(trained, valid_data.features), valid_data.labels)
    return trained, hist.epochs, s


def _argmax_record(records):
    scored = [r for r in records if r.full_score is not None]
    return max(scored, key=lambda r: (r.full_score, -r.config.config_id))


def ahsc(
    space: HyperSpace,
    data: Dataset,
    n1=50,
    n2=10,
    seed=0,
    epochs_full=50,
    metric="acc",
    valid_fraction=0.2,
    continue_from_probe=False,
    denominator="full",
) -> SearchResult:
    """Convexity-ranked search. The best config is chosen on a stratified validation split of ``data``.

    Full runs restart from the config's seed-derived initialization unless
    ``continue_from_probe`` is set, in which case they resume from the probe
    weights.
    """
    if not n1 >= n2 >= 1:
        raise ValueError("need n1 >= n2 >= 1")
    t0 = time.perf_counter()
    train_data, valid_data = split(data, valid_fraction, seed)
    configs = sample_configs(space, n1, seed)
    records = {}
    probes = {}
    for cfg in configs:
        t = time.perf_counter()
        mseed = config_seed(seed, cfg.config_id)
        model = init_model(cfg.layer_dims(train_data.n, train_data.k), mseed)
        probe, _ = train(model, train_data, cfg, 1, early_stop_on_fit=False, seed=mseed)
        rec = mu_max(probe, train_data, cfg.batch_size, config_id=cfg.config_id, denominator=denominator)
        records[cfg.config_id] = ConfigRecord(cfg, rec, epochs_used=1, wall_ms=1e3 * (time.perf_counter() - t))
        if continue_from_probe:
            probes[cfg.config_id] = probe
    kept = {cid: r.convexity.mu_max for cid, r in records.items() if not r.convexity.discarded}
    if not kept:
        raise AllDiscardedError(n1)
    selected = lowest_k(kept, n2)
    budget = n1
    models = {}
    for cid in selected:
        r = records[cid]
        t = time.perf_counter()
        init = probes.get(cid)
        models[cid], used, r.full_score = _full_run(r.config, train_data, valid_data, seed, epochs_full, metric, init)
        r.epochs_used += used
        r.wall_ms += 1e3 * (time.perf_counter() - t)
        budget += used
    ordered = [records[c.config_id] for c in configs]
    best = _argmax_record(ordered)
    return SearchResult(
        ordered, best.config, best.full_score, budget, time.perf_counter() - t0, models[best.config.config_id], selected
    )


def random_search(space: HyperSpace, data: Dataset, n=50, seed=0, epochs_full=50, metric="acc", valid_fraction=0.2) -> SearchResult:
    """Train every sampled config fully (early stop on fit) and keep the best on validation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    t0 = time.perf_counter()
    train_data, valid_data = split(data, valid_fraction, seed)
    configs = sample_configs(space, n, seed)
    records, models, budget = [], {}, 0
    for cfg in configs:
        t = time.perf_counter()
        models[cfg.config_id], used, s = _full_run(cfg, train_data, valid_data, seed, epochs_full, metric)
        records.append(ConfigRecord(cfg, None, s, used, 1e3 * (time.perf_counter() - t)))
        budget += used
    best = _argmax_record(records)
    return SearchResult(
        records, best.config, best.full_score, budget, time.perf_counter() - t0, models[best.config.config_id],
        [c.config_id for c in configs],
    )


def dump_records(result: SearchResult, path=None, timing=False) -> str:
    text = result.jsonl(timing)
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text

