"""Least-squares adaptation experiments on linear-Gaussian domains.

Each cell ``(param, sample size, replication)`` draws fresh training sets
from seeds derived from ``(seed, param, n, replication)``, fits by weighted
least squares and records the gap between the training objective and the
risk on a held-out target test set (squared loss, unclipped).
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from ._parallel import ordered_map
from ._seeding import check_seed, derive_seed
from .config import Config
from .domains import BetaMode, Dataset, LinearGaussianDomainSpec, draw_beta, sample_linear_gaussian
from .exceptions import ConfigurationError, InvalidInputError
from .hypotheses import (
    LossFunction,
    MixCoefficient,
    SimplexWeights,
    combined_empirical_risk,
    empirical_risk,
    fit_combined_least_squares,
    fit_weighted_least_squares,
    weighted_empirical_risk,
)

__all__ = [
    "ExperimentKind",
    "ExperimentConfig",
    "ExperimentRow",
    "ExperimentResult",
    "default_multi_source_config",
    "default_combined_config",
    "run_multi_source",
    "run_combined",
    "run_experiment",
    "emit_csv",
    "parse_csv",
    "read_csv",
    "config_from_kv",
    "CONFIG_KEYS",
]

SQUARED = LossFunction("squared")


class ExperimentKind(str, enum.Enum):
    MULTI_SOURCE = "multi_source"
    COMBINED = "combined"


@dataclass(frozen=True)
class ExperimentConfig:
    """Experiment description.

    ``sources`` holds ``S_1..S_K`` for the multi-source run and the single
    ``S`` for the combined run.  In the multi-source run every source gets
    ``n`` samples at sample-size point ``n``; with two sources a grid value
    ``w`` means weights ``(w, 1 - w)``.  In the combined run ``n`` is ``N_S``
    and ``target_train_size`` target rows join the training data.

    ``share_beta`` draws one coefficient vector per replication and uses it
    for every domain (requires ``beta_mode=fixed`` on all specs).
    """

    experiment: ExperimentKind
    target: LinearGaussianDomainSpec
    sources: tuple
    grid: tuple
    n_start: int
    n_step: int
    n_max: int
    repeats: int
    seed: int = 0
    test_set_size: int = 4000
    target_train_size: int = 100
    fixed_test_set: bool = False
    share_beta: bool = True

    def __post_init__(self):
        try:
            object.__setattr__(self, "experiment", ExperimentKind(self.experiment))
        except ValueError as exc:
            raise ConfigurationError(f"unknown experiment {self.experiment!r}") from exc
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        for name in ("n_start", "n_step", "n_max", "repeats", "test_set_size", "target_train_size"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or v < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {v!r}")
        if self.n_max < self.n_start:
            raise ConfigurationError("n_max must be >= n_start")
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigurationError(str(exc)) from exc
        if not self.grid:
            raise ConfigurationError("grid must be nonempty")
        specs = (self.target, *self.sources)
        if len({s.input_dim for s in specs}) != 1:
            raise ConfigurationError("all domains must share input_dim")
        if self.share_beta and any(s.beta_mode is not BetaMode.FIXED for s in specs):
            raise ConfigurationError("share_beta requires beta_mode=fixed")
        if self.experiment is ExperimentKind.MULTI_SOURCE:
            if len(self.sources) not in (1, 2):
                raise ConfigurationError("the multi-source run takes one or two sources")
            for g in self.grid:
                self.weights_for(g)
        else:
            if len(self.sources) != 1:
                raise ConfigurationError("the combined run takes exactly one source")
            for g in self.grid:
                MixCoefficient(g)

    def weights_for(self, g: float) -> SimplexWeights:
        if len(self.sources) == 1:
            if g != 1.0:
                raise ConfigurationError("with one source the only weight is 1")
            return SimplexWeights([1.0])
        return SimplexWeights([g, 1.0 - g])

    @property
    def sample_sizes(self) -> list[int]:
        return list(range(self.n_start, self.n_max + 1, self.n_step))

    def n_total(self, n: int) -> int:
        if self.experiment is ExperimentKind.MULTI_SOURCE:
            return n * len(self.sources)
        return n + self.target_train_size


def default_multi_source_config(**overrides) -> ExperimentConfig:
    """Two sources ``N(0.5, 1)`` and ``N(2, 5)``, target ``N(0, 1)``, 100 inputs."""
    base = LinearGaussianDomainSpec(beta_mode=BetaMode.FIXED)
    cfg = ExperimentConfig(
        experiment=ExperimentKind.MULTI_SOURCE,
        target=base,
        sources=(replace(base, x_mean=0.5, x_std=1.0), replace(base, x_mean=2.0, x_std=5.0)),
        grid=(0.1, 0.3, 0.5, 0.9),
        n_start=200,
        n_step=200,
        n_max=2000,
        repeats=30,
        test_set_size=4000,
    )
    return replace(cfg, **overrides)


def default_combined_config(**overrides) -> ExperimentConfig:
    """Source ``N(1, 2)``, target ``N(0, 1)``; 100 target rows train, 3900 test."""
    base = LinearGaussianDomainSpec(beta_mode=BetaMode.FIXED)
    cfg = ExperimentConfig(
        experiment=ExperimentKind.COMBINED,
        target=base,
        sources=(replace(base, x_mean=1.0, x_std=2.0),),
        grid=(0.1, 0.3, 0.5, 0.9),
        n_start=200,
        n_step=200,
        n_max=4000,
        repeats=100,
        test_set_size=3900,
        target_train_size=100,
    )
    return replace(cfg, **overrides)


@dataclass(frozen=True)
class ExperimentRow:
    param: float
    n_total: int
    mean_gap: float
    std_gap: float
    repeats: int


@dataclass(frozen=True)
class ExperimentResult:
    rows: tuple
    raw_gaps: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        rows = tuple(sorted(self.rows, key=lambda r: (r.param, r.n_total)))
        object.__setattr__(self, "rows", rows)

    def curve(self, param: float) -> list[ExperimentRow]:
        return [r for r in self.rows if r.param == param]

    @property
    def params(self) -> list[float]:
        return sorted({r.param for r in self.rows})


def _beta(cfg: ExperimentConfig, rep: int):
    if not cfg.share_beta:
        return None
    return draw_beta(cfg.target, derive_seed(cfg.seed, "beta", rep))


def _test_set(cfg: ExperimentConfig, rep: int, beta) -> Dataset:
    key = ("test",) if cfg.fixed_test_set else ("test", rep)
    return sample_linear_gaussian(cfg.target, cfg.test_set_size, derive_seed(cfg.seed, *key), beta=beta,
                                  domain_tag="target-test")


def _draw(spec, n, seed, beta, tag) -> Dataset:
    return sample_linear_gaussian(spec, n, seed, beta=beta, domain_tag=tag)


def _multi_cell(cfg: ExperimentConfig, g: float, n: int, rep: int, beta, test: Dataset) -> float:
    w = cfg.weights_for(g)
    sources = [
        _draw(spec, n, derive_seed(cfg.seed, g, n, rep, k), beta, f"source{k + 1}")
        for k, spec in enumerate(cfg.sources)
    ]
    model = fit_weighted_least_squares(sources, w)
    return abs(weighted_empirical_risk(model, sources, w, SQUARED) - empirical_risk(model, test, SQUARED))


def _combined_cell(cfg: ExperimentConfig, g: float, n: int, rep: int, beta, test: Dataset) -> float:
    source = _draw(cfg.sources[0], n, derive_seed(cfg.seed, g, n, rep, 0), beta, "source")
    target = _draw(cfg.target, cfg.target_train_size, derive_seed(cfg.seed, g, n, rep, "target"), beta, "target")
    model = fit_combined_least_squares(source, target, g)
    return abs(combined_empirical_risk(model, source, target, g, SQUARED) - empirical_risk(model, test, SQUARED))


def _run(cfg: ExperimentConfig, cell, n_jobs: int) -> ExperimentResult:
    def replication(rep: int) -> list[float]:
        beta = _beta(cfg, rep)
        test = _test_set(cfg, rep, beta)
        return [cell(cfg, g, n, rep, beta, test) for g in cfg.grid for n in cfg.sample_sizes]

    per_rep = np.array(ordered_map(replication, range(cfg.repeats), n_jobs))  # (repeats, cells)
    rows, raw = [], {}
    cells = [(g, n) for g in cfg.grid for n in cfg.sample_sizes]
    for j, (g, n) in enumerate(cells):
        gaps = per_rep[:, j]
        std = float(gaps.std(ddof=1)) if cfg.repeats > 1 else 0.0
        rows.append(ExperimentRow(g, cfg.n_total(n), float(gaps.mean()), std, cfg.repeats))
        raw[(g, cfg.n_total(n))] = gaps
    return ExperimentResult(tuple(rows), raw)


def run_multi_source(cfg: ExperimentConfig, *, n_jobs: int = 1) -> ExperimentResult:
    if cfg.experiment is not ExperimentKind.MULTI_SOURCE:
        raise ConfigurationError("run_multi_source needs experiment=multi_source")
    return _run(cfg, _multi_cell, n_jobs)


def run_combined(cfg: ExperimentConfig, *, n_jobs: int = 1) -> ExperimentResult:
    if cfg.experiment is not ExperimentKind.COMBINED:
        raise ConfigurationError("run_combined needs experiment=combined")
    return _run(cfg, _combined_cell, n_jobs)


def run_experiment(cfg: ExperimentConfig, *, n_jobs: int = 1) -> ExperimentResult:
    if cfg.experiment is ExperimentKind.MULTI_SOURCE:
        return run_multi_source(cfg, n_jobs=n_jobs)
    return run_combined(cfg, n_jobs=n_jobs)


CSV_HEADER = ["param", "n_total", "mean_gap", "std_gap", "repeats"]


def emit_csv(result: ExperimentResult, path=None) -> str:
    """Write ``param,n_total,mean_gap,std_gap,repeats`` rows sorted by ``(param, n_total)``.

    Returns the CSV text; writes it to ``path`` when given.
    """
    if not result.rows:
        raise InvalidInputError("empty experiment result")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in sorted(result.rows, key=lambda r: (r.param, r.n_total)):
        w.writerow([format(r.param, ".17g"), r.n_total, format(r.mean_gap, ".17g"), format(r.std_gap, ".17g"), r.repeats])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def parse_csv(text: str) -> ExperimentResult:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_HEADER:
        raise InvalidInputError("experiment CSV must start with " + ",".join(CSV_HEADER))
    try:
        out = [ExperimentRow(float(p), int(n), float(m), float(s), int(r)) for p, n, m, s, r in rows[1:]]
    except ValueError as exc:
        raise InvalidInputError(f"malformed experiment CSV row: {exc}") from exc
    return ExperimentResult(tuple(out))


def read_csv(path) -> ExperimentResult:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- config files

_DOMAIN_FIELDS = ("x_mean", "x_std")
_SHARED_FIELDS = ("input_dim", "beta_mean", "beta_std", "noise_std", "beta_mode")
CONFIG_KEYS = (
    "experiment", "grid", "n_start", "n_step", "n_max", "repeats", "seed", "test_set_size",
    "target_train_size", "fixed_test_set", "share_beta", "n_sources",
    *_SHARED_FIELDS,
    *(f"target_{f}" for f in _DOMAIN_FIELDS),
    *(f"source_{f}" for f in _DOMAIN_FIELDS),
    *(f"source{k}_{f}" for k in (1, 2) for f in _DOMAIN_FIELDS),
)


def config_from_kv(conf: Config, *, extra_keys: Sequence[str] = ()) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from flat keys on top of the defaults.

    ``experiment`` selects the defaults (``multi_source`` or ``combined``);
    any other key overrides one field.  Domain keys are ``target_x_mean``,
    ``source1_x_std`` (multi) or ``source_x_mean`` (combined), etc.
    """
    conf.check_keys((*CONFIG_KEYS, *extra_keys))
    try:
        kind = ExperimentKind(conf.get_str("experiment"))
    except ValueError as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{conf.source}: unknown experiment {conf.get_str('experiment')!r}") from exc
    cfg = default_multi_source_config() if kind is ExperimentKind.MULTI_SOURCE else default_combined_config()
    shared = {}
    if "input_dim" in conf:
        shared["input_dim"] = conf.get_int("input_dim")
    for f in ("beta_mean", "beta_std", "noise_std"):
        if f in conf:
            shared[f] = conf.get_float(f)
    if "beta_mode" in conf:
        shared["beta_mode"] = conf.get_str("beta_mode")

    def domain(spec, prefix):
        over = dict(shared)
        for f in _DOMAIN_FIELDS:
            if f"{prefix}_{f}" in conf:
                over[f] = conf.get_float(f"{prefix}_{f}")
        return replace(spec, **over)

    target = domain(cfg.target, "target")
    if kind is ExperimentKind.MULTI_SOURCE:
        n_src = conf.get_int("n_sources", 2)
        if n_src not in (1, 2):
            raise ConfigurationError(f"{conf.source}: n_sources must be 1 or 2")
        sources = tuple(domain(cfg.sources[k], f"source{k + 1}") for k in range(n_src))
        for key in (f"source_{f}" for f in _DOMAIN_FIELDS):
            if key in conf:
                raise ConfigurationError(f"{conf.source}: key '{key}' applies to the combined experiment only")
    else:
        if "n_sources" in conf:
            raise ConfigurationError(f"{conf.source}: key 'n_sources' applies to the multi-source experiment only")
        sources = (domain(cfg.sources[0], "source"),)
    fields = dict(target=target, sources=sources)
    if "grid" in conf:
        fields["grid"] = tuple(conf.get_floats("grid"))
    elif kind is ExperimentKind.MULTI_SOURCE and len(sources) == 1:
        fields["grid"] = (1.0,)
    for f in ("n_start", "n_step", "n_max", "repeats", "seed", "test_set_size", "target_train_size"):
        if f in conf:
            fields[f] = conf.get_int(f)
    for f in ("fixed_test_set", "share_beta"):
        if f in conf:
            fields[f] = conf.get_bool(f)
    try:
        return replace(cfg, **fields)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"{conf.source}: {exc}") from exc
