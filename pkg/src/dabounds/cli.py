"""``dabounds`` command line.

Every subcommand reads a flat ``key=value`` config (``--config``), calls the
library, and writes the owning module's output format to ``--out`` (or
stdout).  Exit codes: 0 success, 1 configuration error, 2 invalid input or
failed precondition, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bounds, complexity, concentration, divergences, experiments
from .config import Config, load_config
from .domains import DiscreteDomain, LinearGaussianDomainSpec, read_dataset_csv, sample_linear_gaussian, write_dataset_csv
from .exceptions import ConfigurationError, InvalidInputError
from .hypotheses import EvaluationMatrix, FiniteFunctionClass, LinearModel, LossFunction, fit_combined_least_squares, fit_weighted_least_squares

log = logging.getLogger("dabounds")

EXIT_OK, EXIT_CONFIG, EXIT_INPUT, EXIT_IO = 0, 1, 2, 3

_SPEC_KEYS = ("input_dim", "x_mean", "x_std", "beta_mean", "beta_std", "noise_std", "beta_mode")
_CLASS_KEYS = ("hypotheses", "loss", "clip")


# ---------------------------------------------------------------- helpers


def _path(conf: Config, key: str) -> Path:
    p = Path(conf.get_str(key))
    if not p.is_absolute() and conf.source not in ("<config>", ""):
        p = Path(conf.source).parent / p
    return p


def _paths(conf: Config, key: str) -> list[Path]:
    base = Path(conf.source).parent
    out = []
    for item in conf.get_str(key).split(","):
        item = item.strip()
        if item:
            p = Path(item)
            out.append(p if p.is_absolute() else base / p)
    return out


def read_domain_csv(path):
    """Dataset CSV (``x_0..,y``), or a discrete domain when a final ``p`` column is present."""
    text = Path(path).read_text(encoding="utf-8")
    header = text.splitlines()[0].split(",") if text else []
    if header and header[-1] == "p":
        rows = [ln.split(",") for ln in text.splitlines()[1:] if ln.strip()]
        if not rows or any(len(r) != len(header) for r in rows):
            raise InvalidInputError(f"{path}: malformed discrete domain file")
        try:
            arr = np.array([[float(v) for v in r] for r in rows])
        except ValueError as exc:
            raise InvalidInputError(f"{path}: non-numeric value") from exc
        try:
            return DiscreteDomain(arr[:, :-2], arr[:, -2], arr[:, -1])
        except ConfigurationError as exc:
            raise InvalidInputError(f"{path}: {exc}") from exc
    return read_dataset_csv(path)


def _spec(conf: Config) -> LinearGaussianDomainSpec:
    over = {}
    if "input_dim" in conf:
        over["input_dim"] = conf.get_int("input_dim")
    for k in ("x_mean", "x_std", "beta_mean", "beta_std", "noise_std"):
        if k in conf:
            over[k] = conf.get_float(k)
    if "beta_mode" in conf:
        over["beta_mode"] = conf.get_str("beta_mode")
    return replace(LinearGaussianDomainSpec(), **over)


def _class(conf: Config) -> FiniteFunctionClass:
    hyps = []
    for part in conf.get_str("hypotheses").split(";"):
        try:
            hyps.append(LinearModel([float(v) for v in part.split(",")]))
        except (ValueError, InvalidInputError) as exc:
            raise ConfigurationError(f"{conf.source}: bad hypothesis {part!r}") from exc
    clip = conf.get_floats("clip", "0,1")
    if len(clip) != 2:
        raise ConfigurationError(f"{conf.source}: clip expects two numbers a,b")
    return FiniteFunctionClass(tuple(hyps), LossFunction(conf.get_str("loss", "squared"), tuple(clip)))


def _seed(conf: Config, args) -> int:
    seed = args.seed if args.seed is not None else conf.get_int("seed", 0)
    if not 0 <= seed < 2**64:
        raise ConfigurationError(f"seed must lie in [0, 2^64), got {seed}")
    return seed


def _emit(text: str, args) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _kv(pairs) -> str:
    return "".join(f"{k}={v!r}\n" if isinstance(v, float) else f"{k}={v}\n" for k, v in pairs)


# ---------------------------------------------------------------- subcommands


def cmd_gen(conf: Config, args) -> None:
    conf.check_keys((*_SPEC_KEYS, "n", "seed", "domain_tag"))
    data = sample_linear_gaussian(_spec(conf), conf.get_int("n"), _seed(conf, args),
                                  domain_tag=conf.get_str("domain_tag", ""))
    if not args.out:
        raise ConfigurationError("gen needs --out")
    write_dataset_csv(data, args.out)


def cmd_fit(conf: Config, args) -> None:
    conf.check_keys(("method", "sources", "weights", "source", "target", "tau"))
    method = conf.get_str("method", "weighted")
    if method == "weighted":
        sources = [read_dataset_csv(p) for p in _paths(conf, "sources")]
        w = conf.get_floats("weights", ",".join([str(1.0 / len(sources))] * len(sources)))
        model = fit_weighted_least_squares(sources, w)
    elif method == "combined":
        model = fit_combined_least_squares(read_dataset_csv(_path(conf, "source")),
                                           read_dataset_csv(_path(conf, "target")), conf.get_float("tau"))
    else:
        raise ConfigurationError(f"{conf.source}: method must be weighted or combined, got {method!r}")
    header = ",".join(f"theta_{i}" for i in range(model.input_dim))
    _emit(f"{header}\n{model.to_csv_row()}\n", args)


def cmd_divergence(conf: Config, args) -> None:
    conf.check_keys((*_CLASS_KEYS, "source", "target", "gS", "gT"))
    fclass = _class(conf)
    S = read_domain_csv(_path(conf, "source"))
    T = read_domain_csv(_path(conf, "target"))
    gS = LinearModel(conf.get_floats("gS")) if "gS" in conf else None
    gT = LinearModel(conf.get_floats("gT")) if "gT" in conf else None
    _emit(divergences.divergence_report(fclass, S, T, gS, gT).to_kv(), args)


def cmd_complexity(conf: Config, args) -> None:
    conf.check_keys((*_CLASS_KEYS, "measure", "data", "xi", "norm", "weights", "tau", "mc_trials", "seed"))
    fclass = _class(conf)
    blocks = [read_dataset_csv(p) for p in _paths(conf, "data")]
    measure = conf.get_str("measure", "rademacher")
    seed = _seed(conf, args)
    if measure == "rademacher":
        if len(blocks) != 1:
            raise ConfigurationError(f"{conf.source}: the Rademacher measure takes one data file")
        est = complexity.rademacher_empirical(fclass.evaluate(blocks[0]), conf.get_int("mc_trials", 10000), seed,
                                              n_jobs=args.threads)
        _emit(_kv([("rademacher", est.value), ("std_error", est.std_error), ("mc_trials", est.mc_trials),
                   ("exact", str(est.exact).lower()), ("mode", est.mode.value)]), args)
    elif measure == "covering":
        sizes = [len(b) for b in blocks]
        norm_kind = conf.get_str("norm", "l1w")
        if norm_kind == "l1w":
            w = conf.get_floats("weights", ",".join([str(1.0 / len(blocks))] * len(blocks)))
            norm = complexity.NormSpec.l1w(w, sizes)
        elif norm_kind == "l1tau":
            if len(blocks) != 2:
                raise ConfigurationError(f"{conf.source}: l1tau takes data=target,source")
            norm = complexity.NormSpec.l1tau(conf.get_float("tau"), sizes[0], sizes[1])
        else:
            raise ConfigurationError(f"{conf.source}: norm must be l1w or l1tau")
        vals = np.hstack([fclass.values(b.features, b.labels) for b in blocks])
        n = complexity.covering_number_greedy(EvaluationMatrix(vals, fclass.value_range), conf.get_float("xi"), norm)
        _emit(_kv([("covering_number", n), ("log_covering_number", float(np.log(n)))]), args)
    else:
        raise ConfigurationError(f"{conf.source}: measure must be rademacher or covering")


_BOUND_KEYS = {
    "multi_uen": ("D_w", "ln_uen", "w", "Ns", "range_width", "epsilon"),
    "multi_rademacher": ("D_w", "rademachers", "w", "Ns", "range_width", "epsilon"),
    "combined_uen": ("D", "ln_uen", "tau", "N_S", "N_T", "range_width", "epsilon"),
    "combined_rademacher": ("D", "R_source_expected", "R_target_empirical", "tau", "N_S", "N_T", "range_width", "epsilon"),
    "classical_uen": ("ln_uen", "n", "range_width", "epsilon"),
    "classical_rademacher": ("rademacher", "n", "range_width", "epsilon"),
}
_LIST_KEYS = {"w": "floats", "rademachers": "floats", "Ns": "ints"}
_INT_KEYS = {"N_S", "N_T"}


def cmd_bound(conf: Config, args) -> None:
    theorem = conf.get_str("theorem")
    if theorem not in _BOUND_KEYS:
        raise ConfigurationError(f"{conf.source}: unknown theorem {theorem!r}")
    names = _BOUND_KEYS[theorem]
    conf.check_keys(("theorem", *names))
    vals = []
    for k in names:
        kind = _LIST_KEYS.get(k)
        if kind == "floats":
            vals.append(conf.get_floats(k))
        elif kind == "ints":
            vals.append(conf.get_ints(k))
        elif k in _INT_KEYS:
            vals.append(conf.get_int(k))
        else:
            vals.append(conf.get_float(k))
    report = getattr(bounds, f"bound_{theorem}" if not theorem.startswith("classical") else theorem)(*vals)
    text = report.to_kv()
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")


def _function(conf: Config) -> concentration.BoundedFunction:
    kind = conf.get_str("function", "feature0")
    if kind == "feature0":
        a, b = conf.get_floats("range", "0,1")
        return concentration.BoundedFunction(lambda X, y: X[:, 0], (a, b))
    if kind == "loss":
        fclass = _class(conf)
        if len(fclass) != 1:
            raise ConfigurationError(f"{conf.source}: function=loss takes exactly one hypothesis")
        return concentration.BoundedFunction(lambda X, y: fclass.values(X, y)[0], fclass.value_range)
    raise ConfigurationError(f"{conf.source}: function must be feature0 or loss")


def cmd_verify(conf: Config, args) -> None:
    check = conf.get_str("check")
    common = ("check", "mc_trials", "seed")
    seed = _seed(conf, args)
    fn_keys = ("function", "range", *_CLASS_KEYS)
    if check == "deviation_multi":
        conf.check_keys((*common, *fn_keys, "sources", "weights", "Ns", "xi_grid"))
        curve = concentration.verify_deviation_multi(
            _function(conf), [read_domain_csv(p) for p in _paths(conf, "sources")], conf.get_floats("weights"),
            conf.get_ints("Ns"), conf.get_floats("xi_grid"), conf.get_int("mc_trials"), seed, n_jobs=args.threads)
        _emit(curve.to_csv(), args)
    elif check == "deviation_combined":
        conf.check_keys((*common, *fn_keys, "source", "target", "tau", "N_S", "N_T", "xi_grid"))
        curve = concentration.verify_deviation_combined(
            _function(conf), read_domain_csv(_path(conf, "source")), read_domain_csv(_path(conf, "target")),
            conf.get_float("tau"), conf.get_int("N_S"), conf.get_int("N_T"), conf.get_floats("xi_grid"),
            conf.get_int("mc_trials"), seed, n_jobs=args.threads)
        _emit(curve.to_csv(), args)
    elif check == "mcdiarmid":
        conf.check_keys((*common, *fn_keys, "sources", "weights", "Ns", "xi_grid"))
        f = _function(conf)
        doms = [read_domain_csv(p) for p in _paths(conf, "sources")]
        w = conf.get_floats("weights")
        Ns = conf.get_ints("Ns")
        H = concentration.weighted_mean_statistic(f, doms, w)
        c = [[f.range_width * wk / n] * n for wk, n in zip(w, Ns)]
        curve = concentration.verify_mcdiarmid_generalized(H, c, doms, Ns, conf.get_floats("xi_grid"),
                                                           conf.get_int("mc_trials"), seed, n_jobs=args.threads)
        _emit(curve.to_csv(), args)
    elif check == "symmetrization_multi":
        conf.check_keys((*common, *_CLASS_KEYS, "sources", "target", "weights", "Ns", "xi"))
        res = concentration.verify_symmetrization_multi(
            _class(conf), [read_domain_csv(p) for p in _paths(conf, "sources")], read_domain_csv(_path(conf, "target")),
            conf.get_floats("weights"), conf.get_ints("Ns"), conf.get_float("xi"), conf.get_int("mc_trials"), seed,
            n_jobs=args.threads)
        _emit(res.to_kv(), args)
    elif check == "symmetrization_combined":
        conf.check_keys((*common, *_CLASS_KEYS, "source", "target", "tau", "N_S", "N_T", "xi"))
        res = concentration.verify_symmetrization_combined(
            _class(conf), read_domain_csv(_path(conf, "source")), read_domain_csv(_path(conf, "target")),
            conf.get_float("tau"), conf.get_int("N_S"), conf.get_int("N_T"), conf.get_float("xi"),
            conf.get_int("mc_trials"), seed, n_jobs=args.threads)
        _emit(res.to_kv(), args)
    else:
        raise ConfigurationError(f"{conf.source}: unknown check {check!r}")


def cmd_experiment(conf: Config, args) -> None:
    cfg = experiments.config_from_kv(conf)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    log.info("running %s: %d params x %d sizes x %d repeats", cfg.experiment.value, len(cfg.grid),
             len(cfg.sample_sizes), cfg.repeats)
    result = experiments.run_experiment(cfg, n_jobs=args.threads)
    _emit(experiments.emit_csv(result), args)


COMMANDS = {
    "gen": (cmd_gen, "sample a linear-Gaussian dataset to CSV"),
    "fit": (cmd_fit, "weighted or combined least squares from dataset CSVs"),
    "divergence": (cmd_divergence, "IPM, discrepancy distance and Q between two domains"),
    "complexity": (cmd_complexity, "Rademacher complexity or covering number of a finite class"),
    "bound": (cmd_bound, "evaluate a generalization bound"),
    "verify": (cmd_verify, "Monte-Carlo check of a concentration or symmetrization inequality"),
    "experiment": (cmd_experiment, "run a least-squares adaptation experiment"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dabounds", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, metavar="PATH", help="key=value config file")
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, metavar="U64", help="overrides the config seed")
        p.add_argument("--threads", type=int, default=1, metavar="N", help="worker threads (default 1)")
        p.add_argument("--verbose", action="store_true", help="progress messages on stderr")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigurationError("--seed must lie in [0, 2^64)")
        if args.threads < 1:
            raise ConfigurationError("--threads must be >= 1")
        conf = load_config(args.config)
        COMMANDS[args.command][0](conf, args)
    except ConfigurationError as exc:
        print(f"dabounds: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvalidInputError as exc:
        print(f"dabounds: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"dabounds: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
