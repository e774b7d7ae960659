"""Command-line entry point.

Exit codes: 0 success, 1 failed theory check, 2 usage, 3 data, 4 all
configurations discarded, 5 numeric or size error.
"""
import argparse
import json
import logging
import sys

import numpy as np

from . import convexity, data, hpo, metrics, nn, theoryverify
from .errors import (
    AllDiscardedError,
    ArchitectureError,
    DataError,
    DegenerateInputError,
    DegenerateModelError,
    LabelError,
    NotStronglyConvexError,
    NumericError,
    SizeError,
)

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_DATA, EXIT_ALL_DISCARDED, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5

log = logging.getLogger("ahsc")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True)


class _Output:
    """Single writer for JSON-lines output (a file or stdout)."""

    def __init__(self, path):
        self.path = path
        self.fh = open(path, "w", encoding="utf-8") if path else sys.stdout

    def write(self, obj):
        self.fh.write(_dumps(obj) + "\n")

    def close(self):
        if self.path:
            self.fh.close()


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {s}")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected an integer >= 0, got {s}")
    return v


def _positive_float(s):
    v = float(s)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
    return v


def _add_data_args(p, seed_required=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", metavar="PATH", help="CSV with a header row; label column last unless --label-column")
    src.add_argument("--synthetic", metavar="SPEC", help="e.g. blobs:m=100,k=3,dim=4,sep=6,noise=1,seed=0")
    p.add_argument("--label-column", default=None)
    p.add_argument("--no-standardize", action="store_true", help="skip z-scoring with training statistics")
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, required=seed_required, default=None if seed_required else 0)


def _add_space_args(p):
    p.add_argument("--depth-range", type=int, nargs=2, default=(1, 4), metavar=("LO", "HI"))
    p.add_argument("--width-range", type=int, nargs=2, default=(16, 1024), metavar=("LO", "HI"))
    p.add_argument("--batch-range", type=int, nargs=2, default=(4, 256), metavar=("LO", "HI"))
    p.add_argument("--lr-range", type=float, nargs=2, default=(1e-5, 1.0), metavar=("LO", "HI"))


def _space(args, width_max=None):
    width = tuple(args.width_range)
    if width_max is not None:
        width = (min(width[0], width_max), min(width[1], width_max))
    return hpo.HyperSpace(tuple(args.depth_range), width, tuple(args.batch_range), tuple(args.lr_range))


def _load(args):
    ds = data.load_csv(args.data, args.label_column) if args.data else data.parse_synthetic(args.synthetic)
    return ds


def _train_test(args, ds):
    train, test = data.split(ds, args.test_fraction, args.seed)
    if not args.no_standardize:
        train, test, _ = data.standardize(train, test)
    return train, test


def _search_summary(args, result, test):
    probs = nn.predict_proba(result.best_model, test.features)
    out = {"summary": result.summary()}
    out["summary"]["metric"] = args.metric
    out["summary"]["test_score"] = metrics.score(args.metric, probs, test.labels)
    out["summary"]["test_accuracy"] = metrics.accuracy(probs, test.labels)
    if args.timing:
        out["summary"]["wall_seconds"] = round(result.wall_seconds, 3)
    return out


def cmd_search(args):
    ds = _load(args)
    train, test = _train_test(args, ds)
    result = hpo.ahsc(
        _space(args), train, n1=args.n1, n2=args.n2, seed=args.seed, epochs_full=args.epochs, metric=args.metric,
        continue_from_probe=args.continue_from_probe, denominator="column" if args.col_norm else "full",
    )
    _emit_search(args, result, test)
    return EXIT_OK


def cmd_random_search(args):
    ds = _load(args)
    train, test = _train_test(args, ds)
    result = hpo.random_search(_space(args), train, n=args.n, seed=args.seed, epochs_full=args.epochs, metric=args.metric)
    _emit_search(args, result, test)
    return EXIT_OK


def _emit_search(args, result, test):
    out = _Output(args.out)
    try:
        for r in result.records:
            out.write(r.to_json(args.timing))
    finally:
        out.close()
    print(_dumps(_search_summary(args, result, test)))
    if args.save_best:
        nn.save_model(result.best_model, args.save_best)


def cmd_oracle_validate(args):
    ds = _load(args)
    train, _ = _train_test(args, ds)
    limit = convexity.ORACLE_MAX_PARAMS
    width_max = args.width_max if args.width_max is not None else limit // train.k
    if width_max * train.k > limit:
        raise SizeError(f"width {width_max} with {train.k} classes exceeds the oracle limit of {limit} last-layer weights")
    space = _space(args, width_max)
    configs = hpo.sample_configs(space, args.n * args.max_draw_factor, args.seed)
    out = _Output(args.out)
    proxies, oracles = [], []
    try:
        for cfg in configs:
            if len(proxies) == args.n:
                break
            mseed = hpo.config_seed(args.seed, cfg.config_id)
            model = nn.init_model(cfg.layer_dims(train.n, train.k), mseed)
            probe, _ = nn.train(model, train, cfg, 1, seed=mseed)
            rec = convexity.mu_max(probe, train, cfg.batch_size, config_id=cfg.config_id,
                                   denominator="column" if args.col_norm else "full")
            if rec.discarded:
                continue
            orc = convexity.oracle_mu_max(probe, train, cfg.batch_size, eps=args.oracle_eps)
            if not np.isfinite(orc):
                raise NumericError("non-finite oracle value", where=f"config {cfg.config_id}")
            proxies.append(rec.mu_max)
            oracles.append(orc)
            out.write({"config_id": cfg.config_id, "hyperparams": cfg.hyperparams(), "proxy": rec.mu_max, "oracle": orc})
        rho = convexity.rank_correlation(proxies, oracles) if len(proxies) >= 2 else None
        out.write({"n": len(proxies), "spearman": rho})
    finally:
        out.close()
    if args.out:
        print(_dumps({"n": len(proxies), "spearman": rho}))
    return EXIT_OK


def cmd_landscape(args):
    ds = _load(args)
    train, _ = _train_test(args, ds)
    if args.checkpoint:
        model = nn.load_model(args.checkpoint)
    else:
        cfg = hpo.HyperConfig(0, args.depth, args.width, args.batch_size, args.lr)
        model = nn.init_model(cfg.layer_dims(train.n, train.k), args.seed)
        model, _ = nn.train(model, train, cfg, args.epochs, early_stop_on_fit=True, seed=args.seed)
    grid = convexity.landscape_slice(model, train, args.grid_n, args.span, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("x_index,y_index,loss\n")
        for i, j, v in grid.rows():
            fh.write(f"{i},{j},{v!r}\n")
    side = {
        "grid_n": args.grid_n,
        "span": args.span,
        "center_loss": float(grid.losses[args.grid_n // 2, args.grid_n // 2]),
        "mu_max": convexity.mu_max(model, train, args.batch_size).mu_max if model.L >= 2 else None,
        "sharpness": convexity.model_sharpness(model, train, convexity.SharpnessParams(epsilon=args.sharpness_eps, seed=args.seed)),
        "sharpness_epsilon": args.sharpness_eps,
    }
    with open(args.out + ".json", "w", encoding="utf-8") as fh:
        fh.write(_dumps(side) + "\n")
    print(_dumps(side))
    return EXIT_OK


def cmd_bound(args):
    v = convexity.covering_bound(convexity.CoveringBoundInput(args.m, args.t, args.beta, args.log_cover))
    print(repr(v))
    return EXIT_OK


def parse_matrix_spec(spec: str) -> np.ndarray:
    """``diag:1,4`` | ``eye:N`` | ``randpd:N[:seed]`` | ``rows:1,0;0,4``."""
    kind, sep, body = spec.partition(":")
    if not sep or not body:
        raise ValueError(f"malformed matrix spec {spec!r}")
    if kind == "diag":
        return np.diag([float(v) for v in body.split(",")])
    if kind == "eye":
        return np.eye(int(body))
    if kind == "randpd":
        dim, _, seed = body.partition(":")
        return theoryverify.QuadraticProblem.random_pd(int(dim), int(seed or 0)).H
    if kind == "rows":
        rows = [[float(v) for v in r.split(",")] for r in body.split(";")]
        if len({len(r) for r in rows}) != 1:
            raise ValueError("ragged matrix rows")
        return np.array(rows)
    raise ValueError(f"unknown matrix kind {kind!r}")


def cmd_verify_theory(args, parser):
    if args.h:
        problems = {}
        for spec in args.h:
            try:
                problems[spec] = theoryverify.QuadraticProblem(parse_matrix_spec(spec))
            except ValueError as e:
                parser.error(f"--h {spec}: {e}")
    else:
        problems = theoryverify.default_problems(args.seed)
    reports = theoryverify.run_suite(problems, n_points=args.points, steps=args.steps, seed=args.seed, decay=args.decay_checks)
    out = _Output(args.out)
    try:
        for name, rep in reports:
            out.write({"problem": name, **rep.to_json()})
    finally:
        out.close()
    return EXIT_OK if all(r.passed for _, r in reports) else EXIT_CHECK_FAILED


def cmd_make_data(args):
    ds = data.parse_synthetic(args.synthetic)
    data.save_csv(ds, args.out)
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="ahsc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def search_common(sp):
        _add_data_args(sp)
        _add_space_args(sp)
        sp.add_argument("--epochs", type=_nonneg_int, default=50, help="full-run epoch cap (early stop on fit)")
        sp.add_argument("--metric", choices=sorted(metrics.METRICS), default="acc")
        sp.add_argument("--out", metavar="PATH", help="JSON-lines per-config log (default: stdout)")
        sp.add_argument("--save-best", metavar="PATH", help="write the best model as .npz")
        sp.add_argument("--timing", action="store_true", help="add wall-clock fields (breaks byte-identical logs)")

    s = sub.add_parser("search", help="convexity-ranked search")
    search_common(s)
    s.add_argument("--n1", type=_positive_int, default=50)
    s.add_argument("--n2", type=_positive_int, default=10)
    s.add_argument("--col-norm", action="store_true", help="per-class weight-norm denominator in the proxy")
    s.add_argument("--continue-from-probe", action="store_true")

    r = sub.add_parser("random-search", help="random-search baseline")
    search_common(r)
    r.add_argument("--n", type=_positive_int, default=50)

    o = sub.add_parser("oracle-validate", help="proxy vs finite-difference Hessian norm")
    _add_data_args(o)
    _add_space_args(o)
    o.add_argument("--n", type=_positive_int, default=20, help="number of non-discarded configs to report")
    o.add_argument("--max-draw-factor", type=_positive_int, default=5)
    o.add_argument("--width-max", type=_positive_int, default=None, help="default: largest width within the oracle limit")
    o.add_argument("--oracle-eps", type=_positive_float, default=1e-4)
    o.add_argument("--col-norm", action="store_true")
    o.add_argument("--out", metavar="PATH")

    ls = sub.add_parser("landscape", help="2-D loss slice as CSV plus a sidecar JSON")
    _add_data_args(ls)
    ls.add_argument("--checkpoint", metavar="NPZ")
    ls.add_argument("--depth", type=_positive_int, default=1)
    ls.add_argument("--width", type=_positive_int, default=32)
    ls.add_argument("--batch-size", type=_positive_int, default=32)
    ls.add_argument("--lr", type=float, default=1e-2)
    ls.add_argument("--epochs", type=_nonneg_int, default=20)
    ls.add_argument("--grid-n", type=int, default=21)
    ls.add_argument("--span", type=_positive_float, default=1.0)
    ls.add_argument("--sharpness-eps", type=_positive_float, default=1e-3)
    ls.add_argument("--out", required=True, metavar="CSV")

    b = sub.add_parser("bound", help="covering-number deviation bound")
    b.add_argument("--m", type=_positive_int, required=True)
    b.add_argument("--t", type=float, required=True)
    b.add_argument("--beta", type=_positive_float, required=True)
    b.add_argument("--log-cover", type=float, required=True)

    v = sub.add_parser("verify-theory", help="check the convexity inequalities on quadratics")
    v.add_argument("--h", action="append", metavar="SPEC", help="diag:1,4 | eye:N | randpd:N[:seed] | rows:1,0;0,4")
    v.add_argument("--points", type=_positive_int, default=50)
    v.add_argument("--steps", type=_nonneg_int, default=100)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--decay-checks", action="store_true", help="add the per-step decay bound and its envelope")
    v.add_argument("--out", metavar="PATH")

    mk = sub.add_parser("make-data", help="write a synthetic dataset as CSV")
    mk.add_argument("--synthetic", required=True, metavar="SPEC")
    mk.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command == "search" and args.n2 > args.n1:
        parser.error("--n2 must not exceed --n1")
    if args.command == "landscape" and (args.grid_n < 3 or args.grid_n % 2 == 0):
        parser.error("--grid-n must be odd and >= 3")
    tf = getattr(args, "test_fraction", None)
    if tf is not None and not 0 < tf < 1:
        parser.error("--test-fraction must be in (0, 1)")
    if args.command == "bound" and args.t < 0:
        parser.error("--t must be >= 0")
    if hasattr(args, "depth_range"):
        try:
            _space(args)
        except ValueError as e:
            parser.error(str(e))
    handlers = {
        "search": cmd_search,
        "random-search": cmd_random_search,
        "oracle-validate": cmd_oracle_validate,
        "landscape": cmd_landscape,
        "bound": cmd_bound,
        "make-data": cmd_make_data,
    }
    try:
        if args.command == "verify-theory":
            return cmd_verify_theory(args, parser)
        if getattr(args, "synthetic", None):
            try:
                data.parse_synthetic(args.synthetic)
            except ValueError as e:
                parser.error(f"--synthetic: {e}")
        return handlers[args.command](args)
    except AllDiscardedError as e:
        log.error("%s", e)
        return EXIT_ALL_DISCARDED
    except (DataError, LabelError, DegenerateInputError) as e:
        log.error("data error: %s", e)
        return EXIT_DATA
    except (NumericError, SizeError, ArchitectureError, DegenerateModelError, NotStronglyConvexError) as e:
        log.error("numeric error: %s", e)
        return EXIT_NUMERIC
    except OSError as e:
        log.error("I/O error: %s", e)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
