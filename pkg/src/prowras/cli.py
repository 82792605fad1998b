"""Command-line entry point: ``prowras <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import DataError, Dataset, fit_normalizer, load_csv
from .harness import BenchmarkConfig, CoverageError, ResultsTable, run_benchmark
from .metrics import iscores, wsrt
from .partition import partition_minority
from .samplers import METHODS, SCHEME_ORDER, ProwrasParams, oversample, select_scheme

DEFAULT_SEED = 20210415
THREADS_ENV = "PROWRAS_THREADS"

DEFAULTS_EPILOG = (
    "ProWRAS defaults: max_levels=5, n_neighbours_max=5, theta=1, shadow=100, "
    "sigma=0.001 (benchmark profile: sigma=1e-06), "
    "num_samples_to_generate=|majority|-|minority|."
)

log = logging.getLogger("prowras")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _fmt(x):
    """6 significant digits for printed numbers."""
    if isinstance(x, float):
        return float(f"{x:.6g}")
    if isinstance(x, dict):
        return {k: _fmt(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_fmt(v) for v in x]
    return x


def _emit(obj, out: str | None) -> None:
    text = json.dumps(_fmt(obj), indent=2, sort_keys=False) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _label_col(value: str):
    try:
        return int(value)
    except ValueError:
        return value


class _DefaultsFormatter(argparse.HelpFormatter):
    """Append real defaults to help text unless the text already states one."""

    def _get_help_string(self, action):
        text = action.help or ""
        if "(default" in text or action.default in (None, False, argparse.SUPPRESS):
            return text
        if action.option_strings and action.help is not None:
            return f"{text} (default: {action.default})" if text else f"default: {action.default}"
        return text


def _add_prowras_args(p) -> None:
    g = p.add_argument_group("ProWRAS parameters")
    g.add_argument("--max-levels", type=int, default=5, help="partition levels (default: 5)")
    g.add_argument("--n-neighbours-max", type=int, default=5,
                   help="minority neighbours claimed per majority point (default: 5)")
    g.add_argument("--theta", type=float, default=1.0, help="weight decay (default: 1)")
    g.add_argument("--shadow", type=int, default=100, help="shadowsamples per point (default: 100)")
    g.add_argument("--sigma", type=float, default=0.001, help="shadow noise std (default: 0.001)")


def _add_data_args(p) -> None:
    p.add_argument("--in", dest="input", required=True, help="input CSV with header")
    p.add_argument("--label-column", type=_label_col, default=-1,
                   help="label column name or 0-based index (default: last column)")
    p.add_argument("--minority-label", default=None, help="minority class (default: rarer class)")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", default=None,
                        help=f"integer seed, or 'random' for fresh entropy (default: {DEFAULT_SEED})")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = _Parser(prog="prowras", description="ProWRAS oversampling toolkit",
                     parents=[common], epilog=DEFAULTS_EPILOG)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common], epilog=DEFAULTS_EPILOG,
                              formatter_class=_DefaultsFormatter)

    p = add("oversample", "generate synthetic minority samples")
    _add_data_args(p)
    p.add_argument("--out", required=True, help="output CSV of synthetic rows")
    p.add_argument("--method", choices=METHODS, default="prowras", help="oversampling algorithm")
    p.add_argument("--scheme", choices=[s.value for s in SCHEME_ORDER] + ["auto"], default="auto",
                   help="ProWRAS scheme; 'auto' selects by classifier F1")
    p.add_argument("--classifier", choices=("knn", "logreg"), default="knn",
                   help="classifier used by --scheme auto")
    p.add_argument("--n", type=int, default=None, help="samples to generate (default: class gap)")
    p.add_argument("--k", type=int, default=5, help="neighbours for smote/loras")
    p.add_argument("--n-aff", type=int, default=None, help="LoRAS combination size (default: min(30, n_feats))")
    p.add_argument("--normalize", action="store_true",
                   help="oversample in min-max scaled space and map results back")
    _add_prowras_args(p)

    p = add("partition", "print the proximity-weighted minority partition as JSON")
    _add_data_args(p)
    p.add_argument("--out", default=None, help="JSON output file (default: stdout)")
    _add_prowras_args(p)

    p = add("benchmark", "run the cross-validation benchmark from a JSON config")
    p.add_argument("--config", required=True, help="benchmark JSON config; paths resolve relative to it")
    p.add_argument("--out", required=True, help="results JSON lines file")
    p.add_argument("--table", default=None, help="optional F1/kappa table CSV")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or 1)")

    p = add("iscore", "classifier-independence scores from a results file")
    p.add_argument("--in", dest="input", required=True, help="results JSON lines")
    p.add_argument("--metric", choices=("f1", "kappa"), default="f1", help="score compared across oversamplers")
    p.add_argument("--decimals", type=int, default=3, help="round scores before comparing")
    p.add_argument("--tie-tolerance", type=float, default=0.0, help="scores closer than this count as ties")
    p.add_argument("--out", default=None, help="JSON output file (default: stdout)")

    p = add("wsrt", "Wilcoxon signed-rank test on two score columns")
    p.add_argument("--in", dest="input", required=True, help="CSV of per-dataset scores")
    p.add_argument("--a", required=True, help="column tested for being larger")
    p.add_argument("--b", required=True, help="reference column")
    p.add_argument("--out", default=None, help="JSON output file (default: stdout)")

    add("version", "print the version")
    return parser


def _resolve_seed(raw) -> int:
    if raw is None:
        return DEFAULT_SEED
    if raw == "random":
        return secrets.randbits(32)
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"--seed must be an integer or 'random', got {raw!r}") from None


def _params(args) -> ProwrasParams:
    return ProwrasParams(max_levels=args.max_levels, n_neighbours_max=args.n_neighbours_max,
                         theta=args.theta, shadow=args.shadow, sigma=args.sigma)


def _cmd_oversample(args, seed: int) -> None:
    d = load_csv(args.input, args.label_column, args.minority_label)
    params = _params(args)
    work = d
    norm = None
    if args.normalize:
        norm = fit_normalizer(d)
        work = d.with_features(norm.transform(d.features))
    scheme = None
    if args.method == "prowras":
        scheme = args.scheme
        if scheme == "auto":
            scheme = select_scheme(work, args.classifier, seed, params).value
            log.info("selected scheme %s", scheme)
    batch = oversample(args.method, work, args.n, seed, scheme=scheme, params=params,
                       k=args.k, n_aff=args.n_aff)
    pts = norm.inverse_transform(batch.points) if norm is not None else batch.points
    _write_synthetic(args.out, d, pts, args.input, args.label_column)
    print(f"wrote {len(pts)} synthetic samples to {args.out}", file=sys.stderr)


def _write_synthetic(path, d: Dataset, points: np.ndarray, source, label_column) -> None:
    """Rows in the input's column order, label column set to the minority label."""
    with open(source, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh))]
    col = header.index(d.label_name)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in points:
            cells = [repr(float(v)) for v in row]
            cells.insert(col, d.minority_label)
            w.writerow(cells)


def _cmd_partition(args, seed: int) -> None:
    d = load_csv(args.input, args.label_column, args.minority_label)
    part = partition_minority(d, args.max_levels, args.n_neighbours_max, args.theta)
    _emit(part.to_json(), args.out)


def _cmd_benchmark(args, seed: int) -> None:
    cfg = BenchmarkConfig.from_json(args.config)
    if args.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=seed)
    print(f"seed: {cfg.seed}", file=sys.stderr)
    workers = args.workers or int(os.environ.get(THREADS_ENV, "1"))
    rt = run_benchmark(cfg, workers=workers)
    rt.write_jsonl(args.out)
    if args.table:
        rt.write_table_csv(args.table)
    failed = [r for r in rt.rows if r.status != "ok"]
    for r in failed:
        print(f"failed: {r.dataset}/{r.oversampler}/{r.classifier}: {r.error}", file=sys.stderr)
    print(f"{len(rt.rows) - len(failed)}/{len(rt.rows)} configurations ok; seed {cfg.seed}",
          file=sys.stderr)


def _cmd_iscore(args, seed: int) -> None:
    rt = ResultsTable.read_jsonl(args.input)
    cube = rt.to_cube(args.metric)
    _emit(iscores(cube, tie_tolerance=args.tie_tolerance, decimals=args.decimals), args.out)


def _cmd_wsrt(args, seed: int) -> None:
    path = Path(args.input)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    try:
        a = [float(r[args.a]) for r in rows]
        b = [float(r[args.b]) for r in rows]
    except KeyError as exc:
        raise DataError(f"{path}: no column {exc}") from None
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    res = wsrt(a, b).to_json()
    _emit(res, args.out)


COMMANDS = {
    "oversample": _cmd_oversample,
    "partition": _cmd_partition,
    "benchmark": _cmd_benchmark,
    "iscore": _cmd_iscore,
    "wsrt": _cmd_wsrt,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        seed = _resolve_seed(args.seed)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "version":
        print(__version__)
        return 0
    if args.command != "benchmark":  # benchmark reports the seed it actually runs with
        print(f"seed: {seed}", file=sys.stderr)
    try:
        COMMANDS[args.command](args, seed)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (DataError, CoverageError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
