"""Command-line driver: fit, score, explain, overall, shap, bench, synth.

Exit codes: 0 ok, 1 usage, 2 data error, 3 model error, 4 numeric
failure. Randomized subcommands require --seed (or the ANOMEX_SEED
environment variable; the flag wins). All machine artifacts are JSON or
CSV and byte-stable for identical inputs and seed.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from anomex import bench as bench_mod
from anomex.aggregate import histogram_to_dict, merge_others, overall_importance
from anomex.data import (
    Dataset,
    build_quantile_grid,
    classify,
    fit_threshold,
    load_csv,
    save_csv,
)
from anomex.detectors import IsolationForest, Loda, load_model, save_model
from anomex.errors import DataError, ModelError, NumericError
from anomex.explainer import explain, explanation_to_dict, validate_weights
from anomex.shap_baseline import kernel_shap, sample_background, shap_to_dict
from anomex.synth import SynthSpec, generate
from anomex.viz import render_rank_bars, render_whatif

SEED_ENV_VAR = "ANOMEX_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="anomex", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("fit", help="fit a detector on a CSV and save it as JSON")
    p.add_argument("--input", required=True, help="training CSV with a header row")
    p.add_argument("--model", required=True, choices=("iforest", "loda"))
    p.add_argument("--contamination", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--has-labels", action="store_true", help="input has a trailing label column")
    p.add_argument("--trees", type=int, default=100, help="iforest: ensemble size")
    p.add_argument("--subsample", type=int, default=256, help="iforest: per-tree sample size")
    p.add_argument("--projections", type=int, default=100, help="loda: projection count")
    p.add_argument("--bins", type=int, default=100, help="loda: histogram bins")

    p = sub.add_parser("score", help="score a CSV with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True, help="scores CSV path")
    p.add_argument("--has-labels", action="store_true")

    p = sub.add_parser("explain", help="what-if explanation of one row")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--row", type=int, required=True, help="0-based row index")
    p.add_argument("--weights", default="0.3,0.3,0.2,0.2", help="wD,wC,wQ,wR")
    p.add_argument("--quantiles", type=int, default=51, help="grid levels K")
    p.add_argument("--out", required=True, help="explanation JSON path")
    p.add_argument("--svg", default=None, help="optional what-if chart path")
    p.add_argument("--top-k", type=int, default=None, help="rows in the chart")
    p.add_argument("--width", type=int, default=900, help="chart width in px")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--has-labels", action="store_true")

    p = sub.add_parser("overall", help="rank histogram over all detected anomalies")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--positions", type=int, default=None, help="rank positions (default min(d, 10))")
    p.add_argument("--cutoff", type=float, default=0.05, help="merge share for 'others'")
    p.add_argument("--weights", default="0.3,0.3,0.2,0.2")
    p.add_argument("--quantiles", type=int, default=51)
    p.add_argument("--out", required=True, help="histogram JSON path")
    p.add_argument("--svg", default=None, help="optional stacked bar chart path")
    p.add_argument("--width", type=int, default=760)
    p.add_argument("--height", type=int, default=420)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--has-labels", action="store_true")

    p = sub.add_parser("shap", help="KernelSHAP baseline explanation of one row")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--row", type=int, required=True)
    p.add_argument("--background-frac", type=float, default=0.1)
    p.add_argument("--coalitions", type=int, default=None, help="default 2d + 2048")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--has-labels", action="store_true")

    p = sub.add_parser("bench", help="latency suites (timing tables + CSV)")
    p.add_argument("--suite", required=True, choices=("background", "dimension", "head2head"))
    p.add_argument("--out", required=True, help="results CSV path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=20000)
    p.add_argument("--d", type=int, default=50)
    p.add_argument("--fractions", default="0.05,0.1,0.2,0.5")
    p.add_argument("--dims", default="10,20,40")
    p.add_argument("--coalitions", type=int, default=None)
    p.add_argument("--quantiles", type=int, default=51)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--contamination", type=float, default=0.01)
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("synth", help="generate a labeled synthetic CSV")
    p.add_argument("--n", type=int, required=True, help="normal rows")
    p.add_argument("--anomalies", type=int, required=True)
    p.add_argument("--dims", type=int, required=True)
    p.add_argument("--root", type=int, required=True, help="shifted feature index")
    p.add_argument("--shift", type=float, required=True, help="shift in std units")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="CSV path")
    return parser


def _require_seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from None
    raise UsageError(f"--seed is required (or set {SEED_ENV_VAR})")


def _load_compatible(path: str, model_names: tuple[str, ...], has_labels: bool) -> Dataset:
    data = load_csv(path, has_labels=has_labels)
    if data.feature_names != model_names:
        raise ModelError(
            f"input features {list(data.feature_names)} do not match "
            f"model features {list(model_names)}"
        )
    return data


def _pick_row(data: Dataset, row: int) -> np.ndarray:
    if not 0 <= row < data.n_rows:
        raise UsageError(f"--row {row} out of range [0, {data.n_rows})")
    return data.rows[row]


def _threads(args: argparse.Namespace) -> int:
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.threads
    return os.cpu_count() or 1


def _write_text(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _cmd_fit(args: argparse.Namespace) -> int:
    seed = _require_seed(args)
    if not 0.0 < args.contamination < 1.0:
        raise UsageError(f"--contamination must be in (0, 1), got {args.contamination}")
    data = load_csv(args.input, has_labels=args.has_labels)
    if args.model == "iforest":
        detector = IsolationForest.fit(data, trees=args.trees, subsample=args.subsample, seed=seed)
    else:
        detector = Loda.fit(data, projections=args.projections, bins=args.bins, seed=seed)
    threshold = fit_threshold(detector.score(data.rows), args.contamination)
    save_model(detector, threshold, args.contamination, args.out)
    print(f"fitted {args.model} on {data.n_rows}x{data.n_features}, threshold={threshold:.6g}")
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    detector, threshold, _ = load_model(args.model)
    data = _load_compatible(args.input, detector.feature_names, args.has_labels)
    scores = detector.score(data.rows)
    lines = ["row,score,classification"]
    for i, s in enumerate(scores):
        lines.append(f"{i},{float(s)!r},{classify(float(s), threshold).value}")
    _write_text(args.out, "\n".join(lines) + "\n")
    n_anom = int((scores > threshold).sum())
    print(f"scored {data.n_rows} rows, {n_anom} anomalous at threshold {threshold:.6g}")
    return 0


def _cmd_explain(args: argparse.Namespace) -> int:
    detector, threshold, _ = load_model(args.model)
    data = _load_compatible(args.input, detector.feature_names, args.has_labels)
    x = _pick_row(data, args.row)
    weights = validate_weights(args.weights.split(","))
    grid = build_quantile_grid(data, args.quantiles)
    expl = explain(
        detector.score, x, grid, weights, threshold,
        feature_names=data.feature_names, threads=_threads(args),
    )
    _write_text(args.out, _dump_json(explanation_to_dict(expl, point_id=args.row)))
    if args.svg:
        top_k = args.top_k if args.top_k is not None else min(10, data.n_features)
        _write_text(args.svg, render_whatif(expl, top_k=top_k, width=args.width))
    top = expl.feature_names[expl.ranking[0]]
    print(
        f"row {args.row}: score={expl.score:.6g} ({expl.classification.value}), "
        f"top feature {top}"
    )
    return 0


def _cmd_overall(args: argparse.Namespace) -> int:
    detector, threshold, _ = load_model(args.model)
    data = _load_compatible(args.input, detector.feature_names, args.has_labels)
    weights = validate_weights(args.weights.split(","))
    grid = build_quantile_grid(data, args.quantiles)
    hist = overall_importance(
        detector.score, data, grid, weights, threshold,
        top_positions=args.positions, threads=_threads(args),
    )
    hist = merge_others(hist, args.cutoff)
    _write_text(args.out, _dump_json(histogram_to_dict(hist)))
    if args.svg:
        _write_text(args.svg, render_rank_bars(hist, width=args.width, height=args.height))
    top = hist.feature_names[int(np.argmax(hist.matrix[:, 0]))]
    print(f"{hist.n_anomalies} anomalies explained, top rank-1 feature {top}")
    return 0


def _cmd_shap(args: argparse.Namespace) -> int:
    seed = _require_seed(args)
    detector, threshold, _ = load_model(args.model)
    data = _load_compatible(args.input, detector.feature_names, args.has_labels)
    x = _pick_row(data, args.row)
    background = sample_background(data, args.background_frac, seed)
    expl = kernel_shap(detector.score, x, background, args.coalitions, seed)
    _write_text(args.out, _dump_json(shap_to_dict(expl, point_id=args.row, threshold=threshold)))
    print(
        f"row {args.row}: score={expl.score:.6g}, background={expl.background_size}, "
        f"coalitions={expl.coalitions}"
    )
    return 0


def _bench_workload(n: int, d: int, trees: int, contamination: float, seed: int):
    """Synth data + fitted forest + the most anomalous point to explain."""
    data = generate(SynthSpec(
        n_normal=n - max(1, n // 100),
        n_anomalies=max(1, n // 100),
        d=d,
        root_feature=0,
        shift=4.0,
        seed=seed,
    ))
    detector = IsolationForest.fit(data, trees=trees, subsample=256, seed=seed)
    scores = detector.score(data.rows)
    threshold = fit_threshold(scores, contamination)
    x = data.rows[int(np.argmax(scores))]
    return data, detector, threshold, x


def _cmd_bench(args: argparse.Namespace) -> int:
    seed = _require_seed(args)
    if args.repeats < bench_mod.MIN_REPEATS:
        raise UsageError(f"--repeats must be >= {bench_mod.MIN_REPEATS}")
    records: list[bench_mod.TimingRecord] = []
    if args.suite in ("background", "head2head"):
        data, detector, threshold, x = _bench_workload(
            args.n, args.d, args.trees, args.contamination, seed
        )
        grid = build_quantile_grid(data, args.quantiles)
        setup = bench_mod.BenchSetup(
            grid=grid, weights=validate_weights((0.3, 0.3, 0.2, 0.2)),
            threshold=threshold, detector="iforest", n=data.n_rows, seed=seed,
            coalitions=args.coalitions, threads=args.threads,
        )
        records.append(bench_mod.time_single_explanation(
            bench_mod.METHOD_QUANTILE_SWEEP, detector.score, x, setup, args.repeats
        ))
        if args.suite == "head2head":
            fractions = [0.1]
        else:
            fractions = sorted(float(f) for f in args.fractions.split(","))
        records.extend(bench_mod.background_sweep(
            detector.score, x, data, fractions, setup, args.repeats
        ))
    else:  # dimension
        dims = sorted(int(v) for v in args.dims.split(","))

        def factory(d: int):
            data, detector, _, x = _bench_workload(
                args.n, d, args.trees, args.contamination, seed
            )
            return detector.score, data, x

        records.extend(bench_mod.dimension_sweep(
            factory, dims, args.n,
            quantile_levels=args.quantiles, contamination=args.contamination,
            repeats=args.repeats, seed=seed, detector="iforest", threads=args.threads,
        ))
    _write_text(args.out, bench_mod.records_to_csv(records))
    print(bench_mod.format_table(records), end="")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    seed = _require_seed(args)
    try:
        spec = SynthSpec(
            n_normal=args.n, n_anomalies=args.anomalies, d=args.dims,
            root_feature=args.root, shift=args.shift, seed=seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = generate(spec)
    save_csv(data, args.out)
    print(f"wrote {data.n_rows} rows x {data.n_features} features to {args.out}")
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "score": _cmd_score,
    "explain": _cmd_explain,
    "overall": _cmd_overall,
    "shap": _cmd_shap,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (see --help)")
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"anomex: usage error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"anomex: usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"anomex: data error: {exc}", file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"anomex: model error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"anomex: numeric error: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"anomex: data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
