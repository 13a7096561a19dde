"""Command-line front-end: fit, predict, cv, dof, bench, summarize.

Every run writes a manifest JSON (resolved arguments + seed + version)
next to its primary output, and `rgam --from-manifest PATH` replays the
stored invocation bit-identically. All randomness flows from --seed; a
missing --seed is generated and printed. Output files are written
atomically (temp + rename).

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import __version__
from .cv import LassoFitter, fit_cv
from .data import (
    atomic_write_text,
    fmt17,
    load_csv,
    load_matrix_csv,
    write_csv,
)
from .dof import (
    DofConfig,
    estimate_df,
    fit_grand_mean,
    fit_identity,
    fit_ols,
    make_rgam_dof_fitter,
)
from .errors import DataError, SolverError, UsageError
from .families import FAMILIES
from .pipeline import (
    RgamConfig,
    RgamFitter,
    fit_rgam,
    load_rgam,
    predict_rgam,
    save_rgam,
)
from .simbench import (
    DEFAULT_METHODS,
    DEFAULT_N_TEST,
    DEFAULT_REPLICATES,
    DEFAULT_SNRS,
    QUICK_SCENARIOS,
    RESULT_FIELDS,
    SCENARIOS,
    SimResult,
    run_benchmark,
    summarize_results,
    summary_rows,
)

MANIFEST_SCHEMA_VERSION = "1"
FULL_SCALE_REPLICATES = 30


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through our exit-code scheme."""

    def error(self, message):
        raise UsageError(message)


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=1, sort_keys=True) + "\n"


def _write_json(path: str, payload: dict) -> None:
    atomic_write_text(path, _json_text(payload))


def _strip_json_suffix(path: str) -> str:
    return path[:-5] if path.endswith(".json") else path


def _manifest_path(out: str) -> str:
    return out + ".manifest.json"


def _write_manifest(subcommand: str, args: argparse.Namespace, out: str) -> None:
    arguments = {
        k: v for k, v in vars(args).items() if k not in ("subcommand", "handler")
    }
    payload = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool_version": __version__,
        "subcommand": subcommand,
        "seed": arguments.get("seed"),
        "arguments": arguments,
    }
    _write_json(_manifest_path(out), payload)


def _resolve_seed(args: argparse.Namespace) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % (2**63 - 1))
        print(f"generated seed: {args.seed}")
    return int(args.seed)


def _response_key(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _parse_init_nz(text: str):
    if text in ("all", "none"):
        return text
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise UsageError(
            f"--init-nz must be 'all', 'none', or a comma-separated list of "
            f"0-based feature indices, got {text!r}"
        ) from None


def _parse_name_list(text: str, valid, what: str) -> tuple:
    names = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    if not names:
        raise UsageError(f"empty {what} list")
    for name in names:
        if name not in valid:
            raise UsageError(f"unknown {what} {name!r}; choose from {sorted(valid)}")
    return names


def _parse_float_list(text: str, what: str) -> tuple:
    try:
        values = tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"--{what} must be a comma-separated list of numbers") from None
    if not values:
        raise UsageError(f"empty --{what} list")
    return values


def _config_from_args(args: argparse.Namespace, seed: int) -> RgamConfig:
    try:
        return RgamConfig(
            gamma=args.gamma,
            df=args.df,
            init_nz=_parse_init_nz(args.init_nz),
            nfolds_step1=args.step1_folds,
            nlambda=args.nlambda,
            min_ratio=args.lambda_min_ratio,
            step1_lambda_rule=args.step1_rule,
            seed=seed,
        )
    except DataError as exc:
        # flag values produced the bad config, so report it as usage
        raise UsageError(str(exc)) from exc


def _add_fit_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("data", help="training CSV with a header row")
    sub.add_argument(
        "--response",
        default="y",
        help="response column name or 0-based index (default: y)",
    )
    sub.add_argument(
        "--family",
        default="gaussian",
        choices=sorted(FAMILIES),
        help="response family (default: gaussian)",
    )
    sub.add_argument(
        "--gamma",
        type=float,
        default=None,
        help="non-linear feature scale in [0,1]; default 0.8 when "
        "--init-nz none, else 0.6",
    )
    sub.add_argument(
        "--df",
        type=float,
        default=4.0,
        help="smoothing-spline effective degrees of freedom, at least 2 "
        "(default: 4)",
    )
    sub.add_argument(
        "--init-nz",
        default="all",
        help="features eligible for a non-linear term: 'all', 'none' "
        "(first-stage active set only), or comma-separated 0-based "
        "indices (default: all)",
    )
    sub.add_argument(
        "--nlambda", type=int, default=100, help="path length (default: 100)"
    )
    sub.add_argument(
        "--lambda-min-ratio",
        type=float,
        default=None,
        help="smallest path lambda as a fraction of lambda_max "
        "(default: 0.01 when n < p, else 0.0001)",
    )
    sub.add_argument(
        "--step1-folds",
        type=int,
        default=5,
        help="folds for the internal first-stage CV (default: 5)",
    )
    sub.add_argument(
        "--step1-rule",
        default="min",
        choices=("min", "1se"),
        help="first-stage lambda selection rule (default: min)",
    )
    sub.add_argument("--seed", type=int, default=None, help="RNG seed (printed if omitted)")


def run_fit(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    config = _config_from_args(args, seed)
    d = load_csv(args.data, _response_key(args.response), args.family)
    model = fit_rgam(d, config)
    save_rgam(model, args.out)
    base = _strip_json_suffix(args.out)
    report_path = args.report if args.report else base + ".report.csv"
    header = ["lambda", "deviance", "nonzero_linear", "nonzero_nonlinear"]
    lin = model.nonzero_linear_counts()
    non = model.nonzero_nonlinear_counts()
    rows = [
        [
            fmt17(model.path.values[i]),
            fmt17(model.step3_model.deviances[i]),
            str(int(lin[i])),
            str(int(non[i])),
        ]
        for i in range(model.path.m)
    ]
    write_csv(report_path, header, rows)
    _write_manifest("fit", args, args.out)
    for note in model.warnings:
        print(f"warning: {note}", file=sys.stderr)
    print(
        f"fit: {model.path.m} lambdas, gamma={config.resolved_gamma:g}, "
        f"{len(model.active_splines)} non-linear features built; "
        f"model -> {args.out}, report -> {report_path}"
    )
    return 0


def _pick_lambda_index(args: argparse.Namespace, model) -> int:
    path = model.path
    picks = [
        args.lambda_index is not None,
        args.lambda_value is not None,
        args.cv_result is not None,
    ]
    if sum(picks) > 1:
        raise UsageError("give only one of --lambda-index, --lambda, --cv-result")
    if args.lambda_index is not None:
        if not 0 <= args.lambda_index < path.m:
            raise UsageError(
                f"--lambda-index {args.lambda_index} out of range for a "
                f"{path.m}-point path"
            )
        return int(args.lambda_index)
    if args.lambda_value is not None:
        if args.lambda_value < 0:
            raise UsageError("--lambda must be nonnegative")
        idx = int(np.argmin(np.abs(path.values - args.lambda_value)))
        nearest = float(path.values[idx])
        if abs(nearest - args.lambda_value) > 1e-12 * max(1.0, args.lambda_value):
            print(
                f"warning: lambda {args.lambda_value:g} is not on the path; "
                f"using nearest value {nearest:g} (index {idx})",
                file=sys.stderr,
            )
        return idx
    if args.cv_result is not None:
        if not os.path.exists(args.cv_result):
            raise DataError(f"cv result file not found: {args.cv_result}")
        with open(args.cv_result, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
        key = "lambda_min_index" if args.rule == "min" else "lambda_1se_index"
        if key not in payload:
            raise DataError(f"{args.cv_result} has no {key!r} field")
        idx = int(payload[key])
        if not 0 <= idx < path.m:
            raise DataError(
                f"cv-chosen index {idx} out of range for a {path.m}-point path"
            )
        return idx
    raise UsageError(
        "select a path point with --lambda-index, --lambda, or --cv-result"
    )


def run_predict(args: argparse.Namespace) -> int:
    model = load_rgam(args.model)
    matrix, header = load_matrix_csv(args.data)
    if args.response_column is not None:
        if args.response_column not in header:
            raise DataError(
                f"--response-column {args.response_column!r} not found in "
                f"{args.data}"
            )
        drop = header.index(args.response_column)
        keep = [j for j in range(len(header)) if j != drop]
        matrix = matrix[:, keep]
        header = [header[j] for j in keep]
    if matrix.shape[1] != model.p:
        raise DataError(
            f"model expects {model.p} feature columns, {args.data} has "
            f"{matrix.shape[1]}"
        )
    if tuple(header) != tuple(model.column_names):
        print(
            "warning: feature CSV header differs from the training columns; "
            "columns are matched by position",
            file=sys.stderr,
        )
    idx = _pick_lambda_index(args, model)
    preds = predict_rgam(model, matrix, idx, scale=args.scale)
    rows = [[fmt17(v)] for v in preds]
    write_csv(args.out, ["prediction"], rows)
    _write_manifest("predict", args, args.out)
    print(
        f"predict: {preds.size} rows at lambda index {idx} "
        f"(lambda={float(model.path.values[idx]):g}, scale={args.scale}) -> {args.out}"
    )
    return 0


def run_cv(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    d = load_csv(args.data, _response_key(args.response), args.family)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    if args.method == "lasso":
        fitter = LassoFitter(nlambda=args.nlambda, min_ratio=args.lambda_min_ratio)
    else:
        base = argparse.Namespace(**vars(args))
        base.init_nz = "all" if args.method == "rgam" else "none"
        fitter = RgamFitter(_config_from_args(base, seed))
    model, result = fit_cv(d, fitter=fitter, k=args.k, metric=args.metric, rng=rng)
    payload = result.to_dict()
    payload["schema_version"] = MANIFEST_SCHEMA_VERSION
    payload["seed"] = seed
    payload["method"] = args.method
    _write_json(args.out, payload)
    base_path = _strip_json_suffix(args.out)
    header, raw_rows = result.csv_rows()
    rows = [
        [fmt17(r[0]), fmt17(r[1]), fmt17(r[2]), str(r[3]), str(r[4])]
        for r in raw_rows
    ]
    write_csv(base_path + ".csv", header, rows)
    if args.method != "lasso":
        save_rgam(model, base_path + ".model.json")
    _write_manifest("cv", args, args.out)
    print(
        f"cv: {result.k} folds, metric={result.metric_name}, "
        f"lambda_min index {result.lambda_min_index} "
        f"(mean {float(result.mean_metric[result.lambda_min_index]):.6g}), "
        f"lambda_1se index {result.lambda_1se_index} -> {args.out}"
    )
    return 0


def _toy_dof_problem(args: argparse.Namespace, seed: int):
    """Generated toy design for df studies: uniform features, linear signal."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(99,)))
    x = rng.uniform(-1.0, 1.0, size=(args.n, args.p))
    mu = np.sum(x[:, : min(5, args.p)], axis=1)
    return x, mu


def run_dof(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    x, mu = _toy_dof_problem(args, seed)
    if args.fitter == "ols":
        fitter = fit_ols
    elif args.fitter == "mean":
        fitter = fit_grand_mean
    elif args.fitter == "identity":
        fitter = fit_identity
    else:
        init = "all" if args.fitter == "rgam" else "none"
        try:
            cfg = RgamConfig(gamma=args.gamma, df=args.df, init_nz=init, seed=seed)
        except DataError as exc:
            raise UsageError(str(exc)) from exc
        fitter = make_rgam_dof_fitter(cfg, step1=args.step1)
    cfg = DofConfig(mu=mu, sigma=args.sigma, B=args.b, seed=seed)
    est = estimate_df(fitter, x, cfg)
    payload = est.to_dict()
    payload.update(
        {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "seed": seed,
            "fitter": args.fitter,
            "n": args.n,
            "p": args.p,
            "sigma": args.sigma,
        }
    )
    _write_json(args.out, payload)
    if args.append_csv:
        _append_dof_row(args.append_csv, payload)
    _write_manifest("dof", args, args.out)
    print(
        f"dof: fitter={args.fitter} df_hat={est.df_hat:.4f} "
        f"se={est.standard_error:.4f} (B={est.B}) -> {args.out}"
    )
    return 0


_DOF_CSV_FIELDS = ["fitter", "n", "p", "sigma", "B", "seed", "df_hat", "standard_error"]


def _append_dof_row(path: str, payload: dict) -> None:
    lines = []
    if os.path.exists(path):
        with open(path, "r", encoding="utf-8", newline="") as handle:
            text = handle.read()
        if text.strip():
            lines = text.rstrip("\n").split("\n")
    if not lines:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="\n").writerow(_DOF_CSV_FIELDS)
        lines = [buffer.getvalue().rstrip("\n")]
    row = [
        payload["fitter"],
        str(payload["n"]),
        str(payload["p"]),
        fmt17(payload["sigma"]),
        str(payload["B"]),
        str(payload["seed"]),
        fmt17(payload["df_hat"]),
        fmt17(payload["standard_error"]),
    ]
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerow(row)
    lines.append(buffer.getvalue().rstrip("\n"))
    atomic_write_text(path, "\n".join(lines) + "\n")


def run_bench(args: argparse.Namespace) -> int:
    seed = _resolve_seed(args)
    scenarios = _parse_name_list(args.scenarios, SCENARIOS, "scenario")
    methods = _parse_name_list(args.methods, DEFAULT_METHODS, "method")
    replicates = args.replicates
    if args.full_scale:
        replicates = FULL_SCALE_REPLICATES
        if "mixed_large" not in scenarios:
            scenarios = scenarios + ("mixed_large",)
    snrs = _parse_float_list(args.snrs, "snrs")
    tmp = f"{args.out}.tmp.{os.getpid()}"
    n_done = 0
    n_failed = 0
    with open(tmp, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)

        def stream(row: SimResult) -> None:
            nonlocal n_done, n_failed
            writer.writerow(row.to_row())
            handle.flush()
            n_done += 1
            if row.error:
                n_failed += 1

        try:
            run_benchmark(
                scenarios=scenarios,
                methods=methods,
                replicates=replicates,
                seed=seed,
                snrs=snrs,
                k=args.k,
                n_test=args.n_test,
                row_callback=stream,
            )
        except BaseException:
            handle.close()
            os.unlink(tmp)
            raise
    os.replace(tmp, args.out)
    _write_manifest("bench", args, args.out)
    print(f"bench: {n_done} rows ({n_failed} failed) -> {args.out}")
    return 0


def _load_results_csv(path: str) -> list[SimResult]:
    if not os.path.exists(path):
        raise DataError(f"input file not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None:
            raise DataError(f"{path} is empty")
        missing = [f for f in RESULT_FIELDS if f not in reader.fieldnames]
        if missing:
            raise DataError(f"{path} is missing columns: {', '.join(missing)}")

        def opt_float(v):
            return None if v == "" else float(v)

        def opt_int(v):
            return None if v == "" else int(v)

        results = []
        for line, row in enumerate(reader, start=2):
            try:
                results.append(
                    SimResult(
                        scenario=row["scenario"],
                        snr=float(row["snr"]),
                        method=row["method"],
                        replicate=int(row["replicate"]),
                        relative_test_error=opt_float(row["relative_test_error"]),
                        n_selected_features=opt_int(row["n_selected_features"]),
                        n_selected_linear=opt_int(row["n_selected_linear"]),
                        n_selected_nonlinear=opt_int(row["n_selected_nonlinear"]),
                        n_true_features_recovered=opt_int(
                            row["n_true_features_recovered"]
                        ),
                        lambda_index=opt_int(row["lambda_index"]),
                        seed=opt_int(row["seed"]),
                        error=row["error"],
                    )
                )
            except (ValueError, DataError) as exc:
                raise DataError(f"bad row at line {line} of {path}: {exc}") from exc
    if not results:
        raise DataError(f"{path} has no data rows")
    return results


def run_summarize(args: argparse.Namespace) -> int:
    results = _load_results_csv(args.results)
    header, rows = summary_rows(summarize_results(results))
    write_csv(args.out, header, rows)
    _write_manifest("summarize", args, args.out)
    print(f"summarize: {len(rows)} cells -> {args.out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="rgam",
        description=(
            "Sparse additive modelling: lasso paths with reluctantly added "
            "non-linear terms."
        ),
        epilog=(
            "Replay a recorded run with: rgam --from-manifest PATH. "
            "Exit codes: 0 ok, 1 usage error, 2 data error, 3 numeric failure."
        ),
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    fit = sub.add_parser(
        "fit",
        help="fit the three-step additive model on a CSV",
        description="Fit the additive model and write model JSON plus a "
        "per-lambda report CSV (lambda, deviance, nonzero linear, nonzero "
        "non-linear).",
    )
    _add_fit_flags(fit)
    fit.add_argument("--out", required=True, help="model JSON output path")
    fit.add_argument(
        "--report",
        default=None,
        help="fit-report CSV path (default: <out stem>.report.csv)",
    )
    fit.set_defaults(handler=run_fit)

    predict = sub.add_parser(
        "predict",
        help="predict from a saved model JSON",
        description="Write one prediction per input row at a chosen path "
        "point.",
    )
    predict.add_argument("model", help="model JSON from fit/cv")
    predict.add_argument("data", help="feature CSV with a header row")
    predict.add_argument("--out", required=True, help="predictions CSV path")
    predict.add_argument(
        "--scale",
        default="response",
        choices=("link", "response"),
        help="prediction scale (default: response)",
    )
    predict.add_argument(
        "--lambda-index", type=int, default=None, help="0-based path index"
    )
    predict.add_argument(
        "--lambda",
        dest="lambda_value",
        type=float,
        default=None,
        help="penalty value; the nearest path point is used (with a warning "
        "if not exact)",
    )
    predict.add_argument(
        "--cv-result",
        default=None,
        help="cv JSON output; its selected index is used",
    )
    predict.add_argument(
        "--rule",
        default="min",
        choices=("min", "1se"),
        help="which cv selection to use with --cv-result (default: min)",
    )
    predict.add_argument(
        "--response-column",
        default=None,
        help="drop this column before predicting (lets the training CSV be "
        "reused as input)",
    )
    predict.set_defaults(handler=run_predict)

    cv = sub.add_parser(
        "cv",
        help="k-fold cross-validation over the lambda path",
        description="Cross-validate a method on a CSV; writes scores JSON, "
        "a tidy per-lambda CSV, and (for additive fits) the full-data model.",
    )
    _add_fit_flags(cv)
    cv.add_argument("--out", required=True, help="cv scores JSON output path")
    cv.add_argument(
        "--method",
        default="rgam",
        choices=("lasso", "rgam", "rgam_sel"),
        help="what to cross-validate (default: rgam)",
    )
    cv.add_argument("--k", type=int, default=5, help="fold count (default: 5)")
    cv.add_argument(
        "--metric",
        default="deviance",
        choices=("deviance", "mse", "auc"),
        help="score to cross-validate (default: deviance)",
    )
    cv.set_defaults(handler=run_cv)

    dof = sub.add_parser(
        "dof",
        help="Monte Carlo effective degrees of freedom on a toy problem",
        description="Estimate a fitter's degrees of freedom on a generated "
        "uniform-design problem with a linear signal.",
    )
    dof.add_argument(
        "--fitter",
        default="ols",
        choices=("ols", "mean", "identity", "rgam", "rgam_sel"),
        help="fitting procedure to measure (default: ols)",
    )
    dof.add_argument("--n", type=int, default=30, help="observations (default: 30)")
    dof.add_argument("--p", type=int, default=5, help="features (default: 5)")
    dof.add_argument(
        "--sigma", type=float, default=1.0, help="noise sd (default: 1)"
    )
    dof.add_argument("--b", type=int, default=200, help="replicates (default: 200)")
    dof.add_argument(
        "--gamma", type=float, default=None, help="additive-model gamma override"
    )
    dof.add_argument(
        "--df", type=float, default=4.0, help="additive-model spline df (default: 4)"
    )
    dof.add_argument(
        "--step1",
        default="cv",
        choices=("cv", "unpenalized"),
        help="first-stage mode for the additive fitters (default: cv)",
    )
    dof.add_argument("--seed", type=int, default=None, help="RNG seed (printed if omitted)")
    dof.add_argument("--out", required=True, help="estimate JSON output path")
    dof.add_argument(
        "--append-csv",
        default=None,
        help="also append the estimate as a row of this results CSV",
    )
    dof.set_defaults(handler=run_dof)

    bench = sub.add_parser(
        "bench",
        help="run the synthetic benchmark grid",
        description="Fit each method on fresh replicates of the chosen "
        "scenarios and stream tidy result rows to CSV.",
    )
    bench.add_argument(
        "--scenarios",
        default=",".join(QUICK_SCENARIOS),
        help=f"comma-separated scenario names from {sorted(SCENARIOS)} "
        f"(default: the five quick ones)",
    )
    bench.add_argument(
        "--methods",
        default=",".join(DEFAULT_METHODS),
        help="comma-separated methods (default: null,lasso,rgam,rgam_sel)",
    )
    bench.add_argument(
        "--replicates",
        type=int,
        default=DEFAULT_REPLICATES,
        help="replicates per cell (default: 10)",
    )
    bench.add_argument(
        "--snrs",
        default=",".join(str(s) for s in DEFAULT_SNRS),
        help="comma-separated signal-to-noise ratios (default: 1,2,5)",
    )
    bench.add_argument(
        "--n-test", type=int, default=DEFAULT_N_TEST, help="test points (default: 5000)"
    )
    bench.add_argument("--k", type=int, default=5, help="CV folds (default: 5)")
    bench.add_argument(
        "--full-scale",
        action="store_true",
        help="30 replicates per cell and include the large scenario",
    )
    bench.add_argument("--seed", type=int, default=None, help="RNG seed (printed if omitted)")
    bench.add_argument("--out", required=True, help="tidy results CSV path")
    bench.set_defaults(handler=run_bench)

    summarize = sub.add_parser(
        "summarize",
        help="median/quartile table from benchmark results",
        description="Aggregate a bench results CSV into per-cell medians "
        "and quartiles.",
    )
    summarize.add_argument("results", help="tidy results CSV from bench")
    summarize.add_argument("--out", required=True, help="summary CSV path")
    summarize.set_defaults(handler=run_summarize)

    return parser


def _run_from_manifest(path: str) -> int:
    if not os.path.exists(path):
        raise DataError(f"manifest not found: {path}")
    with open(path, "r", encoding="utf-8") as handle:
        payload = json.load(handle)
    if payload.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise DataError(
            f"manifest schema version {payload.get('schema_version')!r} is not "
            f"supported (expected {MANIFEST_SCHEMA_VERSION!r})"
        )
    handlers = {
        "fit": run_fit,
        "predict": run_predict,
        "cv": run_cv,
        "dof": run_dof,
        "bench": run_bench,
        "summarize": run_summarize,
    }
    subcommand = payload.get("subcommand")
    if subcommand not in handlers:
        raise DataError(f"manifest has unknown subcommand {subcommand!r}")
    args = argparse.Namespace(**payload["arguments"])
    return handlers[subcommand](args)


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        if argv and argv[0] == "--from-manifest":
            if len(argv) != 2:
                raise UsageError("--from-manifest takes exactly one path")
            return _run_from_manifest(argv[1])
        parser = build_parser()
        args = parser.parse_args(argv)
        if getattr(args, "subcommand", None) is None:
            parser.print_help()
            return 1
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
