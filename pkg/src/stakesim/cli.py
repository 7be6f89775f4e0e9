"""Config ingestion, CSV/JSON/SVG emission, and the command-line surface.

Exit codes: 0 success, 2 config error, 3 runtime error.  Floating-point
values in CSVs are printed with 17 significant digits so emitted files can
be compared and replayed bit-exactly.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats as sp_stats

from .analytics import BetaParams, SampleStats, beta_limit_params, empirical_stats, predict
from .errors import (
    DegenerateBeta,
    EmptyHistogram,
    ParseError,
    SchemaError,
    StakeSimError,
)
from .montecarlo import (
    ExperimentConfig,
    ExperimentResult,
    RecordPolicy,
    TimeSeries,
    run_experiment,
)

DEFAULT_TABLE_SEED = 1009
DEFAULT_TABLE_REPS = 20_000

_TOP_KEYS = ("initial_stakes", "scheme", "reward_budget_K", "steps_n",
             "repetitions", "base_seed", "record")
_REQUIRED_KEYS = _TOP_KEYS[:-1]
_RECORD_KEYS = ("stride", "histogram_bins", "track_nodes")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def load_config(data: bytes | str) -> ExperimentConfig:
    """Parse and validate a JSON experiment config.  Unknown keys are
    rejected; `record` is optional (defaults: stride 0, 100 bins, track all
    nodes)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError:
            raise ParseError(1, "config is not valid UTF-8") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(e.lineno, e.msg) from None
    if not isinstance(doc, dict):
        raise SchemaError("$", "top level must be a JSON object")
    for key in doc:
        if key not in _TOP_KEYS:
            raise SchemaError(key, "unknown key")
    for key in _REQUIRED_KEYS:
        if key not in doc:
            raise SchemaError(key, "required key missing")

    stakes = doc["initial_stakes"]
    if not isinstance(stakes, list) or not stakes or not all(_is_number(x) for x in stakes):
        raise SchemaError("initial_stakes", "must be a non-empty array of numbers")

    scheme = doc["scheme"]
    custom_entries = None
    if isinstance(scheme, str):
        if scheme not in ("constant", "frd"):
            raise SchemaError("scheme", f"must be 'constant', 'frd', or {{'custom': ...}}, got {scheme!r}")
    elif isinstance(scheme, dict):
        if set(scheme) != {"custom"}:
            raise SchemaError("scheme", "object form must have exactly the key 'custom'")
        rows = scheme["custom"]
        if (not isinstance(rows, list) or not rows
                or not all(isinstance(r, list) and all(_is_number(x) for x in r) for r in rows)):
            raise SchemaError("scheme", "'custom' must be an array of arrays of numbers")
        custom_entries = tuple(tuple(float(x) for x in r) for r in rows)
        scheme = "custom"
    else:
        raise SchemaError("scheme", "must be a string or a {'custom': ...} object")

    if not _is_number(doc["reward_budget_K"]) or doc["reward_budget_K"] <= 0:
        raise SchemaError("reward_budget_K", "must be a number > 0")
    if not _is_int(doc["steps_n"]) or doc["steps_n"] < 0:
        raise SchemaError("steps_n", "must be an integer >= 0")
    if not _is_int(doc["repetitions"]) or doc["repetitions"] < 1:
        raise SchemaError("repetitions", "must be an integer >= 1")
    if not _is_int(doc["base_seed"]) or not 0 <= doc["base_seed"] < 2**64:
        raise SchemaError("base_seed", "must be an unsigned 64-bit integer")

    record = RecordPolicy()
    if "record" in doc:
        rec = doc["record"]
        if not isinstance(rec, dict):
            raise SchemaError("record", "must be an object")
        for key in rec:
            if key not in _RECORD_KEYS:
                raise SchemaError(f"record.{key}", "unknown key")
        stride = rec.get("stride", 0)
        bins = rec.get("histogram_bins", 100)
        track = rec.get("track_nodes")
        if not _is_int(stride) or stride < 0:
            raise SchemaError("record.stride", "must be an integer >= 0")
        if not _is_int(bins) or bins < 1:
            raise SchemaError("record.histogram_bins", "must be an integer >= 1")
        if track is not None:
            if not isinstance(track, list) or not all(_is_int(i) for i in track):
                raise SchemaError("record.track_nodes", "must be an array of integers")
            if not all(0 <= i < len(stakes) for i in track):
                raise SchemaError("record.track_nodes", "node index out of range")
            track = tuple(track)
        record = RecordPolicy(stride=stride, histogram_bins=bins, track_nodes=track)

    try:
        config = ExperimentConfig(
            initial_stakes=tuple(float(x) for x in stakes),
            scheme=scheme,
            reward_budget_K=float(doc["reward_budget_K"]),
            steps_n=doc["steps_n"],
            repetitions=doc["repetitions"],
            base_seed=doc["base_seed"],
            record=record,
            custom_entries=custom_entries,
        )
        config.reward_matrix()  # surface bad stakes / bad custom matrices now
    except SchemaError:
        raise
    except ValueError as e:
        raise SchemaError("config", str(e)) from None
    return config


def serialize_config(config: ExperimentConfig) -> dict:
    """JSON-ready dict; load_config(json.dumps(...)) round-trips exactly."""
    scheme: object = config.scheme
    if config.scheme == "custom":
        scheme = {"custom": [list(row) for row in config.custom_entries]}
    record: dict[str, object] = {
        "stride": config.record.stride,
        "histogram_bins": config.record.histogram_bins,
    }
    if config.record.track_nodes is not None:
        record["track_nodes"] = list(config.record.track_nodes)
    return {
        "initial_stakes": list(config.initial_stakes),
        "scheme": scheme,
        "reward_budget_K": config.reward_budget_K,
        "steps_n": config.steps_n,
        "repetitions": config.repetitions,
        "base_seed": config.base_seed,
        "record": record,
    }


# --- CSV ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(x, ".17g")


def write_samples_csv(result: ExperimentResult) -> bytes:
    """rep,node,final_fraction rows; rep is the absolute repetition index."""
    lines = ["rep,node,final_fraction"]
    start = result.rep_range[0]
    for i, row in enumerate(result.final_fractions):
        for j, value in enumerate(row.tolist()):
            lines.append(f"{start + i},{j},{_fmt(value)}")
    return ("\n".join(lines) + "\n").encode()


def write_stats_csv(series: TimeSeries | None) -> bytes:
    """step,node,mean,variance rows; header only when nothing was recorded."""
    lines = ["step,node,mean,variance"]
    if series is not None:
        means = series.mean()
        variances = series.variance()
        for t, step in enumerate(series.steps):
            for j, node in enumerate(series.nodes):
                lines.append(f"{step},{node},{_fmt(means[t, j])},{_fmt(variances[t, j])}")
    return ("\n".join(lines) + "\n").encode()


def load_samples_csv(data: bytes | str) -> dict[int, np.ndarray]:
    """Parse a samples.csv back into per-node fraction arrays (rep order)."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header != ["rep", "node", "final_fraction"]:
        raise SchemaError("samples", "expected header rep,node,final_fraction")
    per_node: dict[int, list[tuple[int, float]]] = {}
    for row in reader:
        if not row:
            continue
        rep, node, value = int(row[0]), int(row[1]), float(row[2])
        per_node.setdefault(node, []).append((rep, value))
    return {
        node: np.array([v for _, v in sorted(pairs)])
        for node, pairs in per_node.items()
    }


# --- SVG histogram --------------------------------------------------------------

_SVG_W, _SVG_H = 640, 400
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 60, 16, 16, 40


def render_histogram_svg(
    stats: SampleStats,
    *,
    beta: BetaParams | None = None,
    mean_marker: float | None = None,
    title: str = "",
) -> bytes:
    """Standalone SVG: density bars over [0, 1], an optional beta-density
    overlay, and an optional vertical predicted-mean marker."""
    counts = np.asarray(stats.bin_counts, dtype=np.float64)
    edges = np.asarray(stats.bin_edges, dtype=np.float64)
    total = counts.sum()
    if counts.size == 0 or total <= 0:
        raise EmptyHistogram("no counts to draw")
    widths = np.diff(edges)
    density = counts / (total * widths)

    curve = None
    if beta is not None:
        grid = np.linspace(0.002, 0.998, 250)
        curve = sp_stats.beta(beta.a, beta.b).pdf(grid)
    y_max = float(density.max())
    if curve is not None:
        y_max = max(y_max, float(np.percentile(curve, 90)))
    y_max *= 1.08

    plot_w = _SVG_W - _MARGIN_L - _MARGIN_R
    plot_h = _SVG_H - _MARGIN_T - _MARGIN_B

    def px(x: float) -> float:
        return _MARGIN_L + x * plot_w

    def py(y: float) -> float:
        return _MARGIN_T + plot_h - min(y / y_max, 1.0) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" height="{_SVG_H}" '
        f'viewBox="0 0 {_SVG_W} {_SVG_H}">',
        f'<rect x="0" y="0" width="{_SVG_W}" height="{_SVG_H}" fill="white"/>',
    ]
    for i, d in enumerate(density.tolist()):
        x0, x1 = px(edges[i]), px(edges[i + 1])
        y = py(d)
        h = _MARGIN_T + plot_h - y
        parts.append(
            f'<rect x="{x0:.2f}" y="{y:.2f}" width="{x1 - x0:.2f}" height="{h:.2f}" '
            f'fill="#4878a8" fill-opacity="0.85"/>'
        )
    if curve is not None:
        points = " ".join(
            f"{px(x):.2f},{py(y):.2f}" for x, y in zip(grid.tolist(), curve.tolist())
        )
        parts.append(
            f'<polyline points="{points}" fill="none" stroke="#c03028" stroke-width="1.5"/>'
        )
    if mean_marker is not None:
        x = px(float(mean_marker))
        parts.append(
            f'<line x1="{x:.2f}" y1="{_MARGIN_T}" x2="{x:.2f}" y2="{_MARGIN_T + plot_h}" '
            f'stroke="#208040" stroke-width="1.5" stroke-dasharray="5,4"/>'
        )
    # axes and ticks
    parts.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T + plot_h}" x2="{_SVG_W - _MARGIN_R}" '
        f'y2="{_MARGIN_T + plot_h}" stroke="black"/>'
    )
    parts.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_MARGIN_T + plot_h}" stroke="black"/>'
    )
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        x = px(tick)
        y0 = _MARGIN_T + plot_h
        parts.append(f'<line x1="{x:.2f}" y1="{y0}" x2="{x:.2f}" y2="{y0 + 5}" stroke="black"/>')
        parts.append(
            f'<text x="{x:.2f}" y="{y0 + 20}" font-size="12" text-anchor="middle" '
            f'font-family="sans-serif">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{_MARGIN_L - 8}" y="{_MARGIN_T + plot_h}" font-size="12" text-anchor="end" '
        f'font-family="sans-serif">0</text>'
    )
    parts.append(
        f'<text x="{_MARGIN_L - 8}" y="{_MARGIN_T + 12}" font-size="12" text-anchor="end" '
        f'font-family="sans-serif">{y_max:.4g}</text>'
    )
    parts.append(
        f'<text x="{px(0.5):.2f}" y="{_SVG_H - 6}" font-size="13" text-anchor="middle" '
        f'font-family="sans-serif">final fractional stake</text>'
    )
    if title:
        parts.append(
            f'<text x="{px(0.5):.2f}" y="{_MARGIN_T + 14}" font-size="13" text-anchor="middle" '
            f'font-family="sans-serif">{title}</text>'
        )
    parts.append("</svg>")
    return ("\n".join(parts) + "\n").encode()


# --- benchmark report -------------------------------------------------------------

@dataclass(frozen=True)
class ReportRow:
    """One (config, scheme) line of the benchmark report.

    For the supercritical constant scheme the predicted columns carry the
    beta-limit implied mean/variance (there is no closed form at finite n);
    nan when the beta limit is degenerate (single node).
    """

    label: str
    scheme: str
    mean_empirical: float
    var_empirical: float
    mean_predicted: float
    var_predicted: float
    regime: str


def builtin_benchmark_configs(
    repetitions: int = DEFAULT_TABLE_REPS,
    steps_n: int = 1000,
    base_seed: int = DEFAULT_TABLE_SEED,
) -> list[tuple[str, ExperimentConfig]]:
    """The four stock benchmark setups: S(0)=100, K=200, tracked node 0.

    Config i is seeded with base_seed + i: a tracked node's fraction path
    depends only on its own (w, l, v0), so sharing one seed would make the
    two share-1/10 rows literally identical.
    """
    stock = [
        ("four nodes (share 1/10)", (10.0, 30.0, 30.0, 30.0)),
        ("ten nodes (share 1/10)", (10.0,) * 10),
        ("two nodes (share 1/2)", (50.0, 50.0)),
        ("two nodes (share 1/3)", (100.0 / 3.0, 200.0 / 3.0)),
    ]
    return [
        (
            label,
            ExperimentConfig(
                initial_stakes=stakes,
                scheme="frd",
                reward_budget_K=200.0,
                steps_n=steps_n,
                repetitions=repetitions,
                base_seed=base_seed + offset,
                record=RecordPolicy(track_nodes=(0,)),
            ),
        )
        for offset, (label, stakes) in enumerate(stock)
    ]


def table1_report(
    configs: Sequence[tuple[str, ExperimentConfig]], *, workers: int = 1
) -> tuple[list[ReportRow], str]:
    """Run both the constant and frd schemes on each config's initial stakes
    and report empirical vs predicted statistics of the first tracked node.

    Returns one ReportRow per (config, scheme) and a rendered text table
    with one line per config, mirroring the benchmark table layout.
    """
    rows: list[ReportRow] = []
    for label, config in configs:
        node = config.tracked_nodes()[0]
        initial_total = sum(config.initial_stakes)
        for scheme in ("constant", "frd"):
            cfg = replace(config, scheme=scheme, custom_entries=None)
            result = run_experiment(cfg, workers=workers)
            samples = result.final_fractions[:, node]
            emp_mean = float(samples.mean())
            emp_var = float(samples.var(ddof=1)) if samples.size > 1 else 0.0
            if scheme == "constant":
                regime = "supercritical"
                try:
                    bp = beta_limit_params(cfg.initial_stakes, cfg.reward_budget_K, node)
                    pred_mean, pred_var = bp.mean, bp.variance
                except DegenerateBeta:
                    pred_mean = pred_var = float("nan")
            else:
                prediction = predict(cfg.reward_matrix(), node, initial_total, cfg.steps_n)
                pred_mean, pred_var = prediction.mean_fraction, prediction.var_fraction
                regime = prediction.regime.value
            rows.append(ReportRow(label, scheme, emp_mean, emp_var, pred_mean, pred_var, regime))
    return rows, _render_report_table(rows)


def _render_report_table(rows: Sequence[ReportRow]) -> str:
    by_label: dict[str, dict[str, ReportRow]] = {}
    for row in rows:
        by_label.setdefault(row.label, {})[row.scheme] = row
    headers = ["initial values", "mean constant", "var constant", "mean frd", "var frd"]
    table = [headers]
    for label, schemes in by_label.items():
        cells = [label]
        for scheme in ("constant", "frd"):
            row = schemes.get(scheme)
            if row is None:
                cells += ["-", "-"]
            else:
                cells.append(f"{row.mean_empirical:.4f} ({row.mean_predicted:.4f})")
                cells.append(f"{row.var_empirical:.3e} ({row.var_predicted:.3e})")
        table.append(cells)
    widths = [max(len(r[i]) for r in table) for i in range(len(headers))]
    sep = "-+-".join("-" * w for w in widths)
    out = ["empirical (predicted); constant predictions are the beta-limit values"]
    for i, row in enumerate(table):
        out.append(" | ".join(cell.ljust(w) for cell, w in zip(row, widths)))
        if i == 0:
            out.append(sep)
    return "\n".join(out)


def write_report_csv(rows: Sequence[ReportRow]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["label", "scheme", "mean_emp", "var_emp", "mean_pred", "var_pred", "regime"])
    for r in rows:
        writer.writerow(
            [r.label, r.scheme, _fmt(r.mean_empirical), _fmt(r.var_empirical),
             _fmt(r.mean_predicted), _fmt(r.var_predicted), r.regime]
        )
    return buf.getvalue().encode()


# --- subcommands ---------------------------------------------------------------

def _cmd_simulate(args) -> int:
    config = load_config(Path(args.config).read_bytes())
    print(f"base_seed={config.base_seed}")
    result = run_experiment(config, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "samples.csv").write_bytes(write_samples_csv(result))
    (out / "stats.csv").write_bytes(write_stats_csv(result.time_series))
    run_doc = {"base_seed": config.base_seed, "config": serialize_config(config)}
    (out / "run.json").write_text(json.dumps(run_doc, indent=2, sort_keys=True) + "\n")
    print(f"wrote samples.csv, stats.csv, run.json to {out}")
    return 0


def _cmd_predict(args) -> int:
    config = load_config(Path(args.config).read_bytes())
    matrix = config.reward_matrix()
    initial_total = sum(config.initial_stakes)
    nodes = []
    for node in config.tracked_nodes():
        if config.scheme == "constant":
            bp = beta_limit_params(config.initial_stakes, config.reward_budget_K, node)
            nodes.append({
                "node": node,
                "basis": "beta_limit",
                "regime": "supercritical",
                "beta_a": bp.a,
                "beta_b": bp.b,
                "mean_fraction": bp.mean,
                "var_fraction": bp.variance,
            })
        else:
            p = predict(matrix, node, initial_total, config.steps_n)
            nodes.append({
                "node": node,
                "basis": "closed_form",
                "regime": p.regime.value,
                "horizon_n": p.horizon_n,
                "mean_stake": p.mean_stake,
                "var_stake": p.var_stake,
                "mean_fraction": p.mean_fraction,
                "var_fraction": p.var_fraction,
                "leading_order_only": p.leading_order_only,
            })
    doc = {
        "scheme": config.scheme,
        "steps_n": config.steps_n,
        "reward_budget_K": config.reward_budget_K,
        "initial_total": initial_total,
        "nodes": nodes,
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def _cmd_compare(args) -> int:
    config = load_config(Path(args.config).read_bytes())
    print(f"base_seed={config.base_seed}")
    node = config.tracked_nodes()[0]
    share = config.initial_stakes[node] / sum(config.initial_stakes)
    label = f"{config.num_nodes} nodes (share {share:.4g})"
    rows, text = table1_report([(label, config)], workers=args.workers)
    print(text)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_bytes(write_report_csv(rows))
    print(f"wrote report.csv to {out}")
    return 0


def _cmd_hist(args) -> int:
    per_node = load_samples_csv(Path(args.samples).read_bytes())
    if args.node not in per_node:
        raise SchemaError("node", f"node {args.node} not present in samples")
    stats = empirical_stats(per_node[args.node], bins=args.bins)
    beta = None
    if args.beta is not None:
        try:
            a, b = (float(x) for x in args.beta.split(","))
        except ValueError:
            raise SchemaError("beta", "expected two comma-separated numbers") from None
        beta = BetaParams(a=a, b=b)
    svg = render_histogram_svg(stats, beta=beta, mean_marker=args.mean_marker)
    Path(args.out).write_bytes(svg)
    print(f"wrote {args.out}")
    return 0


def _cmd_table1(args) -> int:
    configs = builtin_benchmark_configs(repetitions=args.reps, base_seed=args.seed)
    print(f"base_seed={args.seed}")
    rows, text = table1_report(configs, workers=args.workers)
    print(text)
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_bytes(write_report_csv(rows))
        print(f"wrote report.csv to {out}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stakesim",
        description="Simulate and analyze stake evolution under proof-of-stake reward schemes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one experiment; write samples.csv, stats.csv, run.json")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("predict", help="print analytic predictions as JSON")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("compare", help="run constant and frd on the same stakes; print the report table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=".")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("hist", help="render a histogram SVG from a samples.csv")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--node", type=int, default=0)
    p.add_argument("--bins", type=int, default=100)
    p.add_argument("--beta", default=None, metavar="A,B")
    p.add_argument("--mean-marker", type=float, default=None)
    p.set_defaults(func=_cmd_hist)

    p = sub.add_parser("table1", help="run the four stock benchmark configurations end to end")
    p.add_argument("--reps", type=int, default=DEFAULT_TABLE_REPS)
    p.add_argument("--seed", type=int, default=DEFAULT_TABLE_SEED)
    p.add_argument("--out", default=None)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_table1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, SchemaError, FileNotFoundError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (StakeSimError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
