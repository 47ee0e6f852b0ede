# -*- coding: utf-8 -*-
"""
Writers for run outputs: report.json, losses.csv, labels.txt, overview.yml
and the grid tables and charts of sweeps, ablations and repeated runs.
"""
import json
import os
import xml.etree.ElementTree as ET
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from cgcn.globals import (
    LABELS_FNAME,
    LOSS_COLUMNS,
    LOSSES_FNAME,
    METRIC_NAMES,
    REPORT_FNAME,
    SWEEP_FNAME,
    SWEEP_SVG_TEMPLATE,
)
from cgcn.graph import GraphDataset, describe
from cgcn.train import (
    AblationResult,
    RunReport,
    SweepResult,
    TraceEntry,
    metric_summary,
)
from cgcn.utils import update_summary_file

SVG_WIDTH = 480
SVG_HEIGHT = 320
SVG_MARGIN = 40
SVG_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
              "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _metric_row(metrics: Optional[Dict[str, float]]) -> Dict[str, float]:
    if metrics is None:
        return {m: np.nan for m in METRIC_NAMES}
    return {m: metrics[m] for m in METRIC_NAMES}


def write_report_json(path: str, report: RunReport) -> str:
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def losses_frame(trace: Sequence[TraceEntry]) -> pd.DataFrame:
    rows = [{"epoch": e.epoch, "phase": e.phase, **e.losses.as_dict()}
            for e in trace]
    return pd.DataFrame(rows, columns=LOSS_COLUMNS)


def write_losses_csv(path: str, trace: Sequence[TraceEntry]) -> str:
    losses_frame(trace).to_csv(path, index=False)
    return path


def write_labels(path: str, labels: Sequence[int]) -> str:
    np.savetxt(path, np.asarray(labels, dtype=int), fmt="%d")
    return path


def write_run_outputs(out_dir: str,
                      report: RunReport,
                      dataset: GraphDataset = None,
                      extra: dict = None) -> Dict[str, str]:
    """
    Write report.json, losses.csv, labels.txt and overview.yml of one run.

    Parameters
    ----------
    out_dir: str
        Output directory, created if missing.
    report: RunReport
        Run to write.
    dataset: GraphDataset, optional (default: None)
        Dataset the run used; described in overview.yml.
    extra: dict, optional (default: None)
        Other properties for overview.yml.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "report": write_report_json(os.path.join(out_dir, REPORT_FNAME),
                                    report),
        "losses": write_losses_csv(os.path.join(out_dir, LOSSES_FNAME),
                                   report.trace),
        "labels": write_labels(os.path.join(out_dir, LABELS_FNAME),
                               report.labels),
    }
    props = {"command": "train", "config": report.config,
             "wall_clock_seconds": round(report.wall_clock, 3)}
    if dataset is not None:
        props["dataset"] = dict(describe(dataset), name=dataset.name)
    if report.metrics is not None:
        props["metrics"] = dict(report.metrics)
    props.update(extra or {})
    paths["summary"] = update_summary_file(out_dir, props)
    return paths


def sweep_frame(result: SweepResult) -> pd.DataFrame:
    rows = [{"alpha": a, "beta": b, **_metric_row(r.metrics)}
            for a, b, r in result.cells()]
    return pd.DataFrame(rows, columns=["alpha", "beta"] + METRIC_NAMES)


def write_sweep_csv(path: str, result: SweepResult) -> str:
    sweep_frame(result).to_csv(path, index=False)
    return path


def _svg_chart(swept: str, fixed: str, xs: Sequence[float],
               slices: Dict[float, Sequence[float]], metric: str) -> str:
    """Line chart with one polyline per value of the fixed parameter."""
    plot_w = SVG_WIDTH - 2 * SVG_MARGIN
    plot_h = SVG_HEIGHT - 2 * SVG_MARGIN
    values = [v for ys in slices.values() for v in ys if np.isfinite(v)]
    y_lo = min([0.0] + values)
    y_hi = max([1.0] + values)
    x_lo, x_hi = min(xs), max(xs)
    x_span = (x_hi - x_lo) or 1.0

    def _x(v):
        return SVG_MARGIN + (v - x_lo) / x_span * plot_w

    def _y(v):
        return SVG_HEIGHT - SVG_MARGIN - (v - y_lo) / (y_hi - y_lo) * plot_h

    svg = ET.Element("svg", {
        "xmlns": "http://www.w3.org/2000/svg",
        "width": str(SVG_WIDTH),
        "height": str(SVG_HEIGHT),
        "viewBox": f"0 0 {SVG_WIDTH} {SVG_HEIGHT}",
    })
    ET.SubElement(svg, "title").text = f"{metric} over {swept}"
    axes = ET.SubElement(svg, "g", {"stroke": "black", "class": "axes"})
    ET.SubElement(axes, "line", {
        "x1": str(SVG_MARGIN), "y1": str(SVG_HEIGHT - SVG_MARGIN),
        "x2": str(SVG_WIDTH - SVG_MARGIN),
        "y2": str(SVG_HEIGHT - SVG_MARGIN)})
    ET.SubElement(axes, "line", {
        "x1": str(SVG_MARGIN), "y1": str(SVG_MARGIN),
        "x2": str(SVG_MARGIN), "y2": str(SVG_HEIGHT - SVG_MARGIN)})
    for x in xs:
        tick = ET.SubElement(svg, "text", {
            "x": f"{_x(x):.2f}", "y": str(SVG_HEIGHT - SVG_MARGIN / 2),
            "text-anchor": "middle", "font-size": "10"})
        tick.text = f"{x:g}"
    ET.SubElement(svg, "text", {
        "x": str(SVG_WIDTH / 2), "y": str(SVG_HEIGHT - 4),
        "text-anchor": "middle", "font-size": "12"}).text = swept
    ET.SubElement(svg, "text", {
        "x": "4", "y": str(SVG_MARGIN - 8),
        "font-size": "12"}).text = metric

    for i, (fixed_value, ys) in enumerate(slices.items()):
        points = " ".join(f"{_x(x):.2f},{_y(y):.2f}"
                          for x, y in zip(xs, ys) if np.isfinite(y))
        line = ET.SubElement(svg, "polyline", {
            "points": points,
            "fill": "none",
            "stroke": SVG_COLORS[i % len(SVG_COLORS)],
            "stroke-width": "2",
            "data-fixed": f"{fixed}={fixed_value:g}",
        })
        ET.SubElement(line, "title").text = f"{fixed}={fixed_value:g}"
    return ET.tostring(svg, encoding="unicode")


def write_sweep_svgs(out_dir: str, result: SweepResult,
                     metric: str = "acc") -> Dict[str, str]:
    """
    Two charts of `metric`: over alpha with one line per beta, and over beta
    with one line per alpha.
    """
    df = sweep_frame(result)
    table = df.pivot(index="alpha", columns="beta", values=metric)
    charts = {
        "alpha": _svg_chart("alpha", "beta", list(result.alphas), {
            b: [table.loc[a, b] for a in result.alphas] for b in result.betas
        }, metric),
        "beta": _svg_chart("beta", "alpha", list(result.betas), {
            a: [table.loc[a, b] for b in result.betas] for a in result.alphas
        }, metric),
    }
    paths = {}
    for param, svg in charts.items():
        path = os.path.join(out_dir, SWEEP_SVG_TEMPLATE.format(param=param))
        with open(path, "w") as f:
            f.write(svg)
            f.write("\n")
        paths[param] = path
    return paths


def write_sweep_outputs(out_dir: str, result: SweepResult,
                        metric: str = "acc") -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    paths = write_sweep_svgs(out_dir, result, metric)
    paths["csv"] = write_sweep_csv(os.path.join(out_dir, SWEEP_FNAME), result)
    return paths


def ablation_frame(result: AblationResult) -> pd.DataFrame:
    """
    One row per variant: mean and std of every metric over the seeds and the
    difference of the means against the base variant.
    """
    summary = result.summary()
    base = summary[result.variants[0]]["mean"]
    rows = []
    for variant in result.variants:
        flags = result.reports[variant][0].config
        row = {
            "variant": variant,
            "enable_contrastive": flags["enable_contrastive"],
            "enable_multi_order": flags["enable_multi_order"],
            "n_seeds": len(result.reports[variant]),
        }
        mean, std = summary[variant]["mean"], summary[variant]["std"]
        row.update(mean)
        row.update({f"{m}_std": std[m] for m in METRIC_NAMES})
        row.update({f"{m}_delta": mean[m] - base[m] for m in METRIC_NAMES})
        rows.append(row)
    return pd.DataFrame(rows)


def write_ablation_csv(path: str, result: AblationResult) -> str:
    ablation_frame(result).to_csv(path, index=False)
    return path


def repeat_frame(reports: Sequence[RunReport]) -> pd.DataFrame:
    """One row per seed followed by 'mean' and 'std' rows."""
    rows = [{"seed": str(r.seed), **_metric_row(r.metrics)} for r in reports]
    summary = metric_summary(reports)
    rows.append({"seed": "mean", **summary["mean"]})
    rows.append({"seed": "std", **summary["std"]})
    return pd.DataFrame(rows, columns=["seed"] + METRIC_NAMES)


def write_repeat_csv(path: str, reports: Sequence[RunReport]) -> str:
    repeat_frame(reports).to_csv(path, index=False)
    return path

