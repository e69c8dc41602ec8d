"""Render sweep CSVs to figures; every renderer returns its annotations.

The annotations (regime crossing scales, lambda-grid argmax, phase guide
levels, demo bar values) are computed from the CSV cells alone, drawn into
the figure, and written to ``<image>.json`` so a reader can check the figure
against the data without reverse-engineering pixels.  Inputs are never
mutated; with a fixed renderer version, identical CSVs give identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "mixridge-plots"  # deterministic ids

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .schema import SchemaMismatch, read_rows

__all__ = ["plot_regimes", "plot_lambda", "plot_phase", "plot_demo", "FIGURE_KINDS"]

GUIDE_LEVELS = (math.sqrt(2 / math.pi), 1 / math.sqrt(2 * math.pi), 0.0)


def _save(fig, out_path) -> Path:
    out = Path(out_path)
    fmt = out.suffix.lstrip(".").lower() or "svg"
    if fmt not in ("svg", "png"):
        raise SchemaMismatch(f"unsupported image format {fmt!r} (svg or png)")
    if fmt == "svg":
        fig.savefig(out, format="svg", metadata={"Date": None})
    else:
        fig.savefig(out, format="png", dpi=150)
    plt.close(fig)
    return out


def _write_annotations(out: Path, annotations: dict) -> None:
    with open(str(out) + ".json", "w") as fh:
        json.dump(annotations, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dedupe_one_eps(rows):
    """Sweeps may carry several quantile levels; term columns repeat across
    them, so keep the smallest eps per key for plotting curves."""
    eps_values = sorted({r["eps"] for r in rows if r["eps"] is not None})
    if not eps_values:
        return rows, None
    eps = eps_values[0]
    return [r for r in rows if r["eps"] == eps], eps


def regime_crossings(rows):
    """Crossing scales of the three denominator terms, from CSV cells only.

    Returns (scale where the linear term first reaches sqrt(V), scale where
    the quadratic term first reaches the linear term, case tag).
    """
    rows = sorted(rows, key=lambda r: r["mu_scale"])
    lin_up_const = None
    quad_up_lin = None
    linear_ever_leads = False
    for r in rows:
        sqrt_v = math.sqrt(r["V"])
        lin = r["diamond_term"]
        quad = r["N"] * sqrt_v
        if lin_up_const is None and lin >= sqrt_v:
            lin_up_const = r["mu_scale"]
        if quad_up_lin is None and quad >= lin:
            quad_up_lin = r["mu_scale"]
        if lin >= max(sqrt_v, quad):
            linear_ever_leads = True
    case = 1 if linear_ever_leads else 2
    return lin_up_const, quad_up_lin, case


def plot_regimes(csv_paths, out_path):
    """Log-log curves of sqrt(V) (constant), Diamond*sqrt(n) (linear) and
    N*sqrt(V) (quadratic) against the mean scale, with crossings marked and
    the empirical quantile overlaid with its confidence band."""
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    fig, axes = plt.subplots(1, len(csv_paths), figsize=(6 * len(csv_paths), 4.4), squeeze=False)
    annotations = {"kind": "regimes", "inputs": []}
    for ax, path in zip(axes[0], csv_paths):
        rows, eps = _dedupe_one_eps(read_rows(path, "mu"))
        rows = sorted(rows, key=lambda r: r["mu_scale"])
        scales = [r["mu_scale"] for r in rows]
        sqrt_v = [math.sqrt(r["V"]) for r in rows]
        lin = [r["diamond_term"] for r in rows]
        quad = [r["N"] * math.sqrt(r["V"]) for r in rows]
        ax.loglog(scales, sqrt_v, label="sqrt(V)", color="tab:blue")
        ax.loglog(scales, lin, label="Diamond*sqrt(n)", color="tab:green")
        ax.loglog(scales, quad, label="N*sqrt(V)", color="tab:red")
        alpha = [(r["mu_scale"], r["alpha_hat"], r["ci_low"], r["ci_high"])
                 for r in rows if r["alpha_hat"] is not None and r["alpha_hat"] > 0]
        if alpha:
            xs, ys, lo, hi = zip(*alpha)
            ax.plot(xs, ys, "k.-", label=f"alpha_hat (eps={eps})")
            ax.fill_between(xs, [max(v, 1e-300) for v in lo], hi, color="k", alpha=0.12)
        lin_up, quad_up, case = regime_crossings(rows)
        for x, tag, color in ((lin_up, "linear>const", "tab:green"), (quad_up, "quad>linear", "tab:red")):
            if x is not None:
                ax.axvline(x, color=color, linestyle="--", alpha=0.6)
                ax.annotate(tag, (x, ax.get_ylim()[0]), rotation=90, fontsize=7,
                            textcoords="offset points", xytext=(3, 8))
        ax.set_xlabel("mean scale")
        ax.set_title(f"Case {case}: {Path(path).name}", fontsize=9)
        ax.legend(fontsize=7)
        annotations["inputs"].append(
            {
                "csv": Path(path).name,
                "case": case,
                "linear_up_const": lin_up,
                "quad_up_linear": quad_up,
            }
        )
    fig.tight_layout()
    out = _save(fig, out_path)
    _write_annotations(out, annotations)
    return annotations


def lambda_argmax(rows):
    """(lambda, ratio) of the grid argmax of the bound ratio; None if the
    ratio column is empty everywhere."""
    best = None
    for r in rows:
        if r["ratio"] is None:
            continue
        if best is None or r["ratio"] > best[1]:
            best = (r["lambda"], r["ratio"])
    return best


def plot_lambda(csv_paths, out_path):
    """Bound ratio and empirical quantile against the regularization, with a
    vertical line at zero and a marker at the grid argmax."""
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    annotations = {"kind": "lambda", "inputs": []}
    for path in csv_paths:
        rows, eps = _dedupe_one_eps(read_rows(path, "lambda"))
        rows = sorted(rows, key=lambda r: (r["lambda"] if r["lambda"] is not None else -math.inf))
        lams = [r["lambda"] for r in rows if r["ratio"] is not None]
        ratios = [r["ratio"] for r in rows if r["ratio"] is not None]
        ax.plot(lams, ratios, ".-", label=f"bound ratio ({Path(path).name})")
        emp = [(r["lambda"], r["alpha_hat"]) for r in rows if r["alpha_hat"] is not None]
        if emp:
            xs, ys = zip(*emp)
            ax.plot(xs, ys, "x--", label=f"alpha_hat (eps={eps})")
        best = lambda_argmax(rows)
        if best is not None:
            ax.plot([best[0]], [best[1]], "r*", markersize=14, label="grid argmax")
        annotations["inputs"].append(
            {
                "csv": Path(path).name,
                "argmax_lambda": None if best is None else best[0],
                "argmax_ratio": None if best is None else best[1],
            }
        )
    ax.axvline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("lambda")
    ax.set_ylabel("margin ratio")
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = _save(fig, out_path)
    _write_annotations(out, annotations)
    return annotations


def plot_phase(csv_paths, out_path):
    """Phase curves (ratio vs q, one line per n) with the three limit levels
    as horizontal guides."""
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    annotations = {"kind": "phase", "guides": list(GUIDE_LEVELS), "inputs": []}
    for path in csv_paths:
        rows, _ = _dedupe_one_eps(read_rows(path, "phase"))
        by_n = {}
        for r in rows:
            by_n.setdefault(r["n"], []).append((r["q"], r["ratio"]))
        curves = {}
        for n, pts in sorted(by_n.items()):
            pts.sort()
            ax.plot([p[0] for p in pts], [p[1] for p in pts], ".-", label=f"n={int(n)}")
            curves[str(int(n))] = pts
        annotations["inputs"].append({"csv": Path(path).name, "curves": curves})
    for level in GUIDE_LEVELS:
        ax.axhline(level, color="k", linestyle=":", linewidth=0.8)
    ax.set_xlabel("q")
    ax.set_ylabel("bound ratio")
    ax.legend(fontsize=7)
    fig.tight_layout()
    out = _save(fig, out_path)
    _write_annotations(out, annotations)
    return annotations


def plot_demo(csv_paths, out_path):
    """Training residual vs test error bars with the label-noise floor line."""
    if isinstance(csv_paths, (str, Path)):
        csv_paths = [csv_paths]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    annotations = {"kind": "demo", "inputs": []}
    offset = 0
    for path in csv_paths:
        rows, _ = _dedupe_one_eps(read_rows(path, "demo"))
        for r in rows:
            labels = [f"train res\n(m={r['mu_scale']:g})", f"test err\n(m={r['mu_scale']:g})"]
            vals = [r["train_residual_med"] or 0.0, r["test_error_med"] or 0.0]
            ax.bar([offset, offset + 1], vals, color=["tab:blue", "tab:orange"])
            ax.set_xticks(
                list(ax.get_xticks())[:offset] + [offset, offset + 1],
                labels=[t.get_text() for t in ax.get_xticklabels()][:offset] + labels,
                fontsize=7,
            )
            if r["eta"] is not None:
                ax.axhline(r["eta"], color="k", linestyle="--", linewidth=0.8)
            annotations["inputs"].append(
                {
                    "csv": Path(path).name,
                    "mu_scale": r["mu_scale"],
                    "train_residual_med": r["train_residual_med"],
                    "test_error_med": r["test_error_med"],
                    "eta": r["eta"],
                }
            )
            offset += 2
    ax.set_ylabel("median over trials")
    fig.tight_layout()
    out = _save(fig, out_path)
    _write_annotations(out, annotations)
    return annotations


FIGURE_KINDS = {
    "regimes": plot_regimes,
    "lambda": plot_lambda,
    "phase": plot_phase,
    "demo": plot_demo,
}
