"""The two figure kinds: exceedance-curve families and log-log decay fits.

Figures are drawn on an Agg canvas (no pyplot state) and saved with the
writer/date metadata fields stripped, so re-plotting the same CSV with the
same library versions produces byte-identical files.  The module draws what
the CSV says and nothing more; estimates are never recomputed here.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .csvio import read_direction_csv

_KINDS = ("png", "svg", "pdf")


def _new_axes(figsize=(7.0, 4.5)):
    fig = Figure(figsize=figsize, dpi=100)
    FigureCanvasAgg(fig)
    return fig, fig.add_subplot()


def _clean_metadata(kind: str) -> dict:
    # a key mapped to None removes the backend's autogenerated value
    if kind == "png":
        return {"Software": None}
    if kind == "svg":
        return {"Date": None}
    return {"CreationDate": None, "Producer": None, "Creator": None}


def save_figure(fig: Figure, out: str, kind: str = "png") -> None:
    """Write ``fig`` to ``out`` in the given format, timestamp-free."""
    if kind not in _KINDS:
        raise ValueError(f"unknown image kind {kind!r}, expected one of {_KINDS}")
    # fixed hashsalt: SVG element ids are otherwise randomized per process
    with matplotlib.rc_context({"svg.hashsalt": "driftplots"}):
        fig.savefig(out, format=kind, metadata=_clean_metadata(kind))


def plot_direction_curves(in_csv: str, out: str | None = None, *,
                          kind: str = "png", title: str | None = None) -> Figure:
    """One exceedance curve per block height H, CI bands shaded.

    Reads the documented direction-curve CSV and plots p_hat against v for
    every H in the file, each with its (ci_lo, ci_hi) band.  When ``out`` is
    given the figure is also written there.  Returns the Figure.
    """
    points, meta = read_direction_csv(in_csv)
    fig, ax = _new_axes()
    for H in sorted({p.H for p in points}):
        rows = sorted((p for p in points if p.H == H), key=lambda p: p.v)
        vs = [p.v for p in rows]
        ax.fill_between(vs, [p.ci_lo for p in rows], [p.ci_hi for p in rows],
                        alpha=0.25, lw=0)
        ax.plot(vs, [p.p_hat for p in rows], marker=".", label=f"H={H}")
    ax.set_xlabel("direction threshold v")
    ax.set_ylabel("exceedance fraction")
    ax.set_ylim(-0.02, 1.02)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize="small")
    if title is None:
        title = "direction curves"
        if "config_hash" in meta:
            title += f"  [{meta['config_hash']}]"
    ax.set_title(title)
    if out is not None:
        save_figure(fig, out, kind)
    return fig


@dataclass(frozen=True)
class DecayFit:
    """Result of a log-log least-squares fit of p_hat against H."""

    slope: float | None
    stderr: float | None
    ci: tuple | None          # slope +/- 2*stderr
    v_used: float             # probe threshold the rows were sliced at
    heights: tuple
    p_hats: tuple
    degenerate: str | None    # reason no fit was drawn, else None

    def to_json_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr,
                "ci": list(self.ci) if self.ci else None,
                "v_used": self.v_used, "heights": list(self.heights),
                "p_hats": list(self.p_hats), "degenerate": self.degenerate}


def plot_decay_fit(in_csv: str, out: str | None = None, *, eps, v_plus=0,
                   kind: str = "png",
                   title: str | None = None) -> tuple[Figure, DecayFit]:
    """Log-log decay of p_hat at the probe threshold v_plus + eps.

    For every H in the file the grid row nearest the probe threshold is
    taken (the CSV does not carry the v_plus estimate, so the caller
    supplies it; default 0).  Zero values cannot sit on log axes, so the
    least-squares line is fitted through the positive values only and the
    slope is annotated on the figure.  An all-zero slice short-circuits to
    a "degenerate" annotation instead of a fit, and a two-point fit carries
    an unbounded CI and emits a warning.
    """
    points, meta = read_direction_csv(in_csv)
    target = float(Fraction(v_plus) + Fraction(eps))
    heights = sorted({p.H for p in points})
    if len(heights) < 2:
        raise ValueError(f"need at least two heights to fit a decay, "
                         f"file has {heights}")
    sliced = [min((p for p in points if p.H == H),
                  key=lambda p: (abs(p.v - target), p.v)) for H in heights]
    hs = np.array(heights, dtype=np.float64)
    ps = np.array([p.p_hat for p in sliced], dtype=np.float64)
    pos = ps > 0.0

    fig, ax = _new_axes()
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("block height H")
    ax.set_ylabel(f"exceedance at v = {target:g}")
    ax.grid(True, which="both", alpha=0.3)

    slope = stderr = ci = None
    degenerate = None
    if not pos.any():
        degenerate = "all zero"
        note = "degenerate: all zero"
    elif pos.sum() == 1:
        ax.plot(hs[pos], ps[pos], "o", color="C0")
        degenerate = "single positive point"
        note = "degenerate: single positive point"
    else:
        ax.plot(hs[pos], ps[pos], "o", color="C0", label="measured")
        x = np.log(hs[pos])
        y = np.log(ps[pos])
        xbar = float(x.mean())
        sxx = float(((x - xbar) ** 2).sum())
        slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
        intercept = float(y.mean()) - slope * xbar
        if x.size > 2:
            resid = y - (intercept + slope * x)
            stderr = math.sqrt(float((resid ** 2).sum()) / (x.size - 2) / sxx)
        else:
            stderr = math.inf
            warnings.warn("decay fit over two points: slope CI is unbounded",
                          stacklevel=2)
        ci = (slope - 2.0 * stderr, slope + 2.0 * stderr)
        note = (f"slope {slope:.2f} ± {2.0 * stderr:.2f}"
                if math.isfinite(stderr) else
                f"slope {slope:.2f} (CI unbounded)")
        grid = np.geomspace(float(hs[pos].min()), float(hs[pos].max()), 64)
        ax.plot(grid, math.exp(intercept) * grid ** slope, "--", color="C1",
                label=note)
        ax.legend(loc="best", fontsize="small")
    ax.text(0.03, 0.06, note, transform=ax.transAxes, fontsize="medium",
            bbox={"boxstyle": "round", "facecolor": "white", "alpha": 0.8})
    if title is None:
        title = "exceedance decay"
        if "config_hash" in meta:
            title += f"  [{meta['config_hash']}]"
    ax.set_title(title)

    fit = DecayFit(slope=slope, stderr=stderr, ci=ci,
                   v_used=float(np.mean([p.v for p in sliced])),
                   heights=tuple(heights), p_hats=tuple(float(p) for p in ps),
                   degenerate=degenerate)
    if out is not None:
        save_figure(fig, out, kind)
    return fig, fit
