"""Report figures rendered alongside the CSV outputs of each run."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiment import SECTION_TIMES
from .optim import TRACE_COLUMNS
from .residuals import LAMBDA1_TRUE, LAMBDA2_TRUE

DPI = 130


def _save(fig, fig_dir, name):
    os.makedirs(fig_dir, exist_ok=True)
    path = os.path.join(fig_dir, name)
    fig.savefig(path, dpi=DPI, bbox_inches="tight")
    plt.close(fig)
    return path


def _trace_column(trace, name):
    i = TRACE_COLUMNS.index(name)
    return np.array([row[i] for row in trace])


def _density_panels(fig_dir, name, xs, ts, exact_field, pred_field, cuts):
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.2), sharey=True)
    extent = [xs[0], xs[-1], ts[0], ts[-1]]
    for ax, data, title in zip(
        axes, (exact_field, pred_field, np.abs(exact_field - pred_field)),
        ("exact", "learned", "|error|"),
    ):
        im = ax.imshow(data, origin="lower", aspect="auto", extent=extent,
                       cmap="viridis")
        ax.set_title(f"{name} {title}")
        ax.set_xlabel("x")
        fig.colorbar(im, ax=ax, shrink=0.9)
    for t_cut in cuts:
        axes[1].axhline(t_cut, color="darkturquoise", ls="--", lw=0.8)
    axes[0].set_ylabel("t")
    return _save(fig, fig_dir, f"field_{name}.png")


def _section_panels(fig_dir, name, xs, ts, exact_field, pred_field, cuts):
    fig, axes = plt.subplots(1, len(cuts), figsize=(2.6 * len(cuts), 2.6),
                             sharey=True)
    for ax, t_cut in zip(np.atleast_1d(axes), cuts):
        j = int(np.argmin(np.abs(ts - t_cut)))
        ax.plot(xs, exact_field[j], "b-", lw=1.5, label="exact")
        ax.plot(xs, pred_field[j], "r--", lw=1.2, label="learned")
        ax.set_title(f"t = {ts[j]:.2f}")
        ax.set_xlabel("x")
    np.atleast_1d(axes)[0].set_ylabel(name)
    np.atleast_1d(axes)[0].legend(fontsize=8)
    return _save(fig, fig_dir, f"sections_{name}.png")


def loss_curves(fig_dir, trace):
    """Loss components per iteration, one panel per optimizer phase."""
    phases = _trace_column(trace, "phase")
    iters = _trace_column(trace, "iteration").astype(float)
    fig, axes = plt.subplots(1, 2, figsize=(11, 3.6))
    for ax, phase in zip(axes, ("adam", "lbfgs")):
        mask = phases == phase
        if not mask.any():
            ax.set_visible(False)
            continue
        for name in ("total", "loss_S", "loss_L", "loss_fS", "loss_fL", "loss_a"):
            vals = _trace_column(trace, name)[mask]
            ax.semilogy(iters[mask], np.maximum(vals, 1e-300), lw=0.9, label=name)
        pen = _trace_column(trace, "penalty")[mask]
        ax.semilogy(iters[mask], np.maximum(pen, 1e-300), lw=0.9, ls=":",
                    label="penalty")
        ax.set_title(f"{phase} phase")
        ax.set_xlabel("iteration")
        ax.legend(fontsize=7, ncol=2)
    return _save(fig, fig_dir, "loss_curves.png")


def lambda_curves(fig_dir, trace):
    iters = _trace_column(trace, "iteration").astype(float)
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.2))
    for ax, name, truth in zip(axes, ("lambda1", "lambda2"),
                               (LAMBDA1_TRUE, LAMBDA2_TRUE)):
        ax.plot(iters, _trace_column(trace, name), lw=1.0)
        ax.axhline(truth, color="k", ls="--", lw=0.8)
        ax.set_xlabel("iteration")
        ax.set_title(name)
    return _save(fig, fig_dir, "lambda_curves.png")


def forward_report(fig_dir, config, grid, pred_u, pred_v, pred_L, trace):
    xs, ts = grid.xs, grid.ts
    cuts = SECTION_TIMES.get(config.kind, ())
    abs_exact = np.abs(grid.u + 1j * grid.v)
    abs_pred = np.abs(pred_u + 1j * pred_v)
    _density_panels(fig_dir, "S", xs, ts, abs_exact, abs_pred, cuts)
    _density_panels(fig_dir, "L", xs, ts, grid.L, pred_L, cuts)
    _section_panels(fig_dir, "S", xs, ts, abs_exact, abs_pred, cuts)
    _section_panels(fig_dir, "L", xs, ts, grid.L, pred_L, cuts)
    if trace:
        loss_curves(fig_dir, trace)


def inverse_report(fig_dir, config, trace):
    if trace:
        loss_curves(fig_dir, trace)
        lambda_curves(fig_dir, trace)


def sweep_report(fig_dir, alphas, noises, records):
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.4))
    width = 0.8 / max(len(alphas), 1)
    xs = np.arange(len(noises), dtype=float)
    for ax, key, title in zip(axes, ("re1_pct", "re2_pct"),
                              ("coefficient 1 error (%)", "coefficient 2 error (%)")):
        for i, alpha in enumerate(alphas):
            vals = [row[i].metrics.get(key, np.nan) for row in records]
            ax.bar(xs + i * width, vals, width=width, label=f"alpha={alpha:g}")
        ax.set_xticks(xs + 0.4 - width / 2)
        ax.set_xticklabels([f"{n:g}" for n in noises])
        ax.set_xlabel("noise level")
        ax.set_title(title)
        ax.set_yscale("log")
        ax.legend(fontsize=7)
    return _save(fig, fig_dir, "sweep_errors.png")
