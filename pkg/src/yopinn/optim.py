"""Adam and L-BFGS minimizers over flat parameter vectors, plus the
two-phase training driver used by all experiments.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .loss import Objective

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
ADAM_LR = 1e-3

LBFGS_MEMORY = 50
LBFGS_C1 = 1e-4
LBFGS_C2 = 0.9
LBFGS_GTOL = 1e-9
LBFGS_FTOL = 10.0 * np.finfo(np.float64).eps


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = ADAM_LR
    beta1: float = ADAM_BETA1
    beta2: float = ADAM_BETA2
    eps: float = ADAM_EPS

    @classmethod
    def for_size(cls, n, lr=ADAM_LR):
        return cls(m=np.zeros(n), v=np.zeros(n), lr=lr)


def adam_step(state: AdamState, x, g):
    """One Adam update with bias correction; returns the new point."""
    g = np.asarray(g)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError(f"non-finite gradient at Adam step {state.step + 1}")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * g
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return x - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# L-BFGS with strong-Wolfe line search
# ---------------------------------------------------------------------------

@dataclass
class LbfgsResult:
    x: np.ndarray
    f: float
    g: np.ndarray
    iterations: int
    n_evals: int
    converged: bool
    line_search_failed: bool
    trace: list = field(default_factory=list)  # objective value per iteration


def _cubic_min(t0, f0, d0, t1, f1, d1):
    """Minimizer of the cubic matching values/derivatives at t0, t1."""
    h = t1 - t0
    if h == 0.0:
        return t0
    a = d0 + d1 - 3.0 * (f1 - f0) / h
    disc = a * a - d0 * d1
    if disc < 0.0:
        return 0.5 * (t0 + t1)
    r = np.sqrt(disc)
    if h < 0.0:
        r = -r
    denom = d1 - d0 + 2.0 * r
    if denom == 0.0:
        return 0.5 * (t0 + t1)
    t = t1 - h * (d1 + r - a) / denom
    return t


def _strong_wolfe(fun, x, f0, g0, d, c1, c2, t_init=1.0, max_evals=25):
    """Strong-Wolfe line search along d from x (bracket then zoom).

    Returns (t, f_t, g_t, n_evals, ok).  On failure, the best point seen is
    returned with ok=False.
    """
    dphi0 = float(g0 @ d)
    if dphi0 >= 0.0:
        return 0.0, f0, g0, 0, False

    def phi(t):
        f, g = fun(x + t * d)
        return f, g, float(g @ d)

    best = (0.0, f0, g0)
    evals = 0
    t_prev, f_prev, dphi_prev = 0.0, f0, dphi0
    t = t_init
    t_max = 1e10
    bracket = None
    for i in range(max_evals):
        f_t, g_t, dphi_t = phi(t)
        evals += 1
        if np.isfinite(f_t) and f_t < best[1]:
            best = (t, f_t, g_t)
        if (not np.isfinite(f_t)) or f_t > f0 + c1 * t * dphi0 or (i > 0 and f_t >= f_prev):
            bracket = (t_prev, f_prev, dphi_prev, t, f_t, dphi_t)
            break
        if abs(dphi_t) <= -c2 * dphi0:
            return t, f_t, g_t, evals, True
        if dphi_t >= 0.0:
            bracket = (t, f_t, dphi_t, t_prev, f_prev, dphi_prev)
            break
        t_prev, f_prev, dphi_prev = t, f_t, dphi_t
        t = min(2.0 * t, t_max)
    if bracket is None:
        return best[0], best[1], best[2], evals, False

    lo, f_lo, dphi_lo, hi, f_hi, dphi_hi = bracket
    g_lo = None
    while evals < max_evals:
        t = _cubic_min(lo, f_lo, dphi_lo, hi, f_hi, dphi_hi)
        width = abs(hi - lo)
        safe_lo, safe_hi = min(lo, hi), max(lo, hi)
        if not np.isfinite(t) or t <= safe_lo + 0.1 * width or t >= safe_hi - 0.1 * width:
            t = 0.5 * (lo + hi)
        f_t, g_t, dphi_t = phi(t)
        evals += 1
        if np.isfinite(f_t) and f_t < best[1]:
            best = (t, f_t, g_t)
        if (not np.isfinite(f_t)) or f_t > f0 + c1 * t * dphi0 or f_t >= f_lo:
            hi, f_hi, dphi_hi = t, f_t, dphi_t
        else:
            if abs(dphi_t) <= -c2 * dphi0:
                return t, f_t, g_t, evals, True
            if dphi_t * (hi - lo) >= 0.0:
                hi, f_hi, dphi_hi = lo, f_lo, dphi_lo
            lo, f_lo, dphi_lo, g_lo = t, f_t, dphi_t, g_t
        if width <= 1e-14 * max(1.0, abs(lo)):
            break
    if g_lo is not None and f_lo <= best[1]:
        return lo, f_lo, g_lo, evals, False
    return best[0], best[1], best[2], evals, False


def lbfgs_minimize(fun, x0, max_iter, memory=LBFGS_MEMORY, c1=LBFGS_C1, c2=LBFGS_C2,
                   gtol=LBFGS_GTOL, ftol=LBFGS_FTOL, callback=None) -> LbfgsResult:
    """Limited-memory BFGS with two-loop recursion and strong-Wolfe search.

    ``fun(x)`` must return (value, gradient).  Stops on the max-norm of the
    gradient, on relative objective decrease below ftol, on the iteration
    budget, or gracefully on a failed line search (best point retained).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    x = np.asarray(x0, dtype=np.float64).copy()
    f, g = fun(x)
    n_evals = 1
    s_hist, y_hist, rho_hist = [], [], []
    trace = []
    converged = False
    ls_failed = False
    it = 0

    for it in range(max_iter):
        gnorm = np.max(np.abs(g)) if g.size else 0.0
        if gnorm <= gtol:
            converged = True
            break

        # two-loop recursion
        q = -g.copy()
        alphas = []
        for s, y, rho in zip(reversed(s_hist), reversed(y_hist), reversed(rho_hist)):
            a = rho * (s @ q)
            alphas.append(a)
            q -= a * y
        if s_hist:
            gamma = (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
            q *= gamma
        for (s, y, rho), a in zip(zip(s_hist, y_hist, rho_hist), reversed(alphas)):
            b = rho * (y @ q)
            q += (a - b) * s
        d = q
        if not np.isfinite(d).all() or float(d @ g) >= 0.0:
            d = -g.copy()

        t_init = 1.0 if s_hist else min(1.0, 1.0 / max(np.sum(np.abs(g)), 1e-12))
        t, f_new, g_new, evals, ok = _strong_wolfe(fun, x, f, g, d, c1, c2, t_init)
        n_evals += evals
        if not ok and (t == 0.0 or f_new >= f):
            ls_failed = True
            break

        s = t * d
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * max(np.linalg.norm(y), 1e-300):
            s_hist.append(s)
            y_hist.append(y)
            rho_hist.append(1.0 / sy)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
                rho_hist.pop(0)

        x = x + s
        f_old, f = f, f_new
        g = g_new
        trace.append(f)
        if callback is not None:
            callback(it, x, f, g)
        if not ok:
            ls_failed = True
            it += 1
            break
        if abs(f_old - f) <= ftol * max(abs(f_old), abs(f), 1.0):
            converged = True
            it += 1
            break
    else:
        it = max_iter

    return LbfgsResult(x=x, f=f, g=g, iterations=it, n_evals=n_evals,
                       converged=converged, line_search_failed=ls_failed, trace=trace)


# ---------------------------------------------------------------------------
# two-phase training driver
# ---------------------------------------------------------------------------

TRACE_COLUMNS = ("iteration", "phase", "loss_S", "loss_L", "loss_fS", "loss_fL",
                 "loss_a", "penalty", "total", "lambda1", "lambda2")


@dataclass
class TrainResult:
    params: "NetworkParams"
    lambdas: tuple | None
    breakdown: "LossBreakdown"
    trace: list            # rows matching TRACE_COLUMNS
    lbfgs: LbfgsResult | None
    aborted: bool = False


def write_trace_csv(path, trace):
    with open(path, "w") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for row in trace:
            fh.write(",".join(
                v if isinstance(v, str) else format(v, ".17g") for v in row
            ) + "\n")


def train(objective: Objective, schedule, adam_lr=ADAM_LR, lbfgs_opts=None,
          checkpoint_dir=None, checkpoint_every=5000, log_every=0) -> TrainResult:
    """Adam phase followed by L-BFGS phase on the full objective.

    ``schedule`` is (adam_iters, lbfgs_iters).  Every iteration appends one
    trace row with the loss components (and the trainable coefficients in
    inverse mode).  A checkpoint is written every ``checkpoint_every``
    iterations when a directory is given, and on abort.
    """
    adam_iters, lbfgs_iters = schedule
    x = objective.initial_vector()
    trace = []

    def lam_at(vec):
        if objective.mode.trainable:
            return float(vec[-2]), float(vec[-1])
        return float("nan"), float("nan")

    def add_row(i, phase, bd, vec):
        l1, l2 = lam_at(vec)
        trace.append((i, phase) + bd.as_tuple() + (l1, l2))

    def checkpoint(vec, iteration, tag="ckpt"):
        if checkpoint_dir is None:
            return
        os.makedirs(checkpoint_dir, exist_ok=True)
        params, lams = objective.split(vec)
        extra = {"iteration": iteration}
        if lams is not None:
            extra["lambda1"], extra["lambda2"] = lams
        params.save(os.path.join(checkpoint_dir, f"{tag}_{iteration:06d}.json"), extra)

    lbfgs_result = None
    iteration = 0
    try:
        state = AdamState.for_size(objective.n_total, lr=adam_lr)
        for i in range(adam_iters):
            f, g = objective(x)
            x = adam_step(state, x, g)
            iteration += 1
            add_row(iteration, "adam", objective.last_breakdown, x)
            if checkpoint_every and iteration % checkpoint_every == 0:
                checkpoint(x, iteration)
            if log_every and iteration % log_every == 0:
                print(f"[adam {iteration}/{adam_iters}] loss = {f:.6e}", flush=True)

        if lbfgs_iters > 0:
            opts = dict(lbfgs_opts or {})

            def cb(it, xk, fk, gk):
                nonlocal iteration
                iteration += 1
                add_row(iteration, "lbfgs", objective.last_breakdown, xk)
                if checkpoint_every and iteration % checkpoint_every == 0:
                    checkpoint(xk, iteration)
                if log_every and iteration % log_every == 0:
                    print(f"[lbfgs {it + 1}/{lbfgs_iters}] loss = {fk:.6e}", flush=True)

            lbfgs_result = lbfgs_minimize(objective, x, lbfgs_iters,
                                          callback=cb, **opts)
            x = lbfgs_result.x
    except Exception:
        checkpoint(x, iteration, tag="abort")
        raise

    f, _ = objective(x)
    params, lams = objective.split(x)
    return TrainResult(params=params, lambdas=lams,
                       breakdown=objective.last_breakdown, trace=trace,
                       lbfgs=lbfgs_result)
