"""Fast programmatic property suite behind ``yopinn selftest``.

A compact subset of the pytest suite covering the numerical core; runs in
seconds and returns True only if every check passes.
"""

from __future__ import annotations

import numpy as np

from . import autodiff as ad
from . import exact
from . import network as net
from .data import Domain, lhs_sample
from .loss import Objective, l2_penalty, slope_recovery
from .residuals import forward_mode


def _checks():
    rng = np.random.default_rng(2024)

    # gradient of a small adaptive-tanh network against central differences
    params = net.init_xavier([2, 8, 3], seed=7)
    x_pt, t_pt = 0.3, -0.4

    def fun_and_grad(vec):
        p = params.unflatten(vec)
        tape = ad.Tape()
        bound = net.bind(tape, p)
        u, v, L = bound(tape.leaf(x_pt), tape.leaf(t_pt))
        out = u + v * 2.0 + L * 3.0
        gs = ad.gradient(out, bound.param_leaves())
        return float(out.value), np.concatenate([g.ravel() for g in gs])

    dev = ad.check_gradient_fd(fun_and_grad, params.flatten(), 1e-5)
    yield "network gradient vs finite differences < 1e-6", dev < 1e-6

    # nested on-tape derivatives on a polynomial
    tape = ad.Tape()
    x = tape.leaf(2.0)
    f = x ** 3
    fx = ad.derivative_graph(f, x)
    fxx = ad.derivative_graph(fx, x)
    yield "d2(x^3)/dx2 at 2 equals 12", abs(float(fxx.value) - 12.0) < 1e-12

    # Latin hypercube stratification is exact
    dom = Domain(-5.0, 5.0, -2.0, 2.0, 10, 10)
    pts = lhs_sample(dom, 500, seed=3)
    ok = True
    for col, lo, hi in ((0, -5.0, 5.0), (1, -2.0, 2.0)):
        idx = np.floor((pts[:, col] - lo) / ((hi - lo) / 500)).astype(int)
        ok = ok and np.array_equal(np.sort(idx), np.arange(500))
    yield "LHS stratification exact (one point per stratum)", ok

    # slope-recovery value at initialization, independent of depth
    expected = 1.0 / (100.0 * np.exp(0.1))
    ok = True
    for depth in (1, 4, 9):
        p = net.init_xavier([2] + [16] * depth + [3], seed=0)
        tape = ad.Tape()
        bound = net.bind(tape, p)
        val = float(slope_recovery(bound.a_leaves, 100).value)
        ok = ok and abs(val - expected) < 1e-12
    yield "slope recovery at init equals 1/(100 e^0.1)", ok

    # weight-penalty gradient is exactly the weights
    p = net.init_xavier([2, 6, 3], seed=1)
    tape = ad.Tape()
    bound = net.bind(tape, p)
    pen = l2_penalty(bound.w_leaves)
    gs = ad.gradient(pen, bound.w_leaves)
    ok = all(np.array_equal(g, w) for g, w in zip(gs, p.weights))
    yield "weight-penalty gradient equals the weights exactly", ok

    # one plain gradient step on the regularized loss shrinks weights
    # multiplicatively: W - eta*(dL + alpha*W) == (1 - eta*alpha)*W - eta*dL
    from .data import TrainingSet

    p = net.init_xavier([2, 5, 3], seed=2)
    ib = rng.uniform(-1, 1, (12, 5))
    colloc = rng.uniform(-1, 1, (15, 2))
    ts = TrainingSet(ib, colloc, Domain(-1, 1, -1, 1, 2, 2), seed=0)
    alpha, eta = 1e-2, 1e-3
    obj_reg = Objective(p, forward_mode(), ts, alpha=alpha)
    obj_plain = Objective(p, forward_mode(), ts, alpha=0.0)
    x0 = obj_reg.initial_vector()
    _, g_reg = obj_reg(x0)
    _, g_plain = obj_plain(x0)
    stepped = x0 - eta * g_reg
    ok = True
    for lo, hi in p.weight_slices():
        target = (1.0 - eta * alpha) * x0[lo:hi] - eta * g_plain[lo:hi]
        ok = ok and np.allclose(stepped[lo:hi], target, rtol=0, atol=1e-15)
    yield "weight-decay single-step shrink identity", ok

    # closed forms: derived parameters and explicit pair agree
    bp = exact.bright_params()
    ok = abs(bp.m + 0.5) < 1e-12 and abs(bp.n - np.sqrt(3) / 2) < 1e-12
    xs = rng.uniform(-5, 5, 200)
    ts_ = rng.uniform(-2, 2, 200)
    u1, v1, L1 = exact.eval_bright_bright(xs, ts_)
    u2, v2, L2 = exact.eval_general_rw(bp, xs, ts_)
    ok = ok and max(np.abs(u1 - u2).max(), np.abs(v1 - v2).max(),
                    np.abs(L1 - L2).max()) < 1e-12
    yield "bright-bright closed form matches general formula", ok


def run_selftest(verbose=True):
    all_ok = True
    for label, ok in _checks():
        all_ok = all_ok and ok
        if verbose:
            print(f"  [{'PASS' if ok else 'FAIL'}] {label}")
    if verbose:
        print("selftest PASSED" if all_ok else "selftest FAILED")
    return all_ok
