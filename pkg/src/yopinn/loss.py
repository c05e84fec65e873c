"""Composite training objective: data misfit, residual misfit, slope
recovery, and the quadratic weight penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from . import network as net
from .residuals import BoundPhysics, PhysicsMode, residuals_at

DEFAULT_N_A = 100
DEFAULT_CHUNK = 10000


@dataclass
class LossBreakdown:
    loss_S: float
    loss_L: float
    loss_fS: float
    loss_fL: float
    loss_a: float
    penalty: float
    alpha: float
    total: float

    FIELDS = ("loss_S", "loss_L", "loss_fS", "loss_fL", "loss_a", "penalty", "total")

    def as_tuple(self):
        return (self.loss_S, self.loss_L, self.loss_fS, self.loss_fL,
                self.loss_a, self.penalty, self.total)


def _check_finite(name, value):
    if not np.all(np.isfinite(value)):
        raise FloatingPointError(f"non-finite value in loss term {name}")
    return value


def data_loss(field, ib_points):
    """Mean squared data misfit on labeled points; returns (loss_S, loss_L)
    as tape values.  loss_S covers both short-wave components."""
    ib_points = np.asarray(ib_points)
    if len(ib_points) == 0:
        raise ValueError("data loss needs at least one labeled point")
    tape = _field_tape(field)
    x = tape.constant(ib_points[:, 0])
    t = tape.constant(ib_points[:, 1])
    u_hat, v_hat, l_hat = field(x, t)
    n_q = len(ib_points)
    loss_s = (ad.sum_squares(u_hat - ib_points[:, 2])
              + ad.sum_squares(v_hat - ib_points[:, 3])) * (1.0 / n_q)
    loss_l = ad.sum_squares(l_hat - ib_points[:, 4]) * (1.0 / n_q)
    _check_finite("loss_S", loss_s.value)
    _check_finite("loss_L", loss_l.value)
    return loss_s, loss_l


def residual_loss(field, physics: BoundPhysics, collocation):
    """Mean squared residuals on collocation points; returns (loss_fS, loss_fL)."""
    collocation = np.asarray(collocation)
    if len(collocation) == 0:
        raise ValueError("residual loss needs at least one collocation point")
    tape = _field_tape(field)
    x = tape.leaf(collocation[:, 0])
    t = tape.leaf(collocation[:, 1])
    f_u, f_v, f_L = residuals_at(field, physics, x, t)
    n_f = len(collocation)
    loss_fs = (ad.sum_squares(f_u) + ad.sum_squares(f_v)) * (1.0 / n_f)
    loss_fl = ad.sum_squares(f_L) * (1.0 / n_f)
    _check_finite("loss_fS", loss_fs.value)
    _check_finite("loss_fL", loss_fl.value)
    return loss_fs, loss_fl


def slope_recovery(a_leaves, n_a=DEFAULT_N_A):
    """Reciprocal-exponential penalty rewarding growing activation slopes:

        1 / [ (n_a / H) * sum_d exp(mean_i a[d][i]) ]

    over the H hidden layers; decays to 0 as slopes grow."""
    if not a_leaves:
        raise ValueError("slope recovery needs at least one hidden layer")
    h = len(a_leaves)
    total = None
    for a in a_leaves:
        e = ad.exp(ad.total_sum(a) * (1.0 / a.value.size))
        total = e if total is None else total + e
    return 1.0 / (total * (n_a / h))


def l2_penalty(w_leaves):
    """Half the squared Frobenius norm of all weight matrices.

    Biases and activation slopes are excluded; the gradient with respect to
    each weight entry is exactly that entry."""
    total = None
    for w in w_leaves:
        s = ad.sum_squares(w)
        total = s if total is None else total + s
    if total is None:
        raise ValueError("no weight matrices supplied")
    return total * 0.5


def total_loss(bound: net.BoundNetwork, physics: BoundPhysics, training,
               alpha, n_a=DEFAULT_N_A):
    """Assemble the full objective on the bound network's tape.

    Returns (total DiffValue, LossBreakdown).  With alpha = 0 the penalty is
    reported but contributes nothing to the optimized total.
    """
    loss_s, loss_l = data_loss(bound, training.ib_points)
    loss_fs, loss_fl = residual_loss(bound, physics, training.collocation)
    loss_a = slope_recovery(bound.a_leaves, n_a)
    penalty = l2_penalty(bound.w_leaves)
    _check_finite("loss_a", loss_a.value)
    _check_finite("penalty", penalty.value)

    total = loss_s + loss_l + loss_fs + loss_fl + loss_a
    if alpha:
        total = total + penalty * alpha
    _check_finite("total", total.value)
    breakdown = LossBreakdown(
        loss_S=float(loss_s.value), loss_L=float(loss_l.value),
        loss_fS=float(loss_fs.value), loss_fL=float(loss_fl.value),
        loss_a=float(loss_a.value), penalty=float(penalty.value),
        alpha=float(alpha), total=float(total.value),
    )
    return total, breakdown


def _field_tape(field):
    tape = getattr(field, "tape", None)
    if tape is None:
        raise TypeError("field must carry a .tape attribute (bound network or test closure)")
    return tape


class Objective:
    """Flat-vector objective over (network parameters [, lam1, lam2]).

    Evaluates the full loss and its gradient; large collocation sets are
    processed in chunks on separate tapes with gradients accumulated in
    index order, which bounds memory without changing the result.
    """

    def __init__(self, params: net.NetworkParams, mode: PhysicsMode, training,
                 alpha, n_a=DEFAULT_N_A, chunk=DEFAULT_CHUNK, dtype=np.float64):
        ad.enable_large_alloc_reuse()
        self.template = params
        self.mode = mode
        self.training = training
        self.alpha = alpha
        self.n_a = n_a
        self.chunk = chunk
        self.dtype = np.dtype(dtype)
        self.n_net = params.size()
        self.n_total = self.n_net + (2 if mode.trainable else 0)
        self.last_breakdown = None

    def initial_vector(self):
        x = self.template.flatten()
        if self.mode.trainable:
            x = np.concatenate([x, [self.mode.lam1, self.mode.lam2]])
        return x

    def split(self, vec):
        params = self.template.unflatten(vec[: self.n_net])
        lams = (float(vec[-2]), float(vec[-1])) if self.mode.trainable else None
        return params, lams

    def _mode_at(self, lams):
        if lams is None:
            return self.mode
        return PhysicsMode(trainable=True, lam1=lams[0], lam2=lams[1])

    def __call__(self, vec):
        """Return (total, gradient); also stores the LossBreakdown."""
        params, lams = self.split(vec)
        mode = self._mode_at(lams)
        colloc = self.training.collocation
        n_f = len(colloc)
        grad = np.zeros(self.n_total)

        # data + slope recovery + weight penalty on one tape
        tape = ad.Tape(self.dtype)
        bound = net.bind(tape, params)
        loss_s, loss_l = data_loss(bound, self.training.ib_points)
        loss_a = slope_recovery(bound.a_leaves, self.n_a)
        penalty = l2_penalty(bound.w_leaves)
        part = loss_s + loss_l + loss_a
        if self.alpha:
            part = part + penalty * self.alpha
        leaves = bound.param_leaves()
        gs = ad.gradient(part, leaves)
        grad[: self.n_net] += np.concatenate([g.ravel() for g in gs]).astype(np.float64)

        # residual terms, chunked over collocation points
        fs_sum = 0.0
        fl_sum = 0.0
        for start in range(0, n_f, self.chunk):
            block = colloc[start : start + self.chunk]
            tape_c = ad.Tape(self.dtype)
            bound_c = net.bind(tape_c, params)
            physics = BoundPhysics(tape_c, mode)
            x = tape_c.leaf(block[:, 0])
            t = tape_c.leaf(block[:, 1])
            f_u, f_v, f_L = residuals_at(bound_c, physics, x, t)
            fs = ad.sum_squares(f_u) + ad.sum_squares(f_v)
            fl = ad.sum_squares(f_L)
            part_c = (fs + fl) * (1.0 / n_f)
            leaves_c = bound_c.param_leaves() + physics.lam_leaves()
            gs_c = ad.gradient(part_c, leaves_c)
            grad += np.concatenate([g.ravel() for g in gs_c]).astype(np.float64)
            fs_sum += float(fs.value)
            fl_sum += float(fl.value)

        loss_fs = fs_sum / n_f
        loss_fl = fl_sum / n_f
        _check_finite("loss_fS", loss_fs)
        _check_finite("loss_fL", loss_fl)
        total = float(part.value) + loss_fs + loss_fl
        _check_finite("total", total)
        self.last_breakdown = LossBreakdown(
            loss_S=float(loss_s.value), loss_L=float(loss_l.value),
            loss_fS=loss_fs, loss_fL=loss_fl,
            loss_a=float(loss_a.value), penalty=float(penalty.value),
            alpha=float(self.alpha), total=total,
        )
        return total, grad
