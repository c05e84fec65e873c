"""Physics-informed residual networks for the long-wave/short-wave system.

With S = u + iv, the governing equations i S_t + l1 S_xx + S L = 0 and
L_t = l2 (|S|^2)_x split into three real residuals

    f_u = -v_t + l1 u_xx + u L
    f_v =  u_t + l1 v_xx + v L
    f_L =  L_t - l2 (2 u u_x + 2 v v_x)

which vanish identically on exact solutions.  In forward mode the
coefficients are fixed (0.5 and 1 for the rogue-wave families used here);
in inverse mode they are trainable scalars registered on the tape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

LAMBDA1_TRUE = 0.5
LAMBDA2_TRUE = 1.0


@dataclass(frozen=True)
class PhysicsMode:
    trainable: bool
    lam1: float
    lam2: float


def forward_mode(lam1=LAMBDA1_TRUE, lam2=LAMBDA2_TRUE) -> PhysicsMode:
    return PhysicsMode(trainable=False, lam1=lam1, lam2=lam2)


def inverse_mode(lam1_init=0.0, lam2_init=0.0) -> PhysicsMode:
    """Trainable coefficients, both initialized to 0 by default."""
    return PhysicsMode(trainable=True, lam1=lam1_init, lam2=lam2_init)


class BoundPhysics:
    """Physics mode attached to a tape; trainable coefficients become leaves."""

    def __init__(self, tape, mode: PhysicsMode):
        self.tape = tape
        self.mode = mode
        if mode.trainable:
            self.lam1 = tape.leaf(mode.lam1)
            self.lam2 = tape.leaf(mode.lam2)
        else:
            self.lam1 = mode.lam1
            self.lam2 = mode.lam2

    def lam_leaves(self):
        return [self.lam1, self.lam2] if self.mode.trainable else []


def residuals_at(field, physics: BoundPhysics, x: ad.DiffValue, t: ad.DiffValue):
    """Evaluate (f_u, f_v, f_L) at collocation leaves x, t.

    ``field`` is any tape function mapping (x, t) to (u, v, L) DiffValues --
    normally a bound network, or a closed-form construction in tests.  The
    derivatives are taken on the tape, so the residuals stay differentiable
    with respect to network parameters and trainable coefficients.
    """
    u, v, L = field(x, t)
    u_x = ad.derivative_graph(u, x)
    v_x = ad.derivative_graph(v, x)
    u_t = ad.derivative_graph(u, t)
    v_t = ad.derivative_graph(v, t)
    L_t = ad.derivative_graph(L, t)
    u_xx = ad.derivative_graph(u_x, x)
    v_xx = ad.derivative_graph(v_x, x)

    lam1, lam2 = physics.lam1, physics.lam2
    f_u = lam1 * u_xx + u * L - v_t
    f_v = lam1 * v_xx + v * L + u_t
    flux = u * u_x + v * v_x
    if isinstance(lam2, ad.DiffValue):
        f_L = L_t - lam2 * (flux * 2.0)
    else:
        f_L = L_t - flux * (2.0 * lam2)

    for name, f in (("f_u", f_u), ("f_v", f_v), ("f_L", f_L)):
        vals = f.value
        if not np.all(np.isfinite(vals)):
            bad = int(np.argmin(np.isfinite(np.atleast_1d(vals))))
            xi = np.atleast_1d(x.value)[min(bad, np.atleast_1d(x.value).size - 1)]
            ti = np.atleast_1d(t.value)[min(bad, np.atleast_1d(t.value).size - 1)]
            raise FloatingPointError(
                f"non-finite residual {name} at (x, t) = ({xi}, {ti})"
            )
    return f_u, f_v, f_L
