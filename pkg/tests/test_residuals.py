import numpy as np
import pytest

from yopinn import autodiff as ad
from yopinn import exact
from yopinn import network as net
from yopinn.residuals import (
    BoundPhysics,
    forward_mode,
    inverse_mode,
    residuals_at,
)


class BrightBrightField:
    """Exact bright-bright pair built from tape operations, as an oracle
    network: residuals must vanish on it."""

    def __init__(self, tape):
        self.tape = tape

    def __call__(self, x, t):
        den = (t * t) * 3.0 + (t * x) * 3.0 + (x * x) * 3.0 + 1.0
        u = ((t * t) * 3.0 + (t * x) * 3.0 + (x * x) * 3.0 - 2.0) / den
        v = (x * 3.0 - t * 3.0) / den
        L = ((t * t) * 3.0 - (t * x) * 6.0 - (x * x) * 6.0 + 2.0) * 3.0 / (den * den)
        return u, v, L


class ZeroField:
    def __init__(self, tape):
        self.tape = tape

    def __call__(self, x, t):
        zero = self.tape.constant(np.zeros_like(x.value))
        return x * 0.0, zero + 0.0, zero * 1.0


class ConstantModulusField:
    # u = cos(x), v = sin(x), L = 0: |S|^2 is constant so f_L vanishes
    def __init__(self, tape):
        self.tape = tape

    def __call__(self, x, t):
        return ad.cos(x), ad.sin(x), x * 0.0


def test_oracle_closed_form_annihilates_residuals():
    tape = ad.Tape()
    rng = np.random.default_rng(0)
    x = tape.leaf(rng.uniform(-5, 5, 200))
    t = tape.leaf(rng.uniform(-2, 2, 200))
    physics = BoundPhysics(tape, forward_mode())
    f_u, f_v, f_L = residuals_at(BrightBrightField(tape), physics, x, t)
    for f in (f_u, f_v, f_L):
        assert np.abs(f.value).max() < 1e-10


def test_zero_field_is_trivial_solution():
    tape = ad.Tape()
    x = tape.leaf(np.linspace(-1, 1, 5))
    t = tape.leaf(np.linspace(-1, 1, 5))
    f_u, f_v, f_L = residuals_at(ZeroField(tape), BoundPhysics(tape, forward_mode()), x, t)
    for f in (f_u, f_v, f_L):
        assert np.all(f.value == 0.0)


def test_constant_modulus_kills_long_wave_residual():
    tape = ad.Tape()
    x = tape.leaf(np.linspace(-2, 2, 9))
    t = tape.leaf(np.zeros(9))
    _, _, f_L = residuals_at(ConstantModulusField(tape), BoundPhysics(tape, forward_mode()), x, t)
    assert np.abs(f_L.value).max() < 1e-15


def test_sign_convention_on_monomials():
    # u = x^2, v = t, L = 1 (constants): expanding i S_t + l1 S_xx + S L
    # into real/imaginary parts must give exactly (f_u, f_v) as coded
    class Monomial:
        def __init__(self, tape):
            self.tape = tape

        def __call__(self, x, t):
            one = self.tape.constant(np.ones_like(x.value))
            return ad.square(x), t + 0.0, one + 0.0

    tape = ad.Tape()
    xv = np.array([0.7, -1.2, 2.0])
    tv = np.array([0.3, 0.5, -0.8])
    x, t = tape.leaf(xv), tape.leaf(tv)
    lam1 = 0.5
    f_u, f_v, f_L = residuals_at(Monomial(tape), BoundPhysics(tape, forward_mode(lam1, 1.0)), x, t)
    # by hand: u_t=0, v_t=1, u_xx=2, v_xx=0, u_x=2x, v_x=0, L_t=0
    assert np.allclose(f_u.value, -1.0 + lam1 * 2.0 + xv * xv * 1.0, atol=1e-14)
    assert np.allclose(f_v.value, 0.0 + 0.0 + tv * 1.0, atol=1e-14)
    assert np.allclose(f_L.value, -(2.0 * xv * xv * 2.0 * 1.0 * 0.5) * 0.0 - 2.0 * (xv * xv * 2.0 * xv) * 0.0
                       - 1.0 * (2.0 * (xv * xv) * (2.0 * xv)), atol=1e-12)


def test_residual_linear_in_coefficients():
    # df_u/dlam1 = u_xx and df_L/dlam2 = -(2 u u_x + 2 v v_x), via autodiff
    params = net.init_xavier([2, 10, 10, 3], seed=5)
    rng = np.random.default_rng(1)
    xv = rng.uniform(-2, 2, 40)
    tv = rng.uniform(-1, 1, 40)

    tape = ad.Tape()
    bound = net.bind(tape, params)
    physics = BoundPhysics(tape, inverse_mode(0.37, 0.81))
    x, t = tape.leaf(xv), tape.leaf(tv)
    f_u, f_v, f_L = residuals_at(bound, physics, x, t)
    g1 = ad.gradient(ad.total_sum(f_u), physics.lam1)
    g2 = ad.gradient(ad.total_sum(f_L), physics.lam2)

    tape2 = ad.Tape()
    bound2 = net.bind(tape2, params)
    x2, t2 = tape2.leaf(xv), tape2.leaf(tv)
    u, v, L = bound2(x2, t2)
    u_x = ad.derivative_graph(u, x2)
    v_x = ad.derivative_graph(v, x2)
    u_xx = ad.derivative_graph(u_x, x2)
    flux = 2.0 * (u.value * u_x.value + v.value * v_x.value)
    assert abs(float(g1) - u_xx.value.sum()) < 1e-12 * max(1.0, abs(u_xx.value.sum()))
    assert abs(float(g2) + flux.sum()) < 1e-12 * max(1.0, abs(flux.sum()))


def test_forward_and_inverse_agree_at_true_coefficients():
    params = net.init_xavier([2, 8, 3], seed=2)
    xv = np.linspace(-1, 1, 7)
    tv = np.linspace(-0.5, 0.5, 7)

    def run(mode):
        tape = ad.Tape()
        bound = net.bind(tape, params)
        x, t = tape.leaf(xv), tape.leaf(tv)
        return [f.value for f in residuals_at(bound, BoundPhysics(tape, mode), x, t)]

    fwd = run(forward_mode(0.5, 1.0))
    inv = run(inverse_mode(0.5, 1.0))
    for a, b in zip(fwd, inv):
        assert np.allclose(a, b, rtol=1e-14, atol=1e-15)


def test_residuals_pure_repeated_eval():
    params = net.init_xavier([2, 8, 3], seed=4)
    xv = np.linspace(-2, 2, 11)
    tv = np.linspace(-1, 1, 11)

    def run():
        tape = ad.Tape()
        bound = net.bind(tape, params)
        x, t = tape.leaf(xv), tape.leaf(tv)
        return [f.value.copy() for f in residuals_at(bound, BoundPhysics(tape, forward_mode()), x, t)]

    out1, out2 = run(), run()
    for a, b in zip(out1, out2):
        assert np.array_equal(a, b)


def test_residual_nan_reports_coordinates():
    class BadField:
        def __init__(self, tape):
            self.tape = tape

        def __call__(self, x, t):
            bad = self.tape.constant(np.full_like(x.value, np.nan))
            return x * 1.0, t * 1.0, bad * 1.0

    tape = ad.Tape()
    x = tape.leaf(np.array([0.25]))
    t = tape.leaf(np.array([0.75]))
    with pytest.raises(FloatingPointError, match=r"0\.25"):
        residuals_at(BadField(tape), BoundPhysics(tape, forward_mode()), x, t)
