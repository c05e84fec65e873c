import numpy as np
import pytest

from yopinn import autodiff as ad
from yopinn import network as net


def test_record_product_rule():
    tape = ad.Tape()
    x, y = tape.leaf(2.0), tape.leaf(3.0)
    z = ad.record("mul", [x, y], 6.0, [3.0, 2.0])
    assert z.value == 6.0
    gx, gy = ad.gradient(z, [x, y])
    assert gx == 3.0 and gy == 2.0


def test_record_tanh_at_zero():
    tape = ad.Tape()
    x = tape.leaf(0.0)
    z = ad.record("tanh", [x], np.tanh(0.0), [1.0])
    assert ad.gradient(z, x) == 1.0


def test_record_exp_partial_equals_value():
    tape = ad.Tape()
    x = tape.leaf(0.1)
    v = np.exp(0.1)
    z = ad.record("exp", [x], v, [v])
    assert ad.gradient(z, x) == v


def test_record_validates_partial_count():
    tape = ad.Tape()
    x = tape.leaf(1.0)
    with pytest.raises(ValueError):
        ad.record("bad", [x], 1.0, [1.0, 2.0])


def test_tape_generation_mixing_is_hard_error():
    t1, t2 = ad.Tape(), ad.Tape()
    a, b = t1.leaf(1.0), t2.leaf(2.0)
    with pytest.raises(ad.TapeMixError):
        a + b
    with pytest.raises(ad.TapeMixError):
        ad.gradient(a * 2.0, [b])


def test_gradient_weight_norm_is_weights():
    tape = ad.Tape()
    w = tape.leaf(np.array([[1.5, -2.0], [0.25, 3.0]]))
    out = ad.sum_squares(w) * 0.5
    g = ad.gradient(out, w)
    assert np.array_equal(g, w.value)


def test_gradient_requires_scalar_output():
    tape = ad.Tape()
    x = tape.leaf(np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        ad.gradient(x * 2.0, x)


def test_gradient_zero_for_unreachable_leaf():
    tape = ad.Tape()
    a, b = tape.leaf(1.0), tape.leaf(5.0)
    g = ad.gradient(ad.exp(a), [a, b])
    assert g[1] == 0.0


def test_gradient_deterministic_repeat():
    tape = ad.Tape()
    x = tape.leaf(np.linspace(-1, 1, 7))
    out = ad.sum_squares(ad.tanh(x * 1.7) + ad.sin(x))
    g1 = ad.gradient(out, x)
    g2 = ad.gradient(out, x)
    assert np.array_equal(g1, g2)


def test_gradient_linearity():
    rng = np.random.default_rng(42)
    for _ in range(5):
        c1, c2 = rng.standard_normal(2)
        xv = rng.standard_normal(4)
        tape = ad.Tape()
        x = tape.leaf(xv)
        f = ad.sum_squares(ad.tanh(x))
        g = ad.total_sum(ad.exp(x * 0.3))
        gf = ad.gradient(f, x)
        gg = ad.gradient(g, x)
        tape2 = ad.Tape()
        x2 = tape2.leaf(xv)
        combo = ad.sum_squares(ad.tanh(x2)) * c1 + ad.total_sum(ad.exp(x2 * 0.3)) * c2
        gc = ad.gradient(combo, x2)
        assert np.allclose(gc, c1 * gf + c2 * gg, rtol=1e-13, atol=1e-13)


def _net_fun_and_grad(params, x_pt, t_pt):
    def fun(vec):
        p = params.unflatten(vec)
        tape = ad.Tape()
        bound = net.bind(tape, p)
        u, v, L = bound(tape.leaf(x_pt), tape.leaf(t_pt))
        out = ad.total_sum(u) + ad.total_sum(v) * 0.7 + ad.total_sum(L) * 1.3
        gs = ad.gradient(out, bound.param_leaves())
        return float(out.value), np.concatenate([g.ravel() for g in gs])

    return fun


def test_network_gradient_vs_central_fd():
    params = net.init_xavier([2, 16, 3], seed=11)
    fun = _net_fun_and_grad(params, np.array([0.4, -1.1]), np.array([0.2, 0.9]))
    dev = ad.check_gradient_fd(fun, params.flatten(), 1e-5)
    assert dev < 1e-6


def test_check_gradient_fd_quadratic_is_exact():
    A = np.array([[2.0, 0.3], [0.3, 1.0]])

    def fun(x):
        return 0.5 * x @ A @ x, A @ x

    dev = ad.check_gradient_fd(fun, np.array([0.7, -0.4]), 1e-4)
    assert dev < 1e-9


def test_check_gradient_fd_rejects_bad_step():
    with pytest.raises(ValueError):
        ad.check_gradient_fd(lambda x: (0.0, x), np.zeros(2), 0.0)


def test_check_gradient_fd_propagates_nan():
    def fun(x):
        return float("nan"), np.zeros_like(x)

    with pytest.raises(FloatingPointError):
        ad.check_gradient_fd(fun, np.zeros(2), 1e-5)


# -- on-tape derivatives ------------------------------------------------

def test_derivative_graph_cubic_twice():
    tape = ad.Tape()
    x = tape.leaf(2.0)
    f = x ** 3
    fx = ad.derivative_graph(f, x)
    fxx = ad.derivative_graph(fx, x)
    assert float(fx.value) == pytest.approx(12.0, abs=1e-12)
    assert float(fxx.value) == pytest.approx(12.0, abs=1e-12)


def test_derivative_graph_sin_times_t():
    tape = ad.Tape()
    x, t = tape.leaf(0.0), tape.leaf(1.0)
    f = ad.sin(x) * t
    fxx = ad.derivative_graph(ad.derivative_graph(f, x), x)
    assert float(fxx.value) == pytest.approx(0.0, abs=1e-15)


def test_derivative_graph_requires_leaf():
    tape = ad.Tape()
    x = tape.leaf(1.0)
    y = x * 2.0
    with pytest.raises(ad.NonLeafError):
        ad.derivative_graph(y * y, y)


def test_derivative_graph_zero_when_independent():
    tape = ad.Tape()
    x, t = tape.leaf(1.0), tape.leaf(2.0)
    f = ad.exp(t)
    d = ad.derivative_graph(f, x)
    assert float(d.value) == 0.0


def test_second_derivative_matches_fd_on_network():
    params = net.init_xavier([2, 12, 12, 3], seed=3)
    xs = np.linspace(-1.5, 1.5, 9)
    ts = np.full_like(xs, 0.3)
    tape = ad.Tape()
    bound = net.bind(tape, params)
    x = tape.leaf(xs)
    t = tape.leaf(ts)
    u, _, _ = bound(x, t)
    uxx = ad.derivative_graph(ad.derivative_graph(u, x), x)

    # 4th-order central stencil on the plain forward evaluation
    h = 1e-3
    stack = np.stack([net.predict(params, xs + j * h, ts)[0] for j in (-2, -1, 0, 1, 2)])
    fd = (-stack[0] + 16 * stack[1] - 30 * stack[2] + 16 * stack[3] - stack[4]) / (12 * h * h)
    assert np.max(np.abs(uxx.value - fd) / (np.abs(fd) + ad.EPS_FLOOR)) < 1e-4


def test_double_differentiation_polynomial_identities():
    rng = np.random.default_rng(0)
    for _ in range(10):
        c3, c2, c1 = rng.uniform(-2, 2, 3)
        x0 = rng.uniform(-2, 2)
        tape = ad.Tape()
        x = tape.leaf(x0)
        f = x ** 3 * c3 + x ** 2 * c2 + x * c1
        fxx = ad.derivative_graph(ad.derivative_graph(f, x), x)
        expected = 6 * c3 * x0 + 2 * c2
        assert abs(float(fxx.value) - expected) <= 1e-10 * max(1.0, abs(expected))


def test_gradient_flows_through_second_derivative():
    # d/dw of (d2/dx2 tanh(w x))^2 against central differences
    w0, x0 = 1.3, 0.6

    def uxx_of_w(w):
        tape = ad.Tape()
        wl, xl = tape.leaf(w), tape.leaf(x0)
        u = ad.tanh(wl * xl)
        return tape, wl, ad.derivative_graph(ad.derivative_graph(u, xl), xl)

    tape, wl, uxx = uxx_of_w(w0)
    g = ad.gradient(ad.square(uxx), wl)
    h = 1e-6
    fp = float(uxx_of_w(w0 + h)[2].value) ** 2
    fm = float(uxx_of_w(w0 - h)[2].value) ** 2
    fd = (fp - fm) / (2 * h)
    assert abs(g - fd) / (abs(fd) + ad.EPS_FLOOR) < 1e-7


def test_batched_derivative_shape_contract():
    tape = ad.Tape()
    x = tape.leaf(np.arange(4.0))
    t = tape.leaf(np.zeros(3))
    u = ad.square(x)
    with pytest.raises(ValueError):
        ad.derivative_graph(ad.total_sum(u), x)  # scalar out, vector leaf
    with pytest.raises(ValueError):
        ad.derivative_graph(u, t)  # shape mismatch
    d = ad.derivative_graph(u, x)
    assert np.allclose(d.value, 2 * np.arange(4.0))


def test_mixed_partial_derivative():
    tape = ad.Tape()
    x, t = tape.leaf(0.5), tape.leaf(-0.3)
    f = ad.sin(x * t)
    fx = ad.derivative_graph(f, x)
    fxt = ad.derivative_graph(fx, t)
    # d2/dxdt sin(xt) = cos(xt) - xt sin(xt)
    expected = np.cos(0.5 * -0.3) - 0.5 * -0.3 * np.sin(0.5 * -0.3)
    assert float(fxt.value) == pytest.approx(expected, rel=1e-12)
