import numpy as np
import pytest

from yopinn import autodiff as ad
from yopinn import network as net


def test_init_slopes_and_scale():
    p = net.init_xavier([2] + [40] * 9 + [3], seed=0)
    for a in p.slopes:
        assert np.all(a == 0.1)
    assert p.scale == 10.0
    assert p.scale * p.slopes[0][0, 0] == 1.0


def test_init_same_seed_bit_identical():
    p1 = net.init_xavier([2, 40, 40, 3], seed=77)
    p2 = net.init_xavier([2, 40, 40, 3], seed=77)
    assert all(np.array_equal(a, b) for a, b in zip(p1.arrays(), p2.arrays()))


def test_init_biases_zero():
    p = net.init_xavier([2, 8, 3], seed=1)
    assert all(np.all(b == 0) for b in p.biases)


def test_xavier_variance_first_layer():
    # empirical variance over many draws of W^1 entries vs 2/(2+40)
    samples = []
    for seed in range(1250):
        samples.append(net.init_xavier([2, 40, 3], seed=seed).weights[0].ravel())
    w = np.concatenate(samples)  # 100k entries
    assert w.size == 100_000
    target = 2.0 / 42.0
    assert abs(w.var() - target) / target < 0.05


def test_init_rejects_bad_architectures():
    with pytest.raises(ValueError):
        net.init_xavier([2, 0, 3], seed=0)
    with pytest.raises(ValueError):
        net.init_xavier([2, 3], seed=0)
    with pytest.raises(ValueError):
        net.init_xavier([1, 8, 3], seed=0)


def test_forward_zero_params_collapse():
    p = net.init_xavier([2, 6, 6, 3], seed=0)
    for w in p.weights:
        w[:] = 0.0
    tape = ad.Tape()
    u, v, L = net.bind(tape, p)(tape.leaf([0.3, -2.0]), tape.leaf([1.0, 0.5]))
    assert np.all(u.value == 0) and np.all(v.value == 0) and np.all(L.value == 0)


def test_forward_single_neuron_identity_scaling():
    # one hidden neuron, W=1, b=0, a=0.1, n=10: hidden value is tanh(x+t)
    p = net.NetworkParams(
        layers=[2, 1, 3],
        weights=[np.ones((1, 2)), np.ones((3, 1))],
        biases=[np.zeros((1, 1)), np.zeros((3, 1))],
        slopes=[np.full((1, 1), 0.1)],
        scale=10.0,
    )
    tape = ad.Tape()
    u, _, _ = net.bind(tape, p)(tape.leaf([0.5]), tape.leaf([0.0]))
    assert float(u.value[0]) == np.tanh(0.5)


def test_forward_depends_on_slope_scale_product_only():
    p1 = net.init_xavier([2, 10, 10, 3], seed=5)
    p2 = p1.copy()
    p2.scale = p1.scale / 2.0
    for a in p2.slopes:
        a *= 2.0
    x = np.linspace(-2, 2, 11)
    t = np.linspace(-1, 1, 11)
    out1 = net.predict(p1, x, t)
    out2 = net.predict(p2, x, t)
    assert all(np.array_equal(a, b) for a, b in zip(out1, out2))


def test_forward_frozen_slopes_is_plain_tanh_mlp():
    p = net.init_xavier([2, 12, 12, 3], seed=9)
    for a in p.slopes:
        a[:] = 1.0 / p.scale
    x = np.linspace(-3, 3, 17)
    t = np.linspace(-2, 2, 17)
    u, v, L = net.predict(p, x, t)

    h = np.stack([x, t])
    for d in range(len(p.slopes)):
        h = np.tanh(p.weights[d] @ h + p.biases[d])
    out = p.weights[-1] @ h + p.biases[-1]
    assert np.array_equal(u, out[0]) and np.array_equal(L, out[2])


def test_forward_tape_matches_predict():
    p = net.init_xavier([2, 9, 7, 3], seed=2)
    x = np.linspace(-1, 1, 13)
    t = np.linspace(0, 2, 13)
    tape = ad.Tape()
    u, v, L = net.bind(tape, p)(tape.leaf(x), tape.leaf(t))
    pu, pv, pL = net.predict(p, x, t)
    assert np.array_equal(u.value, pu)
    assert np.array_equal(v.value, pv)
    assert np.array_equal(L.value, pL)


def test_forward_nan_raises_with_layer():
    p = net.init_xavier([2, 4, 3], seed=0)
    p.weights[0][0, 0] = np.nan
    tape = ad.Tape()
    with pytest.raises(FloatingPointError, match="layer 1"):
        net.bind(tape, p)(tape.leaf([1.0]), tape.leaf([1.0]))


def test_flatten_unflatten_roundtrip():
    p = net.init_xavier([2, 7, 5, 3], seed=13)
    vec = p.flatten()
    q = p.unflatten(vec)
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))
    with pytest.raises(ValueError):
        p.unflatten(vec[:-1])


def test_weight_slices_cover_weights_only():
    p = net.init_xavier([2, 7, 5, 3], seed=13)
    vec = p.flatten()
    for (lo, hi), w in zip(p.weight_slices(), p.weights):
        assert np.array_equal(vec[lo:hi], w.ravel())


def test_checkpoint_roundtrip_exact(tmp_path):
    p = net.init_xavier([2, 10, 10, 3], seed=21)
    p.weights[0][0, 0] = np.pi  # exercise full-precision float round-trip
    path = tmp_path / "params.json"
    p.save(path)
    q = net.NetworkParams.load(path)
    assert q.layers == p.layers
    assert q.seed == p.seed and q.scale == p.scale
    assert all(np.array_equal(a, b) for a, b in zip(p.arrays(), q.arrays()))


def test_forward_bounded_gradient_in_inputs():
    # tanh network: output changes are Lipschitz in (x, t) for bounded params
    p = net.init_xavier([2, 16, 16, 3], seed=4)
    rng = np.random.default_rng(0)
    x = rng.uniform(-5, 5, 200)
    t = rng.uniform(-2, 2, 200)
    eps = 1e-4
    u0 = net.predict(p, x, t)[0]
    u1 = net.predict(p, x + eps, t)[0]
    lip = np.max(np.abs(u1 - u0)) / eps
    bound = np.prod([np.abs(w).sum(axis=1).max() for w in p.weights])
    assert lip <= bound
