import numpy as np
import pytest

from yopinn import exact

# reference values recomputed independently at 50-digit precision
# (mpmath script: cubic resolvent of the parameter relations)
INTERMEDIATE_M = -0.099091597516168936
INTERMEDIATE_N = 0.82219394077287669
DARK_M = 0.41792630564809854
DARK_N = 0.53139889602462350


def test_bright_parameters_exact():
    p = exact.derive_rw_parameters(1.0, 0.0, 0.0)
    assert p.m == pytest.approx(-0.5, abs=1e-12)
    assert p.n == pytest.approx(np.sqrt(3.0) / 2.0, abs=1e-12)


def test_intermediate_parameters():
    p = exact.derive_rw_parameters(1.0, 0.0, 0.5 * np.cbrt(2.0))
    assert p.m == pytest.approx(INTERMEDIATE_M, abs=1e-12)
    assert p.n == pytest.approx(INTERMEDIATE_N, abs=1e-12)


def test_dark_parameters():
    p = exact.derive_rw_parameters(1.0, 0.0, 1.2 * np.cbrt(2.0))
    assert p.m == pytest.approx(DARK_M, abs=1e-12)
    assert p.n == pytest.approx(DARK_N, abs=1e-12)


def test_parameter_domain_validation():
    with pytest.raises(ValueError):
        exact.derive_rw_parameters(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        exact.derive_rw_parameters(1.0, -0.5, 0.0)
    with pytest.raises(exact.NoRealWaveError):
        exact.derive_rw_parameters(1.0, 0.0, 1.5 * np.cbrt(2.0))  # at existence limit


def test_regime_classification():
    kn = np.cbrt(2.0)
    cases = {
        -1.0: exact.REGIME_BRIGHT,
        0.0: exact.REGIME_BRIGHT,
        0.5 * kn: exact.REGIME_INTERMEDIATE,
        (4.0 / 3.0) ** (1.0 / 3.0) * kn: exact.REGIME_DARK,
        1.2 * kn: exact.REGIME_DARK,
    }
    for k, regime in cases.items():
        assert exact.classify_regime(k, 1.0) == regime
    with pytest.raises(exact.NoRealWaveError):
        exact.classify_regime(1.5 * kn, 1.0)


def test_branch_seam_both_branches_agree_and_degenerate():
    # at the seam k = -3 k_n, sigma vanishes and both cube-root branches
    # agree on eta = 0: the parameter formula is degenerate exactly there
    # (removable limit), which the derivation reports as an error
    a = 1.0
    k = -3.0 * (2.0 * a * a) ** (1.0 / 3.0)
    sigma = k**4 / 9.0 + 6.0 * a * a * k
    rho = k**6 / 2.0 - (27.0 * a * a + 5.0 * k**3) ** 2 / 54.0
    root = np.sqrt(rho * rho - sigma**3)
    eta_lo = -np.cbrt(rho - root)
    eta_hi = np.cbrt(-rho + root)
    assert abs(sigma) < 1e-10
    assert eta_lo == pytest.approx(0.0, abs=1e-6)
    assert eta_hi == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(exact.NoRealWaveError, match="degenerate"):
        exact.derive_rw_parameters(a, 0.0, k)
    # slightly off the seam both sides are healthy bright-regime waves
    for k_off in (k * (1 + 1e-3), k * (1 - 1e-3)):
        p = exact.derive_rw_parameters(a, 0.0, k_off)
        assert np.isfinite(p.m) and p.n > 0


def test_bright_bright_origin_amplitudes():
    u, v, L = exact.eval_bright_bright(0.0, 0.0)
    assert np.hypot(u, v) == 2.0
    assert float(u) == -2.0 and float(v) == 0.0
    assert float(L) == 6.0


def test_bright_bright_hand_point():
    u, v, L = exact.eval_bright_bright(1.0, 0.0)
    assert float(u) == pytest.approx(0.25, abs=1e-15)
    assert float(v) == pytest.approx(0.75, abs=1e-15)
    assert float(L) == pytest.approx(-0.75, abs=1e-15)


def test_general_rw_matches_bright_bright():
    p = exact.bright_params()
    rng = np.random.default_rng(0)
    x = rng.uniform(-5, 5, 10_000)
    t = rng.uniform(-2, 2, 10_000)
    u1, v1, L1 = exact.eval_bright_bright(x, t)
    u2, v2, L2 = exact.eval_general_rw(p, x, t)
    assert np.abs(u1 - u2).max() < 1e-12
    assert np.abs(v1 - v2).max() < 1e-12
    assert np.abs(L1 - L2).max() < 1e-12


def test_background_limits():
    p = exact.bright_params()
    u, v, L = exact.eval_general_rw(p, 1e3, 0.0)
    assert abs(np.hypot(u, v) - 1.0) < 1e-4
    assert abs(L) < 1e-4


def test_long_wave_tends_to_offset():
    p = exact.derive_rw_parameters(1.0, 0.7, 0.0)
    _, _, L = exact.eval_general_rw(p, 500.0, 300.0)
    assert L == pytest.approx(0.7, abs=1e-4)


def test_eval_deterministic():
    p = exact.dark_params()
    x = np.linspace(-5, 5, 101)
    t = np.linspace(-2, 2, 101)
    out1 = exact.eval_general_rw(p, x, t)
    out2 = exact.eval_general_rw(p, x, t)
    assert all(np.array_equal(a, b) for a, b in zip(out1, out2))


def test_denominator_positive_minimum():
    for p in (exact.bright_params(), exact.intermediate_params(), exact.dark_params()):
        rng = np.random.default_rng(1)
        x = rng.uniform(-20, 20, 5000)
        t = rng.uniform(-20, 20, 5000)
        d = (x - p.m * t) ** 2 + p.n**2 * t**2 + 1.0 / (4.0 * p.n**2)
        assert d.min() >= 1.0 / (4.0 * p.n**2) - 1e-15


def test_bright_bright_modulus_symmetry():
    rng = np.random.default_rng(3)
    x = rng.uniform(-4, 4, 500)
    t = rng.uniform(-2, 2, 500)
    u1, v1, _ = exact.eval_bright_bright(x, t)
    u2, v2, _ = exact.eval_bright_bright(-x, -t)
    assert np.allclose(np.hypot(u1, v1), np.hypot(u2, v2), rtol=0, atol=1e-13)


@pytest.mark.parametrize("family", ["bright", "intermediate", "dark"])
def test_pde_residual_small(family):
    p = getattr(exact, f"{family}_params")()
    xs = np.linspace(-5, 5, 81)
    ts = np.linspace(-2, 2, 41)
    assert exact.verify_pde_residual(p, xs, ts) < 1e-6


def test_pde_residual_on_background():
    # far from the core the fields are an exact plane-wave background;
    # a larger step keeps the stencil's roundoff amplification below the
    # tolerance (truncation is negligible on the nearly constant fields)
    p = exact.bright_params()
    xs = np.linspace(400.0, 401.0, 5)
    ts = np.linspace(200.0, 201.0, 5)
    assert exact.verify_pde_residual(p, xs, ts, step=1e-2) < 1e-10


def test_grid_export_csv_roundtrip(tmp_path):
    p = exact.bright_params()
    xs = np.linspace(-1, 1, 5)
    ts = np.linspace(-0.5, 0.5, 3)
    X, T = np.meshgrid(xs, ts)
    u, v, L = exact.eval_general_rw(p, X, T)
    path = tmp_path / "grid.csv"
    exact.export_grid_csv(path, xs, ts, u, v, L)
    with open(path) as fh:
        assert fh.readline().strip() == "x,t,u,v,L"
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert data.shape == (15, 5)
    # row-major with t as the outer loop, lossless at 17 significant digits
    assert np.array_equal(data[:, 0], X.ravel())
    assert np.array_equal(data[:, 2], u.ravel())
