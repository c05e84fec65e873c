"""Closed-form rogue waves of the long-wave/short-wave resonance system.

The system (with coefficients 0.5 and 1) is

    i S_t + 0.5 S_xx + S L = 0,
    L_t = (|S|^2)_x,

where S is the complex short-wave envelope and L the real long wave.  A
family of rational rogue-wave solutions over the plane-wave background
|S| = a, L = b is parameterized by (a, b, k); the auxiliary constants
(sigma, rho, eta, m, n) follow from a cubic resolvent, with a two-branch
cube root split at k = -3 k_n, k_n = (2 a^2)^(1/3).  The short-wave core is
bright for k <= 0, intermediate for 0 < k < (4/3)^(1/3) k_n and dark for
(4/3)^(1/3) k_n <= k < 1.5 k_n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

REGIME_BRIGHT = "bright"
REGIME_INTERMEDIATE = "intermediate"
REGIME_DARK = "dark"


class NoRealWaveError(ValueError):
    """The requested (a, b, k) admits no real rogue-wave parameters."""


@dataclass(frozen=True)
class RWParams:
    """Background (a, b, k) plus the derived constants of the rational core."""

    a: float
    b: float
    k: float
    m: float
    n: float
    sigma: float
    rho: float
    eta: float
    k_n: float

    @property
    def regime(self):
        return classify_regime(self.k, self.a)


def classify_regime(k, a=1.0):
    k_n = (2.0 * a * a) ** (1.0 / 3.0)
    if k <= 0.0:
        return REGIME_BRIGHT
    if k < (4.0 / 3.0) ** (1.0 / 3.0) * k_n:
        return REGIME_INTERMEDIATE
    if k < 1.5 * k_n:
        return REGIME_DARK
    raise NoRealWaveError(f"no rogue wave exists for k = {k} >= 1.5 * k_n = {1.5 * k_n}")


def derive_rw_parameters(a, b, k) -> RWParams:
    """Derive (m, n, sigma, rho, eta) for background amplitude a, long-wave
    offset b and wavenumber k.

    Requires a > 0, b >= 0 and k < 1.5 k_n.  The positive root is chosen for
    n: the fields depend on n only through n^2, so the sign is unobservable.
    """
    a, b, k = float(a), float(b), float(k)
    if a <= 0:
        raise ValueError("background amplitude a must be positive")
    if b < 0:
        raise ValueError("long-wave offset b must be non-negative")
    k_n = (2.0 * a * a) ** (1.0 / 3.0)
    if k >= 1.5 * k_n:
        raise NoRealWaveError(f"k = {k} is outside the existence range k < 1.5 k_n = {1.5 * k_n}")

    sigma = k**4 / 9.0 + 6.0 * a * a * k
    rho = k**6 / 2.0 - (27.0 * a * a + 5.0 * k**3) ** 2 / 54.0
    disc = rho * rho - sigma**3
    if disc < 0.0:
        raise NoRealWaveError(
            f"cube-root branch is complex for (a, b, k) = ({a}, {b}, {k}): rho^2 - sigma^3 = {disc}"
        )
    root = np.sqrt(disc)
    if k <= -3.0 * k_n:
        eta = -np.cbrt(rho - root)
    else:
        eta = np.cbrt(-rho + root)
    if eta == 0.0:
        raise NoRealWaveError(f"degenerate eta = 0 for (a, b, k) = ({a}, {b}, {k})")

    m = (5.0 * k - np.sqrt(3.0 * (k * k + eta + sigma / eta))) / 6.0
    n_sq = (3.0 * m - k) * (m - k)
    if n_sq < 0.0:
        raise NoRealWaveError(
            f"(3m - k)(m - k) = {n_sq} < 0 for (a, b, k) = ({a}, {b}, {k}); no real wave"
        )
    return RWParams(a=a, b=b, k=k, m=float(m), n=float(np.sqrt(n_sq)),
                    sigma=float(sigma), rho=float(rho), eta=float(eta), k_n=float(k_n))


def eval_general_rw(p: RWParams, x, t):
    """Evaluate the rational rogue wave at coordinates (x, t).

    Accepts scalars or broadcastable arrays; returns (u, v, L) with
    S = u + i v.  The denominator has global minimum 1/(4 n^2) > 0.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    m, n, a, b, k = p.m, p.n, p.a, p.b, p.k

    d = (x - m * t) ** 2 + n * n * t * t + 1.0 / (4.0 * n * n)
    c1 = 2.0 * m - k
    core = 1.0 - (1j * t + 1j * x / c1 + 1.0 / (2.0 * c1 * (m - k))) / d
    carrier = a * np.exp(1j * (k * x - (0.5 * k * k - b) * t))
    s = carrier * core
    L = b + 2.0 * (n * n * t * t - (x - m * t) ** 2 + 1.0 / (4.0 * n * n)) / (d * d)
    if not (np.all(np.isfinite(s)) and np.all(np.isfinite(L))):
        raise FloatingPointError("non-finite field value in rogue-wave evaluation")
    return np.real(s), np.imag(s), L


def eval_bright_bright(x, t):
    """Explicit rational bright-bright pair ((a, b, k) = (1, 0, 0)).

    S = (-3it + 3ix + 3t^2 + 3tx + 3x^2 - 2) / (3t^2 + 3tx + 3x^2 + 1),
    L = 3 (3t^2 - 6tx - 6x^2 + 2) / (3t^2 + 3tx + 3x^2 + 1)^2.
    """
    x = np.asarray(x, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    den = 3.0 * t * t + 3.0 * t * x + 3.0 * x * x + 1.0
    u = (3.0 * t * t + 3.0 * t * x + 3.0 * x * x - 2.0) / den
    v = (3.0 * x - 3.0 * t) / den
    L = 3.0 * (3.0 * t * t - 6.0 * t * x - 6.0 * x * x + 2.0) / (den * den)
    return u, v, L


def bright_params() -> RWParams:
    return derive_rw_parameters(1.0, 0.0, 0.0)


def intermediate_params() -> RWParams:
    return derive_rw_parameters(1.0, 0.0, 0.5 * np.cbrt(2.0))


def dark_params() -> RWParams:
    return derive_rw_parameters(1.0, 0.0, 1.2 * np.cbrt(2.0))


# 6th-order central stencils
_D1_W = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_D2_W = np.array([2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0]) / 180.0
_OFFS = np.arange(-3, 4)


def verify_pde_residual(p: RWParams, xs, ts, step=1e-3, lam1=0.5, lam2=1.0):
    """Max PDE residual of the closed form over a coordinate grid.

    Both |i S_t + lam1 S_xx + S L| and |L_t - lam2 (|S|^2)_x| are evaluated
    with 6th-order central finite differences of step ``step`` applied
    directly to the closed-form fields; returns the max over the grid.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ts = np.asarray(ts, dtype=np.float64).ravel()
    X, T = np.meshgrid(xs, ts)

    def s_complex(x, t):
        u, v, _ = eval_general_rw(p, x, t)
        return u + 1j * v

    # x-direction stencil evaluations
    s_x_stack = np.stack([s_complex(X + j * step, T) for j in _OFFS])
    s_xx = np.tensordot(_D2_W, s_x_stack, axes=1) / (step * step)
    s2_x = np.tensordot(_D1_W, np.abs(s_x_stack) ** 2, axes=1) / step

    # t-direction stencil evaluations
    s_t_stack = np.stack([s_complex(X, T + j * step) for j in _OFFS])
    s_t = np.tensordot(_D1_W, s_t_stack, axes=1) / step

    u0, v0, L0 = eval_general_rw(p, X, T)
    s0 = u0 + 1j * v0
    L_t = np.tensordot(
        _D1_W, np.stack([eval_general_rw(p, X, T + j * step)[2] for j in _OFFS]), axes=1
    ) / step

    r_short = np.abs(1j * s_t + lam1 * s_xx + s0 * L0)
    r_long = np.abs(L_t - lam2 * s2_x)
    return float(max(r_short.max(), r_long.max()))


def export_grid_csv(path, xs, ts, u, v, L):
    """Write a field grid as CSV with header x,t,u,v,L.

    Row-major with t as the outer loop; 17 significant digits.
    """
    xs = np.asarray(xs).ravel()
    ts = np.asarray(ts).ravel()
    X, T = np.meshgrid(xs, ts)
    cols = np.column_stack([X.ravel(), T.ravel(),
                            np.asarray(u).ravel(), np.asarray(v).ravel(),
                            np.asarray(L).ravel()])
    np.savetxt(path, cols, delimiter=",", header="x,t,u,v,L", comments="", fmt="%.17g")
