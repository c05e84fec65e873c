"""Training-set construction: exact-solution grids, initial/boundary
extraction, Latin hypercube collocation sampling and noise injection.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

import numpy as np

from .exact import RWParams, eval_general_rw

IB_COLUMNS = "x,t,u,v,L"


@dataclass(frozen=True)
class Domain:
    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float
    nx: int
    nt: int

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.t_lo < self.t_hi):
            raise ValueError("domain bounds must be ordered")
        if self.nx < 2 or self.nt < 2:
            raise ValueError("grid needs at least 2 points per axis")

    def xs(self):
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    def ts(self):
        return np.linspace(self.t_lo, self.t_hi, self.nt)

    def to_dict(self):
        return {"x_lo": self.x_lo, "x_hi": self.x_hi, "t_lo": self.t_lo,
                "t_hi": self.t_hi, "nx": self.nx, "nt": self.nt}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class GridData:
    """Exact fields on the full uniform grid plus the initial/boundary subset.

    u, v, L have shape (nt, nx) (t-outer); ib is an (M, 5) array with
    columns x, t, u, v, L covering the t = T0 curve and both x boundaries,
    corner duplicates kept once.
    """

    domain: Domain
    u: np.ndarray
    v: np.ndarray
    L: np.ndarray
    ib: np.ndarray

    @property
    def xs(self):
        return self.domain.xs()

    @property
    def ts(self):
        return self.domain.ts()


@dataclass
class TrainingSet:
    ib_points: np.ndarray   # (N_q, 5): x, t, u, v, L
    collocation: np.ndarray  # (N_f, 2): x, t
    domain: Domain
    seed: int
    noise_level: float = 0.0

    def __post_init__(self):
        if self.noise_level < 0:
            raise ValueError("noise level must be non-negative")


def build_grid(rw: RWParams, dom: Domain) -> GridData:
    """Exact u, v, L on the uniform nx x nt grid, with the IB subset."""
    xs, ts = dom.xs(), dom.ts()
    X, T = np.meshgrid(xs, ts)
    u, v, L = eval_general_rw(rw, X, T)

    # initial curve t = T0 (all x), then each x boundary for t > T0:
    # the two corner points are kept once (in the initial curve).
    rows = [np.column_stack([xs, np.full_like(xs, ts[0]), u[0], v[0], L[0]])]
    for j in (0, dom.nx - 1):
        rows.append(np.column_stack([
            np.full(dom.nt - 1, xs[j]), ts[1:], u[1:, j], v[1:, j], L[1:, j]
        ]))
    return GridData(domain=dom, u=u, v=v, L=L, ib=np.concatenate(rows))


def subsample_ib(grid_ib, n_q, seed):
    """Uniform random subsample of IB rows without replacement."""
    grid_ib = np.asarray(grid_ib)
    if n_q > len(grid_ib):
        raise ValueError(f"requested {n_q} IB points but only {len(grid_ib)} are available")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(grid_ib), size=n_q, replace=False)
    return grid_ib[idx].copy()


def lhs_sample(dom: Domain, n_f, seed):
    """Latin hypercube sample of n_f interior points.

    Per coordinate, exactly one point falls in each of the n_f equal-width
    strata; placement within a stratum is uniform.
    """
    if n_f < 1:
        raise ValueError("need at least one collocation point")
    rng = np.random.default_rng(seed)
    cols = []
    for lo, hi in ((dom.x_lo, dom.x_hi), (dom.t_lo, dom.t_hi)):
        strata = rng.permutation(n_f)
        offs = rng.random(n_f)
        cols.append(lo + (strata + offs) * ((hi - lo) / n_f))
    return np.column_stack(cols)


def make_training_set(rw: RWParams, dom: Domain, n_q, n_f, seed) -> TrainingSet:
    """Grid -> random IB subsample + LHS collocation, all from one seed."""
    grid = build_grid(rw, dom)
    ib = subsample_ib(grid.ib, n_q, seed)
    colloc = lhs_sample(dom, n_f, seed + 1)
    return TrainingSet(ib_points=ib, collocation=colloc, domain=dom, seed=seed)


def inject_noise(ts: TrainingSet, noise, seed) -> TrainingSet:
    """Gaussian noise on the u, v, L columns of the IB points.

    Each value receives noise * std * N(0,1), where std is the standard
    deviation of the sampled value array as a whole (one scalar across the
    three columns).  Coordinates and collocation points are unchanged.
    """
    if noise < 0:
        raise ValueError("noise level must be non-negative")
    if noise == 0:
        return replace(ts, ib_points=ts.ib_points.copy(), noise_level=0.0)
    rng = np.random.default_rng(seed)
    ib = ts.ib_points.copy()
    values = ib[:, 2:5]
    ib[:, 2:5] = values + noise * values.std() * rng.standard_normal(values.shape)
    return replace(ts, ib_points=ib, noise_level=float(noise))


# ---------------------------------------------------------------------------
# serialization (JSON manifest + CSV payloads, lossless at 17 digits)
# ---------------------------------------------------------------------------

def save_training_set(ts: TrainingSet, directory, prefix="training_set"):
    os.makedirs(directory, exist_ok=True)
    ib_path = os.path.join(directory, f"{prefix}_ib.csv")
    co_path = os.path.join(directory, f"{prefix}_collocation.csv")
    np.savetxt(ib_path, ts.ib_points, delimiter=",", header=IB_COLUMNS,
               comments="", fmt="%.17g")
    np.savetxt(co_path, ts.collocation, delimiter=",", header="x,t",
               comments="", fmt="%.17g")
    manifest = {
        "seed": ts.seed,
        "noise_level": ts.noise_level,
        "n_q": int(len(ts.ib_points)),
        "n_f": int(len(ts.collocation)),
        "domain": ts.domain.to_dict(),
        "ib_csv": os.path.basename(ib_path),
        "collocation_csv": os.path.basename(co_path),
    }
    manifest_path = os.path.join(directory, f"{prefix}.json")
    with open(manifest_path, "w") as fh:
        json.dump(manifest, fh, indent=1)
    return manifest_path


def load_training_set(manifest_path) -> TrainingSet:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(manifest_path)
    ib = np.loadtxt(os.path.join(base, manifest["ib_csv"]), delimiter=",", skiprows=1)
    co = np.loadtxt(os.path.join(base, manifest["collocation_csv"]), delimiter=",", skiprows=1)
    return TrainingSet(
        ib_points=ib.reshape(-1, 5),
        collocation=co.reshape(-1, 2),
        domain=Domain.from_dict(manifest["domain"]),
        seed=manifest["seed"],
        noise_level=manifest["noise_level"],
    )
