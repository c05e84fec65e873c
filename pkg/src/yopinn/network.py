"""Feedforward network with per-neuron adaptive tanh activations.

The network maps (x, t) to three output heads (u, v, L).  Every hidden
neuron i of layer d applies tanh(scale * a[d][i] * z) to its pre-activation
z, where the slopes a[d][i] are trainable and the scale factor is fixed
(default 10, initialized so that scale * a = 1).  The output layer is
affine with no activation and no slope parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad

DEFAULT_SCALE = 10.0
DEFAULT_SLOPE_INIT = 0.1


def validate_layers(layers):
    layers = [int(w) for w in layers]
    if any(w <= 0 for w in layers):
        raise ValueError(f"zero-width layer in architecture {layers}")
    if len(layers) < 3:
        raise ValueError("architecture needs at least one hidden layer")
    if layers[0] != 2 or layers[-1] != 3:
        raise ValueError(
            f"network takes 2 inputs (x, t) and produces 3 outputs (u, v, L); got {layers}"
        )
    return layers


@dataclass
class NetworkParams:
    """Weights, biases and per-neuron activation slopes.

    weights[d] has shape (layers[d+1], layers[d]); biases[d] is a column
    vector; slopes exist for hidden layers only.
    """

    layers: list
    weights: list
    biases: list
    slopes: list
    scale: float = DEFAULT_SCALE
    seed: int | None = None

    def __post_init__(self):
        depth = len(self.layers) - 1
        if len(self.weights) != depth or len(self.biases) != depth:
            raise ValueError("weights/biases do not match architecture depth")
        if len(self.slopes) != depth - 1:
            raise ValueError("slopes must cover hidden layers only")
        for d in range(depth):
            wshape = (self.layers[d + 1], self.layers[d])
            if self.weights[d].shape != wshape:
                raise ValueError(f"layer {d}: weight shape {self.weights[d].shape} != {wshape}")
            if self.biases[d].shape != (self.layers[d + 1], 1):
                raise ValueError(f"layer {d}: bias shape mismatch")
        if self.scale <= 1.0:
            raise ValueError("activation scale must exceed 1")

    @property
    def n_hidden(self):
        return len(self.slopes)

    def arrays(self):
        """All parameter arrays, in flat-vector order."""
        out = []
        for d in range(len(self.weights)):
            out.append(self.weights[d])
            out.append(self.biases[d])
            if d < len(self.slopes):
                out.append(self.slopes[d])
        return out

    def flatten(self):
        return np.concatenate([a.ravel() for a in self.arrays()])

    def unflatten(self, vec):
        """New NetworkParams with values taken from a flat vector."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.size != self.size():
            raise ValueError(f"flat vector has {vec.size} entries, expected {self.size()}")
        ws, bs, sl = [], [], []
        pos = 0

        def take(shape):
            nonlocal pos
            size = int(np.prod(shape))
            arr = vec[pos : pos + size].reshape(shape).copy()
            pos += size
            return arr

        for d in range(len(self.weights)):
            ws.append(take(self.weights[d].shape))
            bs.append(take(self.biases[d].shape))
            if d < len(self.slopes):
                sl.append(take(self.slopes[d].shape))
        return NetworkParams(self.layers, ws, bs, sl, scale=self.scale, seed=self.seed)

    def size(self):
        return sum(a.size for a in self.arrays())

    def weight_slices(self):
        """(start, stop) ranges of each weight matrix inside the flat vector."""
        out = []
        pos = 0
        for d in range(len(self.weights)):
            w = self.weights[d]
            out.append((pos, pos + w.size))
            pos += w.size + self.biases[d].size
            if d < len(self.slopes):
                pos += self.slopes[d].size
        return out

    def copy(self):
        return NetworkParams(
            list(self.layers),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            [a.copy() for a in self.slopes],
            scale=self.scale,
            seed=self.seed,
        )

    # -- checkpointing -------------------------------------------------
    def to_json(self, extra=None):
        doc = {
            "layers": self.layers,
            "scale": self.scale,
            "seed": self.seed,
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.ravel().tolist() for b in self.biases],
            "slopes": [a.ravel().tolist() for a in self.slopes],
        }
        if extra:
            doc.update(extra)
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        layers = validate_layers(doc["layers"])
        weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.array(b, dtype=np.float64).reshape(-1, 1) for b in doc["biases"]]
        slopes = [np.array(a, dtype=np.float64).reshape(-1, 1) for a in doc["slopes"]]
        return cls(layers, weights, biases, slopes,
                   scale=float(doc["scale"]), seed=doc.get("seed"))

    def save(self, path, extra=None):
        with open(path, "w") as fh:
            fh.write(self.to_json(extra))

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_json(fh.read())


def init_xavier(layers, seed, scale=DEFAULT_SCALE, slope_init=DEFAULT_SLOPE_INIT):
    """Glorot-normal weights, zero biases, uniform activation slopes.

    Weight entries of layer d are drawn with variance 2/(fan_in + fan_out);
    slopes start at slope_init (0.1) so that scale * slope = 1.
    """
    layers = validate_layers(layers)
    rng = np.random.default_rng(seed)
    weights, biases, slopes = [], [], []
    for d in range(len(layers) - 1):
        fan_in, fan_out = layers[d], layers[d + 1]
        std = np.sqrt(2.0 / (fan_in + fan_out))
        weights.append(rng.standard_normal((fan_out, fan_in)) * std)
        biases.append(np.zeros((fan_out, 1)))
        if d < len(layers) - 2:
            slopes.append(np.full((fan_out, 1), slope_init))
    return NetworkParams(layers, weights, biases, slopes, scale=scale, seed=seed)


class BoundNetwork:
    """Network parameters registered as leaves on a tape.

    Calling the bound network evaluates the three heads for batched inputs;
    leaf handles are exposed in flat-vector order for gradient extraction.
    """

    def __init__(self, tape, params: NetworkParams):
        self.tape = tape
        self.params = params
        self.w_leaves = [tape.leaf(w) for w in params.weights]
        self.b_leaves = [tape.leaf(b) for b in params.biases]
        self.a_leaves = [tape.leaf(a) for a in params.slopes]
        self.scale = params.scale

    def param_leaves(self):
        out = []
        for d in range(len(self.w_leaves)):
            out.append(self.w_leaves[d])
            out.append(self.b_leaves[d])
            if d < len(self.a_leaves):
                out.append(self.a_leaves[d])
        return out

    def __call__(self, x: ad.DiffValue, t: ad.DiffValue):
        """Evaluate (u, v, L) at batched coordinates x, t (1-d DiffValues)."""
        h = ad.row_stack([x, t])
        for d in range(len(self.a_leaves)):
            z = ad.affine(self.w_leaves[d], h, self.b_leaves[d])
            if not np.all(np.isfinite(z.value)):
                raise FloatingPointError(f"non-finite activation input in hidden layer {d + 1}")
            h = ad.scaled_tanh(self.a_leaves[d], z, self.scale)
        out = ad.affine(self.w_leaves[-1], h, self.b_leaves[-1])
        if not np.all(np.isfinite(out.value)):
            raise FloatingPointError("non-finite value in output layer")
        return ad.get_row(out, 0), ad.get_row(out, 1), ad.get_row(out, 2)


def bind(tape, params: NetworkParams) -> BoundNetwork:
    return BoundNetwork(tape, params)


def predict(params: NetworkParams, x, t):
    """Plain numpy evaluation of (u, v, L); no tape, for grid predictions."""
    x = np.asarray(x, dtype=np.float64).ravel()
    t = np.asarray(t, dtype=np.float64).ravel()
    h = np.stack([x, t])
    for d in range(len(params.slopes)):
        z = params.weights[d] @ h + params.biases[d]
        h = np.tanh((params.scale * params.slopes[d]) * z)
    out = params.weights[-1] @ h + params.biases[-1]
    return out[0], out[1], out[2]
