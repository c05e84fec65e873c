"""Physics-informed neural networks for rogue waves of the coupled
long-wave/short-wave (Yajima-Oikawa) resonance system, with per-neuron
adaptive activations and quadratic weight decay."""

from . import autodiff, data, exact, loss, network, optim, residuals
from .experiment import (
    PRESETS,
    ExperimentConfig,
    RunRecord,
    parameter_relative_error,
    relative_l2_error,
    run_forward,
    run_inverse,
    run_sweep,
)

__version__ = "0.1.0"
