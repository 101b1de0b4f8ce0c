"""Echo State Network: fixed random reservoir, trained linear readout.

The reservoir state follows h_t = act(W_in [1; u_t] + W_res h_{t-1}) with
W_in's first column acting as the bias.  W_res is drawn sparse uniform and
rescaled so its spectral radius estimate hits the requested target; only
W_out is ever fitted, by ridge regression

    W_out = Y H^T (H H^T + lambda I)^{-1}

over extended states [1; u_t; h_t] collected after a washout period.  In
free-running mode each prediction is fed back as the next input, turning
the fitted network into a generator.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activation import Activation, activate
from .numerics import InputError, Rng, SingularMatrixError, solve_spd, spectral_radius

__all__ = [
    "EsnModel",
    "esn_build",
    "esn_fit",
    "esn_free_run",
    "ridge_readout",
    "mse_metric",
    "nmse_metric",
]


@dataclass
class EsnModel:
    w_in: np.ndarray          # N x (1 + M), column 0 is the bias
    w_res: np.ndarray         # N x N, sparse, scaled to rho_target
    w_out: np.ndarray | None  # K x (1 + M + N) after fitting
    act: Activation
    rho_target: float
    washout: int
    ridge_lambda: float
    density: float
    seed: int

    @property
    def n_reservoir(self):
        return self.w_res.shape[0]

    @property
    def n_input(self):
        return self.w_in.shape[1] - 1


def esn_build(
    n_reservoir=1000,
    n_input=1,
    n_output=1,
    rho_target=0.95,
    density=0.1,
    seed=0,
    act=Activation.tanh(),
    allow_rho_ge_1=False,
    washout=100,
    ridge_lambda=1e-8,
    sr_iters=1000,
):
    """Draw and scale the fixed reservoir; the readout stays unfitted.

    Entries of W_in and W_res are uniform on (-0.5, 0.5); W_res keeps each
    entry with probability ``density`` and is then rescaled by
    rho_target / rho_hat.  A spectral radius at or above 1 needs the
    explicit ``allow_rho_ge_1`` override.  A degenerate draw whose radius
    estimates to zero is retried on the next substream.
    """
    if not 0.0 < density <= 1.0:
        raise InputError("density must lie in (0, 1]")
    if rho_target <= 0.0:
        raise InputError("rho_target must be positive")
    if rho_target >= 1.0 and not allow_rho_ge_1:
        raise InputError(
            "rho_target >= 1 abandons the echo-state guarantee; "
            "pass allow_rho_ge_1=True to override"
        )
    base = Rng(seed)
    for attempt in range(16):
        rng = base.spawn(attempt)
        w_in = rng.uniform_matrix(n_reservoir, 1 + n_input)
        w_res = rng.uniform_matrix(n_reservoir, n_reservoir)
        if density < 1.0:
            mask = rng.uniforms(n_reservoir * n_reservoir).reshape(w_res.shape) < density
            w_res *= mask
        rho_hat = spectral_radius(w_res, iters=sr_iters)
        if rho_hat > 0.0:
            w_res *= rho_target / rho_hat
            return EsnModel(
                w_in, w_res, None, act, rho_target, washout, ridge_lambda, density, seed
            )
    raise InputError("reservoir draw degenerate 16 times; check density and size")


def _drive(model, h, u):
    pre = model.w_in[:, 0] + model.w_in[:, 1:] @ np.atleast_1d(u) + model.w_res @ h
    return activate(pre, model.act)[0]


def ridge_readout(states, targets, ridge_lambda):
    """Solve W_out = Y H^T (H H^T + lambda I)^{-1} for column-wise states H."""
    states = np.asarray(states, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    gram = states @ states.T
    if ridge_lambda:
        gram[np.diag_indices_from(gram)] += ridge_lambda
    try:
        z = solve_spd(gram, states @ targets.T)
    except SingularMatrixError as err:
        raise SingularMatrixError(err.pivot_index, err.value) from ValueError(
            "state Gram matrix is singular; use ridge_lambda > 0"
        )
    return z.T


def esn_fit(model, series):
    """Teacher-forced one-step-ahead ridge fit of the readout.

    Runs the reservoir over series[0..T-2] targeting series[1..T-1],
    collects extended states after the washout and solves the regularized
    normal equations through the SPD path.  Sets and returns model.w_out.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.ndim != 1:
        raise InputError("series must be 1-D")
    total = series.size
    if total <= model.washout + 1:
        raise InputError(
            f"series length {total} too short for washout {model.washout}"
        )
    n = model.n_reservoir
    n_keep = total - 1 - model.washout
    states = np.empty((2 + n, n_keep))
    targets = np.empty((1, n_keep))
    h = np.zeros(n)
    kept = 0
    for t in range(total - 1):
        h = _drive(model, h, series[t])
        if t >= model.washout:
            states[0, kept] = 1.0
            states[1, kept] = series[t]
            states[2:, kept] = h
            targets[0, kept] = series[t + 1]
            kept += 1
    model.w_out = ridge_readout(states, targets, model.ridge_lambda)
    return model.w_out


def esn_free_run(model, warm, horizon):
    """Generative forecast: warm up teacher-forced, then feed back outputs.

    Forcing stops one step short of the end of ``warm`` so the loop's first
    iteration consumes warm[-1] exactly once, mirroring the state/input
    pairing the readout was fitted on.
    """
    if model.w_out is None:
        raise InputError("model has no fitted readout; call esn_fit first")
    warm = np.asarray(warm, dtype=np.float64)
    if warm.size <= model.washout:
        raise InputError("warmup series must cover the washout")
    h = np.zeros(model.n_reservoir)
    for value in warm[:-1]:
        h = _drive(model, h, value)
    u = warm[-1]
    out = np.empty(horizon)
    for t in range(horizon):
        h = _drive(model, h, u)
        u = (model.w_out @ np.concatenate(([1.0, u], h))).item()
        out[t] = u
    return out


def mse_metric(pred, target):
    """Plain mean squared error between two equal-length series."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise InputError(f"length mismatch: {pred.shape} vs {target.shape}")
    with np.errstate(over="ignore"):
        return float(np.mean((target - pred) ** 2))


def nmse_metric(pred, target):
    """MSE normalized by the variance of the target."""
    target = np.asarray(target, dtype=np.float64)
    var = float(target.var())
    if var == 0.0:
        raise InputError("target variance is zero")
    return mse_metric(pred, target) / var
