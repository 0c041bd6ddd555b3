"""Time integration of d_t h = G_eps h + (1/eps) Gamma(h, h).

Two schemes:

  exact_linear   per-Fourier-mode h(t, n) = exp(t A(n, eps)) h(0, n), through
                 a cached eigendecomposition of the mode generator (Schur /
                 expm fallback when the eigenvector basis is ill conditioned)
  strang_imex    half-step exact linear, explicit midpoint step of the
                 (1/eps) Gamma term, half-step exact linear; dt is clamped to
                 c_nl * eps because the stiff bilinear term is explicit

Records carry sampled norms (plain, not squared), macroscopic moment fields,
globally integrated kernel moments, the ladder truncation diagnostic, the
instantaneous L2 balance used by the dissipation monitor, and the final
state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import expm

from .hypnorm import HypNormCoefficients, eval_hyp_norm
from .models import CollisionModel, apply_collision, apply_gamma
from .spectral import TWO_PI, SpectralField, inner_or_norm

EIG_COND_LIMIT = 1e8


@dataclass
class IntegratorConfig:
    scheme: str = "exact_linear"        # exact_linear | strang_imex
    dt: float = 0.01
    t_end: float = 1.0
    sample_every: int = 1
    c_nl: float = 0.1                   # strang dt rule: dt <= c_nl * eps
    delta_k: float | None = None        # smallness threshold, warning only
    keep_states_every: int = 0          # 0: only the final state is kept

    def __post_init__(self):
        if self.dt <= 0 or self.t_end < 0:
            raise ValueError("dt must be positive and t_end nonnegative")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")


@dataclass
class TrajectoryRecord:
    times: np.ndarray
    norms: dict
    moments: list                        # per-sample (rho_hat, u_hats, theta_hat)
    kernel_moments: np.ndarray           # (n_samples, d)
    truncation_loss: np.ndarray
    diss_l2: np.ndarray                  # recorded d/dt ||h||^2_{L2} balance
    final_state: SpectralField
    eps: float
    k: int
    nonlinear: bool
    states: list = dc_field(default_factory=list)   # optional m-th full states


def _mode_list(h: SpectralField):
    """Fourier modes carrying any coefficient mass (index tuples)."""
    dim = h.dim
    lead = h.coeffs.shape[:dim]
    flat = h.coeffs.reshape(lead + (-1,))
    mask = np.any(flat != 0.0, axis=-1)
    return [tuple(idx) for idx in np.argwhere(mask)]


def _mode_propagator(model: CollisionModel, n, eps: float, flags: tuple):
    """Eigendecomposition (or None for expm fallback) of A(n, eps)."""
    key = ("eig", tuple(n), eps, flags)
    cached = model._caches.get(key)
    if cached is not None:
        return cached
    A = _generator(model, n, eps, flags)
    w, V = np.linalg.eig(A)
    try:
        Vinv = np.linalg.inv(V)
    except np.linalg.LinAlgError:
        entry = (None, A)
        model._caches[key] = entry
        return entry
    # Frobenius product bounds the 2-norm condition number from above
    cond = np.linalg.norm(V) * np.linalg.norm(Vinv) / V.shape[0]
    if cond > EIG_COND_LIMIT:
        entry = (None, A)     # Schur/expm path for ill-conditioned bases
    else:
        entry = ((w, V, Vinv), A)
    model._caches[key] = entry
    return entry


def _generator(model: CollisionModel, n, eps: float, flags: tuple):
    include_transport, include_collision = flags
    A = np.zeros((model.size, model.size), dtype=complex)
    if include_collision:
        A += model.L / eps**2
    if include_transport:
        nvec = np.asarray(n, dtype=float)
        for axis in range(model.dim):
            if nvec[axis] != 0.0:
                A -= 1j * nvec[axis] / eps * model.mulv[axis]
    return A


def _evolve_mode(entry, c0: np.ndarray, t: float) -> np.ndarray:
    decomp, A = entry
    if t == 0.0:
        return c0.copy()
    if decomp is None:
        return expm(A * t) @ c0
    w, V, Vinv = decomp
    return V @ (np.exp(w * t) * (Vinv @ c0))


def _moment_hats(h: SpectralField):
    dim = h.dim
    c = h.coeffs
    rho = c[(Ellipsis,) + (0,) * dim].copy()
    us = []
    for axis in range(dim):
        idx = [0] * dim
        idx[axis] = 1
        us.append(c[(Ellipsis,) + tuple(idx)].copy())
    th = 0.0
    for axis in range(dim):
        idx = [0] * dim
        idx[axis] = 2
        th = th + c[(Ellipsis,) + tuple(idx)]
    return rho, us, np.sqrt(2.0) / dim * th


def _top_degree_loss(h: SpectralField) -> float:
    K = h.basis.order
    dim = h.dim
    loss = 0.0
    for axis in range(dim):
        top = np.take(h.coeffs, K, axis=dim + axis)
        loss += (K + 1) * float(np.sum(np.abs(top) ** 2))
    return float(np.sqrt(loss))


class _Recorder:
    def __init__(self, model, eps, k, coeffs_std, coeffs_perp, nonlinear,
                 with_collision=True, keep_states_every=0):
        self.model = model
        self.eps = eps
        self.k = k
        self.coeffs_std = coeffs_std
        self.coeffs_perp = coeffs_perp
        self.nonlinear = nonlinear
        self.with_collision = with_collision
        self.keep_states_every = keep_states_every
        self.states = []
        self.times = []
        self.norms = {key: [] for key in
                      ("L2", "Hk", "HkLambda", "HkxL2", "HypEps", "HypPerp")}
        self.moments = []
        self.kernel_moments = []
        self.trunc = []
        self.diss = []

    def sample(self, t: float, h: SpectralField):
        model, eps = self.model, self.eps
        if not np.all(np.isfinite(h.coeffs)):
            raise RuntimeError(f"non-finite state at t={t:.6g}")
        if self.keep_states_every and len(self.times) % self.keep_states_every == 0:
            self.states.append((t, h.copy()))
        self.times.append(t)
        self.norms["L2"].append(np.sqrt(inner_or_norm(h, kind="L2")))
        self.norms["Hk"].append(np.sqrt(inner_or_norm(h, kind="Hk", k=self.k)))
        self.norms["HkLambda"].append(
            np.sqrt(inner_or_norm(h, kind="HkLambda", k=self.k, model=model)))
        self.norms["HkxL2"].append(
            np.sqrt(inner_or_norm(h, kind="HkxL2", k=self.k)))
        if self.coeffs_std is not None:
            self.norms["HypEps"].append(
                np.sqrt(eval_hyp_norm(h, self.coeffs_std, eps, model)))
        else:
            self.norms["HypEps"].append(np.nan)
        if self.coeffs_perp is not None and eps <= self.coeffs_perp.eps_max:
            self.norms["HypPerp"].append(
                np.sqrt(eval_hyp_norm(h, self.coeffs_perp, eps, model)))
        else:
            self.norms["HypPerp"].append(np.nan)
        self.moments.append(_moment_hats(h))
        mean_idx = (h.mx,) * h.dim
        c0 = h.coeffs[mean_idx].reshape(-1)
        self.kernel_moments.append(
            (TWO_PI) ** (h.dim / 2.0) * np.real(model.phi @ c0))
        self.trunc.append(_top_degree_loss(h))
        diss = 0.0
        if self.with_collision:
            lh = apply_collision(model, h)
            diss = 2.0 / eps**2 * inner_or_norm(lh, h, kind="L2").real
        if self.nonlinear:
            gam = apply_gamma(model, h, h)
            diss += 2.0 / eps * inner_or_norm(gam, h, kind="L2").real
        self.diss.append(diss)

    def build(self, final_state: SpectralField) -> TrajectoryRecord:
        return TrajectoryRecord(
            times=np.asarray(self.times),
            norms={k: np.asarray(v) for k, v in self.norms.items()},
            moments=self.moments,
            kernel_moments=np.asarray(self.kernel_moments),
            truncation_loss=np.asarray(self.trunc),
            diss_l2=np.asarray(self.diss),
            final_state=final_state,
            eps=self.eps,
            k=self.k,
            nonlinear=self.nonlinear,
            states=self.states,
        )


def propagate(h_in: SpectralField, model: CollisionModel, eps: float,
              config: IntegratorConfig, k: int = 1,
              coeffs_std: HypNormCoefficients | None = None,
              coeffs_perp: HypNormCoefficients | None = None,
              include_transport: bool = True,
              include_collision: bool = True) -> TrajectoryRecord:
    """Integrate the kinetic equation and record the sampled trajectory."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    nonlinear = config.scheme == "strang_imex"
    if config.scheme not in ("exact_linear", "strang_imex"):
        raise ValueError(f"unknown scheme {config.scheme!r}")
    if nonlinear and not model.has_gamma:
        raise ValueError("strang_imex needs a model with a bilinear term")
    if config.delta_k is not None and coeffs_std is not None:
        h0 = np.sqrt(eval_hyp_norm(h_in, coeffs_std, eps, model))
        if h0 > config.delta_k:
            warnings.warn(
                f"initial hyp norm {h0:.3g} exceeds delta_k={config.delta_k:.3g};"
                " decay is not guaranteed", stacklevel=2)

    rec = _Recorder(model, eps, k, coeffs_std, coeffs_perp, nonlinear,
                    with_collision=include_collision,
                    keep_states_every=config.keep_states_every)
    flags = (include_transport, include_collision)

    if config.scheme == "exact_linear":
        stride = config.dt * config.sample_every
        n_samples = int(np.floor(config.t_end / stride + 1e-12)) + 1
        times = stride * np.arange(n_samples)
        if times[-1] < config.t_end - 1e-12 * max(config.t_end, 1.0):
            times = np.append(times, config.t_end)
        modes = _mode_list(h_in)
        dim = h_in.dim
        init = {idx: h_in.coeffs[idx].reshape(-1).copy() for idx in modes}
        props = {idx: _mode_propagator(
            model, tuple(np.array(idx) - h_in.mx), eps, flags) for idx in modes}
        h = h_in.copy()
        for t in times:
            h.coeffs[...] = 0.0
            for idx in modes:
                h.coeffs[idx] = _evolve_mode(props[idx], init[idx], t).reshape(
                    h.coeffs.shape[dim:])
            rec.sample(float(t), h)
        return rec.build(h)

    # strang_imex
    dt = min(config.dt, config.c_nl * eps)
    n_steps = max(1, int(np.ceil(config.t_end / dt - 1e-12)))
    dt = config.t_end / n_steps
    half = _strang_half_propagators(model, eps, dt, h_in.mx, flags)
    dim = h_in.dim
    lead = h_in.coeffs.shape[:dim]
    c = h_in.coeffs.reshape(lead + (-1,)).copy()

    def gamma_rhs(state):
        f = SpectralField(state.reshape(h_in.coeffs.shape), h_in.basis, h_in.mx)
        return apply_gamma(model, f, f).coeffs.reshape(lead + (-1,)) / eps

    h = h_in.copy()
    rec.sample(0.0, h)
    for step in range(1, n_steps + 1):
        c = np.einsum("...ij,...j->...i", half, c)
        mid = c + 0.5 * dt * gamma_rhs(c)
        c = c + dt * gamma_rhs(mid)
        c = np.einsum("...ij,...j->...i", half, c)
        if step % config.sample_every == 0 or step == n_steps:
            h.coeffs = c.reshape(h_in.coeffs.shape)
            rec.sample(step * dt, h)
    h.coeffs = c.reshape(h_in.coeffs.shape)
    return rec.build(h)


def _strang_half_propagators(model, eps, dt, mx, flags):
    key = ("strang", eps, dt, mx, flags)
    cached = model._caches.get(key)
    if cached is not None:
        return cached
    g = 2 * mx + 1
    dim = model.dim
    shape = (g,) * dim + (model.size, model.size)
    out = np.empty(shape, dtype=complex)
    for idx in np.ndindex(*(g,) * dim):
        n = tuple(np.array(idx) - mx)
        out[idx] = expm(_generator(model, n, eps, flags) * (dt / 2.0))
    model._caches[key] = out
    return out


def fit_decay_rate(record: TrajectoryRecord, norm_key: str, window) -> tuple:
    """Least-squares decay rate of log(norm) over the window [t0, t1].

    Returns (tau, residual): norm(t) ~ C exp(-tau t), residual the RMS of
    the linear fit in log space.
    """
    t0, t1 = window
    times = np.asarray(record.times, dtype=float)
    vals = np.asarray(record.norms[norm_key], dtype=float)
    mask = (times >= t0) & (times <= t1)
    if mask.sum() < 5:
        raise ValueError("need at least 5 samples in the fit window")
    if np.any(vals[mask] <= 0.0):
        raise ValueError("nonpositive norm sample in the fit window")
    t = times[mask]
    y = np.log(vals[mask])
    A = np.stack([t, np.ones_like(t)], axis=1)
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ sol - y) ** 2)))
    return float(-sol[0]), resid
