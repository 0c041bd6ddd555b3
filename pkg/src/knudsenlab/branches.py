"""Per-mode semigroup branch theory: eigenvalue branches of L - i zeta (v.w),
dispersion-relation fits, eigenprojectors, and the branch/remainder split of
the evolution semigroup.

At zeta = 0 the kernel eigenvalue splits into four smooth branches labeled

  j = +-1  acoustic pair, Im lambda = alpha_j zeta + O(zeta^3), alpha_-1 = -alpha_1
  j = 0    thermal,  alpha_0 = 0
  j = 2    shear, multiplicity N-1, alpha_2 = 0

with lambda_j(zeta) = i alpha_j zeta - beta_j zeta^2 + gamma_j(zeta),
|gamma_j| <= C zeta^3; everything else stays uniformly damped (the
remainder, spectral abscissa <= -sigma < 0).  Branches are tracked by
continuation from zeta = 0; the labels come from the first-order splitting
of the kernel: eigenvectors of S_pq = <(v.w) phi_p, phi_q>.

beta_j is stored as a damping rate (>= 0): the real part of the branch is
-beta_j zeta^2 + O(zeta^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eig, expm

from .models import CollisionModel
from .spectral import SpectralField


class BranchContinuationError(RuntimeError):
    def __init__(self, zeta, message=""):
        super().__init__(f"branch continuation failed at zeta={zeta:.6g} {message}")
        self.zeta = zeta


@dataclass
class ModeSpectrum:
    zeta: float
    direction: np.ndarray
    eigenvalues: np.ndarray
    branch_labels: dict          # j -> list of eigenvalue indices
    projectors: dict             # j -> (D, D) matrix; key "remainder" included

    def branch_eigenvalue(self, j) -> complex:
        idx = self.branch_labels[j]
        return complex(np.mean(self.eigenvalues[idx]))


@dataclass
class BranchFit:
    alpha: dict                  # j -> fitted sound-speed coefficient
    beta: dict                   # j -> fitted damping rate (>= 0 convention)
    gamma_bound: float           # max |gamma_j(zeta)| / zeta^3 on the grid
    sigma: float                 # remainder spectral gap on the grid
    n0: float                    # validity radius (empirical rule)
    fit_residuals: dict          # j -> RMS residual of the quadratic model
    acoustic_collinearity: float
    zeta_grid: np.ndarray
    branch_values: dict          # j -> complex eigenvalues along the grid


def _v_omega(model: CollisionModel, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if abs(np.linalg.norm(omega) - 1.0) > 1e-12:
        raise ValueError("omega must be a unit vector")
    return sum(omega[a] * model.mulv[a] for a in range(model.dim))


def _kernel_splitting(model: CollisionModel, omega):
    """Zeroth-order branch eigenvectors from S = phi (v.w) phi^T."""
    Vw = _v_omega(model, omega)
    phi = model.phi
    S = phi @ Vw @ phi.T
    s_vals, s_vecs = np.linalg.eigh(S)
    dim = model.dim
    # shear reference directions: (t.v) M^{1/2} for t orthogonal to omega
    shear_refs = []
    omega = np.asarray(omega, dtype=float)
    for a in range(dim):
        t = np.zeros(dim)
        t[a] = 1.0
        t = t - np.dot(t, omega) * omega
        if np.linalg.norm(t) > 1e-10:
            t /= np.linalg.norm(t)
            vec = np.zeros(model.size)
            for b in range(dim):
                idx = [0] * dim
                idx[b] = 1
                flat = np.ravel_multi_index(tuple(idx), (model.basis.order + 1,) * dim)
                vec[flat] = t[b]
            if not any(abs(vec @ r) > 0.9 for r in shear_refs):
                shear_refs.append(vec)
    labels = {}
    tol = 1e-10
    order = np.argsort(s_vals)
    # alpha_j = -s_j at first order; j = 1 gets alpha > 0 (most negative s)
    labels[1] = [int(order[0])]
    labels[-1] = [int(order[-1])]
    middle = [int(i) for i in order[1:-1]]
    shear_idx, thermal_idx = [], []
    for i in middle:
        vec = model.phi.T @ s_vecs[:, i]
        overlap = max((abs(vec @ r) for r in shear_refs), default=0.0)
        (shear_idx if overlap > 0.5 else thermal_idx).append(i)
    if len(thermal_idx) != 1 or len(shear_idx) != model.dim - 1:
        raise BranchContinuationError(0.0, "(kernel splitting is ambiguous)")
    labels[0] = thermal_idx
    labels[2] = shear_idx
    vecs = {j: [model.phi.T @ s_vecs[:, i] for i in labels[j]] for j in labels}
    alphas0 = {j: [-s_vals[i] for i in labels[j]] for j in labels}
    return vecs, alphas0


def acoustic_reference(model: CollisionModel, omega, sign: int) -> np.ndarray:
    """Self-consistent zeroth-order acoustic eigenvector A(1 -+ c w.v + ...).

    The sound-speed coefficient on w.v is sqrt((N+2)/N); the energy part is
    (|v|^2 - N)/N in unnormalized form (equals (|v|^2-N)/2 for N = 2).
    """
    dim = model.dim
    c = np.sqrt((dim + 2.0) / dim)
    vec = np.zeros(model.size)
    vec[0] = 1.0
    omega = np.asarray(omega, dtype=float)
    shape = (model.basis.order + 1,) * dim
    for b in range(dim):
        idx = [0] * dim
        idx[b] = 1
        vec[np.ravel_multi_index(tuple(idx), shape)] = sign * c * omega[b]
    for b in range(dim):
        idx = [0] * dim
        idx[b] = 2
        vec[np.ravel_multi_index(tuple(idx), shape)] = np.sqrt(2.0) / dim
    return vec / np.linalg.norm(vec)


def _track(model: CollisionModel, omega, zetas):
    """Continue the d kernel branches along increasing zeta.

    Yields (zeta, {j: [eig indices]}, eigenvalues, right/left eigenvectors).
    """
    Vw = _v_omega(model, omega)
    vecs0, _ = _kernel_splitting(model, omega)
    prev = {j: [(0.0 + 0.0j, v) for v in vecs0[j]] for j in vecs0}
    last = 0.0
    for zeta in zetas:
        # refine internally when the requested step is coarse
        internal = [zeta]
        if zeta - last > 0.021:
            internal = list(np.arange(last + 0.02, zeta, 0.02)) + [zeta]
        for z in internal:
            B = model.L - 1j * z * Vw
            w, vl, vr = eig(B, left=True, right=True)
            taken = {}
            new_prev = {}
            for j, members in prev.items():
                new_members = []
                for lam_old, vec_old in members:
                    scores = np.abs(w - lam_old) - 0.5 * np.abs(
                        vec_old.conj() @ vr)
                    for idx in np.argsort(scores):
                        if idx not in taken:
                            break
                    idx = int(idx)
                    overlap = abs(vec_old.conj() @ vr[:, idx])
                    if overlap < 0.5:
                        raise BranchContinuationError(
                            z, f"(branch {j} lost its eigenvector)")
                    taken[idx] = j
                    new_members.append((w[idx], vr[:, idx] / np.linalg.norm(vr[:, idx])))
                new_prev[j] = new_members
            prev = new_prev
            last = z
            last_taken = taken
            last_solve = (w, vr, vl)
        labels = {j: [] for j in prev}
        for idx, j in last_taken.items():
            labels[j].append(idx)
        w, vr, vl = last_solve
        yield zeta, labels, w, vr, vl


def mode_spectrum(model: CollisionModel, omega, zeta: float) -> ModeSpectrum:
    """Labeled spectrum of L - i zeta (v.omega) with branch projectors."""
    if zeta < 0:
        raise ValueError("zeta must be nonnegative")
    omega = np.asarray(omega, dtype=float)
    D = model.size
    if zeta == 0.0:
        vecs, _ = _kernel_splitting(model, omega)
        w = np.linalg.eigvals(model.L.astype(complex))
        labels = {}
        projectors = {}
        total = np.zeros((D, D), dtype=complex)
        kernel_idx = [int(i) for i in np.argsort(np.abs(w))[: model.kernel_dim]]
        pos = 0
        for j in (-1, 0, 1, 2):
            members = vecs[j]
            P = sum(np.outer(v, v.conj()) for v in members)
            projectors[j] = P
            labels[j] = kernel_idx[pos: pos + len(members)]
            pos += len(members)
            total += P
        projectors["remainder"] = np.eye(D) - total
        return ModeSpectrum(0.0, omega, w, labels, projectors)

    for z, labels, w, vr, vl in _track(model, omega, [zeta]):
        projectors = {}
        total = np.zeros((D, D), dtype=complex)
        for j, idxs in labels.items():
            P = np.zeros((D, D), dtype=complex)
            for idx in idxs:
                r = vr[:, idx]
                l = vl[:, idx]
                P += np.outer(r, l.conj()) / (l.conj() @ r)
            projectors[j] = P
            total += P
        projectors["remainder"] = np.eye(D) - total
        return ModeSpectrum(z, omega, w, labels, projectors)


def fit_dispersion(model: CollisionModel, omega, zeta_grid) -> BranchFit:
    """Fit alpha_j, beta_j and the cubic residual bound along the grid."""
    zetas = np.sort(np.asarray(zeta_grid, dtype=float))
    if zetas.size < 6:
        raise ValueError("need at least 6 grid points")
    if zetas[0] <= 0:
        raise ValueError("grid must be strictly positive")
    branch_vals = {j: [] for j in (-1, 0, 1, 2)}
    sigma = np.inf
    acoustic_vec = None
    last_ok = 0.0
    for zeta, labels, w, vr, vl in _track(model, omega, list(zetas)):
        branch_idx = [i for idxs in labels.values() for i in idxs]
        rest = np.delete(np.arange(w.size), branch_idx)
        sigma = min(sigma, -float(np.max(w[rest].real)))
        for j in branch_vals:
            branch_vals[j].append(np.mean(w[labels[j]]))
        if zeta == zetas[0]:
            idx = labels[-1][0]
            acoustic_vec = vr[:, idx] / np.linalg.norm(vr[:, idx])
        last_ok = zeta

    alpha, beta, resid = {}, {}, {}
    gamma_bound = 0.0
    for j, vals in branch_vals.items():
        vals = np.asarray(vals)
        branch_vals[j] = vals
        alpha[j] = float(np.sum(zetas * vals.imag) / np.sum(zetas**2))
        beta[j] = float(-np.sum(zetas**2 * vals.real) / np.sum(zetas**4))
        gamma = vals - (1j * alpha[j] * zetas - beta[j] * zetas**2)
        gamma_bound = max(gamma_bound, float(np.max(np.abs(gamma) / zetas**3)))
        model_vals = 1j * alpha[j] * zetas - beta[j] * zetas**2
        resid[j] = float(np.sqrt(np.mean(np.abs(vals - model_vals) ** 2)))

    # the j = -1 branch (Im lambda < 0) carries the +c w.v zeroth-order
    # eigenvector; equivalently e_{0,-1}(w) = e_{0,+1}(-w)
    ref = acoustic_reference(model, omega, sign=+1)
    col = abs(np.vdot(ref.astype(complex), acoustic_vec))
    return BranchFit(
        alpha=alpha, beta=beta, gamma_bound=gamma_bound, sigma=sigma,
        n0=last_ok / 2.0, fit_residuals=resid, acoustic_collinearity=float(col),
        zeta_grid=zetas, branch_values=branch_vals,
    )


def semigroup_decompose(h_in: SpectralField, model: CollisionModel, eps: float,
                        t: float, n0: float | None = None):
    """Split exp(t G_eps) h_in into branch parts U_j and the remainder U_R.

    Per mode n with zeta = eps |n| <= n0, the branch parts use the exact
    branch eigenvalues and projectors at (zeta, n/|n|); the remainder is the
    full mode exponential minus the branch parts.  Modes with zeta > n0 (and
    the non-branch content everywhere) belong to the remainder.

    Returns (parts, info): parts maps j in (-1, 0, 1, 2) and "remainder" to
    fields; info reports norms and the fitted remainder envelope.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if not 0 < eps <= 1:
        raise ValueError("eps must lie in (0, 1]")
    if n0 is None:
        n0 = 0.5
    dim = h_in.dim
    mx = h_in.mx
    parts = {j: h_in.copy() for j in (-1, 0, 1, 2)}
    for f in parts.values():
        f.coeffs[...] = 0.0
    rem = h_in.copy()
    rem.coeffs[...] = 0.0

    lead_shape = h_in.coeffs.shape[:dim]
    flat = h_in.coeffs.reshape(lead_shape + (-1,))
    spectra_cache = {}
    for idx in np.ndindex(*lead_shape):
        c0 = flat[idx]
        if not np.any(c0):
            continue
        n = np.array(idx) - mx
        norm_n = np.linalg.norm(n)
        zeta = eps * norm_n
        A = model.L / eps**2
        for a in range(dim):
            if n[a] != 0:
                A = A - 1j * n[a] / eps * model.mulv[a]
        full = expm(A * t) @ c0 if t > 0 else c0.copy()
        if norm_n == 0:
            spec = mode_spectrum(model, tuple([1.0] + [0.0] * (dim - 1)), 0.0)
            branch_sum = np.zeros_like(c0)
            for j in (-1, 0, 1, 2):
                pj = spec.projectors[j] @ c0      # eigenvalue 0: stationary
                parts[j].coeffs[idx] = pj.reshape(h_in.coeffs.shape[dim:])
                branch_sum += pj
            rem.coeffs[idx] = (full - branch_sum).reshape(h_in.coeffs.shape[dim:])
            continue
        if zeta > n0:
            rem.coeffs[idx] = full.reshape(h_in.coeffs.shape[dim:])
            continue
        omega = tuple(n / norm_n)
        key = ("mode_spec", omega, round(zeta, 14))
        if key not in spectra_cache:
            cached = model._caches.get(key)
            if cached is None:
                cached = mode_spectrum(model, omega, zeta)
                model._caches[key] = cached
            spectra_cache[key] = cached
        spec = spectra_cache[key]
        branch_sum = np.zeros_like(c0)
        for j in (-1, 0, 1, 2):
            lam = spec.branch_eigenvalue(j)
            pj = spec.projectors[j] @ c0
            term = np.exp(lam * t / eps**2) * pj
            parts[j].coeffs[idx] = term.reshape(h_in.coeffs.shape[dim:])
            branch_sum += term
        rem.coeffs[idx] = (full - branch_sum).reshape(h_in.coeffs.shape[dim:])

    parts["remainder"] = rem
    from .spectral import inner_or_norm

    info = {
        "norms": {j: float(np.sqrt(inner_or_norm(parts[j], kind="L2")))
                  for j in parts},
        "n0": n0,
        "t": t,
        "eps": eps,
    }
    return parts, info
