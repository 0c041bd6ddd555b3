"""Fourier-in-x x Hermite-in-v spectral representation.

Functions live on the torus [0, 2pi)^N times R^N in velocity.  The spatial
basis is the orthonormal Fourier family e_n(x) = (2pi)^{-N/2} exp(i n.x),
n in Z^N with |n_i| <= M_x.  The velocity basis folds the global Maxwellian
into the basis functions:

    psi_k(v) = Hbar_k(v) * (2pi)^{-1/4} exp(-v^2/4),

with Hbar_k the orthonormal probabilists' Hermite polynomial, so that
psi_0 = M^{1/2} and the family is orthonormal under plain Lebesgue dv.
Tensor products cover N = 2.  With both bases orthonormal, the L2 norm of a
field equals the Euclidean norm of its coefficient tensor.

Ladder actions used throughout (exact on the untruncated family):

    v * psi_k   = sqrt(k+1) psi_{k+1} + sqrt(k) psi_{k-1}
    d/dv psi_k  = (sqrt(k)/2) psi_{k-1} - (sqrt(k+1)/2) psi_{k+1}

Operators that raise the degree past the truncation K drop the overflow
coefficient and report its l2 mass on the returned field.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace
from itertools import product as iproduct

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.signal import fftconvolve

TWO_PI = 2.0 * np.pi


def hermite_values(order: int, x: np.ndarray) -> np.ndarray:
    """Orthonormal probabilists' Hermite polynomials Hbar_0..Hbar_order at x.

    Returns an array of shape (order+1, len(x)).  Stable three-term
    recurrence: Hbar_{n+1} = (x Hbar_n - sqrt(n) Hbar_{n-1}) / sqrt(n+1).
    """
    x = np.asarray(x, dtype=float)
    vals = np.empty((order + 1,) + x.shape)
    vals[0] = 1.0
    if order >= 1:
        vals[1] = x
    for n in range(1, order):
        vals[n + 1] = (x * vals[n] - np.sqrt(n) * vals[n - 1]) / np.sqrt(n + 1)
    return vals


def psi_values(order: int, x: np.ndarray) -> np.ndarray:
    """Basis functions psi_0..psi_order on points x (1-D)."""
    gauss = (TWO_PI) ** (-0.25) * np.exp(-np.asarray(x, dtype=float) ** 2 / 4.0)
    return hermite_values(order, x) * gauss


@dataclass(frozen=True)
class VelocityBasis:
    """Gauss-Hermite velocity basis of maximal degree `order` per axis."""

    dim_v: int
    order: int
    quad_nodes: np.ndarray
    quad_weights: np.ndarray
    # cached per-axis tables, all shape (order+1, n_quad) or (order+1, order+1)
    psi_at_nodes: np.ndarray = dc_field(repr=False, default=None)
    forward_weights: np.ndarray = dc_field(repr=False, default=None)
    mulv_matrix: np.ndarray = dc_field(repr=False, default=None)
    ddv_matrix: np.ndarray = dc_field(repr=False, default=None)

    @property
    def size_1d(self) -> int:
        return self.order + 1

    @property
    def size(self) -> int:
        return (self.order + 1) ** self.dim_v

    def multi_indices(self):
        """All Hermite multi-indices alpha with alpha_i <= order."""
        rng = range(self.order + 1)
        return list(iproduct(*([rng] * self.dim_v)))

    def degree_table(self) -> np.ndarray:
        """|alpha| on the tensor index grid, shape (order+1,)*dim_v."""
        deg = np.zeros((self.order + 1,) * self.dim_v, dtype=int)
        for axis in range(self.dim_v):
            shape = [1] * self.dim_v
            shape[axis] = self.order + 1
            deg = deg + np.arange(self.order + 1).reshape(shape)
        return deg


def build_basis(dim_v: int, order: int, quad_points: int | None = None) -> VelocityBasis:
    """Build the velocity basis; order >= 2 so |v|^2-type kernel functions fit.

    quad_points defaults to order+1, which integrates psi_a psi_b exactly for
    a, b <= order.  Pass more nodes for oracle-grade quadrature.
    """
    if dim_v not in (1, 2):
        raise ValueError(f"dim_v must be 1 or 2, got {dim_v}")
    if order < 2:
        raise ValueError(f"order must be >= 2, got {order}")
    n_quad = quad_points if quad_points is not None else order + 1
    if n_quad < order + 1:
        raise ValueError("need at least order+1 quadrature nodes per axis")
    nodes, weights = hermegauss(n_quad)          # weight exp(-x^2/2)
    psi = psi_values(order, nodes)
    # c_k = int f psi_k dv  ~  sum_i W[k,i] f(x_i), W folding the quadrature
    # weight and the inverse Gaussian of the Hermite-Gauss rule
    herm = hermite_values(order, nodes)
    fw = weights[None, :] * herm * (TWO_PI) ** (-0.25) * np.exp(nodes[None, :] ** 2 / 4.0)

    K = order
    ks = np.arange(K + 1)
    mulv = np.zeros((K + 1, K + 1))
    mulv[ks[1:], ks[:-1]] = np.sqrt(ks[1:])      # raise: sqrt(k+1) onto k+1
    mulv[ks[:-1], ks[1:]] = np.sqrt(ks[1:])      # lower: sqrt(k) onto k-1
    ddv = np.zeros((K + 1, K + 1))
    ddv[ks[:-1], ks[1:]] = np.sqrt(ks[1:]) / 2.0
    ddv[ks[1:], ks[:-1]] = -np.sqrt(ks[1:]) / 2.0

    return VelocityBasis(
        dim_v=dim_v,
        order=order,
        quad_nodes=nodes,
        quad_weights=weights,
        psi_at_nodes=psi,
        forward_weights=fw,
        mulv_matrix=mulv,
        ddv_matrix=ddv,
    )


@dataclass
class SpectralField:
    """Complex coefficient tensor over (Fourier mode n, Hermite index alpha).

    coeffs has shape (2*mx+1,)*N + (order+1,)*N; Fourier axis index i maps to
    the wavenumber n = i - mx.  Real-valued functions satisfy
    coeffs(-n, alpha) = conj(coeffs(n, alpha)).
    """

    coeffs: np.ndarray
    basis: VelocityBasis
    mx: int
    truncation_loss: float = 0.0

    @property
    def dim(self) -> int:
        return self.basis.dim_v

    @property
    def grid(self) -> int:
        return 2 * self.mx + 1

    def modes(self) -> np.ndarray:
        return np.arange(-self.mx, self.mx + 1)

    def copy(self) -> "SpectralField":
        return replace(self, coeffs=self.coeffs.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return replace(self, coeffs=self.coeffs + other.coeffs,
                       truncation_loss=self.truncation_loss + other.truncation_loss)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return replace(self, coeffs=self.coeffs - other.coeffs,
                       truncation_loss=self.truncation_loss + other.truncation_loss)

    def __mul__(self, scalar) -> "SpectralField":
        return replace(self, coeffs=self.coeffs * scalar)

    __rmul__ = __mul__


def zero_field(basis: VelocityBasis, mx: int) -> SpectralField:
    shape = (2 * mx + 1,) * basis.dim_v + (basis.order + 1,) * basis.dim_v
    return SpectralField(np.zeros(shape, dtype=complex), basis, mx)


def unit_field(basis: VelocityBasis, mx: int, n, alpha) -> SpectralField:
    """Field with a single unit coefficient at Fourier mode n, Hermite alpha."""
    f = zero_field(basis, mx)
    n = np.atleast_1d(n)
    alpha = np.atleast_1d(alpha)
    idx = tuple(int(ni) + mx for ni in n) + tuple(int(a) for a in alpha)
    f.coeffs[idx] = 1.0
    return f


def enforce_reality(field: SpectralField) -> SpectralField:
    """Symmetrize coefficients so the represented function is real-valued."""
    c = field.coeffs
    flipped = c
    for axis in range(field.dim):
        flipped = np.flip(flipped, axis=axis)
    out = field.copy()
    out.coeffs = 0.5 * (c + np.conj(flipped))
    return out


def random_field(basis: VelocityBasis, mx: int, rng, real: bool = True,
                 amplitude: float = 1.0) -> SpectralField:
    """Random field for tests; real=True enforces the reality symmetry."""
    shape = (2 * mx + 1,) * basis.dim_v + (basis.order + 1,) * basis.dim_v
    c = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    out = SpectralField(amplitude * c, basis, mx)
    return enforce_reality(out) if real else out


# ---------------------------------------------------------------------------
# velocity transforms


def velocity_transform(values: np.ndarray, basis: VelocityBasis, direction: str) -> np.ndarray:
    """Map node values <-> Hermite coefficients along the trailing axes.

    forward: values on the tensor quadrature grid (..., n_quad)*N to
    coefficients (..., order+1)*N via Gauss-Hermite quadrature of
    int f psi_alpha dv.  inverse: evaluate the expansion on the nodes.
    """
    nv = basis.dim_v
    if direction == "forward":
        mats = [basis.forward_weights] * nv
        expect = len(basis.quad_nodes)
    elif direction == "inverse":
        mats = [basis.psi_at_nodes.T] * nv  # (n_quad, order+1)
        expect = basis.order + 1
    else:
        raise ValueError(f"direction must be forward or inverse, got {direction!r}")
    values = np.asarray(values)
    if values.ndim < nv or any(values.shape[-nv + i] != expect for i in range(nv)):
        raise ValueError(
            f"trailing axes must have length {expect} for direction {direction!r}"
        )
    out = values
    for axis in range(nv):
        # contract trailing axis number `axis` (counting from -nv)
        out = np.moveaxis(out, -nv + axis, -1)
        out = out @ mats[axis].T
        out = np.moveaxis(out, -1, -nv + axis)
    return out


def _apply_herm(mat: np.ndarray, coeffs: np.ndarray, herm_axis: int) -> np.ndarray:
    moved = np.moveaxis(coeffs, herm_axis, -1)
    moved = moved @ mat.T
    return np.moveaxis(moved, -1, herm_axis)


def apply_spectral_operator(field: SpectralField, op: str, axis: int) -> SpectralField:
    """Apply d/dx_axis, d/dv_axis, or multiplication by v_axis.

    ddx multiplies mode n by i*n_axis.  ddv and mulv act by the Hermite
    ladder recurrences, truncated back to the basis order; the l2 mass of the
    dropped top-degree coefficient is reported on the result.
    """
    nv = field.dim
    if not 0 <= axis < nv:
        raise ValueError(f"axis {axis} out of range for dimension {nv}")
    if op == "ddx":
        n = field.modes()
        shape = [1] * field.coeffs.ndim
        shape[axis] = field.grid
        out = field.coeffs * (1j * n.reshape(shape))
        return SpectralField(out, field.basis, field.mx)
    herm_axis = nv + axis
    K = field.basis.order
    top = np.take(field.coeffs, K, axis=herm_axis)
    if op == "mulv":
        mat = field.basis.mulv_matrix
        drop = (K + 1) * float(np.sum(np.abs(top) ** 2))
    elif op == "ddv":
        mat = field.basis.ddv_matrix
        drop = (K + 1) / 4.0 * float(np.sum(np.abs(top) ** 2))
    else:
        raise ValueError(f"op must be ddx, ddv or mulv, got {op!r}")
    out = _apply_herm(mat, field.coeffs, herm_axis)
    return SpectralField(out, field.basis, field.mx, truncation_loss=np.sqrt(drop))


# ---------------------------------------------------------------------------
# multi-index derivative machinery shared by the Sobolev norms


def multi_indices_upto(dim: int, total: int):
    """All multi-indices m in N^dim with |m| <= total."""
    out = []
    for m in iproduct(*([range(total + 1)] * dim)):
        if sum(m) <= total:
            out.append(m)
    return out


def derivative_pairs(dim: int, k: int):
    """All (j, l) with |j| + |l| <= k; j differentiates v, l differentiates x."""
    pairs = []
    for j in multi_indices_upto(dim, k):
        for l in multi_indices_upto(dim, k - sum(j)):
            pairs.append((j, l))
    return pairs


def apply_derivative(field: SpectralField, j, l) -> SpectralField:
    """d^|j|/dv^j d^|l|/dx^l as repeated spectral operator applications."""
    out = field
    for axis, reps in enumerate(l):
        for _ in range(reps):
            out = apply_spectral_operator(out, "ddx", axis)
    for axis, reps in enumerate(j):
        for _ in range(reps):
            out = apply_spectral_operator(out, "ddv", axis)
    return out


def _x_factor_sq(field: SpectralField, l) -> np.ndarray:
    """|Pi (i n_a)^{l_a}|^2 broadcast over the coefficient tensor."""
    fac = np.ones((1,) * field.coeffs.ndim)
    for axis, reps in enumerate(l):
        if reps:
            n = field.modes().astype(float)
            shape = [1] * field.coeffs.ndim
            shape[axis] = field.grid
            fac = fac * (n ** (2 * reps)).reshape(shape)
    return fac


def _weighted_sq(field: SpectralField, weights: np.ndarray | None) -> float:
    a = np.abs(field.coeffs) ** 2
    if weights is not None:
        a = a * weights
    return float(np.sum(a))


def inner_or_norm(f: SpectralField, g: SpectralField | None = None, kind: str = "L2",
                  k: int = 0, eps: float = 1.0, model=None):
    """Inner products and squared norms, evaluated exactly in coefficients.

    kind:
      L2       <f, g>; with g None, the squared L2 norm.
      Lambda   the model's Lambda_v-weighted product (diagonal in Hermite).
      Hk       sum over |j|+|l| <= k of ||d^j_l f||^2 (squared Sobolev norm).
      HkLambda same but each derivative measured in the Lambda norm.
      HkxL2    pure x-derivatives only: sum_{|l|<=k} ||d^0_l f||^2.
      Hk_eps   sum_{|l|<=k} ||d^0_l f||^2 + eps^2 sum_{|j|>=1} ||d^j_l f||^2
               (unit-coefficient eps-weighted combination; equals Hk at eps=1).

    Norm kinds return real values; L2/Lambda with g return the complex
    inner product.
    """
    if kind in ("L2", "Lambda"):
        if kind == "Lambda":
            if model is None:
                raise ValueError("Lambda norm requires a bound collision model")
            w = model.lambda_weights
            if g is None:
                return _weighted_sq(f, w)
            return complex(np.sum(w * f.coeffs * np.conj(g.coeffs)))
        if g is None:
            return _weighted_sq(f, None)
        return complex(np.sum(f.coeffs * np.conj(g.coeffs)))

    if g is not None:
        raise ValueError(f"kind {kind!r} is a norm; g must be None")
    if k < 0:
        raise ValueError("k must be >= 0")
    if kind == "Hk_eps" and not 0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")

    lam = None
    if kind == "HkLambda":
        if model is None:
            raise ValueError("HkLambda requires a bound collision model")
        lam = model.lambda_weights

    total = 0.0
    for j, l in derivative_pairs(f.dim, k):
        if kind == "HkxL2" and sum(j) > 0:
            continue
        if sum(j) == 0:
            # x-derivatives are diagonal: no field copy needed
            val = float(np.sum(_x_factor_sq(f, l) * np.abs(f.coeffs) ** 2
                               * (lam if lam is not None else 1.0)))
        else:
            df = apply_derivative(f, j, ())
            val = float(np.sum(_x_factor_sq(f, l) * np.abs(df.coeffs) ** 2
                               * (lam if lam is not None else 1.0)))
        if kind == "Hk_eps" and sum(j) >= 1:
            val *= eps ** 2
        total += val
    return total


# ---------------------------------------------------------------------------
# spatial products (exact truncated convolution) and grids


def mode_product(a_hat: np.ndarray, b_hat: np.ndarray, mx: int) -> np.ndarray:
    """Fourier coefficients of the pointwise product of two scalar x-fields.

    Inputs are centered coefficient arrays of shape (2*mx+1,)*N on the
    orthonormal e_n basis; the product picks up (2pi)^{-N/2}.  Full linear
    convolution is formed and cropped back to |n_i| <= mx, which is the exact
    Galerkin (dealiased) truncation.
    """
    ndim = a_hat.ndim
    full = fftconvolve(a_hat, b_hat, mode="full")
    sl = tuple(slice(mx, 3 * mx + 1) for _ in range(ndim))
    return full[sl] * (TWO_PI) ** (-0.5 * ndim)


def mode_convolve(a_hat: np.ndarray, b_hat: np.ndarray, mx: int, x_ndim: int) -> np.ndarray:
    """Truncated product coefficients when b carries extra trailing axes.

    a_hat has shape (2*mx+1,)*x_ndim, b_hat the same leading axes plus any
    trailing ones (e.g. Hermite indices); the product is taken in x only.
    """
    g = 2 * mx + 1
    pad = 2 * g - 1
    axes = tuple(range(x_ndim))
    fa = np.fft.fftn(a_hat, s=(pad,) * x_ndim, axes=axes)
    fb = np.fft.fftn(b_hat, s=(pad,) * x_ndim, axes=axes)
    fa = fa.reshape(fa.shape + (1,) * (b_hat.ndim - x_ndim))
    conv = np.fft.ifftn(fa * fb, axes=axes)
    sl = tuple(slice(mx, 3 * mx + 1) for _ in range(x_ndim))
    sl = sl + tuple(slice(None) for _ in range(b_hat.ndim - x_ndim))
    return conv[sl] * (TWO_PI) ** (-0.5 * x_ndim)


def x_grid(mx: int) -> np.ndarray:
    """Collocation points 2pi p / (2mx+1)."""
    g = 2 * mx + 1
    return TWO_PI * np.arange(g) / g


def modes_to_values(hat: np.ndarray, mx: int, ndim: int) -> np.ndarray:
    """Evaluate sum_n hat(n) e_n(x) on the collocation grid (leading axes)."""
    g = 2 * mx + 1
    out = np.asarray(hat, dtype=complex)
    for axis in range(ndim):
        out = np.fft.ifft(np.fft.ifftshift(out, axes=axis), axis=axis) * g
    return out * (TWO_PI) ** (-0.5 * ndim)


def values_to_modes(values: np.ndarray, mx: int, ndim: int) -> np.ndarray:
    """Inverse of modes_to_values on the (2mx+1)^N collocation grid."""
    g = 2 * mx + 1
    out = np.asarray(values, dtype=complex)
    for axis in range(ndim):
        out = np.fft.fftshift(np.fft.fft(out, axis=axis), axes=axis) / g
    return out * (TWO_PI) ** (0.5 * ndim)
