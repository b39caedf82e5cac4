"""Frame-bundle flows driven by polygonal (dyadic) Brownian paths.

The flow state is a pair ``(z, E)``: a chart point and an adapted frame at
it.  A driving path with frame-coordinate velocity ``c(s)`` moves the state
along the split-connection horizontal lift::

    dz/ds   = E c(s)
    dE^i_j / ds = - oplusGamma^i_kl(z) (E c)^k E^l_j

Driving paths are piecewise-linear interpolations of Brownian motion on the
dyadic grid of mesh 2^-k.  They are built by the midpoint-bridge recursion,
level by level with a fixed draw order, so the same (seed, index) pair
produces *nested* paths as k increases: refining never resamples the past.

Between dyadic nodes the velocity is constant and the flow is a smooth ODE,
integrated with fixed-step RK4.  The adapted zero block of ``E`` is
preserved exactly: every RK4 stage multiplies transverse rows only by
transverse data, so the lower-left block never leaves exact zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .manifold_atlas import Atlas, ChartPoint, chart_point, normalize
from .metric_geometry import christoffel_oplus, transverse_christoffel
from .frame_bundle import (
    AdaptedFrame,
    _gram_schmidt_raw,
    _orthonormality_residual_raw,
    ORTHONORMALITY_TOL,
)

__all__ = [
    "DrivingPath",
    "sample_brownian",
    "IntegratorConfig",
    "FlowTrajectory",
    "ReducedTrajectory",
    "horizontal_vector",
    "flow_deterministic",
    "flow_stochastic",
    "flow_transverse_reduced",
]


# ---------------------------------------------------------------------------
# § dyadic Brownian driving paths
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrivingPath:
    """A polygonal Brownian path on the dyadic grid of level ``k``.

    ``increments[i]`` is the Brownian increment over
    ``[i 2^-k, (i+1) 2^-k]``; the path covers ``[0, ceil(horizon)]`` whole
    unit intervals so any horizon up to the next integer can be consumed.
    ``dim`` is q for transverse driving or n for full driving.
    """

    dim: int
    level: int
    horizon: float
    increments: np.ndarray
    seed: int | None = None
    index: int | None = None

    @property
    def mesh(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def slopes(self) -> np.ndarray:
        """Velocity of the polygonal interpolation on each dyadic interval."""
        return self.increments * 2.0 ** self.level

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.increments.shape[0] + 1) * self.mesh

    def value(self, s) -> np.ndarray:
        """Evaluate the polygonal path at time(s) s in [0, ceil(horizon)]."""
        s = np.asarray(s, dtype=float)
        cum = np.vstack([np.zeros(self.dim),
                         np.cumsum(self.increments, axis=0)])
        out = np.empty(s.shape + (self.dim,))
        for d in range(self.dim):
            out[..., d] = np.interp(s, self.times, cum[:, d])
        return out

    def rotated(self, R: np.ndarray) -> "DrivingPath":
        """The path with values rotated by the orthogonal matrix R."""
        R = np.asarray(R, dtype=float)
        if R.shape != (self.dim, self.dim):
            raise ValueError("rotation has wrong dimension")
        return replace(self, increments=self.increments @ R.T)

    def intervals_for(self, T: float) -> tuple[int, float]:
        """Number of whole dyadic intervals before T and the leftover
        fraction of the next one."""
        if T < 0 or T > self.increments.shape[0] * self.mesh + 1e-12:
            raise ValueError("horizon exceeds sampled path")
        scaled = T / self.mesh
        n_full = int(np.floor(scaled + 1e-12))
        frac = scaled - n_full
        if frac < 1e-12:
            frac = 0.0
        return n_full, frac


def sample_brownian(dim: int, k: int, T: float, seed: int,
                    index: int = 0) -> DrivingPath:
    """Sample a dyadic-level-k Brownian path on [0, ceil(T)].

    Level 0 draws one N(0,1) increment per unit interval; each refinement
    level splits every increment with an independent midpoint-bridge
    correction of variance h/4 (h the parent mesh).  Draws happen level by
    level in a fixed order from ``default_rng([seed, index])``, so paths are
    nested across k and reproducible across platforms.
    """
    if dim < 1 or k < 0 or T <= 0:
        raise ValueError("need dim >= 1, k >= 0, T > 0")
    units = max(1, int(math.ceil(T - 1e-12)))
    rng = np.random.default_rng([seed, index])
    inc = rng.standard_normal((units, dim))
    mesh = 1.0
    for _ in range(k):
        xi = rng.standard_normal(inc.shape) * (0.5 * math.sqrt(mesh))
        children = np.empty((inc.shape[0] * 2, dim))
        children[0::2] = 0.5 * inc + xi
        children[1::2] = 0.5 * inc - xi
        inc = children
        mesh *= 0.5
    return DrivingPath(dim=dim, level=k, horizon=float(T), increments=inc,
                       seed=seed, index=index)


# ---------------------------------------------------------------------------
# § integrator configuration and trajectory containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 settings.

    ``dt`` is the target step; each dyadic interval of mesh h is cut into
    ceil(h / dt) equal substeps, so the effective step is min(dt, h) or
    slightly below and never straddles a velocity kink.  ``k`` optionally
    pins the dyadic level the config was built for, with the consistency
    requirement dt <= 2^-k.  ``output_stride`` thins trajectory recording
    (every that-many substeps).  ``wrap`` routes the state through
    :func:`~.manifold_atlas.normalize` after every dyadic interval; the
    default keeps trajectories on the universal cover.
    """

    dt: float = 1e-3
    k: int | None = None
    output_stride: int = 1
    wrap: bool = False
    reortho_tol: float = ORTHONORMALITY_TOL

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.output_stride < 1:
            raise ValueError("dt must be positive, output_stride >= 1")
        if self.k is not None and self.dt > 2.0 ** (-self.k) + 1e-15:
            raise ValueError("dt must not exceed the dyadic mesh 2^-k")

    @classmethod
    def for_level(cls, k: int, **kwargs) -> "IntegratorConfig":
        """The default step policy: dt = min(1e-3, 2^-k)."""
        return cls(dt=min(1e-3, 2.0 ** (-k)), k=k, **kwargs)

    def substeps(self, interval: float) -> int:
        return max(1, int(math.ceil(interval / self.dt - 1e-9)))


@dataclass
class FlowTrajectory:
    """A recorded flow: times, chart coordinates, frames, and bookkeeping.

    ``cover_sheets`` is the per-sample deck wrap count (all zero unless the
    run wrapped); ``reortho_count`` counts re-orthonormalization events the
    integrator had to perform (expected zero at default tolerances).
    """

    atlas: Atlas
    times: np.ndarray
    z: np.ndarray
    E: np.ndarray
    cover_sheets: np.ndarray
    reortho_count: int = 0

    def __len__(self) -> int:
        return self.times.shape[0]

    def point(self, i: int) -> ChartPoint:
        pt = chart_point(self.atlas, self.z[i])
        pt.cover_sheet[:] = self.cover_sheets[i]
        return pt

    def frame(self, i: int) -> AdaptedFrame:
        return AdaptedFrame(base=self.point(i), E=self.E[i].copy())

    @property
    def final_frame(self) -> AdaptedFrame:
        return self.frame(len(self) - 1)

    def orthonormality_residuals(self) -> np.ndarray:
        return np.array([
            _orthonormality_residual_raw(self.atlas, self.z[i], self.E[i])
            for i in range(len(self))
        ])


@dataclass
class ReducedTrajectory:
    """Trajectory of the transverse-model flow: base point and C block."""

    atlas: Atlas
    times: np.ndarray
    ybar: np.ndarray
    C: np.ndarray


# ---------------------------------------------------------------------------
# § the horizontal system
# ---------------------------------------------------------------------------

def horizontal_vector(atlas: Atlas, frame: AdaptedFrame, a: int) -> np.ndarray:
    """Horizontal lift of the a-th frame direction as a flat (n + n^2)
    vector: base velocity E[:, a] followed by the row-major fiber velocity
    -oplusGamma(E_a, E)."""
    n = atlas.n
    if not 0 <= a < n:
        raise ValueError("frame index out of range")
    G = christoffel_oplus(atlas, frame.base.z)
    v = frame.E[:, a]
    dE = -np.einsum("ikl,k,lj->ij", G, v, frame.E)
    return np.concatenate([v, dE.reshape(-1)])


def _rhs_reference(atlas: Atlas, z: np.ndarray, E: np.ndarray,
                   c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Generic split-connection transport: assembled from the full
    Christoffel tensor.  Reference implementation for the fast path."""
    v = np.einsum("...ij,...j->...i", E, c)
    G = christoffel_oplus(atlas, z)
    dz = v
    dE = -np.einsum("...ikl,...k,...lj->...ij", G, v, E)
    return dz, dE


def _rhs(atlas: Atlas, z: np.ndarray, E: np.ndarray,
         c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Transport velocity field, with the handful of nonzero split-connection
    coefficients of the built-in families written out (the integrator spends
    nearly all its time here).  Tests pin this against the reference."""
    v = np.einsum("...ij,...j->...i", E, c)
    if atlas.kind == "e1":
        fp = atlas.warp.eval(z[..., 1], 1)
        dE = np.zeros_like(E)
        dE[..., 0, :] = (-fp * v[..., 1])[..., None] * E[..., 0, :]
        return v, dE
    if atlas.kind == "e2":
        t = z[..., 2]
        L = atlas.log_lam
        up = atlas.warp.eval(t, 1)
        vy = v[..., 1]
        vt = v[..., 2]
        dE = np.empty_like(E)
        dE[..., 0, :] = ((L - up) * vt)[..., None] * E[..., 0, :]
        dE[..., 1, :] = (-L) * (vt[..., None] * E[..., 1, :]
                                + vy[..., None] * E[..., 2, :])
        dE[..., 2, :] = (L * np.exp(2.0 * L * t) * vy)[..., None] * E[..., 1, :]
        return v, dE
    return _rhs_reference(atlas, z, E, c)


def _rk4_step(atlas: Atlas, z, E, c, dt):
    k1z, k1E = _rhs(atlas, z, E, c)
    k2z, k2E = _rhs(atlas, z + 0.5 * dt * k1z, E + 0.5 * dt * k1E, c)
    k3z, k3E = _rhs(atlas, z + 0.5 * dt * k2z, E + 0.5 * dt * k2E, c)
    k4z, k4E = _rhs(atlas, z + dt * k3z, E + dt * k3E, c)
    z_new = z + (dt / 6.0) * (k1z + 2 * k2z + 2 * k3z + k4z)
    E_new = E + (dt / 6.0) * (k1E + 2 * k2E + 2 * k3E + k4E)
    return z_new, E_new


def _embed_slopes(atlas: Atlas, slopes: np.ndarray) -> np.ndarray:
    """Lift q-dimensional transverse slopes into full frame coordinates."""
    dim = slopes.shape[-1]
    if dim == atlas.n:
        return slopes
    if dim != atlas.dims.q:
        raise ValueError("driving dimension must be q or n")
    full = np.zeros(slopes.shape[:-1] + (atlas.n,))
    full[..., atlas.dims.p:] = slopes
    return full


def _integrate_batch(atlas: Atlas, z0: np.ndarray, E0: np.ndarray,
                     slopes: np.ndarray, mesh: float, n_full: int,
                     frac: float, cfg: IntegratorConfig):
    """Drive a batch of states through consecutive dyadic intervals.

    ``slopes`` has shape (B, n_intervals, n); each interval is integrated
    with ceil(mesh / dt) RK4 substeps, plus one shortened block when a
    fractional final interval is requested.  Re-orthonormalization is
    checked once per dyadic interval (endpoint statistics tolerate the tiny
    mid-interval drift that single-trajectory flows police per substep).
    Returns final (z, E, reortho_count).
    """
    z = np.array(z0, copy=True)
    E = np.array(E0, copy=True)
    reortho = 0
    m = cfg.substeps(mesh)
    dt = mesh / m
    for i in range(n_full):
        c = slopes[:, i, :]
        for _ in range(m):
            z, E = _rk4_step(atlas, z, E, c, dt)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(E))):
            raise FloatingPointError(
                f"flow batch produced non-finite state in interval {i}")
        res = _orthonormality_residual_raw(atlas, z, E)
        bad = res > cfg.reortho_tol
        if np.any(bad):
            E[bad] = _gram_schmidt_raw(atlas, z[bad], E[bad])
            reortho += int(np.count_nonzero(bad))
    if frac > 0.0:
        span = frac * mesh
        mf = cfg.substeps(span)
        dtf = span / mf
        c = slopes[:, n_full, :]
        for _ in range(mf):
            z, E = _rk4_step(atlas, z, E, c, dtf)
    return z, E, reortho


# ---------------------------------------------------------------------------
# § public flow drivers
# ---------------------------------------------------------------------------

def _as_initial(atlas: Atlas, r0: AdaptedFrame):
    if r0.atlas is not atlas:
        raise ValueError("frame belongs to a different atlas")
    return r0.base, r0.base.z.copy(), r0.E.copy()


class _SingleRecorder:
    """Stepper for one trajectory: per-substep re-orthonormalization check,
    non-finite abort, optional wrapping, and strided recording."""

    def __init__(self, atlas: Atlas, pt0: ChartPoint, z: np.ndarray,
                 E: np.ndarray, cfg: IntegratorConfig):
        self.atlas = atlas
        self.cfg = cfg
        self.z = z[None]
        self.E = E[None]
        self.sheet = pt0.cover_sheet.copy()
        self.reortho = 0
        self.step_no = 0
        self.times = [0.0]
        self.zs = [z.copy()]
        self.Es = [E.copy()]
        self.sheets = [self.sheet.copy()]

    def advance(self, c: np.ndarray, dt: float, time_after: float) -> None:
        self.z, self.E = _rk4_step(self.atlas, self.z, self.E, c[None], dt)
        if not (np.all(np.isfinite(self.z)) and np.all(np.isfinite(self.E))):
            raise FloatingPointError(
                f"flow produced non-finite state at time {time_after:.6g}")
        res = float(np.max(_orthonormality_residual_raw(
            self.atlas, self.z, self.E)))
        if res > self.cfg.reortho_tol:
            self.E = _gram_schmidt_raw(self.atlas, self.z, self.E)
            self.reortho += 1
        self.step_no += 1
        if self.step_no % self.cfg.output_stride == 0:
            self.record(time_after)

    def wrap(self) -> None:
        if not self.cfg.wrap:
            return
        ptw = chart_point(self.atlas, self.z[0])
        ptw.cover_sheet[:] = self.sheet
        ptw, frw = normalize(ptw, AdaptedFrame(base=ptw, E=self.E[0]))
        self.z, self.E, self.sheet = ptw.z[None], frw.E[None], ptw.cover_sheet

    def record(self, time: float) -> None:
        if self.times and abs(self.times[-1] - time) < 1e-15:
            # same timestamp: keep the latest state so a wrap applied after
            # the final substep is what the trajectory reports
            self.zs[-1] = self.z[0].copy()
            self.Es[-1] = self.E[0].copy()
            self.sheets[-1] = self.sheet.copy()
            return
        self.times.append(time)
        self.zs.append(self.z[0].copy())
        self.Es.append(self.E[0].copy())
        self.sheets.append(self.sheet.copy())

    def finish(self) -> FlowTrajectory:
        return FlowTrajectory(self.atlas, np.array(self.times),
                              np.array(self.zs), np.array(self.Es),
                              np.array(self.sheets), self.reortho)


def flow_deterministic(atlas: Atlas, r0: AdaptedFrame, c,
                       T: float, cfg: IntegratorConfig | None = None
                       ) -> FlowTrajectory:
    """Integrate the horizontal flow with constant frame-coordinate velocity
    ``c`` (length q, transverse driving, or length n) up to time T."""
    cfg = cfg or IntegratorConfig()
    pt0, z, E = _as_initial(atlas, r0)
    c = _embed_slopes(atlas, np.atleast_1d(np.asarray(c, dtype=float)))
    rec = _SingleRecorder(atlas, pt0, z, E, cfg)
    if T > 0:
        m = cfg.substeps(T)
        dt = T / m
        for s in range(1, m + 1):
            rec.advance(c, dt, s * dt)
            rec.wrap()
    rec.record(float(T))
    return rec.finish()


def flow_stochastic(atlas: Atlas, r0: AdaptedFrame, path: DrivingPath,
                    cfg: IntegratorConfig | None = None) -> FlowTrajectory:
    """Integrate the horizontal flow along a polygonal Brownian path up to
    the path's horizon.  Driving dimension q lifts into the transverse frame
    slots; dimension n drives every slot."""
    cfg = cfg or IntegratorConfig()
    if cfg.k is not None and cfg.k != path.level:
        raise ValueError("config dyadic level does not match the path")
    pt0, z, E = _as_initial(atlas, r0)
    slopes = _embed_slopes(atlas, path.slopes)
    n_full, frac = path.intervals_for(path.horizon)

    mesh = path.mesh
    m = cfg.substeps(mesh)
    dt = mesh / m
    rec = _SingleRecorder(atlas, pt0, z, E, cfg)
    for i in range(n_full):
        for j in range(1, m + 1):
            rec.advance(slopes[i], dt, i * mesh + j * dt)
        rec.wrap()
    if frac > 0.0:
        span = frac * mesh
        mf = cfg.substeps(span)
        dtf = span / mf
        for j in range(1, mf + 1):
            rec.advance(slopes[n_full], dtf, n_full * mesh + j * dtf)
    rec.record(float(path.horizon))
    return rec.finish()


def _transverse_rhs(atlas: Atlas, y: np.ndarray, C: np.ndarray,
                    c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    v = np.einsum("...ij,...j->...i", C, c)
    G = transverse_christoffel(atlas, y[..., -1])
    dy = v
    dC = -np.einsum("...ikl,...k,...lj->...ij", G, v, C)
    return dy, dC


def flow_transverse_reduced(atlas: Atlas, ybar0, C0, c_transverse,
                            T: float, cfg: IntegratorConfig | None = None
                            ) -> ReducedTrajectory:
    """Integrate the q-dimensional transverse-model flow (base point plus
    transverse frame block) with constant driving ``c_transverse``.

    For transverse driving this reproduces the (ybar, C) projection of the
    full bundle flow — the leaf coordinates never feed back.
    """
    cfg = cfg or IntegratorConfig()
    y = np.atleast_1d(np.asarray(ybar0, dtype=float)).copy()
    C = np.asarray(C0, dtype=float).copy()
    c = np.atleast_1d(np.asarray(c_transverse, dtype=float))
    q = atlas.dims.q
    if y.shape != (q,) or C.shape != (q, q) or c.shape != (q,):
        raise ValueError("reduced state has transverse dimension q")

    m = cfg.substeps(T)
    dt = T / m
    times = [0.0]
    ys, Cs = [y.copy()], [C.copy()]
    for s in range(1, m + 1):
        k1y, k1C = _transverse_rhs(atlas, y, C, c)
        k2y, k2C = _transverse_rhs(atlas, y + 0.5 * dt * k1y, C + 0.5 * dt * k1C, c)
        k3y, k3C = _transverse_rhs(atlas, y + 0.5 * dt * k2y, C + 0.5 * dt * k2C, c)
        k4y, k4C = _transverse_rhs(atlas, y + dt * k3y, C + dt * k3C, c)
        y = y + (dt / 6.0) * (k1y + 2 * k2y + 2 * k3y + k4y)
        C = C + (dt / 6.0) * (k1C + 2 * k2C + 2 * k3C + k4C)
        if s % cfg.output_stride == 0 or s == m:
            times.append(s * dt)
            ys.append(y.copy())
            Cs.append(C.copy())
    return ReducedTrajectory(atlas, np.array(times), np.array(ys), np.array(Cs))
