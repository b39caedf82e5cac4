"""Foliated coordinate charts and deck transformations for the built-in manifolds.

Two compact foliated manifolds are built in, each presented as a single global
chart on the universal cover together with the deck transformations that
recover the compact quotient:

* ``e1`` — a warped two-torus.  Coordinates ``(x, t)``, both of period one;
  the leaves are the circles ``t = const``.  The metric (see
  :mod:`.metric_geometry`) is ``exp(2 f(t)) dx^2 + dt^2`` for a finite
  Fourier warp ``f``.

* ``e2`` — a hyperbolic torus bundle.  A two-torus crossed with a line,
  glued by an integer matrix ``A`` (det 1, trace > 2) after a unit shift in
  ``t``.  Coordinates ``(x, y, t)`` are eigencoordinates of ``A``: ``x`` runs
  along the expanding eigenvector (the leaf direction), ``y`` along the
  contracting one.  The metric is
  ``lam^(-2t) exp(2 u(t)) dx^2 + lam^(2t) dy^2 + dt^2``.

Leaf coordinates always come first in the flattened coordinate vector
``z = (x_1..x_p, y_1..y_q)``, and the distinguished transverse coordinate
``t`` is the last entry of ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

TWO_PI = 2.0 * np.pi

__all__ = [
    "FourierSeries",
    "FoliationDims",
    "ChartPoint",
    "DeckMap",
    "Atlas",
    "build_e1",
    "build_e2",
    "chart_point",
    "normalize",
    "leaf_step",
    "in_fundamental_domain",
    "random_point",
]


# ---------------------------------------------------------------------------
# § periodic warp functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FourierSeries:
    """A finite real Fourier series on the unit circle.

    ``value(t) = const + sum_m cos_amp[m-1] cos(2 pi m t)
                       + sum_m sin_amp[m-1] sin(2 pi m t)``

    Derivatives of every order are exact, which is what makes the
    closed-form geometry of the built-in metrics possible.
    """

    const: float = 0.0
    cos_amp: tuple[float, ...] = ()
    sin_amp: tuple[float, ...] = ()

    @classmethod
    def from_sines(cls, coeffs: Sequence[float]) -> "FourierSeries":
        """Series with sine amplitudes only: coeffs[m-1] * sin(2 pi m t)."""
        coeffs = tuple(float(c) for c in coeffs)
        if not all(np.isfinite(coeffs)):
            raise ValueError("Fourier coefficients must be finite")
        return cls(sin_amp=coeffs)

    @classmethod
    def from_grid(cls, values: np.ndarray) -> "FourierSeries":
        """Trigonometric interpolation of samples on the uniform grid i/N."""
        values = np.asarray(values, dtype=float)
        n = values.size
        spec = np.fft.rfft(values) / n
        const = spec[0].real
        cos_amp = 2.0 * spec[1:].real
        sin_amp = -2.0 * spec[1:].imag
        if n % 2 == 0:
            cos_amp[-1] *= 0.5    # Nyquist mode appears once, not twice
            sin_amp[-1] = 0.0
        # trim numerically dead trailing modes to keep evaluation cheap
        scale = max(1.0, np.max(np.abs(values)))
        keep = max(
            [0] + [m + 1 for m in range(cos_amp.size)
                   if abs(cos_amp[m]) > 1e-15 * scale
                   or abs(sin_amp[m]) > 1e-15 * scale]
        )
        return cls(const=float(const),
                   cos_amp=tuple(cos_amp[:keep]),
                   sin_amp=tuple(sin_amp[:keep]))

    @property
    def n_modes(self) -> int:
        return max(len(self.cos_amp), len(self.sin_amp))

    def eval(self, t: np.ndarray | float, deriv: int = 0) -> np.ndarray:
        """Evaluate the series or its ``deriv``-th derivative at ``t``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        if deriv == 0:
            out = out + self.const
        half_pi = 0.5 * np.pi
        for m in range(1, self.n_modes + 1):
            w = TWO_PI * m
            phase = w * t + deriv * half_pi
            if m <= len(self.cos_amp) and self.cos_amp[m - 1] != 0.0:
                out = out + self.cos_amp[m - 1] * w**deriv * np.cos(phase)
            if m <= len(self.sin_amp) and self.sin_amp[m - 1] != 0.0:
                out = out + self.sin_amp[m - 1] * w**deriv * np.sin(phase)
        return out

    def derivative(self) -> "FourierSeries":
        n = self.n_modes
        cos = np.zeros(n)
        sin = np.zeros(n)
        cos[: len(self.cos_amp)] = self.cos_amp
        sin[: len(self.sin_amp)] = self.sin_amp
        w = TWO_PI * np.arange(1, n + 1)
        return FourierSeries(0.0, tuple(w * sin), tuple(-w * cos))

    def __add__(self, other: "FourierSeries") -> "FourierSeries":
        n = max(self.n_modes, other.n_modes)

        def pad(a: tuple[float, ...]) -> np.ndarray:
            out = np.zeros(n)
            out[: len(a)] = a
            return out

        return FourierSeries(
            self.const + other.const,
            tuple(pad(self.cos_amp) + pad(other.cos_amp)),
            tuple(pad(self.sin_amp) + pad(other.sin_amp)),
        )

    def __neg__(self) -> "FourierSeries":
        return FourierSeries(
            -self.const,
            tuple(-c for c in self.cos_amp),
            tuple(-s for s in self.sin_amp),
        )

    def scaled(self, a: float) -> "FourierSeries":
        return FourierSeries(
            a * self.const,
            tuple(a * c for c in self.cos_amp),
            tuple(a * s for s in self.sin_amp),
        )

    def is_zero(self) -> bool:
        return (self.const == 0.0
                and not any(self.cos_amp) and not any(self.sin_amp))


# ---------------------------------------------------------------------------
# § core chart types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoliationDims:
    """Leaf dimension p and transverse codimension q of the foliation."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.p < 1 or self.q < 1:
            raise ValueError("need p >= 1 and q >= 1")

    @property
    def n(self) -> int:
        return self.p + self.q


@dataclass(frozen=True)
class DeckMap:
    """Affine identification of the fundamental domain: z -> linear @ z + shift.

    The Jacobian acting on frame columns is the ``linear`` part.  Lattice
    translations have identity Jacobian; the torus-bundle twist stretches the
    leaf axis and shrinks the contracting axis.
    """

    linear: np.ndarray
    shift: np.ndarray
    label: str = ""

    @property
    def jacobian(self) -> np.ndarray:
        return self.linear

    def apply(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z @ self.linear.T + self.shift

    def inverse(self) -> "DeckMap":
        inv = np.linalg.inv(self.linear)
        return DeckMap(inv, -inv @ self.shift, label=self.label + "^-1")


@dataclass(eq=False)
class Atlas:
    """A built-in foliated manifold: chart conventions plus deck group.

    Attributes
    ----------
    kind : str
        ``"e1"`` (warped torus) or ``"e2"`` (hyperbolic torus bundle).
    dims : FoliationDims
    warp : FourierSeries
        The 1-periodic warp: ``f`` for e1, the perturbation ``u`` for e2.
    lattice : np.ndarray or None
        e2 only — the integer gluing matrix ``A``.
    lam, log_lam : float
        e2 only — the expanding eigenvalue of ``A`` and its log.
    eig_basis : np.ndarray or None
        e2 only — columns are the expanding/contracting eigenvectors in
        standard torus coordinates, scaled to determinant one so the torus
        slice has unit area in eigencoordinates.
    deck_generators : tuple[DeckMap, ...]
        Order fixes the meaning of ``ChartPoint.cover_sheet`` entries.
    """

    kind: str
    dims: FoliationDims
    warp: FourierSeries
    lattice: np.ndarray | None = None
    lam: float = float("nan")
    log_lam: float = float("nan")
    eig_basis: np.ndarray | None = None
    eig_basis_inv: np.ndarray | None = None
    deck_generators: tuple[DeckMap, ...] = ()

    @property
    def n(self) -> int:
        return self.dims.n

    def with_warp(self, warp: FourierSeries) -> "Atlas":
        """Same manifold family with a different warp (used by dilation)."""
        if self.kind == "e1":
            return build_e1(warp)
        return build_e2(self.lattice, warp)


@dataclass(frozen=True)
class ChartPoint:
    """A point in distinguished coordinates, with universal-cover bookkeeping.

    ``x`` runs along the leaves, ``y`` transverse; ``y[-1]`` is the
    distinguished coordinate ``t``.  ``cover_sheet`` counts, per deck
    generator, how many wraps :func:`normalize` applied to bring the point
    into the fundamental domain (zero for points that never wrapped).
    """

    atlas: Atlas
    x: np.ndarray
    y: np.ndarray
    cover_sheet: np.ndarray

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @property
    def t(self) -> float:
        return float(self.y[-1])


def chart_point(atlas: Atlas, coords: Sequence[float]) -> ChartPoint:
    """Wrap a raw coordinate vector ``(x..., y...)`` into a ChartPoint."""
    z = np.asarray(coords, dtype=float)
    if z.shape != (atlas.n,):
        raise ValueError(f"expected {atlas.n} coordinates, got {z.shape}")
    p = atlas.dims.p
    sheets = np.zeros(len(atlas.deck_generators), dtype=np.int64)
    return ChartPoint(atlas, z[:p].copy(), z[p:].copy(), sheets)


# ---------------------------------------------------------------------------
# § constructors for the built-in manifolds
# ---------------------------------------------------------------------------

def _as_series(coeffs) -> FourierSeries:
    if isinstance(coeffs, FourierSeries):
        return coeffs
    if coeffs is None:
        return FourierSeries()
    return FourierSeries.from_sines(tuple(np.atleast_1d(coeffs)))


def build_e1(f_coeffs=()) -> Atlas:
    """Warped two-torus: coordinates (x, t), leaves are the x-circles.

    ``f_coeffs`` is a list of sine amplitudes (``f = sum a_m sin(2 pi m t)``)
    or a ready :class:`FourierSeries`.  An empty list gives the flat torus.
    """
    warp = _as_series(f_coeffs)
    eye = np.eye(2)
    gens = (
        DeckMap(eye, np.array([1.0, 0.0]), label="x+1"),
        DeckMap(eye, np.array([0.0, 1.0]), label="t+1"),
    )
    return Atlas(kind="e1", dims=FoliationDims(1, 1), warp=warp,
                 deck_generators=gens)


def build_e2(A=((2, 1), (1, 1)), u_coeffs=()) -> Atlas:
    """Hyperbolic torus bundle glued by the integer matrix ``A``.

    ``A`` must be in SL(2, Z) with trace > 2, so it has a pair of irrational
    eigenvalues lam > 1 > 1/lam.  Coordinates are eigencoordinates of ``A``
    scaled to unit lattice covolume; the leaf direction is the expanding
    eigenvector.
    """
    A = np.asarray(A, dtype=float)
    if A.shape != (2, 2) or not np.allclose(A, np.round(A)):
        raise ValueError("A must be an integer 2x2 matrix")
    if abs(np.linalg.det(A) - 1.0) > 1e-12:
        raise ValueError("A must have determinant 1")
    tr = A[0, 0] + A[1, 1]
    if tr <= 2.0:
        raise ValueError("A must have trace > 2 (real distinct eigenvalues)")

    disc = np.sqrt(tr * tr - 4.0)
    lam = (tr + disc) / 2.0
    mu = (tr - disc) / 2.0

    def eigvec(ev: float) -> np.ndarray:
        # rows of (A - ev I) are proportional; pick the better-conditioned one
        if abs(A[0, 1]) >= abs(A[1, 0]):
            v = np.array([A[0, 1], ev - A[0, 0]])
        else:
            v = np.array([ev - A[1, 1], A[1, 0]])
        return v / np.linalg.norm(v)

    S = np.column_stack([eigvec(lam), eigvec(mu)])
    det = np.linalg.det(S)
    if det < 0:
        S[:, 1] = -S[:, 1]
        det = -det
    S /= np.sqrt(det)       # unit covolume in eigencoordinates

    Sinv = np.linalg.inv(S)
    eye3 = np.eye(3)
    lattice_a = np.array([Sinv[0, 0], Sinv[1, 0], 0.0])
    lattice_b = np.array([Sinv[0, 1], Sinv[1, 1], 0.0])
    twist = DeckMap(np.diag([lam, 1.0 / lam, 1.0]),
                    np.array([0.0, 0.0, 1.0]), label="A-twist")
    gens = (
        DeckMap(eye3, lattice_a, label="lattice-a"),
        DeckMap(eye3, lattice_b, label="lattice-b"),
        twist,
    )
    return Atlas(kind="e2", dims=FoliationDims(1, 2), warp=_as_series(u_coeffs),
                 lattice=np.round(A).astype(np.int64), lam=float(lam),
                 log_lam=float(np.log(lam)), eig_basis=S, eig_basis_inv=Sinv,
                 deck_generators=gens)


# ---------------------------------------------------------------------------
# § point operations
# ---------------------------------------------------------------------------

def leaf_step(pt: ChartPoint, dx) -> ChartPoint:
    """Move along the leaf through ``pt``: x += dx, transverse part untouched."""
    dx = np.atleast_1d(np.asarray(dx, dtype=float))
    if dx.shape != pt.x.shape:
        raise ValueError("dx must have the leaf dimension")
    return replace(pt, x=pt.x + dx)


def normalize(pt: ChartPoint, frame=None):
    """Wrap a point back into the fundamental domain.

    Returns ``(point, frame)`` where ``frame`` is the input frame with its
    columns pushed through the Jacobians of the applied deck maps (``None``
    when no frame is supplied).  Deck maps are isometries, so the metric
    lengths of frame columns are unchanged.
    """
    atlas = pt.atlas
    sheets = pt.cover_sheet.copy()
    jac = np.eye(atlas.n)

    if atlas.kind == "e1":
        x, t = float(pt.x[0]), float(pt.y[0])
        mx, mt = np.floor(x), np.floor(t)
        sheets[0] += int(mx)
        sheets[1] += int(mt)
        new = ChartPoint(atlas, np.array([x - mx]), np.array([t - mt]), sheets)
    else:
        x, y, t = float(pt.x[0]), float(pt.y[0]), float(pt.y[1])
        # unit shifts in t conjugate the torus pair by the gluing matrix
        mt = int(np.floor(t))
        if mt != 0:
            lam_pow = atlas.lam ** (-mt)
            x *= lam_pow
            y /= lam_pow
            t -= mt
            jac = np.diag([lam_pow, 1.0 / lam_pow, 1.0]) @ jac
            sheets[2] += mt
        # lattice wrap through standard torus coordinates
        ab = atlas.eig_basis @ np.array([x, y])
        mab = np.floor(ab)
        if mab.any():
            ab -= mab
            x, y = atlas.eig_basis_inv @ ab
            sheets[0] += int(mab[0])
            sheets[1] += int(mab[1])
        new = ChartPoint(atlas, np.array([x]), np.array([y, t]), sheets)

    if frame is None:
        return new, None
    from .frame_bundle import AdaptedFrame   # late import; frames live upstream
    return new, AdaptedFrame(base=new, E=jac @ frame.E)


def in_fundamental_domain(pt: ChartPoint, tol: float = 0.0) -> bool:
    """True when every periodic coordinate lies in [0, 1) (torus pair for e2
    measured in standard lattice coordinates)."""
    atlas = pt.atlas
    if atlas.kind == "e1":
        vals = np.array([pt.x[0], pt.y[0]])
    else:
        ab = atlas.eig_basis @ np.array([pt.x[0], pt.y[0]])
        vals = np.array([ab[0], ab[1], pt.y[1]])
    return bool(np.all(vals >= -tol) and np.all(vals < 1.0 + tol))


def random_point(atlas: Atlas, rng: np.random.Generator) -> ChartPoint:
    """Uniform sample from the fundamental domain."""
    if atlas.kind == "e1":
        return chart_point(atlas, rng.uniform(0.0, 1.0, size=2))
    ab = rng.uniform(0.0, 1.0, size=2)
    xy = atlas.eig_basis_inv @ ab
    t = rng.uniform(0.0, 1.0)
    return chart_point(atlas, [xy[0], xy[1], t])
