"""Adapted orthonormal frames, their transport along leaves, and scalarization.

An adapted frame at ``z`` is an n-by-n matrix ``E`` whose columns are
g-orthonormal tangent vectors with the first p columns tangent to the leaf.
In coordinates that makes the lower-left (transverse rows, leaf columns)
block exactly zero, so ``E`` is block upper-triangular::

        E = [ A  B ]        A : p x p   leaf block
            [ 0  C ]        C : q x q   transverse block

The structure group acting on the right is block-diagonal orthogonal
O(p) x O(q).  Scalarization turns covectors into equivariant frame
coordinates by pairing with frame columns.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .manifold_atlas import Atlas, ChartPoint, FourierSeries, chart_point, leaf_step
from .metric_geometry import metric

__all__ = [
    "AdaptedFrame",
    "gram_schmidt",
    "coordinate_frame",
    "orthonormality_residual",
    "leaf_transport",
    "GroupElement",
    "random_group_element",
    "group_act",
    "DualFrame",
    "dual_frame",
    "OneForm",
    "basic_oneform",
    "OneFormScalarization",
    "scalarize_oneform",
    "descalarize_oneform",
]

ADAPTED_ZERO_TOL = 1e-12
ORTHONORMALITY_TOL = 1e-9


@dataclass(frozen=True)
class AdaptedFrame:
    """An adapted g-orthonormal frame attached to a base point.

    Columns of ``E`` are the frame vectors in chart coordinates.  The
    lower-left block is exactly zero by construction and preserved exactly
    by every operation in this package (transport, group action, flows).
    """

    base: ChartPoint
    E: np.ndarray

    @property
    def atlas(self) -> Atlas:
        return self.base.atlas

    @property
    def leaf_block(self) -> np.ndarray:
        p = self.atlas.dims.p
        return self.E[:p, :p]

    @property
    def mixed_block(self) -> np.ndarray:
        p = self.atlas.dims.p
        return self.E[:p, p:]

    @property
    def transverse_block(self) -> np.ndarray:
        p = self.atlas.dims.p
        return self.E[p:, p:]


def _gram_schmidt_raw(atlas: Atlas, z: np.ndarray, raw: np.ndarray) -> np.ndarray:
    """Batched modified Gram-Schmidt in the metric inner product at z.

    Operates column by column, so adapted input (zero lower-left block)
    yields adapted output with the zero block preserved exactly.
    """
    g = metric(atlas, z)
    E = np.array(raw, dtype=float, copy=True)
    n = E.shape[-1]
    for j in range(n):
        v = E[..., :, j]
        for i in range(j):
            e = E[..., :, i]
            coef = np.einsum("...i,...ij,...j->...", v, g, e)
            v = v - coef[..., None] * e
        norm = np.sqrt(np.einsum("...i,...ij,...j->...", v, g, v))
        E[..., :, j] = v / norm[..., None]
    return E


def gram_schmidt(atlas: Atlas, z, raw: np.ndarray) -> AdaptedFrame:
    """Orthonormalize the columns of ``raw`` at ``z`` into an adapted frame.

    The first p columns must already be leafwise (their transverse
    components exactly zero up to 1e-12); a degenerate column set raises.
    ``z`` may be a ChartPoint or a raw coordinate vector.
    """
    pt = z if isinstance(z, ChartPoint) else chart_point(atlas, z)
    raw = np.asarray(raw, dtype=float)
    n, p = atlas.n, atlas.dims.p
    if raw.shape != (n, n):
        raise ValueError(f"frame must be {n}x{n}")
    if np.max(np.abs(raw[p:, :p])) > ADAPTED_ZERO_TOL:
        raise ValueError("first p columns must be tangent to the leaf")
    scale = np.max(np.abs(raw))
    if not np.isfinite(scale) or scale == 0.0:
        raise ValueError("degenerate frame input")
    if abs(np.linalg.det(raw)) < 1e-12 * scale**n:
        raise ValueError("degenerate frame input (singular column set)")
    E = _gram_schmidt_raw(atlas, pt.z, raw)
    E[p:, :p] = 0.0
    return AdaptedFrame(base=pt, E=E)


def coordinate_frame(atlas: Atlas, z) -> AdaptedFrame:
    """The canonical adapted frame at z: Gram-Schmidt of the coordinate basis."""
    return gram_schmidt(atlas, z, np.eye(atlas.n))


def _orthonormality_residual_raw(atlas: Atlas, z: np.ndarray,
                                 E: np.ndarray) -> np.ndarray:
    g = metric(atlas, z)
    gram = np.einsum("...ia,...ij,...jb->...ab", E, g, E)
    eye = np.eye(E.shape[-1])
    return np.max(np.abs(gram - eye), axis=(-2, -1))


def orthonormality_residual(frame: AdaptedFrame) -> float:
    """max |E^T g E - I| — how far the frame has drifted from orthonormal."""
    return float(_orthonormality_residual_raw(frame.atlas, frame.base.z, frame.E))


def leaf_transport(frame: AdaptedFrame, dx) -> AdaptedFrame:
    """Transport a frame along its leaf and re-orthonormalize at the endpoint.

    Because the metric is bundle-like the transverse block C is untouched:
    transport commutes along the leaf and is transitive to rounding.
    """
    new_pt = leaf_step(frame.base, dx)
    return gram_schmidt(frame.atlas, new_pt, frame.E)


# ---------------------------------------------------------------------------
# § structure group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    """Block-diagonal orthogonal matrix diag(gamma_leaf, gamma_transverse)."""

    leaf: np.ndarray
    transverse: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        p = self.leaf.shape[0]
        q = self.transverse.shape[0]
        out = np.zeros((p + q, p + q))
        out[:p, :p] = self.leaf
        out[p:, p:] = self.transverse
        return out

    def inverse(self) -> "GroupElement":
        return GroupElement(self.leaf.T.copy(), self.transverse.T.copy())


def random_group_element(dims, rng: np.random.Generator,
                         leaf_only: bool = False) -> GroupElement:
    """Haar-ish random element of O(p) x O(q) via QR with sign fixing.

    ``leaf_only`` keeps the transverse factor at the identity — the twists
    that leafwise invariance statements quantify over.
    """

    def haar(k: int) -> np.ndarray:
        if k == 1:
            return np.array([[rng.choice([-1.0, 1.0])]])
        q, r = np.linalg.qr(rng.standard_normal((k, k)))
        return q * np.sign(np.diag(r))

    transverse = np.eye(dims.q) if leaf_only else haar(dims.q)
    return GroupElement(haar(dims.p), transverse)


def _validate_group_matrix(p: int, q: int, gamma: np.ndarray) -> np.ndarray:
    gamma = np.asarray(gamma, dtype=float)
    n = p + q
    if gamma.shape != (n, n):
        raise ValueError(f"group element must be {n}x{n}")
    if (np.max(np.abs(gamma[:p, p:]), initial=0.0) > ADAPTED_ZERO_TOL
            or np.max(np.abs(gamma[p:, :p]), initial=0.0) > ADAPTED_ZERO_TOL):
        raise ValueError("group element must be block-diagonal")
    if np.max(np.abs(gamma.T @ gamma - np.eye(n))) > 1e-10:
        raise ValueError("group element must be orthogonal")
    return gamma


def group_act(frame: AdaptedFrame, gamma) -> AdaptedFrame:
    """Right action r . gamma: recombine frame columns, E' = E @ gamma."""
    if isinstance(gamma, GroupElement):
        gamma = gamma.matrix
    p = frame.atlas.dims.p
    q = frame.atlas.dims.q
    gamma = _validate_group_matrix(p, q, gamma)
    E = frame.E @ gamma
    E[p:, :p] = 0.0
    return AdaptedFrame(base=frame.base, E=E)


# ---------------------------------------------------------------------------
# § dual frames and scalarization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DualFrame:
    """Rows are the covectors dual to the frame columns: values @ E = I."""

    frame: AdaptedFrame
    values: np.ndarray


def dual_frame(frame: AdaptedFrame) -> DualFrame:
    return DualFrame(frame=frame, values=np.linalg.inv(frame.E))


@dataclass(frozen=True)
class OneForm:
    """A covector field given by its coordinate components.

    ``profile`` is set for basic one-forms built as ``h(t) dt``; it carries
    the exact 1-D coefficient for oracle computations.
    """

    components: Callable[[np.ndarray], np.ndarray]
    profile: FourierSeries | None = None
    label: str = ""

    def value(self, z) -> np.ndarray:
        z = z.z if isinstance(z, ChartPoint) else np.asarray(z, dtype=float)
        return np.asarray(self.components(z), dtype=float)


def basic_oneform(h: FourierSeries, label: str = "") -> OneForm:
    """The basic one-form h(t) dt: only the last transverse slot is filled."""

    def components(z: np.ndarray) -> np.ndarray:
        out = np.zeros(z.shape)
        out[..., -1] = h.eval(z[..., -1])
        return out

    return OneForm(components=components, profile=h, label=label or "h(t) dt")


@dataclass(frozen=True)
class OneFormScalarization:
    """Frame coordinates F_a = theta(e_a) of a covector at the frame's base."""

    frame: AdaptedFrame
    values: np.ndarray


def scalarize_oneform(theta, frame: AdaptedFrame) -> OneFormScalarization:
    """Pair a covector with the frame columns: F = E^T theta.

    ``theta`` may be a OneForm (evaluated at the frame's base point) or a
    raw component vector.  Scalarization is equivariant: acting on the frame
    by gamma multiplies F by gamma^T.
    """
    if isinstance(theta, OneForm):
        comps = theta.value(frame.base)
    else:
        comps = np.asarray(theta, dtype=float)
    if comps.shape != (frame.atlas.n,):
        raise ValueError("covector has wrong dimension")
    return OneFormScalarization(frame=frame, values=frame.E.T @ comps)


def descalarize_oneform(scal: OneFormScalarization | np.ndarray,
                        frame: AdaptedFrame | None = None) -> np.ndarray:
    """Invert scalarization: recover coordinate components theta = E^{-T} F."""
    if isinstance(scal, OneFormScalarization):
        values = scal.values
        frame = scal.frame if frame is None else frame
    else:
        values = np.asarray(scal, dtype=float)
        if frame is None:
            raise ValueError("need a frame to descalarize raw values")
    return np.linalg.solve(frame.E.T, values)
