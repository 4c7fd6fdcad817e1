"""Static topological invariants from Berry curvature fields.

Two curvature discretizations with one fixed sign convention: the analytic
two-level formula Omega = s (1/2) dhat . (d1 dhat x d2 dhat) and the
gauge-invariant plaquette (link-variable) phase.  The band sign s (+1 upper,
-1 lower for a qubit) is anchored so that the upper band of the meron model
at epsilon = 0.5 integrates to Chern number +1; the same convention then
feeds the dipolar and quadrupolar moments, so their signs are not free.

Invariants are midpoint-rule sums of plaquette phases times coordinate
weights (1, theta_y, theta_x theta_y), reported next to their nearest
quantized value.
"""

import math

from dataclasses import dataclass

import numpy as np

from . import DegeneracyError, ResolutionError, ValidationError
from .models import (eig_many, gap_report, mirror_symmetry_residual,
                     s_symmetry_residual)

SYMMETRY_TOL = 1e-8
OVERLAP_FLOOR = 1e-6


@dataclass
class BerryField:
    """Berry curvature sampled on a rectangular grid.

    omega[i, j] is the curvature at (x1[i], x2[j]) in 1/area units of the
    chart coordinates; for the plaquette method these are plaquette centers
    and omega * spacing-area is the loop phase.
    """
    x1: np.ndarray
    x2: np.ndarray
    omega: np.ndarray
    spacing: tuple
    band: int
    method: str

    def integral(self):
        return self.omega.sum() * self.spacing[0] * self.spacing[1]


def curvature_two_level(dhat, spacing, band=1, origin=(0.0, 0.0)):
    """Curvature of a unit Bloch field on a grid, by central differences.

    Parameters
    ----------
    dhat : (n1, n2, 3) array of unit vectors
    spacing : (h1, h2) grid steps
    band : 0 (lower) or 1 (upper)

    Omega = s (1/2) dhat . (d1 dhat x d2 dhat), s = +1 for the upper band.
    Interior points get central differences (one-sided at the edges), so
    values next to the boundary are first-order only.
    """
    dhat = np.asarray(dhat, dtype=float)
    if dhat.ndim != 3 or dhat.shape[-1] != 3:
        raise ValidationError("curvature_two_level: field must be (n1, n2, 3)")
    norms = np.linalg.norm(dhat, axis=-1)
    if np.abs(norms - 1.0).max() > 1e-6:
        raise ValidationError(
            "curvature_two_level: field is not unit-normalized")
    if band not in (0, 1):
        raise ValidationError("curvature_two_level: band must be 0 or 1")
    h1, h2 = spacing
    g1, g2 = np.gradient(dhat, h1, h2, axis=(0, 1))
    s = 1.0 if band == 1 else -1.0
    omega = s * 0.5 * np.einsum("ijk,ijk->ij", dhat, np.cross(g1, g2))
    x1 = origin[0] + h1 * np.arange(dhat.shape[0])
    x2 = origin[1] + h2 * np.arange(dhat.shape[1])
    return BerryField(x1, x2, omega, (h1, h2), band, "two_level")


def curvature_plaquette(states, spacing, origin=(0.0, 0.0), band=0,
                        wrap_x=False, wrap_y=False):
    """Gauge-invariant plaquette curvature from an eigenvector grid.

    Parameters
    ----------
    states : (n1, n2, D) complex array, one normalized eigenvector per node
    spacing : (h1, h2) node steps
    wrap_x, wrap_y : close the grid periodically along an axis (the last
        node then links back to the first, giving n instead of n-1
        plaquettes along it)

    Each plaquette phase is -Im log of the counter-oriented Wilson loop
    (i,j) -> (i,j+1) -> (i+1,j+1) -> (i+1,j) -> (i,j) of normalized overlap
    links; omega is phase / plaquette area.  Any per-node rephasing cancels
    inside the loop, so the output is gauge-invariant to rounding.
    """
    psi = np.asarray(states, dtype=complex)
    if psi.ndim != 3:
        raise ValidationError("curvature_plaquette: states must be (n1, n2, D)")
    if wrap_x:
        psi = np.concatenate([psi, psi[:1]], axis=0)
    if wrap_y:
        psi = np.concatenate([psi, psi[:, :1]], axis=1)
    u1 = np.einsum("xyi,xyi->xy", psi[:-1].conj(), psi[1:])
    u2 = np.einsum("xyi,xyi->xy", psi[:, :-1].conj(), psi[:, 1:])
    small = min(np.abs(u1).min(), np.abs(u2).min())
    if small < OVERLAP_FLOOR:
        raise ResolutionError(
            f"plaquette link overlap {small:.2e} below {OVERLAP_FLOOR:g}; "
            "grid too coarse near a near-degeneracy")
    loop = (u2[:-1, :] * u1[:, 1:]
            * np.conj(u2[1:, :]) * np.conj(u1[:, :-1]))
    h1, h2 = spacing
    omega = -np.log(loop).imag / (h1 * h2)
    x1 = origin[0] + h1 * (0.5 + np.arange(omega.shape[0]))
    x2 = origin[1] + h2 * (0.5 + np.arange(omega.shape[1]))
    return BerryField(x1, x2, omega, (h1, h2), band, "plaquette")


@dataclass
class InvariantResult:
    """A real-valued invariant next to its nearest quantized value."""
    value: float
    quantization_unit: float
    nearest_quantum: float
    residue: float
    grid_shape: tuple

    @classmethod
    def quantize(cls, value, unit, grid_shape):
        nearest = unit * round(value / unit) if unit else 0.0
        return cls(value, unit, nearest, abs(value - nearest), grid_shape)

    def __str__(self):
        return (f"{self.value:.8f} (nearest quantum {self.nearest_quantum:g}"
                f" in units of {self.quantization_unit:g}, residue"
                f" {self.residue:.2e})")


def _band_states(model, pts, band, threshold):
    energies, vecs, _ = eig_many(model.evaluate_many(pts))
    if band < 0 or band >= model.dim:
        raise ValidationError(f"band index {band} out of range")
    gaps = []
    if band > 0:
        gaps.append((energies[:, band] - energies[:, band - 1]).min())
    if band < model.dim - 1:
        gaps.append((energies[:, band + 1] - energies[:, band]).min())
    if min(gaps) <= threshold:
        raise DegeneracyError(
            f"band {band} gap {min(gaps):.2e} at or below threshold "
            f"{threshold:g} on the invariant grid")
    return vecs[:, :, band]


def chern_bolza(model, band=1, resolution=200, radius=0.62,
                gap_threshold=1e-3, with_field=False):
    """First Chern number of a compact-texture disk model band.

    Integrates the plaquette curvature over a Cartesian grid on
    [-radius, radius]^2, keeping plaquettes whose centers lie inside
    |z| <= radius, divided by 2 pi.  For a texture constant outside the
    bump this equals the full-surface integral, because the curvature
    vanishes on the constant region; models without a declared compact
    support radius are rejected (stitching plaquettes across the octagon
    identifications is out of scope).  with_field additionally returns
    the BerryField the number was integrated from.
    """
    if model.manifold != "bolza":
        raise ValidationError("chern_bolza expects a disk model")
    if model.compact_support is None:
        raise ValidationError(
            "chern_bolza supports only compact-texture models (constant "
            "field outside a known radius); general octagon-periodic "
            "textures are not supported")
    if radius <= model.compact_support:
        raise ValidationError(
            f"integration radius {radius} must exceed the texture support "
            f"{model.compact_support}")
    if not gap_report(model, threshold=gap_threshold).fully_gapped:
        raise DegeneracyError("model is not fully gapped")
    nodes = np.linspace(-radius, radius, resolution + 1)
    h = nodes[1] - nodes[0]
    zg = nodes[:, None] + 1j * nodes[None, :]
    psi = _band_states(model, zg.ravel(), band, gap_threshold).reshape(
        resolution + 1, resolution + 1, model.dim)
    field = curvature_plaquette(
        psi, (h, h), origin=(-radius, -radius), band=band)
    mask = (field.x1[:, None] ** 2 + field.x2[None, :] ** 2) <= radius ** 2
    total = (field.omega * mask).sum() * h * h / (2 * math.pi)
    result = InvariantResult.quantize(total, 1.0, (resolution, resolution))
    return (result, field) if with_field else result


def dipolar_chern(model, band=1, resolution=(400, 200), gap_threshold=1e-3,
                  with_field=False):
    """Dipolar Chern number D_y on the Klein bottle.

    D_y = (1/2 pi) integral of theta_y Omega over [-pi, pi] x [-pi, 0],
    computed as plaquette phases weighted by the plaquette-center theta_y.
    The x direction wraps (theta_x is 2 pi periodic on the Klein bottle);
    the y direction does not.  Quantized in units of pi/2 when the y-mirror
    symmetry holds, which is checked first.
    """
    if model.manifold != "klein":
        raise ValidationError("dipolar_chern expects a Klein-bottle model")
    res, worst = mirror_symmetry_residual(model, with_point=True)
    if res > SYMMETRY_TOL:
        raise ValidationError(
            f"y-mirror symmetry violated: residual {res:.2e} at theta = "
            f"({worst[0]:.4f}, {worst[1]:.4f})")
    nx, ny = resolution
    xs = -math.pi + (2 * math.pi / nx) * np.arange(nx)
    ys = np.linspace(-math.pi, 0.0, ny + 1)
    hx, hy = 2 * math.pi / nx, math.pi / ny
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    psi = _band_states(model, pts.reshape(-1, 2), band, gap_threshold)
    field = curvature_plaquette(
        psi.reshape(nx, ny + 1, model.dim), (hx, hy),
        origin=(-math.pi, -math.pi), band=band, wrap_x=True)
    phases = field.omega * hx * hy
    value = (phases * field.x2[None, :]).sum() / (2 * math.pi)
    result = InvariantResult.quantize(value, math.pi / 2, (nx, ny))
    return (result, field) if with_field else result


def quadrupole_chern(model, band=1, resolution=(200, 200),
                     gap_threshold=1e-3, with_field=False):
    """Quadrupolar Chern number Q_xy on the projective plane.

    Q_xy = (1/pi) integral of theta_x theta_y Omega over [0, pi]^2 via
    center-weighted plaquette phases, no wrapping.  Reported against the
    unit pi^2/2, the spacing between the two values the symmetric model
    realizes; the residue makes any finer quantization visible.
    """
    if model.manifold != "rp2":
        raise ValidationError("quadrupole_chern expects a projective-plane "
                              "model")
    res, worst = s_symmetry_residual(model, with_point=True)
    if res > SYMMETRY_TOL:
        raise ValidationError(
            f"S symmetry violated: residual {res:.2e} at theta = "
            f"({worst[0]:.4f}, {worst[1]:.4f})")
    nx, ny = resolution
    xs = np.linspace(0.0, math.pi, nx + 1)
    ys = np.linspace(0.0, math.pi, ny + 1)
    hx, hy = math.pi / nx, math.pi / ny
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1)
    psi = _band_states(model, pts.reshape(-1, 2), band, gap_threshold)
    field = curvature_plaquette(
        psi.reshape(nx + 1, ny + 1, model.dim), (hx, hy),
        origin=(0.0, 0.0), band=band)
    phases = field.omega * hx * hy
    value = (phases * field.x1[:, None] * field.x2[None, :]).sum() / math.pi
    result = InvariantResult.quantize(value, math.pi ** 2 / 2, (nx, ny))
    return (result, field) if with_field else result
