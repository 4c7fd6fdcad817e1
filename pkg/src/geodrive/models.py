"""Parent Hamiltonians steered along geodesic trajectories.

A model is a Hermitian matrix field H(x) over one of the driving manifolds,
wrapped in ParentHamiltonian together with optional analytic gradients and,
for two-level models, the Bloch vector field d(x) with H = d . sigma.  The
built-ins are the compactly supported meron texture on the Poincare disk
(bolza_qubit) and the two flat-manifold textures (klein_qubit, rp2_qubit)
whose mirror / quarter-turn symmetries quantize the dipolar and quadrupolar
responses downstream.

Eigensystems are returned in a deterministic gauge (largest-magnitude
component real positive) so identical inputs give bitwise identical states.
"""

import math

from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from . import ValidationError
from .hyperbolic import in_fundamental_domain
from .trajectories import MANIFOLDS, klein_lift_project, rp2_lift_project

HERMITICITY_TOL = 1e-12

# sigma_x, sigma_y, sigma_z
PAULI = np.array(
    [[[0.0, 1.0], [1.0, 0.0]],
     [[0.0, -1.0j], [1.0j, 0.0]],
     [[1.0, 0.0], [0.0, -1.0]]], dtype=complex)


def pauli_hamiltonian(d, e0=0.0):
    """Assemble e0*I + d.sigma for a Bloch vector or any stack of them.

    Parameters
    ----------
    d : array, shape (..., 3)
        Real Bloch vector(s).
    e0 : scalar or array broadcastable to d.shape[:-1]

    Returns array of shape (..., 2, 2), complex.
    """
    d = np.asarray(d, dtype=float)
    out = np.empty(d.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = e0 + d[..., 2]
    out[..., 1, 1] = e0 - d[..., 2]
    out[..., 0, 1] = d[..., 0] - 1j * d[..., 1]
    out[..., 1, 0] = d[..., 0] + 1j * d[..., 1]
    return out


def bloch_vector(H):
    """Invert pauli_hamiltonian: return (d, e0) with H = e0*I + d.sigma."""
    H = np.asarray(H)
    d = np.stack([H[..., 1, 0].real, H[..., 1, 0].imag,
                  (H[..., 0, 0] - H[..., 1, 1]).real / 2], axis=-1)
    return d, (H[..., 0, 0] + H[..., 1, 1]).real / 2


def _check_hermitian(H, tol=HERMITICITY_TOL):
    res = np.abs(H - np.conj(np.swapaxes(H, -1, -2))).max()
    scale = max(1.0, np.abs(H).max())
    if res > tol * scale:
        raise ValidationError(
            f"matrix field is not Hermitian (residual {res:.2e})")


def _as_batch(manifold, point):
    if manifold == "bolza":
        return np.asarray([point], dtype=complex)
    return np.asarray(point, dtype=float).reshape(1, 2)


class ParentHamiltonian:
    """A Hermitian matrix field H(x) on a driving manifold.

    Points are complex numbers on the Poincare disk for manifold "bolza" and
    length-2 angle arrays for the flat manifolds; the *_many methods take a
    (N,) complex or (N, 2) float array accordingly.  Third-party models can
    supply only a single-point `evaluate`; the batched methods then fall back
    to a python loop.  `global_chart` marks fields defined by a single global
    formula (all built-ins), which finite differences may probe outside the
    fundamental domain.
    """

    def __init__(self, name, manifold, dim, evaluate=None, gradient=None,
                 evaluate_many=None, gradient_many=None, d_field=None,
                 d_gradient=None, global_chart=False, compact_support=None,
                 params=None):
        if manifold not in MANIFOLDS:
            raise ValidationError(f"unknown manifold {manifold!r}")
        if evaluate is None and evaluate_many is None:
            raise ValidationError("model needs evaluate or evaluate_many")
        if int(dim) < 2:
            raise ValidationError("model dimension must be at least 2")
        self.name = name
        self.manifold = manifold
        self.dim = int(dim)
        self.params = dict(params or {})
        self.global_chart = bool(global_chart)
        # radius beyond which a disk texture is constant (None = unknown)
        self.compact_support = compact_support
        self._evaluate = evaluate
        self._gradient = gradient
        self._evaluate_many = evaluate_many
        self._gradient_many = gradient_many
        self._d_field = d_field
        self._d_gradient = d_gradient

    def __repr__(self):
        pars = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"ParentHamiltonian({self.name}({pars}) on {self.manifold})"

    @property
    def has_gradient(self):
        return self._gradient is not None or self._gradient_many is not None

    @property
    def has_d_field(self):
        return self._d_field is not None

    def evaluate(self, point):
        """H at a single manifold point, shape (dim, dim)."""
        if self._evaluate is not None:
            H = np.asarray(self._evaluate(point), dtype=complex)
        else:
            H = np.asarray(
                self._evaluate_many(_as_batch(self.manifold, point))[0],
                dtype=complex)
        _check_hermitian(H)
        return H

    def evaluate_many(self, points):
        """H at an array of points, shape (N, dim, dim)."""
        if self._evaluate_many is not None:
            H = np.asarray(self._evaluate_many(points), dtype=complex)
        else:
            H = np.stack([np.asarray(self._evaluate(pt), dtype=complex)
                          for pt in points])
        _check_hermitian(H)
        return H

    def gradient(self, point):
        """Analytic (d1 H, d2 H) at a point, shape (2, dim, dim)."""
        if self._gradient is not None:
            return np.asarray(self._gradient(point), dtype=complex)
        if self._gradient_many is not None:
            return np.asarray(
                self._gradient_many(_as_batch(self.manifold, point))[0],
                dtype=complex)
        raise ValidationError(
            f"{self.name} has no analytic gradient; use grad_H")

    def gradient_many(self, points):
        """Gradients at an array of points, shape (N, 2, dim, dim)."""
        if self._gradient_many is not None:
            return np.asarray(self._gradient_many(points), dtype=complex)
        if self._gradient is not None:
            return np.stack([np.asarray(self._gradient(pt), dtype=complex)
                             for pt in points])
        return np.stack([grad_H(self, pt) for pt in points])

    def d_field(self, points):
        """Bloch vector field at an array of points, shape (N, 3)."""
        if self._d_field is None:
            raise ValidationError(
                f"{self.name} does not expose a Bloch vector field")
        return np.asarray(self._d_field(points), dtype=float)

    def d_gradient(self, points):
        """Partials of the Bloch field, shape (N, 2, 3)."""
        if self._d_gradient is None:
            raise ValidationError(
                f"{self.name} does not expose Bloch field gradients")
        return np.asarray(self._d_gradient(points), dtype=float)


# ---------------------------------------------------------------------------
# built-in model: meron texture on the Bolza surface


def _bump_parts(u, rho):
    # f(u) and df/du for u = |z|^2; outside the support f is frozen at -pi/2.
    a = math.pi * math.exp(1.0 / rho ** 2)
    t = rho * rho - u
    inside = t > 0
    f = np.full_like(u, -math.pi / 2)
    fu = np.zeros_like(u)
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        e = a * np.exp(-1.0 / t[inside])
    f[inside] += e
    fu[inside] = -e / t[inside] ** 2
    return f, fu, inside


def bump(z, rho=0.6):
    """Smooth compactly supported angle profile on the disk.

    f = A exp(-1/(rho^2 - |z|^2)) + B inside |z| < rho and B outside, with
    A = pi e^{1/rho^2}, B = -pi/2, so f falls from pi/2 at the origin to
    -pi/2 at the rim of the bump and stays constant beyond it.
    """
    z = np.asarray(z, dtype=complex)
    u = (z * z.conjugate()).real
    if np.any(u >= 1.0):
        raise ValidationError("bump: point outside the unit disk")
    f, _, _ = _bump_parts(u, rho)
    return f if f.ndim else float(f)


def bolza_qubit(epsilon, rho=0.6):
    """Two-level meron model on the Bolza surface.

    The primitive field d' = (cos f x/|z|, cos f y/|z|, sin f + epsilon) is
    normalized to a unit Bloch vector, so the spectrum is -1, +1 with a
    constant gap of 2.  The texture is constant outside |z| = rho and hence
    descends to the quotient surface untouched by the edge identifications.
    |epsilon| = 1 is rejected: the primitive field then vanishes at the
    origin (epsilon = -1) or on the whole outside region (epsilon = +1).
    """
    if abs(abs(epsilon) - 1.0) < 1e-12:
        raise ValidationError(
            "bolza_qubit: |epsilon| = 1 makes the primitive field vanish")

    def primitive(z):
        z = np.asarray(z, dtype=complex)
        x, y = z.real, z.imag
        u = x * x + y * y
        f, fu, inside = _bump_parts(u, rho)
        # cos(-pi/2) only rounds to ~6e-17; force the frozen region to be
        # exactly constant so its gradients vanish identically
        s = np.where(inside, np.sin(f), -1.0)
        c = np.where(inside, np.cos(f), 0.0)
        r = np.sqrt(u)
        small = r < 1e-30
        inv_r = np.where(small, 0.0, 1.0 / np.where(small, 1.0, r))
        return x, y, u, fu, s, c, inv_r

    def d_field(z):
        x, y, u, fu, s, c, inv_r = primitive(z)
        dp = np.stack([c * x * inv_r, c * y * inv_r,
                       s + epsilon], axis=-1)
        return dp / np.linalg.norm(dp, axis=-1, keepdims=True)

    def d_gradient(z):
        x, y, u, fu, s, c, inv_r = primitive(z)
        inv_r3 = inv_r ** 3
        dp = np.stack([c * x * inv_r, c * y * inv_r, s + epsilon], axis=-1)
        gx = np.stack([
            -2 * s * fu * x * x * inv_r + c * y * y * inv_r3,
            -2 * s * fu * x * y * inv_r - c * x * y * inv_r3,
            2 * c * fu * x], axis=-1)
        gy = np.stack([
            -2 * s * fu * x * y * inv_r - c * x * y * inv_r3,
            -2 * s * fu * y * y * inv_r + c * x * x * inv_r3,
            2 * c * fu * y], axis=-1)
        n = np.linalg.norm(dp, axis=-1, keepdims=True)
        dh = dp / n
        # chain rule through the normalization: project out the radial part
        gx = (gx - dh * np.sum(dh * gx, axis=-1, keepdims=True)) / n
        gy = (gy - dh * np.sum(dh * gy, axis=-1, keepdims=True)) / n
        return np.stack([gx, gy], axis=-2)

    return ParentHamiltonian(
        "bolza_qubit", "bolza", 2,
        evaluate_many=lambda z: pauli_hamiltonian(d_field(z)),
        gradient_many=lambda z: pauli_hamiltonian(d_gradient(z)),
        d_field=d_field, d_gradient=d_gradient, global_chart=True,
        compact_support=rho, params={"epsilon": epsilon, "rho": rho})


# ---------------------------------------------------------------------------
# built-in models on the flat manifolds


def klein_qubit(m):
    """Klein-bottle qubit, y-mirror symmetric: sigma_z H(x,-y) sigma_z = H.

    d = (sin x sin y, cos x sin 2y, m - cos x + 2 cos 2y).  Fully gapped for
    generic m; the gap closes at m = 1 (at theta = (pi, -pi/2)) and m = 3
    (at (0, -pi/2)), the transitions between the |D_y| = pi, pi/2, 0 phases.
    """

    def d_field(theta):
        th = np.asarray(theta, dtype=float)
        x, y = th[..., 0], th[..., 1]
        return np.stack([np.sin(x) * np.sin(y), np.cos(x) * np.sin(2 * y),
                         m - np.cos(x) + 2 * np.cos(2 * y)], axis=-1)

    def d_gradient(theta):
        th = np.asarray(theta, dtype=float)
        x, y = th[..., 0], th[..., 1]
        gx = np.stack([np.cos(x) * np.sin(y), -np.sin(x) * np.sin(2 * y),
                       np.sin(x)], axis=-1)
        gy = np.stack([np.sin(x) * np.cos(y), 2 * np.cos(x) * np.cos(2 * y),
                       -4 * np.sin(2 * y)], axis=-1)
        return np.stack([gx, gy], axis=-2)

    return ParentHamiltonian(
        "klein_qubit", "klein", 2,
        evaluate_many=lambda th: pauli_hamiltonian(d_field(th)),
        gradient_many=lambda th: pauli_hamiltonian(d_gradient(th)),
        d_field=d_field, d_gradient=d_gradient, global_chart=True,
        params={"m": m})


def rp2_qubit(m):
    """Projective-plane qubit with the quarter-turn S symmetry.

    d = (sin x sin 2y, sin 2x sin y, m + cos 2x + cos 2y) satisfies
    H(x, y) = U^dagger H(y, -x+pi) U for U = exp(-i pi sigma_z / 4), the
    quarter rotation about z with U^4 = -I.  The gap closes at m = 0 and
    |m| = 2.
    """

    def d_field(theta):
        th = np.asarray(theta, dtype=float)
        x, y = th[..., 0], th[..., 1]
        return np.stack([np.sin(x) * np.sin(2 * y), np.sin(2 * x) * np.sin(y),
                         m + np.cos(2 * x) + np.cos(2 * y)], axis=-1)

    def d_gradient(theta):
        th = np.asarray(theta, dtype=float)
        x, y = th[..., 0], th[..., 1]
        gx = np.stack([np.cos(x) * np.sin(2 * y),
                       2 * np.cos(2 * x) * np.sin(y),
                       -2 * np.sin(2 * x)], axis=-1)
        gy = np.stack([2 * np.sin(x) * np.cos(2 * y),
                       np.sin(2 * x) * np.cos(y),
                       -2 * np.sin(2 * y)], axis=-1)
        return np.stack([gx, gy], axis=-2)

    return ParentHamiltonian(
        "rp2_qubit", "rp2", 2,
        evaluate_many=lambda th: pauli_hamiltonian(d_field(th)),
        gradient_many=lambda th: pauli_hamiltonian(d_gradient(th)),
        d_field=d_field, d_gradient=d_gradient, global_chart=True,
        params={"m": m})


BUILTIN_MODELS = {
    "bolza_qubit": bolza_qubit,
    "klein_qubit": klein_qubit,
    "rp2_qubit": rp2_qubit,
}


# ---------------------------------------------------------------------------
# eigensystems

BandSystem = namedtuple("BandSystem", ["energies", "states", "point"])


def _pin_gauge(v):
    # rotate each eigenvector so its largest-magnitude component is real
    # positive; argmax takes the lowest index on ties.  A unit vector always
    # has a component of magnitude >= 1/sqrt(D), so the choice is total.
    lead = np.take_along_axis(
        v, np.argmax(np.abs(v), axis=-2)[..., None, :], axis=-2)
    phase = lead / np.abs(lead)
    return v * phase.conj()


def eigensystem(H, point=None):
    """Ascending eigensystem of one Hermitian matrix in the pinned gauge.

    Returns BandSystem(energies (D,), states (D, D), point); states[:, n] is
    the n-th band.  Non-Hermitian input raises ValidationError.
    """
    H = np.asarray(H, dtype=complex)
    _check_hermitian(H)
    w, v = np.linalg.eigh(H)
    return BandSystem(w, _pin_gauge(v), point)


def eig_many(H, points=None):
    """Batched eigensystem: energies (N, D), states (N, D, D)."""
    H = np.asarray(H, dtype=complex)
    _check_hermitian(H)
    w, v = np.linalg.eigh(H)
    return BandSystem(w, _pin_gauge(v), points)


# ---------------------------------------------------------------------------
# gradients

def _fold_flat(manifold, theta):
    # map an arbitrary lifted point into the fundamental domain
    if manifold == "torus":
        return np.mod(np.asarray(theta, dtype=float) + math.pi,
                      2 * math.pi) - math.pi
    if manifold == "klein":
        return klein_lift_project(theta, (0.0, 0.0), 0.0)
    return rp2_lift_project(theta, (0.0, 0.0), 0.0)


def grad_H(model, point, h=1e-5):
    """(d1 H, d2 H) at a point: analytic when available, else central FD.

    Finite-difference stencils on the flat manifolds are folded through the
    edge identifications, so points near a boundary are fine.  Bolza models
    are only differentiated where the whole stencil stays inside the chart:
    the closed fundamental domain for quotient models, the unit disk for
    global ones.  The result is symmetrized to be exactly Hermitian.
    """
    if model.has_gradient:
        return model.gradient(point)
    if h <= 0:
        raise ValidationError("grad_H: step must be positive")
    if model.manifold == "bolza":
        z = complex(point)
        if abs(z) + h >= 1.0:
            raise ValidationError("grad_H: stencil leaves the unit disk")
        stencil = [z + h, z - h, z + 1j * h, z - 1j * h]
        if not model.global_chart and not all(
                in_fundamental_domain(w) for w in stencil):
            raise ValidationError(
                "grad_H: stencil crosses the octagon boundary; supply an "
                "analytic gradient for quotient models")
    else:
        th = np.asarray(point, dtype=float)
        stencil = [th + (h, 0.0), th - (h, 0.0),
                   th + (0.0, h), th - (0.0, h)]
        if not model.global_chart:
            stencil = [_fold_flat(model.manifold, q) for q in stencil]
    Hxp, Hxm, Hyp, Hym = (model.evaluate(q) for q in stencil)
    g = np.stack([Hxp - Hxm, Hyp - Hym]) / (2 * h)
    return (g + np.conj(np.swapaxes(g, -1, -2))) / 2


# ---------------------------------------------------------------------------
# gap scans

@dataclass
class GapReport:
    """Adjacent-band gap minima over a sampling grid."""
    min_gaps: np.ndarray
    locations: list
    threshold: float
    fully_gapped: bool
    grid_shape: tuple

    def __str__(self):
        pairs = ", ".join(
            f"gap({n},{n + 1}) = {g:.6g}" for n, g in enumerate(self.min_gaps))
        verdict = "fully gapped" if self.fully_gapped else "NOT fully gapped"
        return f"{pairs}; {verdict} at threshold {self.threshold:g}"


def _rect_grid(xs, ys):
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _gap_grid(manifold, grid):
    # odd point counts so the symmetric critical points (0, -pi/2), (pi/2,
    # pi/2), ... land exactly on a node
    if grid is None:
        grid = {"bolza": (81, 81), "torus": (129, 129),
                "klein": (129, 65), "rp2": (65, 65)}[manifold]
    if isinstance(grid, tuple):
        nx, ny = grid
        if manifold == "bolza":
            xs = np.linspace(-0.84, 0.84, nx)
            pts = _rect_grid(xs, np.linspace(-0.84, 0.84, ny))
            z = pts[:, 0] + 1j * pts[:, 1]
            return z[np.abs(z) <= 0.84], (nx, ny)
        if manifold == "torus":
            xs = np.linspace(-math.pi, math.pi, nx)
            ys = np.linspace(-math.pi, math.pi, ny)
        elif manifold == "klein":
            xs = np.linspace(-math.pi, math.pi, nx)
            ys = np.linspace(-math.pi, 0.0, ny)
        else:
            xs = np.linspace(0.0, math.pi, nx)
            ys = np.linspace(0.0, math.pi, ny)
        return _rect_grid(xs, ys), (nx, ny)
    pts = np.asarray(grid)
    return pts, (len(pts),)


def gap_report(model, grid=None, threshold=1e-3):
    """Scan adjacent-band gaps of a model over a grid.

    grid can be None (manifold default), an (nx, ny) tuple, or an explicit
    array of points.  The fully_gapped flag is what the response and
    topology routines check before trusting adiabatic band data.
    """
    pts, shape = _gap_grid(model.manifold, grid)
    if len(pts) == 0:
        raise ValidationError("gap_report: empty grid")
    bands = eig_many(model.evaluate_many(pts)).energies
    gaps = np.diff(bands, axis=-1)
    k = np.argmin(gaps, axis=0)
    return GapReport(
        min_gaps=gaps[k, np.arange(gaps.shape[1])],
        locations=[pts[i] for i in k],
        threshold=threshold,
        fully_gapped=bool(np.all(gaps.min(axis=0) > threshold)),
        grid_shape=shape)


# ---------------------------------------------------------------------------
# symmetry residuals (preconditions for the quantized invariants)

def mirror_symmetry_residual(model, resolution=(64, 33), u=None,
                             with_point=False):
    """Max-norm residual of U H(x, -y) U^dagger - H(x, y) over a grid.

    U defaults to sigma_z.  Vanishing residual is the y-mirror symmetry that
    quantizes the dipolar response on the Klein bottle.  with_point=True
    returns (residual, theta_at_max) instead of the bare number.
    """
    U = PAULI[2] if u is None else np.asarray(u, dtype=complex)
    pts = _rect_grid(np.linspace(-math.pi, math.pi, resolution[0]),
                     np.linspace(-math.pi, 0.0, resolution[1]))
    H = model.evaluate_many(pts)
    Hm = model.evaluate_many(pts * (1.0, -1.0))
    res = np.abs(U @ Hm @ U.conj().T - H).max(axis=(-1, -2))
    k = int(np.argmax(res))
    return (res[k], pts[k]) if with_point else res[k]


def s_symmetry_residual(model, resolution=(64, 64), u=None, with_point=False):
    """Max-norm residual of U^dagger H(y, -x+pi) U - H(x, y) over a grid.

    U defaults to the quarter turn exp(-i pi sigma_z / 4), which rotates the
    in-plane Pauli components by -pi/2 to match the quarter rotation of the
    base point; U^4 = -I.  Vanishing residual quantizes the quadrupolar
    response on the projective plane.
    """
    if u is None:
        U = np.diag([np.exp(-1j * math.pi / 4), np.exp(1j * math.pi / 4)])
    else:
        U = np.asarray(u, dtype=complex)
    pts = _rect_grid(np.linspace(0.0, math.pi, resolution[0]),
                     np.linspace(0.0, math.pi, resolution[1]))
    turned = np.stack([pts[:, 1], -pts[:, 0] + math.pi], axis=-1)
    H = model.evaluate_many(pts)
    Ht = model.evaluate_many(turned)
    res = np.abs(U.conj().T @ Ht @ U - H).max(axis=(-1, -2))
    k = int(np.argmax(res))
    return (res[k], pts[k]) if with_point else res[k]
