"""Schrodinger propagation along a geodesic drive.

The propagator is the midpoint exponential: one step of size dt applies
exp(-i H(t + dt/2) dt), computed exactly for Hermitian H (Bloch rotation
formula for two levels, spectral decomposition otherwise), so every step is
unitary by construction.  States at all step boundaries come out of a
blocked prefix scan over the step unitaries, which keeps the big runs (2e6
steps) in numpy instead of a python loop.

Also here: instantaneous-band tracking with dynamic and Berry phase
accumulators, the counterdiabatic term, and the first-order adiabatic
correction G(t, lambda).

Quantum evolution runs in double precision; high-precision trajectory
samples are rounded at this interface.  The responses downstream are
ergodic averages and insensitive to double-rounded chart coordinates.
"""

import math

from dataclasses import dataclass, field, replace

import numpy as np

from . import DegeneracyError, ValidationError
from .models import bloch_vector, eig_many, pauli_hamiltonian

GAP_THRESHOLD = 1e-3
NORM_TOL = 1e-10
_CHUNK = 1 << 18


def _points_velocities(model, trajectory):
    # manifold points and chart velocities (N, 2) of a sampled trajectory
    if model.manifold == "bolza":
        pts = np.asarray(trajectory.z, dtype=complex)
        vel = np.asarray(trajectory.velocities(), dtype=complex)
        return pts, np.stack([vel.real, vel.imag], axis=-1)
    pts = np.asarray(trajectory.theta, dtype=float)
    return pts, np.asarray(trajectory.velocities(), dtype=float)


def _eig_chunked(model, pts, bands=None):
    """Eigendecompose H along a point series without holding all of H.

    Returns (energies (N, D), states); states is (N, D, D) or, if `bands`
    is a list of band indices, (N, D, len(bands)) to bound memory on long
    runs.
    """
    n = len(pts)
    energies = np.empty((n, model.dim))
    width = model.dim if bands is None else len(bands)
    states = np.empty((n, model.dim, width), dtype=complex)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        w, v, _ = eig_many(model.evaluate_many(pts[sl]))
        energies[sl] = w
        states[sl] = v if bands is None else v[:, :, bands]
    return energies, states


def _gap_guard(model, trajectory, energies, band, threshold):
    neighbors = [b for b in (band - 1, band + 1) if 0 <= b < model.dim]
    for b in neighbors:
        gaps = np.abs(energies[:, band] - energies[:, b])
        k = int(np.argmin(gaps))
        if gaps[k] <= threshold:
            raise DegeneracyError(
                f"band gap ({band},{b}) = {gaps[k]:.2e} at t = "
                f"{trajectory.t[k]:.6g} (sample {k}) is at or below "
                f"threshold {threshold:g}")


@dataclass
class EvolutionConfig:
    """Propagation settings; the only method is the midpoint exponential.

    dt is a request: the honored step is 2*k*spacing for integer k >= 1.
    With auto_refine on and headroom in the trajectory sampling (k > 1),
    the step is halved until a short probe estimates the halving error
    below step_tolerance per unit time; the result's config carries the
    step actually used.
    """
    dt: float = 0.01
    method: str = "midpoint-exponential"
    sampling_stride: int = 1
    auto_refine: bool = True
    step_tolerance: float = 1e-8

    def __post_init__(self):
        if self.dt <= 0:
            raise ValidationError("EvolutionConfig: dt must be positive")
        if self.method != "midpoint-exponential":
            raise ValidationError(
                f"unknown propagation method {self.method!r}")
        if self.sampling_stride < 1:
            raise ValidationError("sampling_stride must be >= 1")
        if self.step_tolerance <= 0:
            raise ValidationError("step_tolerance must be positive")


@dataclass
class EvolutionResult:
    """States at (strided) step boundaries plus norm diagnostics."""
    t: np.ndarray
    states: np.ndarray
    norms: np.ndarray
    config: EvolutionConfig
    band: int = None

    def __len__(self):
        return len(self.t)

    @property
    def final(self):
        return self.states[-1]


def _step_unitaries(model, H, dt):
    """exp(-i H dt) for a stack of Hermitian H, exactly per step."""
    if model.dim == 2:
        d, e0 = bloch_vector(H)
        r = np.linalg.norm(d, axis=-1)
        theta = r * dt
        # sin(theta)/|d| written through sinc so d -> 0 is regular
        amp = dt * np.sinc(theta / math.pi)
        U = np.empty_like(H)
        c = np.cos(theta)
        U[..., 0, 0] = c - 1j * amp * d[..., 2]
        U[..., 1, 1] = c + 1j * amp * d[..., 2]
        U[..., 0, 1] = -1j * amp * (d[..., 0] - 1j * d[..., 1])
        U[..., 1, 0] = -1j * amp * (d[..., 0] + 1j * d[..., 1])
        return U * np.exp(-1j * e0 * dt)[..., None, None]
    w, v = np.linalg.eigh(H)
    phase = np.exp(-1j * w * dt)
    return np.einsum("nij,nj,nkj->nik", v, phase, v.conj())


def _prefix_apply(U, psi0):
    """All states psi_k = U_{k-1} ... U_0 psi_0 via a blocked prefix scan."""
    n, dim = len(U), len(psi0)
    states = np.empty((n + 1, dim), dtype=complex)
    states[0] = psi0
    psi = np.asarray(psi0, dtype=complex)
    chunk = max(1024, _CHUNK // (dim * dim // 4 or 1))
    for start in range(0, n, chunk):
        P = U[start:start + chunk].copy()
        m = len(P)
        shift = 1
        while shift < m:
            # P[j] holds U[j] ... U[j-shift+1]; extend the window leftwards
            Q = P.copy()
            Q[shift:] = P[shift:] @ P[:-shift]
            P = Q
            shift *= 2
        states[start + 1:start + m + 1] = np.einsum("nij,j->ni", P, psi)
        psi = states[start + m]
    return states


def _counterdiabatic_stack(model, pts, vel, band, threshold):
    """V + V^dagger at an array of points, vectorized."""
    energies, vecs = _eig_chunked(model, pts)
    for b in range(model.dim):
        if b == band:
            continue
        gaps = np.abs(energies[:, band] - energies[:, b])
        k = int(np.argmin(gaps))
        if gaps[k] <= threshold:
            raise DegeneracyError(
                f"counterdiabatic term near-degenerate: gap ({band},{b}) = "
                f"{gaps[k]:.2e} at sample {k}")
    grads = model.gradient_many(pts)
    dtH = (vel[:, 0, None, None] * grads[:, 0]
           + vel[:, 1, None, None] * grads[:, 1])
    psi_n = vecs[:, :, band]
    col = np.einsum("nim,nij,nj->nm", vecs.conj(), dtH, psi_n)
    denom = energies[:, band, None] - energies
    denom[:, band] = 1.0
    col[:, band] = 0.0
    lead = np.einsum("nim,nm->ni", vecs, col / denom)
    V = 1j * np.einsum("ni,nj->nij", lead, psi_n.conj())
    return V + np.conj(np.swapaxes(V, -1, -2))


def _propagate(model, pts, vel, psi0, h, k, n_steps, cd_band, gap_threshold):
    """States at the n_steps + 1 boundaries of steps of size 2*k*h."""
    mid = pts[k:2 * k * n_steps:2 * k]
    H = np.empty((n_steps, model.dim, model.dim), dtype=complex)
    for start in range(0, n_steps, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_steps))
        H[sl] = model.evaluate_many(mid[sl])
    if cd_band is not None:
        H += _counterdiabatic_stack(model, mid,
                                    vel[k:2 * k * n_steps:2 * k],
                                    cd_band, gap_threshold)
    return _prefix_apply(_step_unitaries(model, H, 2 * k * h), psi0)


def _halving_error_rate(model, pts, vel, psi0, h, k, cd_band, gap_threshold):
    """Step error per unit time at step 2*k*h, over a ~1-time-unit probe.

    Estimated against the finest stepping the samples support (k = 1),
    which the coarse error dominates for a second-order method.
    """
    m = (len(pts) - 1) // (2 * k)
    m = min(m, max(2, int(round(1.0 / (2 * k * h)))))
    coarse = _propagate(model, pts, vel, psi0, h, k, m, cd_band,
                        gap_threshold)[-1]
    fine = _propagate(model, pts, vel, psi0, h, 1, k * m, cd_band,
                      gap_threshold)[-1]
    return float(np.linalg.norm(coarse - fine)) / (2 * k * h * m)


def evolve(psi0, model, trajectory, config=None, counterdiabatic_band=None,
           horizon=None, gap_threshold=GAP_THRESHOLD):
    """Propagate psi0 along a sampled trajectory.

    The trajectory must be sampled so that step midpoints land on samples:
    with sample spacing h, config.dt = 2*k*h for a positive integer k.  Each
    step applies exp(-i H(midpoint) dt); with counterdiabatic_band = n the
    Hermitized counterdiabatic term for band n is added to H at the
    midpoints.  When the sampling leaves headroom (k > 1) and auto_refine
    is on, k is halved until a short probe puts the halving error below
    config.step_tolerance per unit time; the returned config records the
    step actually used.  Returns states at (strided) step boundaries.
    """
    config = config or EvolutionConfig()
    psi0 = np.asarray(psi0, dtype=complex)
    if psi0.shape != (model.dim,):
        raise ValidationError(
            f"psi0 must have {model.dim} amplitudes, got {psi0.shape}")
    if abs(np.linalg.norm(psi0) - 1.0) > NORM_TOL:
        raise ValidationError("psi0 is not normalized")
    if horizon is not None and trajectory.spec.T < horizon - 1e-12:
        raise ValidationError(
            f"trajectory covers T = {trajectory.spec.T}, shorter than the "
            f"requested horizon {horizon}")
    h = trajectory.spec.dt
    k = round(config.dt / (2 * h))
    if k < 1 or abs(2 * k * h - config.dt) > 1e-9 * max(1.0, config.dt):
        raise ValidationError(
            f"trajectory sampling {h} does not provide midpoints for "
            f"dt = {config.dt}; need dt = 2*k*spacing")
    pts, vel = _points_velocities(model, trajectory)
    if (len(pts) - 1) // (2 * k) < 1:
        raise ValidationError("trajectory too short for a single step")
    if config.auto_refine:
        while k > 1 and _halving_error_rate(
                model, pts, vel, psi0, h, k, counterdiabatic_band,
                gap_threshold) > config.step_tolerance:
            k = max(1, k // 2)
    if abs(2 * k * h - config.dt) > 1e-9 * max(1.0, config.dt):
        config = replace(config, dt=2 * k * h)
    n_steps = (len(pts) - 1) // (2 * k)
    states = _propagate(model, pts, vel, psi0, h, k, n_steps,
                        counterdiabatic_band, gap_threshold)
    t = np.asarray(trajectory.t)[::2 * k][:n_steps + 1]
    stride = config.sampling_stride
    states = states[::stride]
    return EvolutionResult(
        t=t[::stride], states=states,
        norms=np.linalg.norm(states, axis=-1), config=config,
        band=counterdiabatic_band)


def fidelity(psi, phi):
    """|<phi|psi>|^2, elementwise over leading axes."""
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    for a in (psi, phi):
        if np.abs(np.linalg.norm(a, axis=-1) - 1.0).max() > NORM_TOL:
            raise ValidationError("fidelity: states must be normalized")
    return np.abs(np.einsum("...i,...i->...", phi.conj(), psi)) ** 2


@dataclass
class BandTrack:
    """Instantaneous band data along a trajectory with phase accumulators.

    dynamic_phase is -integral E_n dt (trapezoid); berry_phase accumulates
    -Im log of successive state overlaps, so it is insensitive to how each
    eigensolve picked its phase.
    """
    t: np.ndarray
    band: int
    energies: np.ndarray
    states: np.ndarray
    dynamic_phase: np.ndarray
    berry_phase: np.ndarray
    min_gap: float


def _cumtrapz(y, t):
    out = np.empty(len(y))
    out[0] = 0.0
    np.cumsum((y[1:] + y[:-1]) / 2 * np.diff(t), out=out[1:])
    return out


def track_band(model, trajectory, n, gap_threshold=GAP_THRESHOLD):
    """Follow band n along a trajectory, accumulating its phases.

    Raises DegeneracyError naming the first offending sample if the gap to
    a neighboring band ever drops to gap_threshold.
    """
    if not 0 <= n < model.dim:
        raise ValidationError(f"band index {n} out of range")
    pts, _ = _points_velocities(model, trajectory)
    energies, states = _eig_chunked(model, pts, bands=[n])
    _gap_guard(model, trajectory, energies, n, gap_threshold)
    psi = states[:, :, 0]
    t = np.asarray(trajectory.t)
    overlaps = np.einsum("ni,ni->n", psi[:-1].conj(), psi[1:])
    berry = np.empty(len(t))
    berry[0] = 0.0
    np.cumsum(-np.log(overlaps).imag, out=berry[1:])
    neighbors = [b for b in (n - 1, n + 1) if 0 <= b < model.dim]
    min_gap = min(
        np.abs(energies[:, n] - energies[:, b]).min() for b in neighbors)
    return BandTrack(
        t=t, band=n, energies=energies[:, n], states=psi,
        dynamic_phase=-_cumtrapz(energies[:, n], t), berry_phase=berry,
        min_gap=float(min_gap))


def counterdiabatic_term(model, point, velocity, n,
                         gap_threshold=GAP_THRESHOLD):
    """Hermitized counterdiabatic term at one phase-space sample.

    V = i sum_{m != n} |psi_m><psi_m| dH/dt |psi_n><psi_n| / (E_n - E_m)
    with dH/dt the velocity-contracted spatial gradients.  V alone is not
    Hermitian; V^dagger annihilates band-n states, so V + V^dagger drives
    band n identically while being a legitimate Hamiltonian term, and that
    is what is returned.
    """
    pts = (np.asarray([point], dtype=complex) if model.manifold == "bolza"
           else np.asarray(point, dtype=float).reshape(1, 2))
    vel = np.asarray(velocity, dtype=float).reshape(1, 2)
    return _counterdiabatic_stack(model, pts, vel, n, gap_threshold)[0]


@dataclass
class CorrectionSeries:
    """|G(t, lambda)| along a drive for one band pair."""
    t: np.ndarray
    magnitude: np.ndarray
    band_from: int
    band_to: int


def g_correction(model, trajectory, m, n, lam=None,
                 gap_threshold=GAP_THRESHOLD):
    """First-order adiabatic correction magnitude |G(t, lambda)|.

    G(t) = integral_0^t ds g^{-1} p_i <d_i psi_n|psi_m>
           e^{-i gamma_n} e^{-i (phi_n - phi_m)}
    accumulated by trapezoid; <d_i psi_n|psi_m> is evaluated through the
    gradient of H, conj(<psi_m|d_i H|psi_n>)/(E_n - E_m), so no state
    derivatives are needed.  The adiabatic theorem makes max|G| of order
    lambda; pass lam to double-check it matches the trajectory speed.
    """
    if m == n:
        raise ValidationError("g_correction needs two distinct bands")
    if lam is not None and hasattr(trajectory.spec, "speed"):
        if abs(trajectory.spec.speed - lam) > 1e-12:
            raise ValidationError(
                f"trajectory speed {trajectory.spec.speed} != lambda {lam}")
    pts, vel = _points_velocities(model, trajectory)
    energies, states = _eig_chunked(model, pts, bands=[m, n])
    _gap_guard(model, trajectory, energies, n, gap_threshold)
    psi_m, psi_n = states[:, :, 0], states[:, :, 1]
    t = np.asarray(trajectory.t)
    e_m, e_n = energies[:, m], energies[:, n]
    n_pts = len(pts)
    cross = np.empty((n_pts, 2), dtype=complex)
    for start in range(0, n_pts, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n_pts))
        grads = model.gradient_many(pts[sl])
        cross[sl] = np.einsum(
            "ni,naij,nj->na", psi_m[sl].conj(), grads, psi_n[sl])
    d_psi_dot = (vel[:, 0] * np.conj(cross[:, 0])
                 + vel[:, 1] * np.conj(cross[:, 1])) / (e_n - e_m)
    phi_n = -_cumtrapz(e_n, t)
    phi_m = -_cumtrapz(e_m, t)
    overlaps = np.einsum("ni,ni->n", psi_n[:-1].conj(), psi_n[1:])
    gamma_n = np.empty(len(t))
    gamma_n[0] = 0.0
    np.cumsum(-np.log(overlaps).imag, out=gamma_n[1:])
    integrand = d_psi_dot * np.exp(-1j * (gamma_n + phi_n - phi_m))
    g_re = _cumtrapz(integrand.real, t)
    g_im = _cumtrapz(integrand.imag, t)
    return CorrectionSeries(
        t=t, magnitude=np.hypot(g_re, g_im), band_from=n, band_to=m)
