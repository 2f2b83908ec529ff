"""Channel synthesis for a RIS-aided multi-user MISO downlink.

Covers the deterministic geometry (planar RIS + uniform linear AP array,
steering vectors), the quasi-static geometric AP-RIS channel, one-ring
angular-spread parameters, spatial correlation matrices of the RIS-user
links under truncated Laplacian angular densities, correlated channel
sampling through the spectral decomposition, power-law path loss, sample
correlation estimation, and pilot-overhead accounting.

All quantities are in linear units (watts, meters, radians).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericError

__all__ = [
    "RisGeometry",
    "ApGeometry",
    "PathCluster",
    "UserCorrelation",
    "OneRingParams",
    "ris_element_position",
    "element_positions",
    "wave_vector",
    "ris_response",
    "ap_response",
    "generate_ap_ris_channel",
    "one_ring_angles",
    "spatial_correlation",
    "spectral_decompose",
    "sample_user_channel",
    "path_loss",
    "sample_correlation",
    "pilot_overhead",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RisGeometry:
    """Rectangular RIS: n_h elements per row, n_v per column, indexed
    row-by-row. Spacings and wavelength in meters."""

    n_h: int
    n_v: int
    d_h: float
    d_v: float
    wavelength: float

    def __post_init__(self):
        if self.n_h < 1 or self.n_v < 1:
            raise DomainError("RIS element counts must be >= 1")
        if self.d_h <= 0 or self.d_v <= 0:
            raise DomainError("RIS element spacings must be positive")
        if self.wavelength <= 0:
            raise DomainError("wavelength must be positive")

    @property
    def n(self) -> int:
        return self.n_h * self.n_v


@dataclass(frozen=True)
class ApGeometry:
    """Uniform linear array at the AP; spacing given as a fraction of the
    wavelength (1/2 for half-wavelength spacing)."""

    m: int
    spacing_over_wavelength: float = 0.5

    def __post_init__(self):
        if self.m < 1:
            raise DomainError("AP antenna count must be >= 1")
        if self.spacing_over_wavelength <= 0:
            raise DomainError("AP spacing ratio must be positive")


@dataclass(frozen=True)
class PathCluster:
    """One dominant propagation path of the AP-RIS channel: complex-Gaussian
    gain variance plus arrival angle at the AP and departure azimuth /
    elevation at the RIS."""

    gain_variance: float
    aoa_ap: float
    aod_azimuth: float
    aod_elevation: float

    def __post_init__(self):
        if self.gain_variance <= 0:
            raise DomainError("path gain variance must be positive")
        if not 0.0 <= self.aoa_ap <= np.pi:
            raise DomainError("AP arrival angle must lie in [0, pi]")
        half_pi = np.pi / 2
        if not -half_pi <= self.aod_azimuth <= half_pi:
            raise DomainError("departure azimuth must lie in [-pi/2, pi/2]")
        if not -half_pi <= self.aod_elevation <= half_pi:
            raise DomainError("departure elevation must lie in [-pi/2, pi/2]")


@dataclass(frozen=True)
class UserCorrelation:
    """Spatial correlation of one RIS-user channel with its spectral factors.

    r is the N x N Hermitian PSD correlation matrix; d holds the `rank`
    leading eigenvectors (N x rank), lam the matching positive eigenvalues in
    descending order; beta is the large-scale coefficient trace(r)/N.
    """

    r: np.ndarray
    d: np.ndarray
    lam: np.ndarray
    rank: int
    beta: float

    def __post_init__(self):
        r = _frozen(np.asarray(self.r, dtype=complex))
        d = _frozen(np.asarray(self.d, dtype=complex))
        lam = _frozen(np.asarray(self.lam, dtype=float))
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "lam", lam)
        n = r.shape[0]
        if r.shape != (n, n):
            raise DomainError("correlation matrix must be square")
        if d.shape != (n, self.rank) or lam.shape != (self.rank,):
            raise DomainError("spectral factors inconsistent with rank")
        scale = max(np.abs(r).max(), np.finfo(float).tiny)
        if np.abs(r - r.conj().T).max() > 1e-12 * scale:
            raise DomainError("correlation matrix must be Hermitian")
        if self.rank and lam.min() <= 0:
            raise DomainError("retained eigenvalues must be positive")
        recon = (d * lam) @ d.conj().T
        err = np.linalg.norm(recon - r) / max(np.linalg.norm(r), np.finfo(float).tiny)
        if err > 1e-10:
            raise DomainError(f"spectral factors do not reconstruct r (rel err {err:.2e})")
        tr = r.trace().real / n
        if abs(tr - self.beta) > 1e-10 * max(abs(self.beta), np.finfo(float).tiny):
            raise DomainError("beta must equal trace(r)/N")

    @property
    def n(self) -> int:
        return self.r.shape[0]


@dataclass(frozen=True)
class OneRingParams:
    """One-ring scatterer model: user at azimuth distance d from the origin,
    scatter ring radius r, RIS height h, user azimuth phi_az."""

    d: float
    r: float
    phi_az: float
    h: float

    def __post_init__(self):
        if self.r <= 0:
            raise DomainError("ring radius must be positive")
        if self.d <= self.r:
            raise DomainError("user distance must exceed the ring radius")
        if self.h <= 0:
            raise DomainError("RIS height must be positive")


# ---------------------------------------------------------------------------
# Array geometry and steering vectors
# ---------------------------------------------------------------------------

def ris_element_position(n: int, geom: RisGeometry) -> np.ndarray:
    """Position of the n-th RIS element (1-based, row-by-row indexing).

    Element n sits at [0, mod(n-1, n_h) * d_h, floor((n-1)/n_h) * d_v].
    """
    if not 1 <= n <= geom.n:
        raise DomainError(f"element index {n} outside 1..{geom.n}")
    i_h = (n - 1) % geom.n_h
    i_v = (n - 1) // geom.n_h
    return np.array([0.0, i_h * geom.d_h, i_v * geom.d_v])


def element_positions(geom: RisGeometry) -> np.ndarray:
    """All N element positions as an (N, 3) array."""
    idx = np.arange(geom.n)
    pos = np.zeros((geom.n, 3))
    pos[:, 1] = (idx % geom.n_h) * geom.d_h
    pos[:, 2] = (idx // geom.n_h) * geom.d_v
    return pos


def wave_vector(phi_az: float, phi_el: float, wavelength: float) -> np.ndarray:
    """Wave vector (2*pi/wl) * [cos(az)sin(el), cos(el)sin(az), sin(el)]."""
    if wavelength <= 0:
        raise DomainError("wavelength must be positive")
    k = 2.0 * np.pi / wavelength
    return k * np.array([
        np.cos(phi_az) * np.sin(phi_el),
        np.cos(phi_el) * np.sin(phi_az),
        np.sin(phi_el),
    ])


def ris_response(phi_az: float, phi_el: float, geom: RisGeometry) -> np.ndarray:
    """Unit-norm RIS response vector for an azimuth/elevation pair."""
    k = wave_vector(phi_az, phi_el, geom.wavelength)
    phases = element_positions(geom) @ k
    return np.exp(1j * phases) / np.sqrt(geom.n)


def ap_response(gamma: float, geom: ApGeometry) -> np.ndarray:
    """Unit-norm ULA response vector for arrival angle gamma in [0, pi]."""
    phase_step = 2.0 * np.pi * geom.spacing_over_wavelength * np.cos(gamma)
    return np.exp(1j * phase_step * np.arange(geom.m)) / np.sqrt(geom.m)


# ---------------------------------------------------------------------------
# AP-RIS channel
# ---------------------------------------------------------------------------

def generate_ap_ris_channel(clusters: list[PathCluster], beta_h: float,
                            ap: ApGeometry, ris: RisGeometry,
                            rng: np.random.Generator) -> np.ndarray:
    """Draw the sparse geometric AP-RIS channel (M x N).

    H = sqrt(beta_h * M * N / rho) * sum_l rho_l * e_ap(gamma_l) e_ris(az_l, el_l)^H

    with rho_l ~ CN(0, sigma_l^2) and rho = sum_l sigma_l^2, so that
    E||H||_F^2 = beta_h * M * N regardless of the number of paths.
    """
    if not clusters:
        raise DomainError("at least one path cluster is required")
    if beta_h <= 0:
        raise DomainError("large-scale gain beta_h must be positive")
    variances = np.array([c.gain_variance for c in clusters])
    rho = variances.sum()
    n_paths = len(clusters)

    re = rng.standard_normal(n_paths)
    im = rng.standard_normal(n_paths)
    gains = (re + 1j * im) * np.sqrt(variances / 2.0)

    h = np.zeros((ap.m, ris.n), dtype=complex)
    for gain, c in zip(gains, clusters):
        a = ap_response(c.aoa_ap, ap)
        b = ris_response(c.aod_azimuth, c.aod_elevation, ris)
        h += gain * np.outer(a, b.conj())
    return np.sqrt(beta_h * ap.m * ris.n / rho) * h


# ---------------------------------------------------------------------------
# One-ring angular parameters
# ---------------------------------------------------------------------------

def one_ring_angles(p: OneRingParams) -> tuple[float, float, float]:
    """Azimuth spread, elevation mean and elevation spread of the one-ring
    model: (arctan(r/d),
            (arctan(h/(d-r)) + arctan(h/(d+r))) / 2,
            (arctan(h/(d-r)) - arctan(h/(d+r))) / 2).
    """
    delta_az = np.arctan(p.r / p.d)
    near = np.arctan(p.h / (p.d - p.r))
    far = np.arctan(p.h / (p.d + p.r))
    return float(delta_az), float(0.5 * (near + far)), float(0.5 * (near - far))


# ---------------------------------------------------------------------------
# Spatial correlation under truncated Laplacian angular densities
# ---------------------------------------------------------------------------

def _laplacian_rule(mean: float, spread: float, n_per_panel: int):
    """Gauss-Legendre nodes/weights for the truncated Laplacian density on
    [-pi/2, pi/2], weights normalized to unit total mass.

    Panels split at the density kink (the mean) and at +-40 scale lengths
    around it, so each panel integrand is smooth and convergence is
    exponential even for very small spreads.
    """
    scale = spread / np.sqrt(2.0)
    half_pi = np.pi / 2
    cut = 40.0 * scale
    breaks = np.clip([mean - cut, mean, mean + cut], -half_pi, half_pi)
    edges = np.unique(np.concatenate(([-half_pi], breaks, [half_pi])))

    base_x, base_w = np.polynomial.legendre.leggauss(n_per_panel)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0:
            continue
        mid = 0.5 * (hi + lo)
        half = 0.5 * (hi - lo)
        x = mid + half * base_x
        w = half * base_w * np.exp(-np.abs(x - mean) / scale)
        nodes.append(x)
        weights.append(w)
    x = np.concatenate(nodes)
    w = np.concatenate(weights)
    return x, w / w.sum()


def _correlation_table(dy: np.ndarray, dz: np.ndarray, mean_az, spread_az,
                       mean_el, spread_el, wavelength, n_per_panel):
    """Correlation integral over all distinct position offsets (0, dy, dz),
    at unit large-scale gain."""
    az_x, az_w = _laplacian_rule(mean_az, spread_az, n_per_panel)
    el_x, el_w = _laplacian_rule(mean_el, spread_el, n_per_panel)
    k0 = 2.0 * np.pi / wavelength

    sin_az = np.sin(az_x)
    cos_el = np.cos(el_x)
    el_phase = np.exp(1j * k0 * np.outer(np.sin(el_x), dz))  # (n_el, n_dz)

    table = np.empty((dy.size, dz.size), dtype=complex)
    for i, d in enumerate(dy):
        inner = np.exp(1j * k0 * d * np.outer(cos_el, sin_az)) @ az_w  # (n_el,)
        table[i] = (el_w * inner) @ el_phase
    return table


def spatial_correlation(geom: RisGeometry, mean_az: float, spread_az: float,
                        mean_el: float, spread_el: float, beta: float,
                        target_err: float = 1e-8) -> np.ndarray:
    """Spatial correlation matrix of a RIS-user channel.

    [R]_{mn} = beta * E{ exp(j k(az, el)^T (u_m - u_n)) } with (az, el)
    independently Laplacian-distributed (scale = spread / sqrt(2)), truncated
    to [-pi/2, pi/2] and renormalized. Adaptive Gauss-Legendre quadrature,
    node count doubled until the entrywise change is below target_err at
    unit gain. After quadrature, tiny negative eigenvalues are clipped and
    the trace renormalized to N * beta.
    """
    if spread_az <= 0 or spread_el <= 0:
        raise DomainError("angular spreads must be positive")
    if beta <= 0:
        raise DomainError("large-scale coefficient beta must be positive")

    idx = np.arange(geom.n)
    iy = idx % geom.n_h
    iz = idx // geom.n_h
    dy = np.arange(-(geom.n_h - 1), geom.n_h) * geom.d_h
    dz = np.arange(-(geom.n_v - 1), geom.n_v) * geom.d_v

    n_nodes = 32
    table = _correlation_table(dy, dz, mean_az, spread_az, mean_el, spread_el,
                               geom.wavelength, n_nodes)
    while True:
        n_nodes *= 2
        refined = _correlation_table(dy, dz, mean_az, spread_az, mean_el,
                                     spread_el, geom.wavelength, n_nodes)
        if np.abs(refined - table).max() < target_err:
            table = refined
            break
        table = refined
        if n_nodes >= 4096:
            raise NumericError("correlation quadrature failed to converge")

    rows = (iy[:, None] - iy[None, :]) + (geom.n_h - 1)
    cols = (iz[:, None] - iz[None, :]) + (geom.n_v - 1)
    r = beta * table[rows, cols]
    r = 0.5 * (r + r.conj().T)

    # Clip quadrature-induced negative eigenvalues and restore the trace.
    eigval, eigvec = np.linalg.eigh(r)
    floor = -1e-10 * r.trace().real
    if eigval.min() < floor:
        raise NumericError("correlation matrix is not PSD within tolerance")
    eigval = np.maximum(eigval, 0.0)
    r = (eigvec * eigval) @ eigvec.conj().T
    r *= geom.n * beta / r.trace().real
    return 0.5 * (r + r.conj().T)


def spectral_decompose(r: np.ndarray, rank_tol: float = 0.0) -> UserCorrelation:
    """Eigendecompose a Hermitian PSD correlation matrix, dropping
    eigenvalues below rank_tol times the largest (non-positive ones are
    always dropped). Eigenvalues returned in descending order."""
    r = np.asarray(r, dtype=complex)
    n = r.shape[0]
    if r.ndim != 2 or r.shape != (n, n):
        raise DomainError("input must be a square matrix")
    scale = max(np.abs(r).max(), np.finfo(float).tiny)
    if np.abs(r - r.conj().T).max() > 1e-10 * scale:
        raise DomainError("input matrix is not Hermitian within tolerance")

    eigval, eigvec = np.linalg.eigh(0.5 * (r + r.conj().T))
    order = np.argsort(eigval)[::-1]
    eigval = eigval[order]
    eigvec = eigvec[:, order]

    cutoff = rank_tol * eigval[0] if (eigval.size and eigval[0] > 0) else 0.0
    keep = eigval > max(cutoff, 0.0)
    rank = int(keep.sum())
    return UserCorrelation(
        r=r,
        d=eigvec[:, :rank],
        lam=eigval[:rank],
        rank=rank,
        beta=float(r.trace().real / n),
    )


def sample_user_channel(uc: UserCorrelation, rng: np.random.Generator,
                        size: int | None = None) -> np.ndarray:
    """Draw correlated RIS-user channel realizations h ~ CN(0, R) by
    coloring white complex Gaussians through the spectral factors:
    h = D @ (sqrt(lam) * g), g ~ CN(0, I_rank).

    Returns an (N,) vector, or a (size, N) array when size is given.
    """
    squeeze = size is None
    count = 1 if squeeze else int(size)
    if uc.rank == 0:
        out = np.zeros((count, uc.n), dtype=complex)
    else:
        re = rng.standard_normal((count, uc.rank))
        im = rng.standard_normal((count, uc.rank))
        coef = (re + 1j * im) * np.sqrt(uc.lam / 2.0)
        out = coef @ uc.d.T
    return out[0] if squeeze else out


# ---------------------------------------------------------------------------
# Path loss, correlation estimation, pilot accounting
# ---------------------------------------------------------------------------

def path_loss(dist: float, alpha: float, c0: float, d0: float) -> float:
    """Power-law path loss c0 * (dist/d0)^(-alpha), all linear units."""
    if dist <= 0:
        raise DomainError("distance must be positive")
    if d0 <= 0:
        raise DomainError("reference distance must be positive")
    return c0 * (dist / d0) ** (-alpha)


def sample_correlation(samples) -> np.ndarray:
    """Sample correlation matrix (1/S) * sum_i h_i h_i^H of channel draws."""
    x = np.atleast_2d(np.asarray(samples, dtype=complex))
    if x.size == 0:
        raise DomainError("at least one sample is required")
    r = x.T @ x.conj() / x.shape[0]
    return 0.5 * (r + r.conj().T)


def pilot_overhead(n: int, k: int, s: int, tau_b: int,
                   alternate_constant: bool = False) -> int:
    """Total pilot overhead: 2(N+1) symbols for the quasi-static AP-RIS
    channel plus K*S*tau_b for the per-user sample correlation matrices.

    alternate_constant switches the first term to 2(N-1).
    """
    if min(n, k, s, tau_b) < 1:
        raise DomainError("all pilot-overhead counts must be >= 1")
    first = 2 * (n - 1) if alternate_constant else 2 * (n + 1)
    return first + k * s * tau_b
