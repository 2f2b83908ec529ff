"""Ergodic spectral efficiency of the RIS-aided downlink.

Per-user rate is log2(1 + SINR) with multiuser interference treated as
noise. Two evaluations are provided: a Monte Carlo average over correlated
RIS-user channel draws, and a deterministic surrogate that replaces each
squared effective channel by its expectation, turning the rate into
quadratic forms of the beamformers in the correlation matrices.

Conventions: the RIS phase response enters as Phi = diag(theta) with
theta_n = exp(j * phase_n), so the effective channel of beam j at user k is
h_k^H diag(theta) H^H w_j and its second moment is the quadratic form
w_j^H A_k w_j = theta^H R_k^j theta, with

    A_k   = H Phi^H R_k Phi H^H            (M x M, one per user)
    R_k^j = diag(H^H w_j)^H R_k diag(H^H w_j)   (N x N, one per user/beam)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel_model import UserCorrelation, sample_user_channel
from .errors import DomainError

__all__ = [
    "ActiveBeam",
    "PassiveBeam",
    "SurrogateContext",
    "EseEstimate",
    "instantaneous_sinr",
    "ese_monte_carlo",
    "ese_approx",
    "build_surrogate_context",
]

POWER_SLACK = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ActiveBeam:
    """AP beamforming matrix (M x K, one column per user) with its transmit
    power budget; the Frobenius-norm power constraint is enforced on
    construction."""

    w: np.ndarray
    power_budget: float

    def __post_init__(self):
        w = _frozen(np.asarray(self.w, dtype=complex))
        object.__setattr__(self, "w", w)
        if w.ndim != 2:
            raise DomainError("beamforming matrix must be 2-D (M x K)")
        if self.power_budget <= 0:
            raise DomainError("power budget must be positive")
        power = np.linalg.norm(w) ** 2
        if power > self.power_budget * (1.0 + POWER_SLACK):
            raise DomainError(
                f"||W||_F^2 = {power:.6e} exceeds budget {self.power_budget:.6e}")

    @property
    def m(self) -> int:
        return self.w.shape[0]

    @property
    def k(self) -> int:
        return self.w.shape[1]

    @property
    def power(self) -> float:
        return float(np.linalg.norm(self.w) ** 2)


@dataclass(frozen=True)
class PassiveBeam:
    """RIS phase configuration: unit-modulus vector theta with
    theta_n = exp(j * phases_n), phases in [0, 2*pi)."""

    theta: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        phases = np.mod(np.asarray(self.phases, dtype=float), 2.0 * np.pi)
        theta = np.asarray(self.theta, dtype=complex)
        if theta.shape != phases.shape or theta.ndim != 1:
            raise DomainError("theta and phases must be matching 1-D vectors")
        if np.abs(np.abs(theta) - 1.0).max() > 1e-12:
            raise DomainError("theta entries must be unit modulus")
        # Canonical form: re-derive theta from the wrapped phases.
        object.__setattr__(self, "phases", _frozen(phases))
        object.__setattr__(self, "theta", _frozen(np.exp(1j * phases)))

    @classmethod
    def from_phases(cls, phases) -> "PassiveBeam":
        phases = np.mod(np.asarray(phases, dtype=float), 2.0 * np.pi)
        return cls(theta=np.exp(1j * phases), phases=phases)

    @classmethod
    def from_theta(cls, theta) -> "PassiveBeam":
        theta = np.asarray(theta, dtype=complex)
        return cls(theta=theta, phases=np.mod(np.angle(theta), 2.0 * np.pi))

    @property
    def n(self) -> int:
        return self.theta.shape[0]


@dataclass(frozen=True)
class SurrogateContext:
    """Quadratic-form matrices shared by both beamforming solvers.

    a_mats[k] is A_k (M x M); r_mats[k, j] is R_k^j (N x N). Both stacks are
    Hermitian-symmetrized. The defining identity theta^H R_k^j theta =
    w_j^H A_k w_j holds for the (W, theta) pair the context was built from.
    """

    a_mats: np.ndarray
    r_mats: np.ndarray
    noise_var: float

    def __post_init__(self):
        object.__setattr__(self, "a_mats", _frozen(self.a_mats))
        object.__setattr__(self, "r_mats", _frozen(self.r_mats))

    @property
    def k(self) -> int:
        return self.a_mats.shape[0]

    @property
    def n(self) -> int:
        return self.r_mats.shape[-1]


@dataclass(frozen=True)
class EseEstimate:
    """Monte Carlo ESE: per-user sample means with standard errors, plus the
    sum rate with the standard error of the per-trial sum."""

    per_user: np.ndarray
    stderr: np.ndarray
    total: float
    total_stderr: float
    trials: int


def _check_dims(ab: ActiveBeam, pb: PassiveBeam, h: np.ndarray, n_users: int):
    if h.shape != (ab.m, pb.n):
        raise DomainError(
            f"channel shape {h.shape} inconsistent with M={ab.m}, N={pb.n}")
    if ab.k != n_users:
        raise DomainError(f"W has {ab.k} columns but there are {n_users} users")


def instantaneous_sinr(k: int, ab: ActiveBeam, pb: PassiveBeam,
                       h: np.ndarray, h_users, noise_var: float) -> float:
    """SINR of user k for one realization of the RIS-user channels:
    |h_k^H Phi H^H w_k|^2 / (sum_{j != k} |h_k^H Phi H^H w_j|^2 + noise)."""
    if noise_var <= 0:
        raise DomainError("noise variance must be positive")
    h = np.asarray(h, dtype=complex)
    _check_dims(ab, pb, h, len(h_users))
    if not 0 <= k < ab.k:
        raise DomainError(f"user index {k} outside 0..{ab.k - 1}")
    hk = np.asarray(h_users[k], dtype=complex)
    if hk.shape != (pb.n,):
        raise DomainError("user channel vector has wrong length")
    gains = (hk.conj() * pb.theta) @ (h.conj().T @ ab.w)
    powers = np.abs(gains) ** 2
    interference = powers.sum() - powers[k]
    return float(powers[k] / (interference + noise_var))


def ese_monte_carlo(ab: ActiveBeam, pb: PassiveBeam, h: np.ndarray,
                    users: list[UserCorrelation], noise_var: float,
                    trials: int, rng: np.random.Generator) -> EseEstimate:
    """Sample-mean ESE over independent RIS-user channel draws.

    Trials are drawn per user from `rng` in user order, so a generator
    re-seeded identically reproduces the exact draws (common random numbers
    across operating points).
    """
    if noise_var <= 0:
        raise DomainError("noise variance must be positive")
    if trials < 2:
        raise DomainError("at least two trials are required for a standard error")
    h = np.asarray(h, dtype=complex)
    _check_dims(ab, pb, h, len(users))

    g = h.conj().T @ ab.w  # N x K: effective AP-side directions
    rates = np.empty((len(users), trials))
    for k, uc in enumerate(users):
        draws = sample_user_channel(uc, rng, size=trials)
        x = (draws.conj() * pb.theta) @ g  # trials x K
        powers = np.abs(x) ** 2
        signal = powers[:, k]
        interference = powers.sum(axis=1) - signal
        rates[k] = np.log2(1.0 + signal / (interference + noise_var))

    per_user = rates.mean(axis=1)
    stderr = rates.std(axis=1, ddof=1) / np.sqrt(trials)
    per_trial_sum = rates.sum(axis=0)
    return EseEstimate(
        per_user=per_user,
        stderr=stderr,
        total=float(per_trial_sum.mean()),
        total_stderr=float(per_trial_sum.std(ddof=1) / np.sqrt(trials)),
        trials=trials,
    )


def _quadratic_powers(ab: ActiveBeam, pb: PassiveBeam, h: np.ndarray,
                      users: list[UserCorrelation]) -> np.ndarray:
    """P[k, j] = w_j^H A_k w_j as real quadratic forms, computed without
    materializing the A matrices."""
    v = h.conj().T @ ab.w            # N x K
    t = pb.theta[:, None] * v        # Phi @ H^H @ W
    out = np.empty((len(users), ab.k))
    for k, uc in enumerate(users):
        out[k] = np.einsum("nj,nm,mj->j", t.conj(), uc.r, t).real
    return out


def ese_approx(ab: ActiveBeam, pb: PassiveBeam, h: np.ndarray,
               users: list[UserCorrelation],
               noise_var: float) -> tuple[np.ndarray, float]:
    """Deterministic ESE surrogate: per-user
    log2(1 + w_k^H A_k w_k / (sum_{j != k} w_j^H A_k w_j + noise)).

    Returns (per-user array, sum).
    """
    if noise_var <= 0:
        raise DomainError("noise variance must be positive")
    h = np.asarray(h, dtype=complex)
    _check_dims(ab, pb, h, len(users))
    p = _quadratic_powers(ab, pb, h, users)
    signal = np.diag(p)
    interference = p.sum(axis=1) - signal
    per_user = np.log2(1.0 + signal / (interference + noise_var))
    return per_user, float(per_user.sum())


def build_surrogate_context(ab: ActiveBeam, pb: PassiveBeam, h: np.ndarray,
                            users: list[UserCorrelation],
                            noise_var: float) -> SurrogateContext:
    """Assemble the A_k and R_k^j quadratic-form matrices for the current
    (W, theta) pair, Hermitian-symmetrized."""
    if noise_var <= 0:
        raise DomainError("noise variance must be positive")
    h = np.asarray(h, dtype=complex)
    _check_dims(ab, pb, h, len(users))
    k_users, n = len(users), pb.n

    hp = h * pb.theta.conj()[None, :]  # H Phi^H
    a_mats = np.empty((k_users, ab.m, ab.m), dtype=complex)
    for k, uc in enumerate(users):
        a = hp @ uc.r @ hp.conj().T
        a_mats[k] = 0.5 * (a + a.conj().T)

    v = h.conj().T @ ab.w  # N x K, columns H^H w_j
    r_mats = np.empty((k_users, ab.k, n, n), dtype=complex)
    for k, uc in enumerate(users):
        for j in range(ab.k):
            scale = v[:, j].conj()[:, None] * v[:, j][None, :]
            r = uc.r * scale
            r_mats[k, j] = 0.5 * (r + r.conj().T)

    return SurrogateContext(a_mats=a_mats, r_mats=r_mats, noise_var=noise_var)
