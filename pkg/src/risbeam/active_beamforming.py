"""AP beamforming for a fixed RIS phase configuration.

Two strategies:

- svd_beamformer: one-shot, no alternation. Columns are the leading left
  singular vectors of the AP-RIS channel, power split evenly so that
  ||W||_F^2 = P.

- fp_active: fractional programming. The sum of log(1 + SINR) ratios is
  lifted with a Lagrangian dual variable per user (gamma), each resulting
  ratio is decomposed through the spectral factors of the user correlation
  and linearized with a quadratic-transform auxiliary q_ky, giving a
  closed-form W update with a bisected power dual. Every full iteration is
  an ascent step on the surrogate sum rate.

The per-direction vectors are the correlation eigenvectors lifted through
the cascade, d_ky = H Phi^H [D_k]_y, so that A_k = sum_y lam_ky d_ky d_ky^H
and all inner products against the M-dimensional beams are well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import UserCorrelation
from .errors import DomainError, NumericError
from .ese_metrics import ActiveBeam, PassiveBeam, SurrogateContext

__all__ = [
    "FpState",
    "svd_beamformer",
    "optimal_gamma",
    "dual_function",
    "effective_directions",
    "update_q",
    "update_w",
    "fp_active",
    "p2_objective",
]

_EIG_NULL_CUTOFF = 1e-12
_POWER_REL_TOL = 1e-6
_MAX_BRACKET_DOUBLINGS = 60
_MAX_BISECTIONS = 60


@dataclass
class FpState:
    """State of the fractional-programming iteration: dual variables gamma,
    quadratic-transform matrix q, current beam, and the per-iteration
    surrogate objective (bits/s/Hz) and transmit power traces."""

    gamma: np.ndarray
    q: np.ndarray
    w: ActiveBeam
    objective_trace: list = field(default_factory=list)
    power_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def svd_beamformer(h: np.ndarray, p: float, k: int) -> ActiveBeam:
    """Columns are the K leading left singular vectors of H, each scaled by
    sqrt(P/K) so the full matrix meets the power budget with equality."""
    h = np.asarray(h, dtype=complex)
    if p <= 0:
        raise DomainError("power budget must be positive")
    if not 1 <= k <= h.shape[0]:
        raise DomainError(f"user count {k} exceeds antenna count {h.shape[0]}")
    u, _, _ = np.linalg.svd(h, full_matrices=True)
    return ActiveBeam(w=np.sqrt(p / k) * u[:, :k], power_budget=p)


def _beam_powers(w: np.ndarray, a_mats: np.ndarray) -> np.ndarray:
    """P[k, j] = w_j^H A_k w_j (real)."""
    return np.einsum("aj,kab,bj->kj", w.conj(), a_mats, w).real


def p2_objective(w: ActiveBeam, ctx: SurrogateContext) -> float:
    """Surrogate sum rate sum_k log2(1 + SINR_k) at the current beam."""
    p = _beam_powers(w.w, ctx.a_mats)
    signal = np.diag(p)
    interference = p.sum(axis=1) - signal
    return float(np.log2(1.0 + signal / (interference + ctx.noise_var)).sum())


def optimal_gamma(w: ActiveBeam, ctx: SurrogateContext) -> np.ndarray:
    """Stationary dual variables: gamma_k equals the surrogate SINR
    w_k^H A_k w_k / (sum_{j != k} w_j^H A_k w_j + noise)."""
    p = _beam_powers(w.w, ctx.a_mats)
    signal = np.diag(p)
    interference = p.sum(axis=1) - signal
    return signal / (interference + ctx.noise_var)


def dual_function(w: ActiveBeam, gamma: np.ndarray,
                  ctx: SurrogateContext) -> np.ndarray:
    """Per-user Lagrangian dual value (natural log):
    (1+g) s_k / (t_k + noise) + ln(1+g) - g, where s_k is the signal
    quadratic form and t_k the total received power at user k."""
    p = _beam_powers(w.w, ctx.a_mats)
    signal = np.diag(p)
    total = p.sum(axis=1) + ctx.noise_var
    return (1.0 + gamma) * signal / total + np.log1p(gamma) - gamma


def effective_directions(users: list[UserCorrelation], pb: PassiveBeam,
                         h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Correlation eigen-directions lifted through the RIS cascade.

    Returns (lam, dirs) with lam of shape (K, Y) and dirs of shape
    (K, M, Y), Y = max_k rank_k; users of lower rank are padded with zero
    eigenvalues so A_k = sum_y lam[k, y] dirs[k, :, y] dirs[k, :, y]^H holds
    for every k.
    """
    h = np.asarray(h, dtype=complex)
    k_users = len(users)
    y_max = max((uc.rank for uc in users), default=0)
    hp = h * pb.theta.conj()[None, :]  # H Phi^H
    lam = np.zeros((k_users, y_max))
    dirs = np.zeros((k_users, h.shape[0], y_max), dtype=complex)
    for k, uc in enumerate(users):
        lam[k, :uc.rank] = uc.lam
        dirs[k, :, :uc.rank] = hp @ uc.d
    return lam, dirs


def _update_q(w: np.ndarray, gamma: np.ndarray, lam: np.ndarray,
              dirs: np.ndarray, a_mats: np.ndarray,
              noise_var: float) -> np.ndarray:
    total = _beam_powers(w, a_mats).sum(axis=1) + noise_var  # (K,)
    proj = np.einsum("mk,kmy->ky", w.conj(), dirs)           # w_k^H d_ky
    return np.sqrt(lam * (1.0 + gamma)[:, None]) * proj / total[:, None]


def update_q(w: ActiveBeam, gamma: np.ndarray, users: list[UserCorrelation],
             ctx: SurrogateContext, pb: PassiveBeam,
             h: np.ndarray) -> np.ndarray:
    """Quadratic-transform auxiliaries
    q_ky = sqrt(lam_ky (1+gamma_k)) w_k^H d_ky / (sum_j w_j^H A_k w_j + noise)."""
    lam, dirs = effective_directions(users, pb, h)
    return _update_q(w.w, gamma, lam, dirs, ctx.a_mats, ctx.noise_var)


def _solve_w(q: np.ndarray, gamma: np.ndarray, lam: np.ndarray,
             dirs: np.ndarray, a_mats: np.ndarray, p: float) -> np.ndarray:
    weights = np.abs(q) ** 2  # (K, Y)
    s = np.einsum("k,kab->ab", weights.sum(axis=1), a_mats)
    s = 0.5 * (s + s.conj().T)
    rhs = np.einsum("kmy,ky->mk", dirs, q.conj() * np.sqrt(lam))
    rhs = rhs * np.sqrt(1.0 + gamma)[None, :]

    eigval, eigvec = np.linalg.eigh(s)
    proj = eigvec.conj().T @ rhs  # modal coordinates of the right-hand side
    # The right-hand side lies in range(S) up to roundoff; null modes carry
    # only noise and are excluded at every dual value.
    keep = eigval > _EIG_NULL_CUTOFF * max(float(eigval.max()), 0.0)

    def beam(dual: float) -> np.ndarray:
        coeff = np.zeros_like(proj)
        coeff[keep] = proj[keep] / (eigval[keep] + dual)[:, None]
        return eigvec @ coeff

    def power(dual: float) -> float:
        return float(np.linalg.norm(beam(dual)) ** 2)

    if power(0.0) <= p:
        return beam(0.0)

    # Monotone power in the dual: bracket then bisect.
    hi = 1.0
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        if power(hi) <= p:
            break
        hi *= 2.0
    else:
        raise NumericError("power dual bisection failed to bracket")
    lo = 0.0
    for _ in range(_MAX_BISECTIONS):
        if p - power(hi) <= _POWER_REL_TOL * p:
            break
        mid = 0.5 * (lo + hi)
        if power(mid) > p:
            lo = mid
        else:
            hi = mid
    return beam(hi)


def update_w(q: np.ndarray, gamma: np.ndarray, users: list[UserCorrelation],
             ctx: SurrogateContext, pb: PassiveBeam, h: np.ndarray,
             p: float) -> ActiveBeam:
    """Closed-form beam update
    w_k = sqrt(1+gamma_k) (dual*I + sum_k sum_y |q_ky|^2 A_k)^{-1}
          sum_y q_ky^* sqrt(lam_ky) d_ky,
    with the power dual bisected until ||W||_F^2 meets the budget (equality
    within 1e-6 relative when the constraint is active)."""
    if p <= 0:
        raise DomainError("power budget must be positive")
    lam, dirs = effective_directions(users, pb, h)
    w = _solve_w(q, gamma, lam, dirs, ctx.a_mats, p)
    return ActiveBeam(w=w, power_budget=p)


def fp_active(pb: PassiveBeam, h: np.ndarray, users: list[UserCorrelation],
              noise_var: float, p: float, max_iter: int = 100,
              tol: float = 1e-4, w0: ActiveBeam | None = None) -> FpState:
    """Fractional-programming active beamforming for a fixed RIS phase.

    Iterates gamma -> q -> W until the surrogate objective's relative
    increase drops below tol (or max_iter). The objective trace is
    nondecreasing by construction of the three exact block updates.
    """
    from .ese_metrics import build_surrogate_context

    h = np.asarray(h, dtype=complex)
    k_users = len(users)
    w = w0 if w0 is not None else svd_beamformer(h, p, k_users)
    ctx = build_surrogate_context(w, pb, h, users, noise_var)
    lam, dirs = effective_directions(users, pb, h)

    gamma = np.zeros(k_users)
    q = np.zeros_like(lam, dtype=complex)
    objective = [p2_objective(w, ctx)]
    powers = [w.power]
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        gamma = optimal_gamma(w, ctx)
        q = _update_q(w.w, gamma, lam, dirs, ctx.a_mats, noise_var)
        w = ActiveBeam(w=_solve_w(q, gamma, lam, dirs, ctx.a_mats, p),
                       power_budget=p)
        objective.append(p2_objective(w, ctx))
        powers.append(w.power)
        if not np.isfinite(objective[-1]):
            raise NumericError("FP objective became non-finite")
        prev = objective[-2]
        if objective[-1] - prev < tol * max(abs(prev), np.finfo(float).tiny):
            converged = True
            break

    return FpState(gamma=gamma, q=q, w=w, objective_trace=objective,
                   power_trace=powers, iterations=iterations,
                   converged=converged)
