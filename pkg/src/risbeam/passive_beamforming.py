"""RIS phase optimization for a fixed AP beam.

Projected gradient ascent on the surrogate sum rate as a function of the
unit-modulus phase vector theta:

    f(theta) = sum_k log2(1 + theta^H S_k theta / theta^H B_k theta)

with S_k = R_k^k and B_k = sum_{j != k} R_k^j + (noise/N) I. The noise term
is spread over the N unit-modulus entries so that on the constraint set the
denominator is exactly (interference + noise) and f coincides with the
deterministic ESE surrogate of the joint problem; it also makes f scale
invariant, so the gradient is orthogonal to radial directions.

The ascent direction is the Wirtinger gradient d f / d theta^*; a log-ratio
derivative, so the interference term enters with a minus sign. Steps are
chosen by backtracking line search against an Armijo sufficient-increase
test evaluated after projection back to unit modulus.

quantize_phases maps each phase onto the nearest point of the uniform
2^b-point codebook for the finite-resolution hardware study.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel_model import UserCorrelation
from .errors import DomainError, NumericError
from .ese_metrics import ActiveBeam, PassiveBeam, SurrogateContext

__all__ = [
    "GdState",
    "surrogate_objective_theta",
    "gradient_theta",
    "project_unit_modulus",
    "gd_step",
    "gd_passive",
    "quantize_phases",
]

_MIN_STEP = 1e-12
_LN2 = np.log(2.0)


@dataclass
class GdState:
    """Projected-gradient trajectory state: current phases, last accepted
    step size, accepted-objective trace (bits/s/Hz) and iteration count."""

    theta: PassiveBeam
    step: float
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def _signal_and_denominator_mats(ctx: SurrogateContext):
    """(S_k, B_k) stacks for the theta quadratic forms; B_k folds the noise
    in as (noise/N) I so that theta^H B_k theta = interference + noise on
    the unit-modulus set."""
    k, n = ctx.k, ctx.n
    sig = np.empty((k, n, n), dtype=complex)
    den = np.empty((k, n, n), dtype=complex)
    eye = np.eye(n)
    for i in range(k):
        sig[i] = ctx.r_mats[i, i]
        den[i] = ctx.r_mats[i].sum(axis=0) - ctx.r_mats[i, i] \
            + (ctx.noise_var / n) * eye
    return sig, den


def _objective(theta: np.ndarray, sig: np.ndarray, den: np.ndarray) -> float:
    num = np.einsum("n,knm,m->k", theta.conj(), sig, theta).real
    dom = np.einsum("n,knm,m->k", theta.conj(), den, theta).real
    return float(np.log2(1.0 + num / dom).sum())


def _gradient(theta: np.ndarray, sig: np.ndarray, den: np.ndarray) -> np.ndarray:
    st = sig @ theta  # (K, N)
    bt = den @ theta
    a = np.einsum("n,kn->k", theta.conj(), st).real
    b = np.einsum("n,kn->k", theta.conj(), bt).real
    scale = 1.0 / (_LN2 * (1.0 + a / b))
    return np.einsum("k,kn->n", scale / b, st) \
        - np.einsum("k,kn->n", scale * a / b ** 2, bt)


def surrogate_objective_theta(theta: PassiveBeam, ctx: SurrogateContext) -> float:
    """Surrogate sum rate at theta; equals the deterministic ESE surrogate
    of the (W, theta) pair the context was built from."""
    sig, den = _signal_and_denominator_mats(ctx)
    return _objective(theta.theta, sig, den)


def gradient_theta(theta: PassiveBeam, ctx: SurrogateContext) -> np.ndarray:
    """Wirtinger gradient of the surrogate sum rate with respect to
    theta^*: per user (1/ln 2) (1 + a/b)^{-1} (S_k theta / b - (a/b^2) B_k theta)."""
    sig, den = _signal_and_denominator_mats(ctx)
    return _gradient(theta.theta, sig, den)


def project_unit_modulus(theta_raw: np.ndarray,
                         previous: PassiveBeam) -> PassiveBeam:
    """Entrywise projection exp(j arg(.)); an exactly-zero entry keeps the
    phase of the previous iterate (arg(0) is undefined)."""
    raw = np.asarray(theta_raw, dtype=complex)
    if raw.shape != previous.theta.shape:
        raise DomainError("projection input has wrong length")
    phases = np.where(raw == 0, previous.phases, np.angle(raw))
    return PassiveBeam.from_phases(phases)


def _step(theta: PassiveBeam, sig, den, f_now: float, armijo_c: float,
          shrink: float, mu0: float) -> tuple[PassiveBeam, float, float, bool]:
    """One backtracked ascent step. Returns (theta, objective, step,
    accepted)."""
    grad = _gradient(theta.theta, sig, den)
    if not np.all(np.isfinite(grad.view(float))):
        raise NumericError("gradient became non-finite")
    grad_norm_sq = float(np.linalg.norm(grad) ** 2)
    if grad_norm_sq == 0.0:
        return theta, f_now, 0.0, False

    mu = mu0
    while mu >= _MIN_STEP:
        candidate = project_unit_modulus(theta.theta + mu * grad, theta)
        f_new = _objective(candidate.theta, sig, den)
        if f_new >= f_now + armijo_c * mu * grad_norm_sq:
            return candidate, f_new, mu, True
        mu *= shrink
    return theta, f_now, 0.0, False


def gd_step(state: GdState, ctx: SurrogateContext, armijo_c: float = 1e-4,
            shrink: float = 0.5, mu0: float = 1.0) -> GdState:
    """Single projected-gradient step with Armijo backtracking. A step that
    cannot achieve sufficient increase before the step size underflows is
    rejected and the state is marked converged."""
    sig, den = _signal_and_denominator_mats(ctx)
    f_now = state.objective_trace[-1] if state.objective_trace \
        else _objective(state.theta.theta, sig, den)
    trace = list(state.objective_trace) or [f_now]

    theta, f_new, mu, accepted = _step(state.theta, sig, den, f_now,
                                       armijo_c, shrink, mu0)
    if accepted:
        trace.append(f_new)
    return GdState(theta=theta, step=mu, objective_trace=trace,
                   iterations=state.iterations + 1, converged=not accepted)


def gd_passive(w: ActiveBeam, theta0: PassiveBeam, h: np.ndarray,
               users: list[UserCorrelation], noise_var: float,
               max_iter: int = 500, tol: float = 1e-5,
               armijo_c: float = 1e-4, shrink: float = 0.5,
               mu0: float = 1.0) -> GdState:
    """Projected gradient ascent from theta0 until the relative objective
    change drops below tol, a step is rejected, or max_iter is reached."""
    from .ese_metrics import build_surrogate_context

    ctx = build_surrogate_context(w, theta0, h, users, noise_var)
    sig, den = _signal_and_denominator_mats(ctx)

    theta = theta0
    trace = [_objective(theta.theta, sig, den)]
    step = 0.0
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        theta, f_new, step, accepted = _step(theta, sig, den, trace[-1],
                                             armijo_c, shrink, mu0)
        if not accepted:
            converged = True
            break
        gain = f_new - trace[-1]
        trace.append(f_new)
        if gain < tol * max(abs(trace[-2]), np.finfo(float).tiny):
            converged = True
            break

    return GdState(theta=theta, step=step, objective_trace=trace,
                   iterations=iterations, converged=converged)


def quantize_phases(theta: PassiveBeam, b: int) -> PassiveBeam:
    """Snap each phase to the nearest point of {2 pi i / 2^b}; exact
    halfway ties go to the lower codebook index."""
    if b < 1:
        raise DomainError("quantizer resolution must be at least 1 bit")
    levels = 2 ** int(b)
    step = 2.0 * np.pi / levels
    # Work in units of the codebook step: the wrapped distance to the two
    # bracketing codewords is frac*step and (1-frac)*step, so the nearest-
    # codeword comparison (and the exact-tie test) reduces to frac vs 1/2.
    x = theta.phases / step
    lo = np.floor(x)
    frac = x - lo
    lo_idx = lo % levels
    hi_idx = (lo + 1.0) % levels
    pick = np.where(frac < 0.5, lo_idx, hi_idx)
    pick = np.where(frac == 0.5, np.minimum(lo_idx, hi_idx), pick)
    return PassiveBeam.from_phases(pick * step)
