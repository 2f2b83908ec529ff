"""Joint beamforming pipelines.

Two algorithms over a realized scenario (fixed AP-RIS channel draw plus the
per-user correlation structure):

- SVD-GD: one-shot SVD active beam, then projected-gradient passive
  optimization. No alternation.
- FP-GD: alternate passive (gradient ascent) and active (fractional
  programming) stages, both monotone in the shared deterministic surrogate,
  until the fractional increase of the surrogate drops below a threshold.

Scenario realization is seeded through named streams, so a (config, seed)
pair reproduces every draw bit for bit: the AP-RIS path angles and gains are
drawn once and frozen (quasi-static channel), the RIS phase initialization
and the Monte Carlo user-channel draws come from their own streams. Monte
Carlo evaluation re-seeds from the scenario, giving common random numbers
across operating points of a sweep.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .active_beamforming import fp_active, svd_beamformer
from .channel_model import (
    OneRingParams,
    PathCluster,
    UserCorrelation,
    generate_ap_ris_channel,
    one_ring_angles,
    path_loss,
    spatial_correlation,
    spectral_decompose,
)
from .config import ScenarioConfig, ap_geometry, dbm_to_watts, ris_geometry
from .errors import DomainError
from .ese_metrics import ActiveBeam, PassiveBeam, ese_approx, ese_monte_carlo
from .passive_beamforming import gd_passive, quantize_phases
from .streams import named_stream

__all__ = [
    "Hyper",
    "Scenario",
    "JointResult",
    "QuantizedEval",
    "user_correlations",
    "realize_scenario",
    "initial_theta",
    "run_svd_gd",
    "run_fp_gd",
    "evaluate_quantized",
]


@dataclass(frozen=True)
class Hyper:
    """Algorithm hyperparameters; defaults match the documented sweep
    settings."""

    fp_max_iter: int = 100
    fp_tol: float = 1e-4
    gd_max_iter: int = 500
    gd_tol: float = 1e-5
    outer_max: int = 30
    outer_tol: float = 1e-4
    mu0: float = 1.0
    shrink: float = 0.5
    armijo_c: float = 1e-4
    mc_trials: int = 500
    theta_init: str = "random"  # or "zeros"


@dataclass(frozen=True)
class Scenario:
    """One realized operating point: channel draw, user correlations,
    noise, transmit power budget (linear watts) and the master seed that
    produced it."""

    h: np.ndarray
    users: tuple
    noise_var: float
    power: float
    power_dbm: float
    seed: int

    @property
    def k(self) -> int:
        return len(self.users)

    @property
    def n(self) -> int:
        return self.h.shape[1]


@dataclass
class JointResult:
    algorithm: str
    w: ActiveBeam
    theta: PassiveBeam
    per_user_surrogate: np.ndarray
    sum_ese_surrogate: float
    per_user_mc: np.ndarray
    sum_ese_mc: float
    mc_stderr: float
    outer_iterations: int
    outer_trace: list
    per_stage_traces: list
    wall_time: float


@dataclass(frozen=True)
class QuantizedEval:
    bits: float  # math.inf marks the continuous configuration
    sum_ese_surrogate: float
    sum_ese_mc: float
    mc_stderr: float


def user_correlations(cfg: ScenarioConfig) -> list[UserCorrelation]:
    """Correlation structure of every RIS-user link: one-ring angular
    parameters feed the Laplacian correlation integral; the large-scale
    coefficient comes from the 3-D RIS-user distance. Deterministic in the
    config (no randomness), so sweeps compute it once per config."""
    geom = ris_geometry(cfg)
    ris_pos = np.asarray(cfg.ris_position)
    out = []
    for u in cfg.users:
        ring = OneRingParams(d=u.azimuth_distance, r=u.ring_radius,
                             phi_az=u.azimuth, h=ris_pos[2])
        spread_az, mean_el, spread_el = one_ring_angles(ring)
        user_pos = np.array([
            u.azimuth_distance * np.cos(u.azimuth),
            u.azimuth_distance * np.sin(u.azimuth),
            0.0,
        ])
        beta = path_loss(float(np.linalg.norm(user_pos - ris_pos)),
                         cfg.alpha_r, cfg.c0, cfg.d0)
        r = spatial_correlation(geom, mean_az=u.azimuth, spread_az=spread_az,
                                mean_el=mean_el, spread_el=spread_el,
                                beta=beta)
        out.append(spectral_decompose(r, rank_tol=cfg.rank_tol))
    return out


def realize_scenario(cfg: ScenarioConfig, seed: int, power_dbm: float,
                     correlations: list[UserCorrelation] | None = None) -> Scenario:
    """Draw the quasi-static AP-RIS channel for one seed and bundle it with
    the (deterministic) user correlations and one transmit power point."""
    geom = ris_geometry(cfg)
    ap = ap_geometry(cfg)
    if correlations is None:
        correlations = user_correlations(cfg)

    angle_rng = named_stream(seed, "ap-ris-angles")
    variances = cfg.gain_variances()
    clusters = [
        PathCluster(
            gain_variance=variances[i],
            aoa_ap=angle_rng.uniform(0.0, np.pi),
            aod_azimuth=angle_rng.uniform(-np.pi / 2, np.pi / 2),
            aod_elevation=angle_rng.uniform(-np.pi / 2, np.pi / 2),
        )
        for i in range(cfg.n_paths)
    ]
    beta_h = path_loss(
        float(np.linalg.norm(np.subtract(cfg.ap_position, cfg.ris_position))),
        cfg.alpha_h, cfg.c0, cfg.d0)
    h = generate_ap_ris_channel(clusters, beta_h, ap, geom,
                                named_stream(seed, "path-gains"))
    return Scenario(h=h, users=tuple(correlations), noise_var=cfg.noise_var,
                    power=dbm_to_watts(power_dbm), power_dbm=float(power_dbm),
                    seed=int(seed))


def initial_theta(n: int, seed: int, mode: str = "random") -> PassiveBeam:
    if mode == "random":
        rng = named_stream(seed, "theta-init")
        return PassiveBeam.from_phases(rng.uniform(0.0, 2.0 * np.pi, n))
    if mode == "zeros":
        return PassiveBeam.from_phases(np.zeros(n))
    raise DomainError(f"unknown theta_init mode {mode!r}")


def _evaluate(sc: Scenario, w: ActiveBeam, theta: PassiveBeam, trials: int):
    per_user, total = ese_approx(w, theta, sc.h, list(sc.users), sc.noise_var)
    mc = ese_monte_carlo(w, theta, sc.h, list(sc.users), sc.noise_var,
                         trials, named_stream(sc.seed, "user-channels"))
    return per_user, total, mc


def run_svd_gd(scenario: Scenario, hyper: Hyper = Hyper()) -> JointResult:
    """SVD active beam followed by one passive gradient-ascent stage."""
    t0 = time.perf_counter()
    w = svd_beamformer(scenario.h, scenario.power, scenario.k)
    theta0 = initial_theta(scenario.n, scenario.seed, hyper.theta_init)
    start, _ = ese_approx(w, theta0, scenario.h, list(scenario.users),
                          scenario.noise_var)
    gd = gd_passive(w, theta0, scenario.h, list(scenario.users),
                    scenario.noise_var, max_iter=hyper.gd_max_iter,
                    tol=hyper.gd_tol, armijo_c=hyper.armijo_c,
                    shrink=hyper.shrink, mu0=hyper.mu0)
    per_user, total, mc = _evaluate(scenario, w, gd.theta, hyper.mc_trials)
    return JointResult(
        algorithm="svd-gd", w=w, theta=gd.theta,
        per_user_surrogate=per_user, sum_ese_surrogate=total,
        per_user_mc=mc.per_user, sum_ese_mc=mc.total, mc_stderr=mc.total_stderr,
        outer_iterations=1,
        outer_trace=[float(start.sum()), total],
        per_stage_traces=[{"gd": gd.objective_trace}],
        wall_time=time.perf_counter() - t0,
    )


def run_fp_gd(scenario: Scenario, hyper: Hyper = Hyper()) -> JointResult:
    """Alternating FP active / GD passive optimization from a feasible SVD
    warm start; stops when the fractional surrogate increase falls below
    hyper.outer_tol."""
    t0 = time.perf_counter()
    users = list(scenario.users)
    w = svd_beamformer(scenario.h, scenario.power, scenario.k)
    theta = initial_theta(scenario.n, scenario.seed, hyper.theta_init)

    _, total = ese_approx(w, theta, scenario.h, users, scenario.noise_var)
    outer_trace = [total]
    stages = []
    outer = 0
    for outer in range(1, hyper.outer_max + 1):
        gd = gd_passive(w, theta, scenario.h, users, scenario.noise_var,
                        max_iter=hyper.gd_max_iter, tol=hyper.gd_tol,
                        armijo_c=hyper.armijo_c, shrink=hyper.shrink,
                        mu0=hyper.mu0)
        theta = gd.theta
        fp = fp_active(theta, scenario.h, users, scenario.noise_var,
                       scenario.power, max_iter=hyper.fp_max_iter,
                       tol=hyper.fp_tol, w0=w)
        w = fp.w
        stages.append({"gd": gd.objective_trace, "fp": fp.objective_trace,
                       "fp_power": fp.power_trace})
        _, total = ese_approx(w, theta, scenario.h, users, scenario.noise_var)
        outer_trace.append(total)
        gain = outer_trace[-1] - outer_trace[-2]
        if gain < hyper.outer_tol * max(abs(outer_trace[-2]),
                                        np.finfo(float).tiny):
            break

    per_user, total, mc = _evaluate(scenario, w, theta, hyper.mc_trials)
    return JointResult(
        algorithm="fp-gd", w=w, theta=theta,
        per_user_surrogate=per_user, sum_ese_surrogate=total,
        per_user_mc=mc.per_user, sum_ese_mc=mc.total, mc_stderr=mc.total_stderr,
        outer_iterations=outer,
        outer_trace=outer_trace,
        per_stage_traces=stages,
        wall_time=time.perf_counter() - t0,
    )


def evaluate_quantized(result: JointResult, bits, scenario: Scenario,
                       hyper: Hyper = Hyper()) -> list[QuantizedEval]:
    """Re-evaluate a converged joint result under b-bit RIS phase
    quantization, W and power budget unchanged. A bits entry of None or
    math.inf keeps the continuous phases."""
    out = []
    for b in bits:
        if b is None or b == math.inf:
            theta_b, label = result.theta, math.inf
        else:
            theta_b, label = quantize_phases(result.theta, int(b)), float(b)
        _, total, mc = _evaluate(scenario, result.w, theta_b, hyper.mc_trials)
        out.append(QuantizedEval(bits=label, sum_ese_surrogate=total,
                                 sum_ese_mc=mc.total,
                                 mc_stderr=mc.total_stderr))
    return out
