import numpy as np
import pytest
from numpy.testing import assert_allclose

from risbeam.active_beamforming import (
    dual_function,
    effective_directions,
    fp_active,
    optimal_gamma,
    p2_objective,
    svd_beamformer,
    update_q,
    update_w,
)
from risbeam.channel_model import spectral_decompose
from risbeam.ese_metrics import (
    ActiveBeam,
    PassiveBeam,
    build_surrogate_context,
    ese_approx,
)
from risbeam.errors import DomainError

from helpers import complex_gaussian, random_instance, random_user_correlation


class TestSvdBeamformer:
    def test_single_user_principal_direction(self):
        rng = np.random.default_rng(0)
        h = complex_gaussian(rng, (4, 6))
        u, s, _ = np.linalg.svd(h)
        ab = svd_beamformer(h, p=2.0, k=1)
        w = ab.w[:, 0]
        assert_allclose(np.linalg.norm(w) ** 2, 2.0, rtol=1e-12)
        assert abs(np.vdot(u[:, 0], w)) / np.linalg.norm(w) > 1 - 1e-12

    def test_columns_orthogonal_with_even_power(self):
        rng = np.random.default_rng(1)
        h = complex_gaussian(rng, (5, 8))
        ab = svd_beamformer(h, p=3.0, k=3)
        gram = ab.w.conj().T @ ab.w
        assert_allclose(gram, np.eye(3), atol=1e-12)
        assert_allclose(ab.power, 3.0, rtol=1e-12)

    def test_rank_one_channel(self):
        rng = np.random.default_rng(2)
        u = complex_gaussian(rng, 4)
        v = complex_gaussian(rng, 7)
        h = 2.5 * np.outer(u, v.conj())
        ab = svd_beamformer(h, p=1.0, k=1)
        cosine = abs(np.vdot(u / np.linalg.norm(u), ab.w[:, 0]))
        assert cosine > (1 - 1e-10) * np.linalg.norm(ab.w[:, 0])

    def test_too_many_users(self):
        rng = np.random.default_rng(3)
        with pytest.raises(DomainError):
            svd_beamformer(complex_gaussian(rng, (3, 5)), p=1.0, k=4)


class TestOptimalGamma:
    def test_zero_beam_gives_zero(self):
        rng = np.random.default_rng(4)
        inst = random_instance(3, 4, 2, rng)
        ab = ActiveBeam(w=np.zeros((3, 2), dtype=complex), power_budget=1.0)
        ctx = build_surrogate_context(ab, inst.pb, inst.h, inst.users, 1e-2)
        assert_allclose(optimal_gamma(ab, ctx), 0.0)

    def test_single_user_identity(self):
        # gamma* = s/noise, and substituting back collapses the dual
        # function to log(1 + gamma*) at machine precision.
        rng = np.random.default_rng(5)
        inst = random_instance(3, 4, 1, rng, noise_var=0.07)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.07)
        gamma = optimal_gamma(inst.ab, ctx)
        sig = np.real(inst.ab.w[:, 0].conj() @ ctx.a_mats[0] @ inst.ab.w[:, 0])
        assert_allclose(gamma[0], sig / 0.07, rtol=1e-12)
        f = dual_function(inst.ab, gamma, ctx)
        assert abs(f[0] - np.log1p(gamma[0])) < 1e-12 * max(1.0, abs(f[0]))

    def test_local_maximality_probe(self):
        rng = np.random.default_rng(6)
        inst = random_instance(4, 6, 3, rng, noise_var=0.02)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.02)
        gamma = optimal_gamma(inst.ab, ctx)
        best = dual_function(inst.ab, gamma, ctx)
        for delta in (0.01, -0.01):
            probe = dual_function(inst.ab, gamma + delta, ctx)
            assert np.all(best >= probe)

    @pytest.mark.parametrize("c", [0.1, 10.0])
    def test_scale_consistency(self, c):
        # Scaling noise and all correlations by c leaves gamma unchanged.
        rng = np.random.default_rng(7)
        inst = random_instance(3, 5, 2, rng, noise_var=0.05)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.05)
        scaled_users = [spectral_decompose(c * uc.r, rank_tol=1e-12)
                        for uc in inst.users]
        ctx_scaled = build_surrogate_context(inst.ab, inst.pb, inst.h,
                                             scaled_users, c * 0.05)
        assert_allclose(optimal_gamma(inst.ab, ctx_scaled),
                        optimal_gamma(inst.ab, ctx), rtol=1e-10)

    def test_matches_surrogate_sinr(self):
        rng = np.random.default_rng(8)
        inst = random_instance(4, 5, 3, rng, noise_var=0.01)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.01)
        gamma = optimal_gamma(inst.ab, ctx)
        per_user, _ = ese_approx(inst.ab, inst.pb, inst.h, inst.users, 0.01)
        assert_allclose(np.log2(1 + gamma), per_user, rtol=1e-10)


class TestUpdateQ:
    def test_zero_beam_gives_zero(self):
        rng = np.random.default_rng(9)
        inst = random_instance(3, 4, 2, rng)
        ab = ActiveBeam(w=np.zeros((3, 2), dtype=complex), power_budget=1.0)
        ctx = build_surrogate_context(ab, inst.pb, inst.h, inst.users, 1e-2)
        q = update_q(ab, np.zeros(2), inst.users, ctx, inst.pb, inst.h)
        assert np.all(q == 0)

    def test_single_ratio_scalar_oracle(self):
        # K=1, rank-1 correlation: q is one ratio, recomputed with plain
        # scalar arithmetic.
        rng = np.random.default_rng(10)
        inst = random_instance(3, 4, 1, rng, noise_var=0.04, rank=1)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.04)
        gamma = optimal_gamma(inst.ab, ctx)
        q = update_q(inst.ab, gamma, inst.users, ctx, inst.pb, inst.h)
        assert q.shape == (1, 1)

        uc = inst.users[0]
        d_eff = (inst.h * inst.pb.theta.conj()[None, :]) @ uc.d[:, 0]
        w = inst.ab.w[:, 0]
        denom = uc.lam[0] * abs(np.vdot(w, d_eff)) ** 2 + 0.04
        expected = np.sqrt(uc.lam[0] * (1 + gamma[0])) * np.vdot(w, d_eff) / denom
        assert_allclose(q[0, 0], expected, rtol=1e-10)

    def test_directions_reconstruct_a(self):
        rng = np.random.default_rng(11)
        inst = random_instance(4, 6, 3, rng, rank=4)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 1e-2)
        lam, dirs = effective_directions(inst.users, inst.pb, inst.h)
        for k in range(3):
            recon = np.einsum("y,my,ny->mn", lam[k], dirs[k], dirs[k].conj())
            err = np.linalg.norm(recon - ctx.a_mats[k]) / np.linalg.norm(ctx.a_mats[k])
            assert err < 1e-9

    def test_rank_padding(self):
        rng = np.random.default_rng(12)
        users = [random_user_correlation(5, rng, rank=2),
                 random_user_correlation(5, rng, rank=4)]
        pb = PassiveBeam.from_phases(rng.uniform(0, 2 * np.pi, 5))
        h = complex_gaussian(rng, (3, 5))
        lam, dirs = effective_directions(users, pb, h)
        assert lam.shape == (2, 4)
        assert np.all(lam[0, 2:] == 0)
        assert np.all(dirs[0, :, 2:] == 0)


class TestUpdateW:
    def test_zero_q_gives_zero_beam(self):
        rng = np.random.default_rng(13)
        inst = random_instance(3, 4, 2, rng)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 1e-2)
        ab = update_w(np.zeros((2, 4), dtype=complex), np.zeros(2), inst.users,
                      ctx, inst.pb, inst.h, p=1.0)
        assert np.all(ab.w == 0)

    def test_feasible_solution_keeps_zero_dual(self):
        # With a huge budget the unconstrained solve is feasible and must be
        # returned unchanged (complementary slackness).
        rng = np.random.default_rng(14)
        inst = random_instance(4, 5, 2, rng, noise_var=0.05)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 0.05)
        gamma = optimal_gamma(inst.ab, ctx)
        q = update_q(inst.ab, gamma, inst.users, ctx, inst.pb, inst.h)
        lam, dirs = effective_directions(inst.users, inst.pb, inst.h)

        s = np.einsum("ky,kab->ab", np.abs(q) ** 2, ctx.a_mats)
        rhs = np.einsum("kmy,ky->mk", dirs, q.conj() * np.sqrt(lam))
        rhs *= np.sqrt(1 + gamma)[None, :]
        expected = np.linalg.pinv(s, rcond=1e-10) @ rhs

        big = 10.0 * np.linalg.norm(expected) ** 2
        ab = update_w(q, gamma, inst.users, ctx, inst.pb, inst.h, p=big)
        assert_allclose(ab.w, expected, atol=1e-8 * np.linalg.norm(expected))

    def test_active_constraint_power_residual(self):
        rng = np.random.default_rng(15)
        inst = random_instance(8, 12, 3, rng, noise_var=1e-3)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 1e-3)
        gamma = optimal_gamma(inst.ab, ctx)
        q = update_q(inst.ab, gamma, inst.users, ctx, inst.pb, inst.h)
        p = 1e-4  # small enough that the constraint binds
        ab = update_w(q, gamma, inst.users, ctx, inst.pb, inst.h, p=p)
        assert p * (1 - 1e-6) <= ab.power <= p * (1 + 1e-12)


class TestFpActive:
    def test_stationary_rank_one_instance_terminates_fast(self):
        # Single user, rank-1 correlation: the matched filter is already a
        # fixed point of the iteration.
        rng = np.random.default_rng(16)
        inst = random_instance(4, 6, 1, rng, noise_var=0.02, rank=1)
        lam, dirs = effective_directions(inst.users, inst.pb, inst.h)
        d = dirs[0, :, 0]
        w0 = ActiveBeam(
            w=(np.sqrt(inst.power) * d / np.linalg.norm(d))[:, None],
            power_budget=inst.power)
        state = fp_active(inst.pb, inst.h, inst.users, 0.02, inst.power,
                          tol=1e-8, w0=w0)
        assert state.converged
        assert state.iterations <= 2
        assert state.objective_trace[-1] - state.objective_trace[0] < 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_monotone_objective_trace(self, seed):
        rng = np.random.default_rng(100 + seed)
        inst = random_instance(4, 8, 3, rng, noise_var=5e-3)
        state = fp_active(inst.pb, inst.h, inst.users, 5e-3, inst.power)
        trace = np.array(state.objective_trace)
        assert np.all(np.diff(trace) >= -1e-9)

    def test_beats_svd_warm_start(self):
        rng = np.random.default_rng(17)
        inst = random_instance(8, 16, 2, rng, noise_var=1e-3, rank=2)
        ctx = build_surrogate_context(inst.ab, inst.pb, inst.h, inst.users, 1e-3)
        svd_ab = svd_beamformer(inst.h, inst.power, 2)
        state = fp_active(inst.pb, inst.h, inst.users, 1e-3, inst.power)
        assert state.objective_trace[-1] >= p2_objective(svd_ab, ctx) - 1e-9

    @pytest.mark.parametrize("seed", range(3))
    def test_power_feasible_after_every_update(self, seed):
        rng = np.random.default_rng(200 + seed)
        inst = random_instance(4, 8, 2, rng, noise_var=1e-3)
        state = fp_active(inst.pb, inst.h, inst.users, 1e-3, inst.power)
        assert np.all(np.array(state.power_trace) <= inst.power * (1 + 1e-9))
