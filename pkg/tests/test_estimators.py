import math
from dataclasses import replace

import numpy as np
import pytest

from linresp.estimators import (ConfigurationError, estimate_gk, estimate_mp,
                                estimate_mp_multi, estimate_nemd,
                                gk_components, mp1_increment,
                                mp2_increment_bacab, mp2_increment_cbabc,
                                phi_gk, run_mp_realization, weight_increment)
from linresp.integrators import StepRecord, step
from linresp.model import (ForceField, Observable, PhaseState,
                           example1_model, example2_model, example3_model,
                           position_force)
from linresp.statistics import StreamSpec, derive_stream


def zero_force_model():
    m = example1_model()
    zero = position_force(
        value=lambda q, p: np.zeros(np.shape(q)),
        jac_q=lambda q, p: np.zeros(np.shape(q) + (2,)))
    return replace(m, force=zero)


def make_record(q, p, gaussians):
    s = PhaseState(np.asarray(q, float), np.asarray(p, float))
    return StepRecord(gaussians, s, s)


class TestMp1Increment:
    def test_zero_force(self):
        rec = make_record([1.0, 2.0], [0.5, 0.5], np.array([0.3, -0.7]))
        assert mp1_increment(zero_force_model(), rec, 0.1) == 0.0

    def test_harmonic_value(self):
        # sqrt(h beta/(2 gamma)) F.G = sqrt(0.005) * 0.5
        rec = make_record([1.0, 0.0], [0.0, 0.0], np.array([0.5, -0.5]))
        got = mp1_increment(example1_model(), rec, 0.01)
        assert got == pytest.approx(math.sqrt(0.005) * 0.5, abs=1e-10)
        assert got == pytest.approx(0.03535534, abs=1e-8)

    def test_constant_force_selects_first_component(self):
        m = example3_model()
        rec = make_record([1.0, 2.0], [3.0, 4.0], np.array([0.7, -0.2]))
        got = mp1_increment(m, rec, 0.04)
        assert got == pytest.approx(math.sqrt(0.02) * 0.7, abs=1e-12)

    def test_pair_scheme_arity(self):
        m = example3_model()
        G1 = np.array([1.0, 0.0])
        G2 = np.array([0.5, 0.0])
        rec = make_record([0.0, 0.0], [0.0, 0.0], (G1, G2))
        got = mp1_increment(m, rec, 0.04)
        assert got == pytest.approx(0.5 * math.sqrt(0.04) * 1.5, abs=1e-12)


class TestMp2IncrementBacab:
    def test_zero_force(self):
        rec = make_record([1.0, 2.0], [0.5, 0.5], np.array([0.3, -0.7]))
        assert mp2_increment_bacab(zero_force_model(), rec, 0.1) == 0.0

    def test_harmonic_value(self):
        # sqrt(1/2) (0.2*0.5 + 0.5*0.008*(2*0.5 + 1*(-0.5)))
        rec = make_record([1.0, 0.0], [2.0, 1.0], np.array([0.5, -0.5]))
        got = mp2_increment_bacab(example1_model(), rec, 0.04)
        assert got == pytest.approx(math.sqrt(0.5) * 0.102, abs=1e-10)
        assert got == pytest.approx(0.0721249, abs=1e-7)

    def test_momentum_force_trace_cancellation(self):
        # F = p: the O(h) term is (h/2)(|G|^2 - 2), zero at G=(1,1)
        m = example2_model()
        h = 0.04
        rec = make_record([0.0, 0.0], [0.0, 0.0], np.array([1.0, 1.0]))
        got = mp2_increment_bacab(m, rec, h)
        # with q=p=0 every term except the trace one vanishes
        assert got == pytest.approx(0.0, abs=1e-14)

    def test_momentum_force_full_value(self):
        # hand evaluation of the momentum-dependent increment for F = p
        m = example2_model()
        h = 0.04
        q = np.array([1.0, -1.0])
        p = np.array([2.0, 1.0])
        G = np.array([0.5, -0.5])
        rec = make_record(q, p, G)
        root = math.sqrt(0.5)
        lead = math.sqrt(h) * root * (p @ G)
        trace = (h / 2) * ((G @ G) - 2.0)
        # grad V = q, gamma = 1, M = Id; jac_q = 0 for F = p
        corr = -(h ** 1.5 / 2) * root * ((q + p) @ G)
        expected = lead + trace + corr
        assert mp2_increment_bacab(m, rec, h) == pytest.approx(expected,
                                                               abs=1e-12)

    def test_momentum_force_without_phi_rejected(self):
        m = example2_model()
        stripped = replace(m, force=replace(m.force, phi=None))
        rec = make_record([0.0, 0.0], [1.0, 1.0], np.array([1.0, 0.0]))
        with pytest.raises(ConfigurationError):
            mp2_increment_bacab(stripped, rec, 0.1)

    def test_pair_record_rejected(self):
        rec = make_record([0.0, 0.0], [0.0, 0.0],
                          (np.zeros(2), np.zeros(2)))
        with pytest.raises(ConfigurationError):
            mp2_increment_bacab(example1_model(), rec, 0.1)


class TestMp2IncrementCbabc:
    def test_zero_force(self):
        rec = make_record([1.0, 2.0], [0.5, 0.5],
                          (np.array([0.3, -0.7]), np.array([0.1, 0.9])))
        assert mp2_increment_cbabc(zero_force_model(), rec, 0.1) == 0.0

    def test_constant_force_value(self):
        # 0.5*0.2*1 + (0.008/4)*(-0.5*1) = 0.099
        m = example3_model()
        rec = make_record([1.0, 1.0], [0.0, 0.0],
                          (np.array([1.0, 0.0]), np.array([0.0, 0.0])))
        assert mp2_increment_cbabc(m, rec, 0.04) == pytest.approx(0.099,
                                                                  abs=1e-12)

    def test_equal_gaussians_reduce_to_sqrt2_bacab(self):
        m = example1_model()
        rng = np.random.default_rng(3)
        for _ in range(50):
            q = rng.normal(size=2)
            p = rng.normal(size=2)
            G = rng.normal(size=2)
            h = float(rng.uniform(0.01, 0.5))
            pair = make_record(q, p, (G.copy(), G.copy()))
            single = make_record(q, p, G)
            a = mp2_increment_cbabc(m, pair, h)
            b = math.sqrt(2.0) * mp2_increment_bacab(m, single, h)
            assert a == pytest.approx(b, rel=1e-12, abs=1e-15)

    def test_momentum_force_rejected(self):
        m = example2_model()
        rec = make_record([0.0, 0.0], [1.0, 0.0],
                          (np.zeros(2), np.zeros(2)))
        with pytest.raises(ConfigurationError):
            mp2_increment_cbabc(m, rec, 0.1)


class TestWeightDispatch:
    def test_mp2_requires_second_order_scheme(self):
        rec = make_record([0.0, 0.0], [0.0, 0.0], np.zeros(2))
        with pytest.raises(ConfigurationError):
            weight_increment(example1_model(), "bac", "mp2", rec, 0.1)

    def test_unknown_weight(self):
        rec = make_record([0.0, 0.0], [0.0, 0.0], np.zeros(2))
        with pytest.raises(ConfigurationError):
            weight_increment(example1_model(), "bacab", "mp3", rec, 0.1)

    def test_scale_is_linear(self):
        rec = make_record([1.0, 0.5], [0.2, 0.1], np.array([0.4, -0.6]))
        m = example1_model()
        one = weight_increment(m, "bacab", "mp2", rec, 0.1, scale=1.0)
        two = weight_increment(m, "bacab", "mp2", rec, 0.1, scale=2.0)
        assert two == pytest.approx(2.0 * one, rel=1e-14)


class TestRunMpRealization:
    def test_single_step_bookkeeping(self):
        m = example1_model()
        rng = derive_stream(StreamSpec(9, 0))
        stats = run_mp_realization(m, "bacab", "mp1", 0.1, N=1, N_burn=0,
                                   rng=rng)
        # f-bar is f at the initial state (origin), z is one increment of a
        # zero-position force value -> both zero here
        assert stats.f_bar["qsq"] == 0.0
        assert stats.z_final == 0.0

    def test_zero_force_martingale_is_zero(self):
        m = zero_force_model()
        rng = derive_stream(StreamSpec(10, 0))
        stats = run_mp_realization(m, "bacab", "mp2", 0.1, N=25, N_burn=5,
                                   rng=rng)
        assert stats.z_final == 0.0

    def test_matches_hand_rolled_loop(self):
        m = example1_model()
        h = 0.1
        N, N_burn = 10, 4
        stats = run_mp_realization(m, "bacab", "mp2", h, N, N_burn,
                                   derive_stream(StreamSpec(77, 3)),
                                   checkpoint_steps=(5, 10))

        rng = derive_stream(StreamSpec(77, 3))
        state = PhaseState(np.zeros(2), np.zeros(2))
        for _ in range(N_burn):
            state = step("bacab", state, h, 0.0, m, rng).state_after
        f_sum = 0.0
        z = 0.0
        for n in range(N):
            f_sum += float(np.sum(state.q**2))
            rec = step("bacab", state, h, 0.0, m, rng)
            z += float(mp2_increment_bacab(m, rec, h))
            state = rec.state_after
        assert stats.f_bar["qsq"] == pytest.approx(f_sum / N, rel=1e-14)
        assert stats.z_final == pytest.approx(z, rel=1e-14)
        assert [c[0] for c in stats.checkpoints] == [5, 10]
        assert stats.checkpoints[-1][2] == pytest.approx(z, rel=1e-14)

    def test_config_error_propagates(self):
        with pytest.raises(ConfigurationError):
            run_mp_realization(example1_model(), "bac", "mp2", 0.1, 5, 0,
                               derive_stream(StreamSpec(0, 0)))


class TestEstimateMp:
    def test_zero_force_estimate_exactly_zero(self):
        out = estimate_mp(zero_force_model(), "bacab", "mp1", 0.1,
                          N=20, N_burn=5, M=64, seed=4)
        assert out.estimate == 0.0
        assert out.stderr == 0.0

    def test_rejects_single_realization(self):
        with pytest.raises(ValueError):
            estimate_mp(example1_model(), "bacab", "mp1", 0.1, 10, 0, M=1,
                        seed=0)

    def test_martingale_mean_near_zero(self):
        # quick version; the full sweep over schemes is in acceptance
        m = example1_model()
        from linresp.estimators import _mp_block
        f_bar, z, _ = _mp_block(m, "bacab", ("mp2",), 0.2, 50, 10, 20_000,
                                StreamSpec(123, 0), 1.0, ())
        se = z["mp2"].std(ddof=1) / np.sqrt(z["mp2"].size)
        assert abs(z["mp2"].mean()) < 4 * se

    def test_multi_observable_shares_trajectories(self):
        m = example2_model()
        outs = estimate_mp_multi(m, "bacab", "mp1", 0.2, 30, 10, M=2000,
                                 seed=8)
        assert set(outs) == {"f1", "f2"}
        single = estimate_mp(m, "bacab", "mp1", 0.2, 30, 10, M=2000, seed=8,
                             observable="f2")
        assert single.estimate == outs["f2"].estimate


class TestPhiGk:
    def test_example3_is_first_momentum(self):
        m = example3_model()
        phi = phi_gk(m)
        q = np.array([1.0, 2.0])
        p = np.array([0.7, -0.3])
        assert phi(q, p) == pytest.approx(0.7, abs=1e-14)

    def test_zero_force(self):
        phi = phi_gk(zero_force_model())
        assert phi(np.ones(2), np.ones(2)) == 0.0

    def test_momentum_force(self):
        # F = p, beta = 1, M = Id: phi = |p|^2 - 2, mean 0 under the
        # standard Gaussian momentum marginal
        m = example2_model()
        phi = phi_gk(m)
        p = np.array([1.5, -0.5])
        assert phi(np.zeros(2), p) == pytest.approx(2.5 - 2.0, abs=1e-14)
        rng = np.random.default_rng(0)
        samples = phi(np.zeros((200_000, 2)), rng.standard_normal((200_000, 2)))
        assert abs(samples.mean()) < 4 * samples.std() / np.sqrt(samples.size)


class TestEstimateGk:
    def test_constant_observable_with_matching_center(self):
        m = example3_model()
        const = replace(m, observables=(
            Observable("one", lambda q, p: np.ones(np.shape(q)[:-1])),))
        out = estimate_gk(const, "bacab", "riemann", 0.1, 20, 10, M=100,
                          seed=5, center=1.0)
        assert out.estimate == 0.0
        assert out.stderr == 0.0

    def test_trapezoid_weight_sum(self):
        m = example3_model()
        h, N = 0.1, 25
        comp = gk_components(m, "bacab", "trapezoid", h, N, 10, M=16, seed=6)
        assert np.allclose(comp["center_sum"],
                           h * (N - 0.5) * comp["phi0"], rtol=1e-14)

    def test_gk2_minus_gk1_identity(self):
        m = example3_model()
        h, N = 0.1, 30
        kw = dict(N_burn=12, M=500, seed=7)
        c1 = gk_components(m, "bacab", "riemann", h, N, **kw)
        c2 = gk_components(m, "bacab", "trapezoid", h, N, **kw)
        c = 0.05  # any fixed center
        v1 = c1["weighted_sum"] - c * c1["center_sum"]
        v2 = c2["weighted_sum"] - c * c2["center_sum"]
        expected = -(h / 2) * (c1["f0"] - c) * c1["phi0"]
        assert np.allclose(v2 - v1, expected, rtol=1e-12, atol=1e-14)

    def test_bad_rule(self):
        with pytest.raises(ConfigurationError):
            estimate_gk(example3_model(), "bacab", "simpson", 0.1, 10, 0,
                        M=4, seed=0)

    def test_auto_center_matches_manual(self):
        # auto centering equals supplying the grand mean explicitly
        m = example3_model()
        comp = gk_components(m, "bacab", "riemann", 0.1, 20, 10, M=200,
                             seed=9)
        grand = comp["f_total"] / comp["n_recorded"]
        auto = estimate_gk(m, "bacab", "riemann", 0.1, 20, 10, M=200,
                           seed=9, center="auto")
        manual = estimate_gk(m, "bacab", "riemann", 0.1, 20, 10, M=200,
                             seed=9, center=grand)
        assert auto.estimate == pytest.approx(manual.estimate, rel=1e-14)


class TestEstimateNemd:
    def test_zero_force_coupled_is_exactly_zero(self):
        out = estimate_nemd(zero_force_model(), "bacab", 0.05, 0.1, 20, 5,
                            M=32, seed=3, coupled=True)
        assert out.estimate == 0.0
        assert out.stderr == 0.0

    def test_eta_zero_rejected(self):
        with pytest.raises(ValueError):
            estimate_nemd(example1_model(), "bacab", 0.0, 0.1, 10, 0, M=4,
                          seed=0)

    def test_forward_vs_central_consistent(self):
        # Example 1 response is 2/(1 - eta) under a forward difference and
        # 2 + O(eta^2) under a central one; check both at modest accuracy
        m = example1_model()
        kw = dict(h=0.05, N=1200, N_burn=300, M=4000, seed=11)
        fwd = estimate_nemd(m, "bacab", 0.2, coupled=True, mode="forward",
                            **kw)
        cen = estimate_nemd(m, "bacab", 0.2, coupled=True, mode="central",
                            **kw)
        assert fwd.estimate == pytest.approx(2.0 / 0.8, abs=5 * fwd.stderr)
        assert cen.estimate == pytest.approx(2.0, abs=5 * cen.stderr + 0.1)
