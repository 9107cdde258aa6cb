import numpy as np
import pytest
from scipy import special, stats

from netbeam import (
    BlerCurve,
    ChannelRealization,
    EstimationError,
    PowerBudget,
    RngSeed,
    Scheme,
    Topology,
    TopologyKind,
    diversity_slope,
    estimate_bler,
    mrc_decode,
    run_trial,
    solve_dl_first,
    solve_no_dl,
    wilson_interval,
)
from netbeam.beamsolver import best_relay_arrays, receive_snr_no_dl_arrays, solve_no_dl_arrays
from netbeam.montecarlo import allocate_arrays, transmit_arrays

from conftest import rayleigh_mags


def q_function(x):
    return 0.5 * special.erfc(x / np.sqrt(2.0))


def fixed_channel_error_rate(scheme, f, g, f0, budget, trials, seed):
    """Fresh noise over one frozen realization."""
    n = trials
    fm = np.tile(np.abs(f), (n, 1))
    gm = np.tile(np.abs(g), (n, 1))
    f0v = np.full(n, f0) if f0 is not None else None
    f0m = np.abs(f0v) if f0v is not None else None
    alpha0, beta0, alpha, p_relay = allocate_arrays(scheme, fm, gm, f0m, budget)
    gen = RngSeed(seed=seed).generator()
    sent, decided, snr = transmit_arrays(scheme, np.tile(f, (n, 1)),
                                         np.tile(g, (n, 1)), f0v, budget.p0,
                                         p_relay, alpha0, beta0, alpha, gen)
    return float(np.mean(sent != decided)), float(snr[0])


UNIT2 = Topology(kind=TopologyKind.UNIT_VARIANCE, relay_count=2)
TRIANGLE1 = Topology(kind=TopologyKind.TRIANGLE, relay_count=1)


class TestRunTrial:
    def test_noiseless_always_correct(self):
        budget = PowerBudget(p0=10.0, p=[10.0, 10.0])
        for scheme in Scheme:
            topo = UNIT2
            for t in range(20):
                out = run_trial(scheme, topo, budget, RngSeed(seed=100 + t),
                                noise_scale=0.0)
                assert out.decided == out.transmitted

    def test_outcome_symbols_are_bpsk(self):
        out = run_trial(Scheme.BEAMFORM_NO_DL, UNIT2,
                        PowerBudget(p0=10.0, p=[10.0, 10.0]), RngSeed(seed=5))
        assert out.transmitted in (-1, 1)
        assert out.decided in (-1, 1)
        assert out.snr_achieved >= 0

    def test_relay_count_mismatch_rejected(self):
        with pytest.raises(ValueError):
            run_trial(Scheme.BEAMFORM_NO_DL, UNIT2,
                      PowerBudget(p0=10.0, p=[10.0]), RngSeed(seed=1))

    def test_dl_scheme_without_f0_rejected(self):
        fm = np.ones((4, 1))
        budget = PowerBudget(p0=10.0, p=[10.0])
        with pytest.raises(ValueError):
            allocate_arrays(Scheme.BEAMFORM_DL_SECOND, fm, fm, None, budget)

    def test_error_rate_matches_q_function_fixed_channel(self):
        # single relay, |f| = |g| = 1, P = 10: branch SNR = 100/21
        budget = PowerBudget(p0=10.0, p=[10.0])
        f = np.array([1 + 0j])
        g = np.array([1 + 0j])
        ber, snr = fixed_channel_error_rate(Scheme.BEAMFORM_NO_DL, f, g, None,
                                            budget, 300_000, seed=11)
        assert snr == pytest.approx(100 / 21)
        expect = q_function(np.sqrt(2 * snr))
        sigma = np.sqrt(expect * (1 - expect) / 300_000)
        assert abs(ber - expect) < 4 * sigma

    def test_direct_only_matches_rayleigh_closed_form(self):
        # flat Rayleigh BPSK: BER = (1 - sqrt(gbar / (1 + gbar))) / 2
        topo = Topology(kind=TopologyKind.UNIT_VARIANCE, relay_count=1)
        budget = PowerBudget(p0=10.0, p=[10.0])
        curve = estimate_bler(Scheme.DIRECT_ONLY, topo, [budget], 200_000,
                              RngSeed(seed=42))
        gbar = 10.0
        expect = 0.5 * (1 - np.sqrt(gbar / (1 + gbar)))
        sigma = np.sqrt(expect * (1 - expect) / 200_000)
        assert abs(curve.bler[0] - expect) < 4 * sigma


class TestMrcDecode:
    def test_noiseless_recovery(self):
        for s in (1, -1):
            a1, a2, nv = 0.8 - 0.2j, 1.7, 2.5
            assert mrc_decode(a1 * s, a2 * s, (a1, a2), nv) == s

    def test_single_branch_threshold(self):
        assert mrc_decode(None, 3.0, (0j, 2.0), 1.0) == 1
        assert mrc_decode(None, -3.0, (0j, 2.0), 1.0) == -1

    def test_matches_two_point_exhaustive_search(self):
        gen = np.random.default_rng(1)
        for _ in range(100_000 // 100):  # 1000 vectorized batches of 100
            a1 = gen.standard_normal(100) + 1j * gen.standard_normal(100)
            a2 = gen.rayleigh(1.0, 100)
            x1 = gen.standard_normal(100) + 1j * gen.standard_normal(100)
            x2 = gen.standard_normal(100) + 1j * gen.standard_normal(100)
            nv = gen.uniform(0.5, 3.0, 100)
            for k in range(100):
                fast = mrc_decode(x1[k], x2[k], (a1[k], a2[k]), nv[k])
                metric = {s: abs(x1[k] - a1[k] * s) ** 2
                          + abs(x2[k] - a2[k] * s) ** 2 / nv[k]
                          for s in (1, -1)}
                brute = min(metric, key=metric.get)
                if not np.isclose(metric[1], metric[-1]):
                    assert fast == brute

    def test_rejects_bad_noise_variance(self):
        with pytest.raises(ValueError):
            mrc_decode(None, 1.0, (0j, 1.0), 0.0)


class TestSchemeDominance:
    def test_beamform_dominates_baselines_per_draw(self):
        gen = np.random.default_rng(2)
        f, g = rayleigh_mags(gen, 100_000, 2)
        p = np.full(2, 10.0)
        _, snr_opt, _ = solve_no_dl_arrays(f, g, 10.0, p)
        _, _, snr_best = best_relay_arrays(f, g, 10.0, p)
        snr_af = receive_snr_no_dl_arrays(f, g, 10.0, p, np.ones_like(f))
        assert np.all(snr_opt >= snr_best * (1 - 1e-12))
        assert np.all(snr_opt >= snr_af * (1 - 1e-12))

    def test_dl_first_total_is_branch_sum(self):
        gen = np.random.default_rng(3)
        budget = PowerBudget(p0=10.0, p=[10.0])
        for _ in range(50):
            fm, gm = rayleigh_mags(gen, 1, 1)
            f0 = complex(gen.rayleigh(np.sqrt(0.5)))
            ch = ChannelRealization(f=fm[0].astype(complex),
                                    g=gm[0].astype(complex), f0=f0)
            alloc = solve_dl_first(ch, budget)
            _, snr = fixed_channel_error_rate(
                Scheme.BEAMFORM_DL_FIRST, ch.f, ch.g, f0, budget, 1, seed=7)
            assert snr == pytest.approx(
                budget.p0 * abs(f0) ** 2 + alloc.snr, rel=1e-9)


class TestBerSnrConsistency:
    def test_chi_square_over_realizations(self):
        # conditional BER equals Q(sqrt(2 snr)) for the coherent decision
        gen = np.random.default_rng(4)
        budget = PowerBudget(p0=2.0, p=[2.0, 2.0])
        reps, noise_trials = 120, 3000
        z_scores = []
        for k in range(reps):
            fm, gm = rayleigh_mags(gen, 1, 2)
            f = fm[0].astype(complex)
            g = gm[0].astype(complex)
            ber, snr = fixed_channel_error_rate(Scheme.BEAMFORM_NO_DL, f, g,
                                                None, budget, noise_trials,
                                                seed=900 + k)
            p = q_function(np.sqrt(2 * snr))
            if noise_trials * p < 5 or noise_trials * (1 - p) < 5:
                continue
            obs = ber * noise_trials
            z_scores.append((obs - noise_trials * p)
                            / np.sqrt(noise_trials * p * (1 - p)))
        t = float(np.sum(np.square(z_scores)))
        dof = len(z_scores)
        assert stats.chi2.ppf(0.0005, dof) < t < stats.chi2.ppf(0.9995, dof)


class TestEstimateBler:
    def test_deterministic_across_worker_counts(self):
        budgets = [PowerBudget(p0=10 ** (p / 10), p=np.full(2, 10 ** (p / 10)))
                   for p in (6.0, 10.0, 14.0)]
        kwargs = dict(trials_per_point=20_000, rng=RngSeed(seed=77),
                      power_db=[6.0, 10.0, 14.0])
        a = estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, budgets, workers=1, **kwargs)
        b = estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, budgets, workers=8, **kwargs)
        assert a.errors == b.errors
        assert a.bler == b.bler

    def test_scheme_pair_ordering(self):
        budgets = [PowerBudget(p0=10 ** (p / 10), p=np.full(2, 10 ** (p / 10)))
                   for p in (8.0, 12.0, 16.0)]
        shared = dict(trials_per_point=30_000, rng=RngSeed(seed=5))
        beam = estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, budgets, **shared)
        best = estimate_bler(Scheme.BEST_RELAY, UNIT2, budgets, **shared)
        assert all(b <= r for b, r in zip(beam.bler, best.bler))

    def test_bler_within_interval_and_flags(self):
        budget = PowerBudget(p0=10.0, p=np.full(2, 10.0))
        curve = estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, [budget], 5_000,
                              RngSeed(seed=8))
        (lo, hi), bler = curve.ci95[0], curve.bler[0]
        assert lo <= bler <= hi
        assert curve.low_confidence[0] == (curve.errors[0] == 0)

    def test_zero_errors_flagged(self):
        budget = PowerBudget(p0=1e6, p=np.full(2, 1e6))
        curve = estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, [budget], 2_000,
                              RngSeed(seed=9))
        assert curve.errors[0] == 0
        assert curve.low_confidence[0]
        assert curve.ci95[0][1] > 0

    def test_validation(self):
        budget = PowerBudget(p0=10.0, p=np.full(2, 10.0))
        with pytest.raises(ValueError):
            estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, [], 10, RngSeed(seed=1))
        with pytest.raises(ValueError):
            estimate_bler(Scheme.BEAMFORM_NO_DL, UNIT2, [budget], 0, RngSeed(seed=1))


class TestWilson:
    def test_basic_bounds(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0
        assert 0 < hi < 0.05
        lo, hi = wilson_interval(100, 100)
        assert hi == 1.0

    def test_nominal_coverage_on_bernoulli(self):
        gen = np.random.default_rng(10)
        p_true, n, reps = 0.05, 400, 3000
        covered = 0
        draws = gen.binomial(n, p_true, size=reps)
        for k in draws:
            lo, hi = wilson_interval(int(k), n)
            covered += lo <= p_true <= hi
        assert 0.93 <= covered / reps <= 0.97

    def test_validation(self):
        with pytest.raises(ValueError):
            wilson_interval(5, 0)
        with pytest.raises(ValueError):
            wilson_interval(7, 5)


def synthetic_curve(power_db, bler):
    n = len(power_db)
    return BlerCurve(scheme=Scheme.BEAMFORM_NO_DL, topology=UNIT2,
                     power_db=tuple(power_db), bler=tuple(bler),
                     trials=tuple([10 ** 6] * n),
                     errors=tuple(max(1, int(b * 10 ** 6)) for b in bler),
                     ci95=tuple((b * 0.9, b * 1.1) for b in bler),
                     seed=RngSeed(seed=1), low_confidence=tuple([False] * n))


class TestDiversitySlope:
    def test_exact_inverse_square_curve(self):
        p_db = [20.0, 25.0, 30.0]
        curve = synthetic_curve(p_db, [10 ** (-2 * p / 10) for p in p_db])
        assert diversity_slope(curve, (20, 30)) == pytest.approx(2.0)

    def test_exact_inverse_linear_curve(self):
        p_db = [10.0, 15.0, 20.0, 25.0]
        curve = synthetic_curve(p_db, [0.3 * 10 ** (-p / 10) for p in p_db])
        assert diversity_slope(curve, (10, 25)) == pytest.approx(1.0)

    def test_window_filtering(self):
        p_db = [10.0, 20.0, 25.0, 30.0]
        curve = synthetic_curve(p_db, [10 ** (-2 * p / 10) for p in p_db])
        assert diversity_slope(curve, (20, 30)) == pytest.approx(2.0)

    def test_insufficient_points(self):
        curve = synthetic_curve([20.0, 30.0], [1e-4, 1e-6])
        with pytest.raises(EstimationError):
            diversity_slope(curve, (20, 30))

    def test_zero_error_point_rejected(self):
        curve = BlerCurve(scheme=Scheme.BEAMFORM_NO_DL, topology=UNIT2,
                          power_db=(20.0, 25.0, 30.0), bler=(1e-4, 1e-5, 0.0),
                          trials=(10, 10, 10), errors=(1, 1, 0),
                          ci95=((0, 1), (0, 1), (0, 1)), seed=RngSeed(seed=1),
                          low_confidence=(False, False, True))
        with pytest.raises(EstimationError):
            diversity_slope(curve, (20, 30))
