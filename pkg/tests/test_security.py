"""Key-rate bound tests.

Expected values are frozen from a direct high-precision evaluation of the
closed forms (the independent oracle in `entropy_oracle` below), not from
the implementation under test.
"""

import math

import numpy as np
import pytest

from rfqkd.channel import sweep_settings
from rfqkd.detection import NoiseConfig, simulate_session
from rfqkd.protocol import TallyCounts
from rfqkd.security import SecurityReport, binary_entropy, bound_exS, key_rate, report


def entropy_oracle(p):
    """Independent reference: Shannon entropy via natural logs."""
    if p in (0.0, 1.0):
        return 0.0
    return (-p * math.log(p) - (1.0 - p) * math.log(1.0 - p)) / math.log(2.0)


class TestBinaryEntropy:
    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_maximum(self):
        assert binary_entropy(0.5) == 1.0

    def test_reference_point(self):
        # direct evaluation: H(0.102) = 0.4753036 (to 7 digits)
        assert abs(binary_entropy(0.102) - 0.4753035717834445) < 1e-12
        assert abs(binary_entropy(0.102) - entropy_oracle(0.102)) < 1e-12

    def test_symmetry(self):
        for p in (0.1, 0.23, 0.42):
            assert abs(binary_entropy(p) - binary_entropy(1.0 - p)) < 1e-14

    def test_domain_enforced(self):
        with pytest.raises(ValueError):
            binary_entropy(-0.01)
        with pytest.raises(ValueError):
            binary_entropy(1.01)


class TestBoundExS:
    def test_everything_inside_s(self):
        for e in (0.0, 0.1, 0.3):
            assert bound_exS(1.0, e) == e

    def test_reference_points(self):
        assert abs(bound_exS(0.91, 0.102) - 0.0626373626373626) < 1e-12
        assert abs(bound_exS(0.97, 0.068) - 0.0546391752577320) < 1e-12

    def test_clamped_at_zero(self):
        # e_x below the outside-S floor: inside-S errors bounded by zero
        assert bound_exS(0.9, 0.01) == 0.0

    def test_clamped_at_half(self):
        assert bound_exS(0.5, 0.5) == 0.5

    def test_zero_population_rejected(self):
        with pytest.raises(ValueError):
            bound_exS(0.0, 0.1)

    def test_ex_range_enforced(self):
        with pytest.raises(ValueError):
            bound_exS(0.9, 0.6)

    def test_identity_consistency(self):
        # unclamped values satisfy e_x = p_S e_x_S + (1 - p_S)/2 exactly
        rng = np.random.default_rng(0)
        for _ in range(200):
            p_s = rng.uniform(0.3, 1.0)
            e_x_s = rng.uniform(0.0, 0.5)
            e_x = p_s * e_x_s + (1.0 - p_s) * 0.5
            assert abs(bound_exS(p_s, e_x) - e_x_s) < 1e-12


class TestKeyRate:
    def test_perfect_channel(self):
        assert key_rate(1.0, 0.0) == 1.0

    def test_one_km_measured_point(self):
        # oracle value of p_S - H(e_x) - p_S H(e_x_S) at (0.91, 0.102)
        expected = 0.91 - entropy_oracle(0.102) - 0.91 * entropy_oracle(0.057 / 0.91)
        assert abs(expected - 0.1272743175101339) < 1e-12
        assert abs(key_rate(0.91, 0.102) - expected) < 1e-12

    def test_four_meter_measured_point(self):
        expected = 0.97 - entropy_oracle(0.068) - 0.97 * entropy_oracle(0.053 / 0.97)
        assert abs(expected - 0.3149721064269842) < 1e-12
        assert abs(key_rate(0.97, 0.068) - expected) < 1e-12

    def test_both_experimental_points_positive(self):
        assert key_rate(0.91, 0.102) > 0.0
        assert key_rate(0.97, 0.068) > 0.0

    def test_monotone_nonincreasing_in_error(self):
        for p_s in (0.85, 0.91, 1.0):
            rates = [key_rate(p_s, e) for e in np.linspace(0.0, 0.25, 60)]
            assert all(a >= b - 1e-12 for a, b in zip(rates, rates[1:]))

    def test_rate_never_exceeds_p_s(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            p_s = rng.uniform(0.05, 1.0)
            e_x = rng.uniform(0.0, 0.5)
            assert key_rate(p_s, e_x) <= p_s + 1e-12

    def test_boundary_error_rate_zeroes_inside_error(self):
        p_s = 0.8
        e_x = (1.0 - p_s) / 2.0
        assert bound_exS(p_s, e_x) == 0.0
        assert abs(key_rate(p_s, e_x) - (p_s - binary_entropy(e_x))) < 1e-12


class TestReport:
    def test_perfect_session(self):
        t = TallyCounts(
            rounds=100, conclusive=100, sifted=50, errors=0,
            pS_sample_total=20, pS_sample_inS=20, duration_s=10.0,
        )
        rep = report(t)
        assert rep.rate_fraction == 1.0
        assert rep.e_x == 0.0 and rep.p_S == 1.0
        assert abs(rep.secret_bits_per_s - 5.0) < 1e-12

    def test_half_error_session_is_insecure(self):
        t = TallyCounts(
            rounds=100, conclusive=100, sifted=40, errors=20,
            pS_sample_total=20, pS_sample_inS=19, duration_s=10.0,
        )
        assert report(t).rate_fraction < 0.0

    def test_simulated_one_km_session_is_secure(self):
        cfg = NoiseConfig.one_km()
        tally = simulate_session(
            cfg, sweep_settings()[0], "flip_half", 3600.0, np.random.default_rng(11)
        )
        rep = report(tally)
        assert rep.rate_fraction > 0.0
        assert rep.secret_bits_per_s > 0.0

    def test_empty_tallies_rejected(self):
        with pytest.raises(ValueError):
            report(TallyCounts())
        with pytest.raises(ValueError):
            report(TallyCounts(rounds=10, conclusive=5, sifted=5, errors=0,
                               pS_sample_total=0, duration_s=1.0))

    def test_no_duration_gives_nan_throughput(self):
        t = TallyCounts(rounds=10, conclusive=10, sifted=5, errors=0,
                        pS_sample_total=5, pS_sample_inS=5, duration_s=0.0)
        rep = report(t)
        assert math.isnan(rep.secret_bits_per_s)
        assert isinstance(rep, SecurityReport)
