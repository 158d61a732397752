import math

import numpy as np
import pytest

from isacsim.geometry import (
    ArrayGeometry,
    Direction,
    Position,
    fspl_gain,
    steering_vector,
)
from isacsim.metrics import (
    DecoderKind,
    DecoderSingularError,
    LinkMetrics,
    SensingTarget,
    achievable_rate,
    beampattern_gain,
    compute_decoder,
    echo_hop_gains,
    precoder_covariance,
    sensing_echo_power,
    sinr_mimo,
    sinr_miso,
    total_power,
)


def random_precoders(rng, k, n, scale=1.0):
    return scale * (rng.standard_normal((k, n)) + 1j * rng.standard_normal((k, n)))


class TestBeampattern:
    def test_isotropic_covariance_gives_total_power(self):
        # beams sqrt(P/N) e_k realize R = (P/N) I, so G = P in any direction
        n, p = 4, 2.0
        w = math.sqrt(p / n) * np.eye(n, dtype=complex)
        for az, el in [(0.0, 0.0), (0.7, -0.3), (-2.0, 1.2)]:
            a = steering_vector(ArrayGeometry(2, 2), Direction(az, el))
            assert beampattern_gain(w, a) == pytest.approx(p)

    def test_matched_beam_gain(self):
        p = 3.0
        a = steering_vector(ArrayGeometry(4, 2), Direction(0.5, 0.2))
        w = math.sqrt(p) * a[None, :] / np.linalg.norm(a)
        assert beampattern_gain(w, a) == pytest.approx(p * 8)

    def test_zero_precoders(self):
        a = steering_vector(ArrayGeometry(2, 2), Direction(0.0, 0.0))
        assert beampattern_gain(np.zeros((3, 4), dtype=complex), a) == 0.0

    def test_two_path_agreement(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            w = random_precoders(rng, 3, 8)
            a = steering_vector(ArrayGeometry(4, 2), Direction(float(rng.uniform(-3, 3)), float(rng.uniform(-1.5, 1.5))))
            via_cov = float(np.real(a.conj() @ precoder_covariance(w) @ a))
            assert beampattern_gain(w, a) == pytest.approx(via_cov, abs=1e-10 * max(1, via_cov))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            beampattern_gain(np.ones((2, 4)), np.ones(3))


class TestSinrMiso:
    def test_single_user_no_interference(self):
        assert sinr_miso([1.0, 0.0], [[2.0, 0.0]], 0, 1.0) == pytest.approx(4.0)

    def test_zero_forced_interference(self):
        h = np.array([1.0 + 0j, 0.0])
        w = np.array([[1.5, 0.0], [0.0, 2.0]])  # w_2 orthogonal to h
        assert sinr_miso(h, w, 0, 0.5) == pytest.approx(abs(1.5) ** 2 / 0.5)

    def test_two_user_hand_value(self):
        h1 = np.array([1.0, 1.0]) / math.sqrt(2.0)
        w = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert sinr_miso(h1, w, 0, 0.5) == pytest.approx(0.5)

    def test_rejects_bad_noise(self):
        with pytest.raises(ValueError):
            sinr_miso([1.0], [[1.0]], 0, 0.0)


class TestDecoders:
    def test_single_user_all_equivalent(self):
        rng = np.random.default_rng(2)
        h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        w = random_precoders(rng, 1, 5)
        sigma2 = 0.3
        g = (w @ h.T)[0]
        expected = float(np.sum(np.abs(g) ** 2) / sigma2)
        for kind in (DecoderKind.MRC, DecoderKind.ZF, DecoderKind.MMSE):
            v = compute_decoder(kind, h, w, 0, sigma2)
            assert sinr_mimo(h, w, v, 0, sigma2) == pytest.approx(expected, rel=1e-10)

    def test_zf_matches_mrc_when_orthogonal(self):
        h = np.eye(3, dtype=complex)  # M = N = 3
        w = np.array([[2.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]], dtype=complex)
        v_zf = compute_decoder(DecoderKind.ZF, h, w, 0, 1.0)
        v_mrc = compute_decoder(DecoderKind.MRC, h, w, 0, 1.0)
        cos = abs(np.vdot(v_zf, v_mrc)) / (np.linalg.norm(v_zf) * np.linalg.norm(v_mrc))
        assert cos == pytest.approx(1.0, abs=1e-12)

    def test_zf_nulls_interference(self):
        rng = np.random.default_rng(3)
        h = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        w = random_precoders(rng, 3, 6)
        g = w @ h.T  # (K, M)
        for k in range(3):
            v = compute_decoder(DecoderKind.ZF, h, w, k, 0.1)
            resp = g @ v.conj()
            for i in range(3):
                assert abs(resp[i]) == pytest.approx(1.0 if i == k else 0.0, abs=1e-9)

    def test_mmse_approaches_zf_at_low_noise(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            h = rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4))
            w = random_precoders(rng, 2, 4)
            sigma2 = 1e-9
            s_mmse = sinr_mimo(h, w, compute_decoder(DecoderKind.MMSE, h, w, 0, sigma2), 0, sigma2)
            s_zf = sinr_mimo(h, w, compute_decoder(DecoderKind.ZF, h, w, 0, sigma2), 0, sigma2)
            assert s_mmse == pytest.approx(s_zf, rel=1e-4)

    def test_zf_rank_deficient_raises(self):
        h = np.ones((2, 4), dtype=complex)  # M = 2
        w = random_precoders(np.random.default_rng(5), 3, 4)  # K = 3 > M
        with pytest.raises(DecoderSingularError):
            compute_decoder(DecoderKind.ZF, h, w, 0, 1.0)

    def test_single_antenna_passthrough(self):
        h = np.array([[1.0 + 1j, 0.5]])
        w = random_precoders(np.random.default_rng(6), 2, 2)
        v = compute_decoder(DecoderKind.SINGLE_ANTENNA, h, w, 0, 0.2)
        assert sinr_mimo(h, w, v, 0, 0.2) == pytest.approx(sinr_miso(h, w, 0, 0.2), rel=1e-12)


class TestSinrMimo:
    def test_matched_no_interference(self):
        rng = np.random.default_rng(7)
        h = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
        w = random_precoders(rng, 1, 3)
        g = (w @ h.T)[0]
        sigma2 = 0.7
        assert sinr_mimo(h, w, g, 0, sigma2) == pytest.approx(float(np.sum(np.abs(g) ** 2)) / sigma2)

    def test_orthogonal_decoder_zero(self):
        h = np.eye(2, dtype=complex)
        w = np.array([[1.0, 0.0]])
        v = np.array([0.0, 1.0])  # orthogonal to g_0 = e_0
        assert sinr_mimo(h, w, v, 0, 1.0) == 0.0

    def test_mmse_beats_random_probes(self):
        rng = np.random.default_rng(8)
        h = rng.standard_normal((3, 5)) + 1j * rng.standard_normal((3, 5))
        w = random_precoders(rng, 3, 5)
        sigma2 = 0.4
        v_mmse = compute_decoder(DecoderKind.MMSE, h, w, 1, sigma2)
        s_best = sinr_mimo(h, w, v_mmse, 1, sigma2)
        for _ in range(1000):
            v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
            assert s_best >= sinr_mimo(h, w, v, 1, sigma2) * (1 - 1e-9)

    def test_zero_decoder_rejected(self):
        with pytest.raises(ValueError):
            sinr_mimo(np.eye(2), np.ones((1, 2)), np.zeros(2), 0, 1.0)

    def test_scaling_properties(self):
        rng = np.random.default_rng(9)
        h = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
        w = random_precoders(rng, 2, 4)
        a = steering_vector(ArrayGeometry(2, 2), Direction(0.2, 0.4))
        sigma2 = 0.5
        for c in (0.5, 2.0, 7.0):
            assert beampattern_gain(c * w, a) == pytest.approx(c**2 * beampattern_gain(w, a), rel=1e-12)
            assert total_power(c * w) == pytest.approx(c**2 * total_power(w), rel=1e-12)
            for kind in (DecoderKind.MMSE, DecoderKind.ZF, DecoderKind.MRC):
                for k in range(2):
                    base = sinr_mimo(h, w, compute_decoder(kind, h, w, k, sigma2), k, sigma2)
                    scaled = sinr_mimo(h, c * w, compute_decoder(kind, h, c * w, k, sigma2), k, sigma2)
                    if c > 1:
                        assert scaled > base
                    else:
                        assert scaled < base
            # the deterministic MMSE >= ZF dominance survives rescaling
            for k in range(2):
                s_m = sinr_mimo(h, c * w, compute_decoder(DecoderKind.MMSE, h, c * w, k, sigma2), k, sigma2)
                s_z = sinr_mimo(h, c * w, compute_decoder(DecoderKind.ZF, h, c * w, k, sigma2), k, sigma2)
                assert s_m >= s_z * (1 - 1e-9)


class TestRate:
    def test_reference_points(self):
        assert achievable_rate(0.0) == 0.0
        assert achievable_rate(1.0) == pytest.approx(1.0)
        assert achievable_rate(3.0) == pytest.approx(2.0)

    def test_strictly_increasing_and_concave(self):
        s = np.linspace(0.0, 50.0, 200)
        r = achievable_rate(s)
        assert (np.diff(r) > 0).all()
        assert (np.diff(r, 2) < 1e-12).all()


class TestSensingEcho:
    def setup_method(self):
        self.uav = Position(0, 0, 40)
        self.haps = Position(0, 0, 20000)
        self.geom = ArrayGeometry(2, 2)
        self.freqs = (3.5e9, 120e9)

    def test_zero_precoders(self):
        targets = [SensingTarget(Position(500, 0, 0), 1.0)]
        omega = sensing_echo_power(np.zeros((1, 4), dtype=complex), self.geom, targets, self.uav, self.haps, 400, *self.freqs)
        assert omega == 0.0

    def test_linear_in_rcs(self):
        rng = np.random.default_rng(10)
        w = random_precoders(rng, 2, 4)
        t1 = [SensingTarget(Position(500, 100, 0), 1.0), SensingTarget(Position(-300, 80, 0), 2.0)]
        t2 = [SensingTarget(p.position, 2 * p.rcs) for p in t1]
        o1 = sensing_echo_power(w, self.geom, t1, self.uav, self.haps, 400, *self.freqs)
        o2 = sensing_echo_power(w, self.geom, t2, self.uav, self.haps, 400, *self.freqs)
        assert o2 == pytest.approx(2 * o1, rel=1e-12)

    def test_single_matched_beam_closed_form(self):
        # hand composition: beta1 * P * N_uav * rcs * beta2 * N_haps
        from isacsim.geometry import direction_between, distance

        target = SensingTarget(Position(800, -200, 0), 1.7)
        p = 5.0
        a = steering_vector(self.geom, direction_between(self.uav, target.position))
        w = math.sqrt(p) * a[None, :] / np.linalg.norm(a)
        beta1 = fspl_gain(distance(self.uav, target.position), self.freqs[0])
        beta2 = fspl_gain(distance(target.position, self.haps), self.freqs[1])
        expected = beta1 * p * 4 * target.rcs * beta2 * 400
        got = sensing_echo_power(w, self.geom, [target], self.uav, self.haps, 400, *self.freqs)
        assert got == pytest.approx(expected, rel=1e-12)

    def test_additive_and_permutation_invariant(self):
        rng = np.random.default_rng(11)
        w = random_precoders(rng, 2, 4)
        targets = [SensingTarget(Position(float(x), float(y), 0), float(s))
                   for x, y, s in rng.uniform(100, 900, (4, 3))]
        total = sensing_echo_power(w, self.geom, targets, self.uav, self.haps, 400, *self.freqs)
        parts = sum(
            sensing_echo_power(w, self.geom, [t], self.uav, self.haps, 400, *self.freqs)
            for t in targets
        )
        shuffled = [targets[i] for i in (2, 0, 3, 1)]
        assert total == pytest.approx(parts, rel=1e-12)
        assert total == pytest.approx(
            sensing_echo_power(w, self.geom, shuffled, self.uav, self.haps, 400, *self.freqs), rel=1e-12)

    def test_colocated_target_raises(self):
        from isacsim.geometry import DegenerateGeometryError

        with pytest.raises(DegenerateGeometryError):
            echo_hop_gains([SensingTarget(Position(0, 0, 40), 1.0)], self.uav, self.haps, 400, *self.freqs)

    def test_no_targets_rejected(self):
        with pytest.raises(ValueError):
            echo_hop_gains([], self.uav, self.haps, 400, *self.freqs)


class TestTotalsAndMetrics:
    def test_total_power(self):
        assert total_power(np.zeros((2, 3))) == 0.0
        assert total_power(np.eye(3, dtype=complex)) == pytest.approx(3.0)

    def test_link_metrics_mins(self):
        m = LinkMetrics.from_parts([2.0, 0.5, 1.0], [4.0, 3.0], 1e-20)
        assert m.min_sinr == 0.5
        assert m.min_beampattern_gain == 3.0
        np.testing.assert_allclose(m.rate_per_user, np.log2([3.0, 1.5, 2.0]))

    def test_link_metrics_rejects_negative(self):
        with pytest.raises(ValueError):
            LinkMetrics.from_parts([-1.0], [1.0])
