import json
import math

import numpy as np
import pytest

from sqrng.protocol import (
    MEASURE_RESEND,
    REFLECT,
    MissingStatisticsError,
    ProtocolConfig,
    RoundRecord,
    Transcript,
    choose_schedule,
    estimate_stats,
    round_laws,
    run_protocol,
    simulate_round,
)
from sqrng.quantum import StateVector, depolarize, project_qubit, qubit
from sqrng.rate import ChannelModel


def three_sigma(p, n):
    return 3 * math.sqrt(p * (1 - p) / n) + 1e-12


class TestConfig:
    @pytest.mark.parametrize("n, m", [(0, 0), (4, 5), (4, -1)])
    def test_invalid(self, n, m):
        with pytest.raises(ValueError):
            ProtocolConfig(n, m)

    def test_seed_cost(self):
        assert ProtocolConfig(10, 3).seed_cost_bits == pytest.approx(math.log2(math.comb(10, 3)))
        assert ProtocolConfig(4, 0).seed_cost_bits == pytest.approx(0, abs=1e-12)

    def test_roundtrip(self):
        c = ProtocolConfig(20, 5, ChannelModel(0.1, "independent"), 9)
        assert ProtocolConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


class TestSchedule:
    def test_no_tests(self):
        np.testing.assert_array_equal(choose_schedule(ProtocolConfig(4, 0, rng_seed=1)), [1, 1, 1, 1])

    def test_all_tests(self):
        np.testing.assert_array_equal(choose_schedule(ProtocolConfig(4, 4, rng_seed=1)), [0, 0, 0, 0])

    def test_large(self):
        theta = choose_schedule(ProtocolConfig(10**6, 10**3, rng_seed=3))
        assert np.count_nonzero(theta == 0) == 1000

    def test_uniform_positions(self):
        hits = np.zeros(5)
        for s in range(4000):
            hits += choose_schedule(ProtocolConfig(5, 2, rng_seed=s)) == 0
        np.testing.assert_allclose(hits / 4000, 0.4, atol=three_sigma(0.4, 4000))


class TestLaws:
    @pytest.mark.parametrize("mode", ["dependent", "independent"])
    @pytest.mark.parametrize("q", [0.0, 0.05, 0.1, 0.2, 0.5])
    def test_against_purified_channel(self, q, mode):
        ch = ChannelModel(q, mode)
        laws = round_laws(ch)
        # depolarizing by hand: (1-2q)|psi><psi| + q I, read off diagonal in the measured basis
        assert laws.p_alice_zero == pytest.approx((1 - 2 * q) * 0.5 + q)
        assert laws.p_plus_measure == pytest.approx((0.5, 0.5))
        assert laws.p_plus_reflect == pytest.approx(1 - ch.q_fr)

    def test_against_projection(self):
        # Bell-pair purification: Alice's qubit is maximally mixed, so the
        # forward |+> signal is the same as projecting the pair in the X basis
        bell = StateVector((2, 2), np.array([1, 0, 0, 1]) / math.sqrt(2))
        p, post = project_qubit(bell, 0, "X", 0)
        assert p == pytest.approx(0.5)
        laws = round_laws(ChannelModel(0.0))
        assert project_qubit(post, 1, "X", 0)[0] == pytest.approx(laws.p_plus_reflect)
        assert project_qubit(post, 1, "Z", 0)[0] == pytest.approx(laws.p_alice_zero)
        assert depolarize(qubit("+").density(), 0.0).entries == pytest.approx(qubit("+").density().entries)


class TestRounds:
    def test_round_record_validation(self):
        with pytest.raises(ValueError):
            RoundRecord(0, REFLECT, 1, "+")
        with pytest.raises(ValueError):
            RoundRecord(0, MEASURE_RESEND, None, "+")
        with pytest.raises(ValueError):
            RoundRecord(0, "Skip", None, "+")

    def test_noiseless_reflect_always_plus(self, rng):
        ch = ChannelModel(0.0)
        assert all(simulate_round(REFLECT, ch, rng).server_message == "+" for _ in range(500))

    def test_measure_bits_unbiased(self):
        tr = run_protocol(ProtocolConfig(200_000, 0, ChannelModel(0.1), 11))
        assert tr.raw.mean() == pytest.approx(0.5, abs=three_sigma(0.5, tr.raw.size))

    @pytest.mark.parametrize("mode", ["dependent", "independent"])
    @pytest.mark.parametrize("q", [0.0, 0.05, 0.1, 0.2])
    def test_channel_laws(self, q, mode):
        ch = ChannelModel(q, mode)
        tr = run_protocol(ProtocolConfig(100_000, 20_000, ch, 17))
        s = tr.stats
        for a in (0, 1):
            for c in (0, 1):
                assert s.p_ac[a, c] == pytest.approx(0.25, abs=three_sigma(0.25, s.n_measure))
        assert s.p_minus_acc == pytest.approx(ch.q_fr, abs=three_sigma(max(ch.q_fr, 1e-3), s.n_reflect))

    def test_estimate_stats_exact(self):
        rounds = [
            RoundRecord(0, MEASURE_RESEND, 0, "+"),
            RoundRecord(1, MEASURE_RESEND, 1, "-"),
            RoundRecord(2, REFLECT, None, "+"),
            RoundRecord(3, REFLECT, None, "-"),
        ]
        s = estimate_stats(rounds)
        np.testing.assert_allclose(s.p_ac, [[0.5, 0], [0, 0.5]])
        assert (s.p_plus_acc, s.p_minus_acc) == (0.5, 0.5)
        assert (s.n_measure, s.n_reflect) == (2, 2)

    def test_missing_categories(self):
        with pytest.raises(MissingStatisticsError) as exc:
            estimate_stats([RoundRecord(0, MEASURE_RESEND, 0, "+")])
        assert exc.value.category == REFLECT
        with pytest.raises(MissingStatisticsError) as exc:
            estimate_stats([RoundRecord(0, REFLECT, None, "+")])
        assert exc.value.category == MEASURE_RESEND


class TestRun:
    def test_deterministic(self):
        c = ProtocolConfig(1000, 100, ChannelModel(0.05), 42)
        a, b = run_protocol(c), run_protocol(c)
        np.testing.assert_array_equal(a.raw, b.raw)
        np.testing.assert_array_equal(a.messages, b.messages)

    def test_seed_matters(self):
        a = run_protocol(ProtocolConfig(1000, 100, rng_seed=1))
        b = run_protocol(ProtocolConfig(1000, 100, rng_seed=2))
        assert not np.array_equal(a.raw[:800], b.raw[:800])

    def test_worker_invariance(self):
        c = ProtocolConfig(300_000, 1000, ChannelModel(0.05), 5)
        a, b = run_protocol(c, workers=1), run_protocol(c, workers=4)
        np.testing.assert_array_equal(a.alice_bits, b.alice_bits)
        np.testing.assert_array_equal(a.messages, b.messages)

    def test_raw_length(self):
        tr = run_protocol(ProtocolConfig(1000, 123, rng_seed=1))
        assert tr.raw.size == 877
        np.testing.assert_array_equal(tr.schedule == 1, tr.alice_bits >= 0)

    def test_no_test_rounds(self):
        tr = run_protocol(ProtocolConfig(50, 0))
        assert tr.stats is None and tr.missing == REFLECT

    def test_only_test_rounds(self):
        tr = run_protocol(ProtocolConfig(50, 50))
        assert tr.stats is None and tr.missing == MEASURE_RESEND and tr.raw.size == 0

    def test_transcript_roundtrip(self):
        tr = run_protocol(ProtocolConfig(500, 50, ChannelModel(0.1), 3))
        back = Transcript.from_dict(json.loads(json.dumps(tr.to_dict(keep_rounds=True))))
        np.testing.assert_array_equal(back.raw, tr.raw)
        np.testing.assert_array_equal(back.alice_bits, tr.alice_bits)
        assert back.rounds == tr.rounds
        np.testing.assert_allclose(back.stats.p_ac, tr.stats.p_ac)

    def test_transcript_without_rounds(self):
        tr = run_protocol(ProtocolConfig(100, 10))
        back = Transcript.from_dict(tr.to_dict())
        assert not back.has_rounds
        with pytest.raises(ValueError):
            back.rounds
