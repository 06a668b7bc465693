import math

import numpy as np
import pytest

from basner.crf import (CrfParams, log_partition, marginals, nll_and_grad,
                        score_path, viterbi)
from basner.numerics import Rng, grad_check
from helpers import (brute_log_partition, brute_marginals, brute_viterbi,
                     random_crf_instance)


def zero_crf(L):
    return CrfParams(trans=np.zeros((L, L)), start=np.zeros(L),
                     stop=np.zeros(L))


class TestScorePath:
    def test_all_zero(self):
        em = np.zeros((3, 2))
        assert score_path(em, zero_crf(2), [0, 1, 0]) == 0.0

    def test_single_position(self):
        em = np.array([[1.0, 2.0]])
        crf = CrfParams(trans=np.zeros((2, 2)),
                        start=np.array([0.5, -0.5]),
                        stop=np.array([0.25, 0.75]))
        assert score_path(em, crf, [1]) == pytest.approx(-0.5 + 2.0 + 0.75)

    def test_hand_sum(self):
        rng = Rng(17)
        em = rng.uniform_array((3, 2), -1, 1)
        trans = rng.uniform_array((2, 2), -1, 1)
        start = rng.uniform_array((2,), -1, 1)
        stop = rng.uniform_array((2,), -1, 1)
        crf = CrfParams(trans=trans, start=start, stop=stop)
        path = [1, 0, 1]
        expected = (start[1] + em[0, 1] + trans[1, 0] + em[1, 0]
                    + trans[0, 1] + em[2, 1] + stop[1])
        assert score_path(em, crf, path) == pytest.approx(expected, abs=1e-12)

    def test_out_of_range_label(self):
        with pytest.raises(ValueError):
            score_path(np.zeros((2, 2)), zero_crf(2), [0, 2])


class TestLogPartition:
    def test_uniform_paths(self):
        for T, L in [(1, 2), (3, 4), (5, 3)]:
            em = np.zeros((T, L))
            assert log_partition(em, zero_crf(L)) == pytest.approx(
                T * math.log(L), abs=1e-12)

    def test_single_position_is_logsumexp(self):
        em = np.array([[0.3, -1.2]])
        out = log_partition(em, zero_crf(2))
        assert out == pytest.approx(
            np.log(np.exp(0.3) + np.exp(-1.2)), abs=1e-12)

    def test_matches_brute_force(self):
        rng = Rng(100)
        for _ in range(50):
            em, trans, start, stop = random_crf_instance(rng)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            assert abs(log_partition(em, crf)
                       - brute_log_partition(em, trans, start, stop)) <= 1e-8

    def test_upper_bounds_every_path(self):
        rng = Rng(101)
        for _ in range(10):
            em, trans, start, stop = random_crf_instance(rng)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            logz = log_partition(em, crf)
            path, best = viterbi(em, crf)
            if em.shape[1] > 1:  # strict only when more than one path exists
                assert logz > best
            assert logz >= score_path(em, crf, path)

    def test_path_probabilities_sum_to_one(self):
        from helpers import all_path_scores
        rng = Rng(102)
        for _ in range(10):
            em, trans, start, stop = random_crf_instance(rng, max_t=5, max_l=4)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            logz = log_partition(em, crf)
            _, scores = all_path_scores(em, trans, start, stop)
            assert np.exp(scores - logz).sum() == pytest.approx(1.0, abs=1e-8)


class TestViterbi:
    def test_all_zero_tie_break(self):
        path, score = viterbi(np.zeros((4, 3)), zero_crf(3))
        assert list(path) == [0, 0, 0, 0]
        assert score == 0.0

    def test_emission_dominated(self):
        em = np.zeros((5, 3))
        em[:, 1] = 10.0
        path, _ = viterbi(em, zero_crf(3))
        assert list(path) == [1] * 5

    def test_matches_brute_force(self):
        rng = Rng(103)
        for _ in range(50):
            em, trans, start, stop = random_crf_instance(rng)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            path, score = viterbi(em, crf)
            bpath, bscore = brute_viterbi(em, trans, start, stop)
            assert score == bscore  # identical summation order, exact
            assert list(path) == list(bpath)


class TestMarginals:
    def test_uniform(self):
        out = marginals(np.zeros((3, 4)), zero_crf(4))
        assert np.allclose(out, 0.25, atol=1e-12)

    def test_single_position_softmax(self):
        em = np.array([[1.0, 2.0, 3.0]])
        crf = CrfParams(trans=np.zeros((3, 3)),
                        start=np.array([0.1, 0.2, 0.3]),
                        stop=np.array([-0.1, 0.0, 0.1]))
        v = em[0] + crf.start + crf.stop
        expected = np.exp(v) / np.exp(v).sum()
        assert np.allclose(marginals(em, crf)[0], expected, atol=1e-12)

    def test_rows_sum_to_one(self):
        rng = Rng(104)
        for _ in range(20):
            em, trans, start, stop = random_crf_instance(rng)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            out = marginals(em, crf)
            assert np.abs(out.sum(axis=1) - 1.0).max() <= 1e-10

    def test_matches_enumeration(self):
        rng = Rng(105)
        for _ in range(30):
            em, trans, start, stop = random_crf_instance(rng, max_t=5, max_l=4)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            assert np.abs(marginals(em, crf)
                          - brute_marginals(em, trans, start, stop)).max() <= 1e-8


class TestShiftInvariance:
    def test_emission_row_shift(self):
        rng = Rng(106)
        em, trans, start, stop = random_crf_instance(rng, max_t=5, max_l=4)
        crf = CrfParams(trans=trans, start=start, stop=stop)
        T = em.shape[0]
        shifted = em.copy()
        c = 2.5
        shifted[0] += c
        assert log_partition(shifted, crf) == pytest.approx(
            log_partition(em, crf) + c, abs=1e-10)
        assert np.allclose(marginals(shifted, crf), marginals(em, crf),
                           atol=1e-10)
        assert list(viterbi(shifted, crf)[0]) == list(viterbi(em, crf)[0])


class TestNllAndGrad:
    def test_gold_saturation(self):
        em = np.zeros((3, 2))
        em[np.arange(3), [0, 1, 0]] = 100.0
        crf = zero_crf(2)
        loss, d_em, d_crf = nll_and_grad(em, crf, [0, 1, 0])
        assert loss == pytest.approx(0.0, abs=1e-10)
        assert np.abs(d_em).max() <= 1e-10
        assert np.abs(d_crf.trans).max() <= 1e-10

    def test_uniform_loss_value(self):
        loss, _, _ = nll_and_grad(np.zeros((2, 4)), zero_crf(4), [1, 2])
        assert loss == pytest.approx(2 * math.log(4), abs=1e-12)

    def test_loss_nonnegative(self):
        rng = Rng(107)
        for _ in range(20):
            em, trans, start, stop = random_crf_instance(rng)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            gold = [rng.randbelow(em.shape[1]) for _ in range(em.shape[0])]
            loss, _, _ = nll_and_grad(em, crf, gold)
            assert loss >= -1e-12

    def test_emission_gradient_finite_difference(self):
        rng = Rng(108)
        for _ in range(5):
            em, trans, start, stop = random_crf_instance(rng, max_t=4, max_l=3)
            crf = CrfParams(trans=trans, start=start, stop=stop)
            gold = [rng.randbelow(em.shape[1]) for _ in range(em.shape[0])]
            _, d_em, _ = nll_and_grad(em, crf, gold)

            def f(flat):
                return nll_and_grad(flat.reshape(em.shape), crf, gold)[0]

            assert grad_check(f, d_em.ravel(), em.ravel().copy(),
                              eps=1e-6) <= 1e-6

    def test_crf_parameter_gradients_finite_difference(self):
        rng = Rng(109)
        em, trans, start, stop = random_crf_instance(rng, max_t=4, max_l=3)
        T, L = em.shape
        gold = [rng.randbelow(L) for _ in range(T)]

        def loss_for(tr, st, sp):
            return nll_and_grad(
                em, CrfParams(trans=tr, start=st, stop=sp), gold)[0]

        crf = CrfParams(trans=trans, start=start, stop=stop)
        _, _, g = nll_and_grad(em, crf, gold)
        err_t = grad_check(
            lambda p: loss_for(p.reshape(L, L), start, stop),
            g.trans.ravel(), trans.ravel().copy(), eps=1e-6)
        err_s = grad_check(lambda p: loss_for(trans, p, stop),
                           g.start, start.copy(), eps=1e-6)
        err_p = grad_check(lambda p: loss_for(trans, start, p),
                           g.stop, stop.copy(), eps=1e-6)
        assert max(err_t, err_s, err_p) <= 1e-6

    def test_invalid_gold_errors(self):
        with pytest.raises(ValueError):
            nll_and_grad(np.zeros((2, 2)), zero_crf(2), [0, 5])
