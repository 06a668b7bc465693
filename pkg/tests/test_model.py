import numpy as np
import pytest

from basner.model import (EmbeddingTable, LstmParams, Projection,
                          build_embedding_table, init_lstm, load_embeddings,
                          lstm_backward, lstm_forward, project,
                          project_backward)
from basner.numerics import Rng, grad_check


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class TestEmbeddingTable:
    def _table(self):
        # "X0" is the positional token for X at word position B
        return EmbeddingTable(
            ["X0", "X", "Y"],
            np.array([[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]))

    def test_positional_hit(self):
        assert self._table().lookup("X", "B")[0] == 1.0

    def test_bare_fallback(self):
        t = self._table()
        assert t.lookup("Y", "B")[0] == 3.0
        assert t.lookup("X", "E")[0] == 2.0

    def test_unk_fallback(self):
        t = self._table()
        unk = t.lookup("Z")
        assert np.array_equal(unk, t.lookup("Z", "S"))
        assert np.array_equal(unk, t.vectors[t.index[t.unk_token]])

    def test_unk_always_present(self):
        t = EmbeddingTable(["a"], np.zeros((1, 3)))
        assert t.unk_token in t.index
        assert t.vectors.shape == (2, 3)

    def test_duplicate_tokens_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingTable(["a", "a"], np.zeros((2, 2)))


class TestLoadEmbeddings:
    def test_basic(self, tmp_path):
        p = tmp_path / "emb.vec"
        p.write_text("2 3\na 1 2 3\nb 0 0 1\n", encoding="utf-8")
        t = load_embeddings(p)
        assert t.dim == 3
        assert np.array_equal(t.lookup("a"), [1.0, 2.0, 3.0])

    def test_dim_mismatch(self, tmp_path):
        p = tmp_path / "emb.vec"
        p.write_text("1 3\na 1 2 3\n", encoding="utf-8")
        with pytest.raises(ValueError, match="dim 3"):
            load_embeddings(p, expected_dim=100)

    def test_short_row_names_line(self, tmp_path):
        p = tmp_path / "emb.vec"
        p.write_text("1 3\na 1 2\n", encoding="utf-8")
        with pytest.raises(ValueError, match="line 2"):
            load_embeddings(p)

    def test_count_mismatch(self, tmp_path):
        p = tmp_path / "emb.vec"
        p.write_text("3 2\na 1 2\nb 3 4\n", encoding="utf-8")
        with pytest.raises(ValueError, match="declares 3"):
            load_embeddings(p)

    def test_fixture_file(self):
        t = load_embeddings("tests/fixtures/embeddings.vec", expected_dim=4)
        assert len(t.tokens) == 6  # 5 declared + appended UNK
        assert np.array_equal(t.lookup("好"), [0.4, 0.1, -0.2, 0.0])


class TestLstmForward:
    def test_zero_params_zero_hidden(self):
        p = LstmParams(wx=np.zeros((12, 2)), wh=np.zeros((12, 3)),
                       b=np.zeros(12))
        h, _ = lstm_forward(Rng(0).uniform_array((5, 2), -1, 1), p)
        assert np.array_equal(h, np.zeros((5, 3)))

    def test_single_step_hand_calculation(self):
        # H=1, d=1: gate preactivations are scalars; recompute by hand
        p = LstmParams(wx=np.array([[0.5], [-0.3], [0.8], [1.1]]),
                       wh=np.zeros((4, 1)), b=np.array([0.1, 0.2, 0.3, 0.4]))
        x = np.array([[2.0]])
        i = _sigmoid(0.5 * 2 + 0.1)
        f = _sigmoid(-0.3 * 2 + 0.2)
        o = _sigmoid(0.8 * 2 + 0.3)
        g = np.tanh(1.1 * 2 + 0.4)
        c = i * g  # zero initial cell state
        expected = o * np.tanh(c)
        h, _ = lstm_forward(x, p)
        assert h[0, 0] == pytest.approx(expected, abs=1e-14)

    def test_shape_contract(self):
        p = init_lstm(4, 7, Rng(3))
        h, _ = lstm_forward(np.zeros((9, 4)), p)
        assert h.shape == (9, 7)

    def test_deterministic(self):
        p = init_lstm(3, 5, Rng(1))
        x = Rng(2).uniform_array((6, 3), -1, 1)
        mask = np.array([0.0, 2.0, 2.0, 0.0, 2.0])
        a, _ = lstm_forward(x, p, mask)
        b, _ = lstm_forward(x, p, mask)
        assert np.array_equal(a, b)

    def test_mask_applied_to_output_only(self):
        p = init_lstm(2, 3, Rng(5))
        x = Rng(6).uniform_array((4, 2), -1, 1)
        full, _ = lstm_forward(x, p)
        masked, _ = lstm_forward(x, p, np.array([0.0, 1.0, 1.0]))
        assert np.array_equal(masked[:, 0], np.zeros(4))
        # surviving units unchanged: recurrence uses the raw hidden state
        assert np.array_equal(masked[:, 1:], full[:, 1:])

    def test_dimension_mismatch(self):
        p = init_lstm(3, 4, Rng(0))
        with pytest.raises(ValueError):
            lstm_forward(np.zeros((2, 5)), p)


class TestLstmBackward:
    def test_zero_upstream_zero_grads(self):
        p = init_lstm(2, 3, Rng(7))
        x = Rng(8).uniform_array((4, 2), -1, 1)
        _, cache = lstm_forward(x, p)
        grads, d_x = lstm_backward(np.zeros((4, 3)), cache, p)
        assert np.abs(grads.wx).max() == 0.0
        assert np.abs(d_x).max() == 0.0

    def test_stale_cache_rejected(self):
        p = init_lstm(2, 3, Rng(7))
        _, cache = lstm_forward(np.zeros((2, 2)), p)
        other = init_lstm(2, 3, Rng(7))
        with pytest.raises(ValueError):
            lstm_backward(np.zeros((2, 3)), cache, other)

    @pytest.mark.parametrize("use_mask", [False, True])
    def test_gradients_vs_finite_differences(self, use_mask):
        rng = Rng(20)
        p = init_lstm(2, 3, rng)
        x = rng.uniform_array((4, 2), -1, 1)
        mask = np.array([0.0, 1.0 / 0.9, 1.0 / 0.9]) if use_mask else None
        w_sum = Rng(21).uniform_array((4, 3), -1, 1)  # random linear loss

        def loss():
            h, cache = lstm_forward(x, p, mask)
            return float((h * w_sum).sum()), cache

        val, cache = loss()
        grads, d_x = lstm_backward(w_sum, cache, p)
        for arr, g in ((p.wx, grads.wx), (p.wh, grads.wh), (p.b, grads.b),
                       (x, d_x)):
            def f(flat, arr=arr):
                saved = arr.copy()
                arr.flat[:] = flat
                try:
                    return loss()[0]
                finally:
                    arr.flat[:] = saved.ravel()
            assert grad_check(f, g.ravel(), arr.ravel().copy(),
                              eps=1e-5) <= 1e-7


class TestProjection:
    def test_zero_weights_rows_equal_bias(self):
        proj = Projection(w=np.zeros((3, 4)), b=np.array([1.0, 2.0, 3.0]))
        out = project(np.ones((5, 4)), proj)
        assert np.array_equal(out, np.tile([1.0, 2.0, 3.0], (5, 1)))

    def test_identity_weights(self):
        proj = Projection(w=np.eye(3), b=np.zeros(3))
        h = Rng(1).uniform_array((4, 3), -1, 1)
        assert np.allclose(project(h, proj), h, atol=1e-15)

    def test_hand_case(self):
        proj = Projection(w=np.array([[1.0, 2.0], [3.0, 4.0]]),
                          b=np.array([1.0, 0.0]))
        out = project(np.array([[1.0, 1.0]]), proj)
        assert np.array_equal(out[0], [4.0, 7.0])

    def test_backward_matches_finite_differences(self):
        rng = Rng(30)
        proj = Projection(w=rng.uniform_array((3, 4), -1, 1),
                          b=rng.uniform_array((3,), -1, 1))
        feats = rng.uniform_array((5, 4), -1, 1)
        upstream = rng.uniform_array((5, 3), -1, 1)
        d_w, d_b, d_f = project_backward(upstream, feats, proj)

        def f_w(flat):
            return float((project(feats, Projection(
                w=flat.reshape(3, 4), b=proj.b)) * upstream).sum())

        assert grad_check(f_w, d_w.ravel(), proj.w.ravel().copy()) <= 1e-8
        assert np.allclose(d_b, upstream.sum(axis=0))
        assert np.allclose(d_f, upstream @ proj.w)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            project(np.zeros((2, 3)), Projection(w=np.zeros((4, 5)),
                                                 b=np.zeros(4)))


def test_build_embedding_table_deterministic():
    a = build_embedding_table("abc", 4, Rng(2))
    b = build_embedding_table("cba", 4, Rng(2))
    assert a.tokens == b.tokens
    assert np.array_equal(a.vectors, b.vectors)
