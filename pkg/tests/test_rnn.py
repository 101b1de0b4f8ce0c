import numpy as np
import pytest

from conftest import numeric_gradient
from qtnn.activation import Activation, softmax
from qtnn.checkpoint import load_rnn, save_rnn
from qtnn.data import SentimentCorpus, bundled_sentiment_path, load_sentiment
from qtnn.numerics import InputError, Rng
from qtnn.rnn import _backward, _unroll, rnn_evaluate, rnn_forward, rnn_init, rnn_train
from qtnn.trainutil import TrainConfig, init_stream


def two_phrase_corpus():
    return SentimentCorpus([[1], [2]], [1, 0], {"up": 1, "down": 2})


class TestForward:
    def test_zero_weights_uniform(self):
        for kind in (Activation.tanh(), Activation.qt()):
            model = rnn_init(5, 4, 2, kind, Rng(0))
            model.embed[:] = 0.0
            model.wx[:] = 0.0
            model.wh[:] = 0.0
            model.wy[:] = 0.0
            probs, states = rnn_forward(model, [1, 2, 3])
            assert np.allclose(probs, 0.5)
            assert np.all(states == 0.0)

    def test_single_token_reduces_to_feedforward(self):
        model = rnn_init(6, 4, 3, Activation.tanh(), Rng(1))
        token = 2
        probs, states = rnn_forward(model, [token])
        from qtnn.activation import activate

        z = model.embed[token] @ model.wx + model.bh[0]  # h0 = 0 kills wh
        h, _ = activate(z, model.hidden_act)
        expected = softmax(h @ model.wy + model.by[0])
        assert np.allclose(probs, expected)
        assert np.allclose(states[-1], h)

    def test_empty_sequence_rejected(self):
        model = rnn_init(4, 3, 2, Activation.tanh(), Rng(0))
        with pytest.raises(InputError):
            rnn_forward(model, [])

    def test_out_of_vocab_rejected(self):
        model = rnn_init(4, 3, 2, Activation.tanh(), Rng(0))
        with pytest.raises(InputError):
            rnn_forward(model, [4])

    def test_onehot_fallback_mode(self):
        model = rnn_init(5, 3, 2, Activation.tanh(), Rng(2), n_embed=None)
        assert model.embed is None
        probs, _ = rnn_forward(model, [0, 4, 2])
        assert probs.shape == (2,)
        assert np.allclose(probs.sum(), 1.0)


class TestBpttGradients:
    @pytest.mark.parametrize("kind", [Activation.tanh(), Activation.qt(), Activation.qt(mode="bipolar")],
                             ids=["tanh", "qt", "qt-bipolar"])
    def test_fd_agreement(self, kind):
        rng = np.random.default_rng(5)
        checked = 0
        attempts = 0
        while checked < 6 and attempts < 60:
            attempts += 1
            seq = rng.integers(0, 6, int(rng.integers(1, 6))).tolist()
            label = int(rng.integers(0, 2))
            model = rnn_init(6, int(rng.integers(2, 5)), 2, kind, Rng(int(rng.integers(1 << 30))), n_embed=3)
            states, dacts, logits = _unroll(model, np.asarray(seq))
            # keep FD clear of activation kinks
            pre_ok = True
            h = np.zeros(model.n_hidden)
            for t, tok in enumerate(seq):
                z = model.embed[tok] @ model.wx + h @ model.wh + model.bh[0]
                if np.min(np.abs(z)) < 1e-3:
                    pre_ok = False
                    break
                from qtnn.activation import activate

                h = activate(z, kind)[0]
            if not pre_ok:
                continue
            onehot = np.zeros((1, 2))
            onehot[0, label] = 1.0
            from qtnn.activation import softmax_crossentropy

            _, _, dlogits = softmax_crossentropy(logits[None, :], onehot)
            analytic = _backward(model, np.asarray(seq), states, dacts, dlogits[0])
            params = [model.wx, model.wh, model.bh, model.wy, model.by, model.embed]

            def loss_fn():
                _, _, lg = _unroll(model, np.asarray(seq))
                return softmax_crossentropy(lg[None, :], onehot)[1]

            numeric = numeric_gradient(loss_fn, params, h=1e-5)
            names = ["wx", "wh", "bh", "wy", "by", "embed"]
            analytic = [analytic[0], analytic[1], analytic[2][None, :] * 0 + analytic[2],
                        analytic[3], analytic[4][None, :] * 0 + analytic[4], analytic[5]]
            for name, a, n in zip(names, analytic, numeric):
                a = np.asarray(a).reshape(np.asarray(n).shape)
                scale = max(np.abs(a).max(), np.abs(n).max(), 1e-4)
                assert np.abs(a - n).max() / scale < 1e-5, name
            checked += 1
        assert checked == 6


class TestTraining:
    def test_zero_lr_unchanged(self):
        model = rnn_init(3, 4, 2, Activation.tanh(), init_stream(0))
        before = model.copy()
        rnn_train(model, two_phrase_corpus(), TrainConfig(lr=0.0, epochs=3, batch_size=1, seed=0),
                  train_frac=1.0)
        assert np.array_equal(model.wx, before.wx)
        assert np.array_equal(model.embed, before.embed)

    def test_two_phrase_corpus_separates(self):
        model = rnn_init(3, 2, 2, Activation.tanh(), init_stream(1), n_embed=1)
        cfg = TrainConfig(lr=0.1, epochs=500, batch_size=1, clip_norm=5.0, seed=1)
        trace, train_set, _ = rnn_train(model, two_phrase_corpus(), cfg, train_frac=1.0,
                                        stop_train_loss=1e-3)
        acc, _ = rnn_evaluate(model, train_set)
        assert acc == 1.0
        assert trace.epochs_run <= 500

    def test_bundled_corpus_full_train_reaches_corpus_accuracy(self):
        corpus = load_sentiment(bundled_sentiment_path())
        cfg = TrainConfig(lr=0.05, epochs=200, batch_size=1, clip_norm=5.0, seed=42)
        model = rnn_init(corpus.vocab_size, 32, 2, Activation.qt(ampl=5.0),
                         init_stream(cfg.seed), n_embed=16)
        rnn_train(model, corpus, cfg, train_frac=1.0, stop_train_loss=0.01)
        acc, loss = rnn_evaluate(model, corpus)
        assert acc == 1.0
        assert loss < 0.01

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nan_loss_aborts(self):
        from qtnn.trainutil import TrainingDiverged

        model = rnn_init(3, 4, 2, Activation.identity(), init_stream(2))
        cfg = TrainConfig(lr=1e160, epochs=5, batch_size=1, clip_norm=None, seed=2)
        with pytest.raises(TrainingDiverged):
            rnn_train(model, two_phrase_corpus(), cfg, train_frac=1.0)

    def test_determinism(self):
        corpus = load_sentiment(bundled_sentiment_path())
        cfg = TrainConfig(lr=0.05, epochs=2, batch_size=1, clip_norm=5.0, seed=9)
        m1 = rnn_init(corpus.vocab_size, 8, 2, Activation.qt(), init_stream(cfg.seed))
        rnn_train(m1, corpus, cfg)
        m2 = rnn_init(corpus.vocab_size, 8, 2, Activation.qt(), init_stream(cfg.seed))
        rnn_train(m2, corpus, cfg)
        assert np.array_equal(m1.wh, m2.wh)
        assert np.array_equal(m1.embed, m2.embed)

    def test_state_bounds(self):
        corpus = load_sentiment(bundled_sentiment_path())
        for kind, lo, hi in [(Activation.tanh(), -1.0, 1.0), (Activation.qt(), 0.0, 1.0)]:
            model = rnn_init(corpus.vocab_size, 16, 2, kind, init_stream(3))
            for seq in corpus.phrases[:10]:
                _, states = rnn_forward(model, seq)
                assert states.min() >= lo and states.max() <= hi

    def test_untrained_chance_level(self):
        corpus = load_sentiment(bundled_sentiment_path())
        accs = []
        for seed in range(20):
            model = rnn_init(corpus.vocab_size, 8, 2, Activation.qt(), init_stream(seed))
            acc, _ = rnn_evaluate(model, corpus)
            accs.append(acc)
        assert abs(np.mean(accs) - 0.5) <= 0.15

    def test_uniform_model_loss_ln2(self):
        model = rnn_init(4, 3, 2, Activation.tanh(), Rng(0))
        model.embed[:] = 0.0
        model.wx[:] = 0.0
        model.wh[:] = 0.0
        model.wy[:] = 0.0
        corpus = two_phrase_corpus()
        _, loss = rnn_evaluate(model, corpus)
        assert loss == pytest.approx(np.log(2.0), rel=1e-12)


class TestCheckpoint:
    def test_round_trip_with_embedding(self, tmp_path):
        model = rnn_init(7, 5, 2, Activation.qt(ampl=5.0), Rng(3))
        path = tmp_path / "rnn.qtnn"
        save_rnn(model, path)
        loaded = load_rnn(path)
        assert np.array_equal(loaded.embed, model.embed)
        assert np.array_equal(loaded.wh, model.wh)
        assert loaded.hidden_act == model.hidden_act

    def test_round_trip_onehot_mode(self, tmp_path):
        model = rnn_init(7, 5, 2, Activation.tanh(), Rng(3), n_embed=None)
        path = tmp_path / "rnn.qtnn"
        save_rnn(model, path)
        loaded = load_rnn(path)
        assert loaded.embed is None
        assert np.array_equal(loaded.wx, model.wx)
