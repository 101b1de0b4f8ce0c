"""Elman-style recurrent classifier over token sequences.

The hidden state follows h_t = act(W_x x_t + W_h h_{t-1} + b_h) from a zero
initial state; a phrase is classified from the final step's output through
softmax.  Training is per-sequence SGD with full backpropagation through
time and global-norm gradient clipping.

Tokens enter either through a learned embedding (default) or, when the
model is built without one, as one-hot rows of the full vocabulary; both
reduce to row lookups.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .activation import Activation, activate, softmax_crossentropy
from .data import split_corpus
from .numerics import InputError
from .trainutil import (
    TrainingDiverged,
    TrainingTrace,
    clip_gradients,
    shuffle_stream,
)

__all__ = ["RnnModel", "rnn_init", "rnn_forward", "rnn_train", "rnn_evaluate"]


@dataclass
class RnnModel:
    embed: np.ndarray | None  # vocab x emb, or None for one-hot input
    wx: np.ndarray            # emb (or vocab) x hidden
    wh: np.ndarray            # hidden x hidden
    bh: np.ndarray            # 1 x hidden
    wy: np.ndarray            # hidden x classes
    by: np.ndarray            # 1 x classes
    hidden_act: Activation

    @property
    def vocab_size(self):
        return self.embed.shape[0] if self.embed is not None else self.wx.shape[0]

    @property
    def n_hidden(self):
        return self.wh.shape[0]

    def copy(self):
        return RnnModel(
            None if self.embed is None else self.embed.copy(),
            self.wx.copy(), self.wh.copy(), self.bh.copy(),
            self.wy.copy(), self.by.copy(), self.hidden_act,
        )


def rnn_init(vocab_size, n_hidden, n_classes, hidden_act, rng, n_embed=16):
    """Fan-in scaled normal init; ``n_embed=None`` selects one-hot input."""
    if n_embed is None:
        embed = None
        wx = rng.normal_matrix(vocab_size, n_hidden, std=1.0 / np.sqrt(vocab_size))
    else:
        embed = rng.normal_matrix(vocab_size, n_embed, std=1.0 / np.sqrt(n_embed))
        wx = rng.normal_matrix(n_embed, n_hidden, std=1.0 / np.sqrt(n_embed))
    wh = rng.normal_matrix(n_hidden, n_hidden, std=1.0 / np.sqrt(n_hidden))
    wy = rng.normal_matrix(n_hidden, n_classes, std=1.0 / np.sqrt(n_hidden))
    return RnnModel(
        embed, wx, wh, np.zeros((1, n_hidden)), wy, np.zeros((1, n_classes)), hidden_act
    )


def _check_sequence(model, seq):
    if len(seq) == 0:
        raise InputError("sequence must be non-empty")
    seq = np.asarray(seq, dtype=np.int64)
    if seq.min() < 0 or seq.max() >= model.vocab_size:
        raise InputError(
            f"token indices must lie in [0, {model.vocab_size}), got range "
            f"[{seq.min()}, {seq.max()}]"
        )
    return seq


def _unroll(model, seq):
    """Forward through time, caching what BPTT needs."""
    steps = len(seq)
    n_hidden = model.n_hidden
    states = np.zeros((steps + 1, n_hidden))
    dacts = np.zeros((steps, n_hidden))
    for t, token in enumerate(seq):
        drive = model.wx[token] if model.embed is None else model.embed[token] @ model.wx
        z = drive + states[t] @ model.wh + model.bh[0]
        h, dh = activate(z, model.hidden_act)
        states[t + 1] = h
        dacts[t] = dh
    logits = states[-1] @ model.wy + model.by[0]
    return states, dacts, logits


def rnn_forward(model, seq):
    """Class probabilities for one sequence plus all hidden states h_1..h_T."""
    from .activation import softmax

    seq = _check_sequence(model, seq)
    states, _, logits = _unroll(model, seq)
    return softmax(logits), states[1:]


def _backward(model, seq, states, dacts, dlogits):
    """Full-unroll BPTT; returns grads aligned with the trainable arrays."""
    gwy = np.outer(states[-1], dlogits)
    gby = dlogits.copy()
    gwx = np.zeros_like(model.wx)
    gwh = np.zeros_like(model.wh)
    gbh = np.zeros(model.n_hidden)
    gembed = None if model.embed is None else np.zeros_like(model.embed)
    dh_next = dlogits @ model.wy.T
    for t in range(len(seq) - 1, -1, -1):
        dz = dh_next * dacts[t]
        token = seq[t]
        if model.embed is None:
            gwx[token] += dz
        else:
            gwx += np.outer(model.embed[token], dz)
            gembed[token] += dz @ model.wx.T
        gwh += np.outer(states[t], dz)
        gbh += dz
        dh_next = dz @ model.wh.T
    return gwx, gwh, gbh, gwy, gby, gembed


def rnn_train(model, corpus, cfg, train_frac=0.75, stop_train_loss=None):
    """Per-sequence SGD with BPTT over a stratified train/test split.

    The split is derived from ``cfg.seed`` so runs are reproducible.  When
    ``stop_train_loss`` is set, training stops at the end of the first epoch
    where train accuracy is 1.0 and train loss is below the threshold.
    Returns (trace, train_corpus, test_corpus).
    """
    train_set, test_set = split_corpus(corpus, train_frac, seed=cfg.seed)
    rng_shuffle = shuffle_stream(cfg.seed)
    trace = TrainingTrace()
    n = len(train_set.phrases)
    for epoch in range(cfg.epochs):
        order = rng_shuffle.permutation(n)
        for rank, idx in enumerate(order):
            seq = _check_sequence(model, train_set.phrases[idx])
            onehot = np.zeros((1, model.wy.shape[1]))
            onehot[0, train_set.labels[idx]] = 1.0
            states, dacts, logits = _unroll(model, seq)
            _, loss, dlogits = softmax_crossentropy(logits[None, :], onehot)
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, rank)
            grads = _backward(model, seq, states, dacts, dlogits[0])
            live = [g for g in grads if g is not None]
            clip_gradients(live, cfg.clip_norm)
            gwx, gwh, gbh, gwy, gby, gembed = grads
            model.wx -= cfg.lr * gwx
            model.wh -= cfg.lr * gwh
            model.bh[0] -= cfg.lr * gbh
            model.wy -= cfg.lr * gwy
            model.by[0] -= cfg.lr * gby
            if gembed is not None:
                model.embed -= cfg.lr * gembed
        train_acc, train_loss = rnn_evaluate(model, train_set)
        if len(test_set.phrases):
            test_acc, test_loss = rnn_evaluate(model, test_set)
            trace.record(train_loss, train_acc, test_loss, test_acc)
        else:
            trace.record(train_loss, train_acc)
        if stop_train_loss is not None and train_acc == 1.0 and train_loss < stop_train_loss:
            break
    return trace, train_set, test_set


def rnn_evaluate(model, corpus):
    """(accuracy, mean loss) over a corpus of sequences."""
    if not corpus.phrases:
        raise InputError("corpus is empty")
    correct = 0
    total_loss = 0.0
    for seq, label in zip(corpus.phrases, corpus.labels):
        seq = _check_sequence(model, seq)
        _, _, logits = _unroll(model, seq)
        onehot = np.zeros((1, model.wy.shape[1]))
        onehot[0, label] = 1.0
        probs, loss, _ = softmax_crossentropy(logits[None, :], onehot)
        total_loss += loss
        correct += int(probs[0].argmax() == label)
    n = len(corpus.phrases)
    return correct / n, total_loss / n
