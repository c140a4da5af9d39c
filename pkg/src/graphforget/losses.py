"""The five unlearning objectives, each returning (loss value, gradients).

Sign conventions: the gradient-ascent loss is *maximized* by the driver;
every other objective is minimized.  All gradients are exact.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidParameterError
from .model import EncodedBatch, ToyMemorizer

Grads = dict[str, np.ndarray]


def _as_batch(model: ToyMemorizer, data) -> EncodedBatch:
    batch = data if isinstance(data, EncodedBatch) else model.encode(data)
    if len(batch) == 0:
        raise InvalidParameterError("loss input set is empty")
    return batch


def _combine(*terms: Grads) -> Grads:
    out = {k: terms[0][k].copy() for k in terms[0]}
    for grads in terms[1:]:
        for k in grads:
            out[k] += grads[k]
    return out


def _negate(grads: Grads) -> Grads:
    return {k: -v for k, v in grads.items()}


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softplus(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def loss_ga(model: ToyMemorizer, forget) -> tuple[float, Grads]:
    """Mean forget loss; unlearning ascends its gradient."""
    batch = _as_batch(model, forget)
    losses, grads = model.ce_loss_and_grads(batch)
    return float(losses.mean()), grads


def loss_gd(model: ToyMemorizer, forget, retain) -> tuple[float, Grads]:
    """-L(forget) + L(retain): descend to unlearn while preserving retain."""
    f_batch = _as_batch(model, forget)
    r_batch = _as_batch(model, retain)
    f_losses, f_grads = model.ce_loss_and_grads(f_batch)
    r_losses, r_grads = model.ce_loss_and_grads(r_batch)
    loss = -float(f_losses.mean()) + float(r_losses.mean())
    return loss, _combine(_negate(f_grads), r_grads)


def loss_ukl(model: ToyMemorizer, reference: ToyMemorizer, forget, retain) -> tuple[float, Grads]:
    """-L(forget) plus KL(reference || model) over retain answer positions."""
    if model.vocab != reference.vocab or not model.same_shape(reference):
        raise InvalidParameterError("reference model vocabulary/shape does not match")
    f_batch = _as_batch(model, forget)
    r_batch = _as_batch(model, retain)

    f_losses, f_grads = model.ce_loss_and_grads(f_batch)

    hidden, logits = model.logits_rows(r_batch)
    _, ref_logits = reference.logits_rows(r_batch)
    logp_cur = _log_softmax(logits)
    logp_ref = _log_softmax(ref_logits)
    p_ref = np.exp(logp_ref)
    kl_rows = (p_ref * (logp_ref - logp_cur)).sum(axis=1)
    # mean over examples of (mean over that example's positions)
    row_scale = 1.0 / (len(r_batch) * r_batch.lengths[r_batch.example_index])
    kl_value = float((kl_rows * row_scale).sum())
    dlogits = (np.exp(logp_cur) - p_ref) * row_scale[:, None].astype(logits.dtype)
    kl_grads = model.backward_rows(r_batch, hidden, dlogits)

    loss = -float(f_losses.mean()) + kl_value
    return loss, _combine(_negate(f_grads), kl_grads)


def loss_dpo(model: ToyMemorizer, retain, forget_idk) -> tuple[float, Grads]:
    """L(retain) + L(forget with refusal answers): pure descent."""
    r_batch = _as_batch(model, retain)
    i_batch = _as_batch(model, forget_idk)
    r_losses, r_grads = model.ce_loss_and_grads(r_batch)
    i_losses, i_grads = model.ce_loss_and_grads(i_batch)
    return float(r_losses.mean()) + float(i_losses.mean()), _combine(r_grads, i_grads)


def loss_npo(model: ToyMemorizer, reference: ToyMemorizer, forget, beta: float) -> tuple[float, Grads]:
    """(2/beta) * mean log(1 + (pi/pi_ref)^beta) over the forget set.

    pi(x) is the sequence likelihood exp(-|x| * l(x)).  The gradient is a
    per-example reweighting of the ascent gradient whose weight
    2*sigmoid(beta * log(pi/pi_ref)) vanishes once an example is unlearned.
    """
    if beta <= 0:
        raise InvalidParameterError(f"beta must be positive, got {beta}")
    if model.vocab != reference.vocab or not model.same_shape(reference):
        raise InvalidParameterError("reference model vocabulary/shape does not match")
    batch = _as_batch(model, forget)
    l_cur = model.example_losses(batch).astype(np.float64)
    l_ref = reference.example_losses(batch).astype(np.float64)
    log_rho = -batch.lengths * (l_cur - l_ref)
    loss = float((2.0 / beta) * _softplus(beta * log_rho).mean())
    weights = -2.0 * batch.lengths * _sigmoid(beta * log_rho) / len(batch)
    _, grads = model.ce_loss_and_grads(batch, example_weights=weights)
    return loss, grads


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))
