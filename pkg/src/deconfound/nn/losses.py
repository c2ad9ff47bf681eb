"""Loss functions returning ``(loss, gradient(s))``; every loss is a batch mean."""
from __future__ import annotations

import numpy as np


def softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def cross_entropy(logits, labels):
    logits = np.asarray(logits)
    labels = np.asarray(labels, dtype=np.int64)
    n = len(logits)
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    loss = float(np.mean(logsum - z[np.arange(n), labels]))
    grad = softmax(logits)
    grad[np.arange(n), labels] -= 1
    return loss, grad / n


def contrastive_loss(e1, e2, same, margin: float = 1.0):
    """``A * D^2 + (1 - A) * max(margin - D, 0)^2`` with Euclidean ``D``, averaged over rows.

    Returns ``(loss, grad_e1, grad_e2)``.  At ``D = 0`` with ``A = 0`` the
    push direction is undefined and the gradient is taken as zero.
    """
    if margin <= 0:
        raise ValueError("margin must be positive")
    e1, e2 = np.asarray(e1), np.asarray(e2)
    if e1.shape != e2.shape:
        raise ValueError("embeddings must have the same shape")
    a = np.broadcast_to(np.asarray(same, dtype=e1.dtype), (len(e1),))
    diff = e1 - e2
    d = np.sqrt((diff * diff).sum(axis=1))
    hinge = np.maximum(margin - d, 0)
    n = len(e1)
    loss = float(np.mean(a * d * d + (1 - a) * hinge * hinge))
    safe = np.where(d > 0, d, 1)
    coef = 2 * a - (1 - a) * 2 * hinge / safe * (d > 0)
    g = (coef / n)[:, None] * diff
    return loss, g, -g


def pairwise_contrastive(z, labels, margin: float = 1.0):
    """Mean contrastive loss over all unordered row pairs of ``z``; ``A = 1`` iff labels match.

    Returns ``(loss, grad_z)``.
    """
    z = np.asarray(z)
    labels = np.asarray(labels)
    n = len(z)
    if n < 2:
        raise ValueError("need at least two rows for pairs")
    sq = (z * z).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2 * z @ z.T, 0)
    iu = np.triu_indices(n, 1)
    same = (labels[:, None] == labels[None, :]).astype(z.dtype)
    d = np.sqrt(d2)
    hinge = np.maximum(margin - d, 0)
    per = same * d2 + (1 - same) * hinge * hinge
    n_pairs = len(iu[0])
    loss = float(per[iu].sum() / n_pairs)
    safe = np.where(d > 0, d, 1)
    coef = 2 * same - 2 * (1 - same) * hinge / safe * (d > 0)
    np.fill_diagonal(coef, 0)
    coef = coef / n_pairs  # symmetric: each unordered pair appears twice
    grad = coef.sum(axis=1, keepdims=True) * z - coef @ z
    return loss, grad.astype(z.dtype)


def lsgan_generator_loss(d_fake):
    loss = float(np.mean((d_fake - 1) ** 2))
    return loss, 2 * (d_fake - 1) / d_fake.size


def lsgan_discriminator_loss(d_real, d_fake):
    loss = 0.5 * float(np.mean((d_real - 1) ** 2) + np.mean(d_fake**2))
    return loss, (d_real - 1) / d_real.size, d_fake / d_fake.size


def lsgan_losses(d_real, d_fake):
    """Least-squares adversarial objective; returns ``(generator_loss, discriminator_loss)``."""
    return lsgan_generator_loss(d_fake)[0], lsgan_discriminator_loss(d_real, d_fake)[0]


def _log_sigmoid(x):
    return -np.logaddexp(0, -x)


def logistic_generator_loss(d_fake):
    """Non-saturating form on raw discriminator scores: ``-log sigmoid(D(fake))``."""
    loss = float(-np.mean(_log_sigmoid(d_fake)))
    sig = 1 / (1 + np.exp(-d_fake))
    return loss, -(1 - sig) / d_fake.size


def logistic_discriminator_loss(d_real, d_fake):
    loss = float(-np.mean(_log_sigmoid(d_real)) - np.mean(_log_sigmoid(-d_fake)))
    sr = 1 / (1 + np.exp(-d_real))
    sf = 1 / (1 + np.exp(-d_fake))
    return loss, -(1 - sr) / d_real.size, sf / d_fake.size


def cycle_l1(x, x_roundtrip):
    """Mean absolute difference; returns ``(loss, grad wrt x_roundtrip)`` with subgradient 0 at ties."""
    diff = np.asarray(x_roundtrip) - np.asarray(x)
    return float(np.mean(np.abs(diff))), np.sign(diff) / diff.size

