"""Interference-alignment baseline that ignores the eavesdropper.

Interference leakage is minimised by alternating between the original
network and its reciprocal (roles of transmitters and receivers swapped,
channels replaced by their conjugate transposes). In each network, the
receive subspace of a user is spanned by the eigenvectors of its
interference covariance with the smallest eigenvalues. Both half-steps
minimise the same leakage, which is therefore non-increasing.

The solver reads only the legitimate channels, stream counts and powers.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from .metrics import mmse_receivers
from .model import crandn, make_rng, mix_seed
from .numerics import herm_eig, solve_hpd

__all__ = ["IAState", "IAOptions", "ia_min_leakage", "ia_receivers_mmse",
           "leakage", "orthonormal_init"]

# Salt folded into the channel seed for the random starting subspaces.
_INIT_SALT = 0x1A


@dataclass
class IAState:
    """Result of the alignment iterations.

    Attributes
    ----------
    v : list of np.ndarray
        Precoders with orthonormal columns scaled so ``||V_k||_F^2 = p_k``.
    u : list of np.ndarray
        Orthonormal receive subspaces.
    leakage : float
        Final leakage, computed with unit-power (orthonormal) precoders.
    iteration : int
        Number of completed alternations.
    history : list of float
        Leakage after every alternation, starting with the initial point.
    """
    v: list
    u: list
    leakage: float
    iteration: int
    history: list = field(default_factory=list)


@dataclass(frozen=True)
class IAOptions:
    """Controls for :func:`ia_min_leakage`.

    ``variant`` selects ``"min_leakage"`` (default) or ``"max_sinr"``.
    """
    max_iters: int = 500
    tol: float = 1e-8
    seed: int | None = None
    variant: str = "min_leakage"


def _least_eigvecs(q, d):
    # Ascending eigenvalues; ties keep the order returned by the solver.
    return herm_eig(q).vectors[:, :d]


def _interference(cfg, chans, filt, k):
    """``sum_{l != k} chans[k][l] F_l F_l^H chans[k][l]^H``."""
    rows = chans[k][k].shape[0]
    q = np.zeros((rows, rows), dtype=complex)
    for l in range(cfg.K):
        if l != k:
            g = chans[k][l] @ filt[l]
            q += g @ g.conj().T
    return q


def leakage(cfg, ch, v, u):
    """Total leakage ``sum_k Tr(U_k^H Q_k U_k)`` for the given filters."""
    return float(sum(np.real(np.trace(u[k].conj().T @ _interference(cfg, ch.h, v, k) @ u[k]))
                     for k in range(cfg.K)))


def orthonormal_init(cfg, seed):
    """Random orthonormal ``n_tx[k] x d[k]`` frames."""
    rng = make_rng(seed)
    return [np.linalg.qr(crandn(rng, cfg.n_tx[k], cfg.d[k]))[0] for k in range(cfg.K)]


def _reverse(ch, K):
    return [[ch.h[l][k].conj().T for l in range(K)] for k in range(K)]


def _scale(cfg, v):
    return [v[k] * math.sqrt(cfg.p[k] / cfg.d[k]) for k in range(cfg.K)]


def ia_min_leakage(cfg, ch, opts=None):
    """Alternating leakage minimisation.

    Parameters
    ----------
    cfg : SystemConfig
    ch : ChannelSet
    opts : IAOptions, optional
        ``seed`` defaults to a value derived from ``ch.seed``.

    Returns
    -------
    IAState
        Stops when the leakage changes by less than ``opts.tol`` or after
        ``opts.max_iters`` alternations.
    """
    opts = IAOptions() if opts is None else opts
    if opts.variant == "max_sinr":
        return _ia_max_sinr(cfg, ch, opts)
    if opts.variant != "min_leakage":
        raise ValueError(f"unknown IA variant {opts.variant!r}")
    seed = mix_seed(ch.seed, _INIT_SALT) if opts.seed is None else opts.seed
    rev = _reverse(ch, cfg.K)
    v = orthonormal_init(cfg, seed)
    u = [_least_eigvecs(_interference(cfg, ch.h, v, k), cfg.d[k]) for k in range(cfg.K)]
    hist = [leakage(cfg, ch, v, u)]
    it = 0
    while it < opts.max_iters and hist[-1] > 0.0:
        v = [_least_eigvecs(_interference(cfg, rev, u, k), cfg.d[k]) for k in range(cfg.K)]
        u = [_least_eigvecs(_interference(cfg, ch.h, v, k), cfg.d[k]) for k in range(cfg.K)]
        hist.append(leakage(cfg, ch, v, u))
        it += 1
        if abs(hist[-2] - hist[-1]) < opts.tol:
            break
    return IAState(v=_scale(cfg, v), u=u, leakage=hist[-1], iteration=it, history=hist)


def _ia_max_sinr(cfg, ch, opts):
    # Per-stream max-SINR filters, alternated over the two networks.
    seed = mix_seed(ch.seed, _INIT_SALT) if opts.seed is None else opts.seed
    K = cfg.K
    rev = _reverse(ch, K)
    v = orthonormal_init(cfg, seed)

    def sinr_filters(chans, tx, noise):
        out = []
        for k in range(K):
            c = noise[k] * np.eye(chans[k][k].shape[0], dtype=complex)
            for l in range(K):
                g = chans[k][l] @ tx[l] * math.sqrt(cfg.p[l] / cfg.d[l])
                c += g @ g.conj().T
            cols = []
            for s in range(cfg.d[k]):
                g = chans[k][k] @ tx[k][:, s] * math.sqrt(cfg.p[k] / cfg.d[k])
                w = solve_hpd(c - np.outer(g, g.conj()), g)
                cols.append(w / np.linalg.norm(w))
            out.append(np.stack(cols, axis=1))
        return out

    u = sinr_filters(ch.h, v, cfg.sigma2_rx)
    hist = [leakage(cfg, ch, v, u)]
    it = 0
    while it < opts.max_iters:
        v = sinr_filters(rev, u, cfg.sigma2_rx)
        u = sinr_filters(ch.h, v, cfg.sigma2_rx)
        hist.append(leakage(cfg, ch, v, u))
        it += 1
        if abs(hist[-2] - hist[-1]) < opts.tol:
            break
    return IAState(v=_scale(cfg, v), u=u, leakage=hist[-1], iteration=it, history=hist)


def ia_receivers_mmse(cfg, ch, v):
    """MMSE receivers for the baseline precoders (same formula as the design)."""
    return mmse_receivers(cfg, ch, v)
