"""Error covariances, achievable rates and secrecy rates.

Also hosts the MMSE receiver formulas shared by the transceiver design and
the alignment baseline, and a symbol-level Monte Carlo estimator used as a
test oracle for the closed-form MSE expressions.

Stream indices ``s`` are zero-based throughout.
"""
from dataclasses import dataclass, field

import numpy as np

from .model import crandn, make_rng, mix_seed
from .numerics import solve_hpd

__all__ = ["rx_covariance", "eve_covariance", "mmse_receivers",
           "eve_mmse_receivers", "mse_from_covariance", "legit_mse",
           "eve_mse", "total_mse", "stream_rate", "eve_stream_rate",
           "SecrecyRate", "secrecy_rate", "LinkMetrics", "link_metrics",
           "simulate_mse"]


def _gram(a):
    return a @ a.conj().T


def rx_covariance(cfg, ch, v, k):
    """Received covariance ``sum_l H_kl V_l V_l^H H_kl^H + sigma_k^2 I``."""
    c = cfg.sigma2_rx[k] * np.eye(cfg.n_rx[k], dtype=complex)
    for l in range(cfg.K):
        c += _gram(ch.h[k][l] @ v[l])
    return c


def eve_covariance(cfg, ch, v, exclude=None):
    """Covariance seen by the eavesdropper.

    Parameters
    ----------
    exclude : int, optional
        Drop the contribution of this transmitter.
    """
    c = cfg.sigma2_eve * np.eye(cfg.m_eve, dtype=complex)
    for l in range(cfg.K):
        if l != exclude:
            c += _gram(ch.h_e[l] @ v[l])
    return c


def mmse_receivers(cfg, ch, v):
    """Linear MMSE receive filters ``U_k = C_k^{-1} H_kk V_k``."""
    return [solve_hpd(rx_covariance(cfg, ch, v, k), ch.h[k][k] @ v[k])
            for k in range(cfg.K)]


def eve_mmse_receivers(cfg, ch, v):
    """Eavesdropper MMSE filters ``U_e,k = C_e^{-1} H_ek V_k``."""
    c = eve_covariance(cfg, ch, v)
    return [solve_hpd(c, ch.h_e[k] @ v[k]) for k in range(cfg.K)]


def mse_from_covariance(c, g, u):
    """``Tr(U^H C U - U^H G - G^H U + I)`` for cross term ``G = H V``."""
    d = u.shape[1]
    return float(np.real(np.trace(u.conj().T @ c @ u))
                 - 2.0 * np.real(np.vdot(u, g)) + d)


def legit_mse(cfg, ch, v, u, k):
    """Trace of the error covariance of user `k` at its own receiver.

    Examples
    --------
    With ``u = 0`` the error is the symbol energy, ``d[k]``.
    """
    return mse_from_covariance(rx_covariance(cfg, ch, v, k),
                               ch.h[k][k] @ v[k], u)


def eve_mse(cfg, ch, v, u_e, k):
    """Trace of the error covariance of user `k`'s symbols at the eavesdropper."""
    return mse_from_covariance(eve_covariance(cfg, ch, v), ch.h_e[k] @ v[k], u_e)


def total_mse(cfg, ch, v, u=None):
    """Sum of the legitimate MSEs; MMSE receivers are used if `u` is None."""
    if u is None:
        u = mmse_receivers(cfg, ch, v)
    return sum(legit_mse(cfg, ch, v, u[k], k) for k in range(cfg.K))


def _sinr_rate(c, g_s, u_s):
    # c is the full covariance; the stream's own term is removed from it.
    sig = abs(np.vdot(u_s, g_s)) ** 2
    if sig == 0.0:
        return 0.0
    z = np.real(np.vdot(u_s, c @ u_s)) - sig
    return float(np.log2(1.0 + sig / z))


def stream_rate(cfg, ch, v, u, k, s):
    """Rate in bits/s/Hz of stream `s` of user `k` at receiver `k`.

    The interference-plus-noise term collects the other streams of user
    `k`, every stream of the other users and the filtered noise
    ``sigma_k^2 ||u_s||^2``.
    """
    c = rx_covariance(cfg, ch, v, k)
    return _sinr_rate(c, ch.h[k][k] @ v[k][:, s], u[:, s])


def eve_stream_rate(cfg, ch, v, u_e, k, s):
    """Rate at which the eavesdropper can decode stream `s` of user `k`."""
    c = eve_covariance(cfg, ch, v)
    return _sinr_rate(c, ch.h_e[k] @ v[k][:, s], u_e[:, s])


@dataclass(frozen=True)
class SecrecyRate:
    """Legitimate rate, eavesdropper rate and their difference for one user."""
    rate: float
    eve_rate: float
    raw: float
    clamped: float


def secrecy_rate(cfg, ch, v, u, u_e, k):
    """Secrecy rate of user `k`, summed over its streams.

    Returns
    -------
    SecrecyRate
        ``raw`` may be negative; ``clamped`` is ``max(raw, 0)``.
    """
    c = rx_covariance(cfg, ch, v, k)
    c_e = eve_covariance(cfg, ch, v)
    g = ch.h[k][k] @ v[k]
    g_e = ch.h_e[k] @ v[k]
    rate = sum(_sinr_rate(c, g[:, s], u[:, s]) for s in range(cfg.d[k]))
    eve_rate = sum(_sinr_rate(c_e, g_e[:, s], u_e[:, s]) for s in range(cfg.d[k]))
    raw = rate - eve_rate
    return SecrecyRate(rate, eve_rate, raw, max(raw, 0.0))


@dataclass
class LinkMetrics:
    """Per-user and aggregate link figures for one set of precoders.

    Legitimate receivers and the eavesdropper both use MMSE filters.
    """
    legit_mse: list
    eve_mse: list
    rate: list
    eve_rate: list
    secrecy_rate_raw: list
    secrecy_rate_clamped: list
    total_mse: float = field(init=False)
    sum_rate: float = field(init=False)
    sum_secrecy_rate: float = field(init=False)

    def __post_init__(self):
        self.total_mse = float(sum(self.legit_mse))
        self.sum_rate = float(sum(self.rate))
        self.sum_secrecy_rate = float(sum(self.secrecy_rate_clamped))


def link_metrics(cfg, ch, v):
    """Evaluate :class:`LinkMetrics` for precoders `v`."""
    u = mmse_receivers(cfg, ch, v)
    u_e = eve_mmse_receivers(cfg, ch, v)
    sec = [secrecy_rate(cfg, ch, v, u[k], u_e[k], k) for k in range(cfg.K)]
    return LinkMetrics(
        legit_mse=[legit_mse(cfg, ch, v, u[k], k) for k in range(cfg.K)],
        eve_mse=[eve_mse(cfg, ch, v, u_e[k], k) for k in range(cfg.K)],
        rate=[r.rate for r in sec],
        eve_rate=[r.eve_rate for r in sec],
        secrecy_rate_raw=[r.raw for r in sec],
        secrecy_rate_clamped=[r.clamped for r in sec])


def simulate_mse(cfg, ch, v, filt, link, n_samples, seed, block=20000):
    """Monte Carlo estimate of the symbol MSE through a linear filter.

    Unit-variance Gaussian symbols are sent by every transmitter, the
    chosen receiver adds white Gaussian noise and applies ``filt^H``. The
    estimate is the mean of ``||s_hat - s_k||^2`` over `n_samples` draws.

    Parameters
    ----------
    filt : np.ndarray
        Receive filter, ``n_rx[k] x d[k]`` or ``m_eve x d[k]``.
    link : tuple
        ``("legit", k)`` or ``("eve", k)``.
    n_samples : int
        Number of symbol vectors.
    seed : int
        Seed; blocks of `block` samples use sub-streams ``mix_seed(seed, b)``.

    Returns
    -------
    float
    """
    kind, k = link
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if kind == "legit":
        chans, s2 = ch.h[k], cfg.sigma2_rx[k]
    elif kind == "eve":
        chans, s2 = ch.h_e, cfg.sigma2_eve
    else:
        raise ValueError(f"unknown link {kind!r}")
    n_out = chans[0].shape[0]
    acc = 0.0
    done = 0
    b = 0
    while done < n_samples:
        n = min(block, n_samples - done)
        rng = make_rng(mix_seed(seed, b))
        y = np.sqrt(s2) * crandn(rng, n_out, n)
        own = None
        for l in range(cfg.K):
            s_l = crandn(rng, cfg.d[l], n)
            y += chans[l] @ (v[l] @ s_l)
            if l == k:
                own = s_l
        err = filt.conj().T @ y - own
        acc += float(np.sum(np.abs(err) ** 2))
        done += n
        b += 1
    return acc / n_samples
