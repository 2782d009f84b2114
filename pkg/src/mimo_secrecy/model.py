"""Scenario configuration, reproducible channel sampling and SNR helpers.

Seeds
-----
Every random quantity in the package is derived from a 64-bit integer
seed. Sub-streams are obtained with :func:`mix_seed`, which folds indices
into a master seed through the SplitMix64 finaliser::

    h = splitmix64(master)
    for i in indices:
        h = splitmix64(h ^ i)

Each derived seed keys a ``numpy.random.Philox`` counter-based generator,
and Gaussian variates come from ``Generator.standard_normal`` (ziggurat).
"""
import json
import math
from dataclasses import asdict, dataclass, replace
from typing import Sequence

import numpy as np

__all__ = ["ConfigError", "SystemConfig", "ChannelSet", "validate_config",
           "check_channels", "sample_channels", "noise_from_snr",
           "mix_seed", "make_rng", "crandn", "config_to_dict",
           "config_from_dict", "load_config", "save_config"]

MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised for an invalid scenario description."""


def _as_tuple(x, kind):
    return tuple(kind(v) for v in x)


@dataclass(frozen=True)
class SystemConfig:
    """Constants of one K-user MIMO interference channel with an eavesdropper.

    Per-user quantities are tuples of length `K`.

    Attributes
    ----------
    K : int
        Number of transmitter/receiver pairs.
    n_tx : tuple of int
        Transmit antennas per user.
    n_rx : tuple of int
        Receive antennas per user.
    m_eve : int
        Eavesdropper antennas.
    d : tuple of int
        Data streams per user.
    p : tuple of float
        Transmit power budgets (linear).
    sigma2_rx : tuple of float
        Noise variance at each legitimate receiver.
    sigma2_eve : float
        Noise variance at the eavesdropper.
    epsilon : tuple of float
        Lower bound on the eavesdropper's MSE for each user. A value of 0
        disables the constraint for that user; otherwise it must exceed 1.
    """
    K: int
    n_tx: tuple
    n_rx: tuple
    m_eve: int
    d: tuple
    p: tuple
    sigma2_rx: tuple
    sigma2_eve: float
    epsilon: tuple

    def __post_init__(self):
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "m_eve", int(self.m_eve))
        object.__setattr__(self, "sigma2_eve", float(self.sigma2_eve))
        for name, kind in (("n_tx", int), ("n_rx", int), ("d", int),
                           ("p", float), ("sigma2_rx", float),
                           ("epsilon", float)):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), kind))

    @classmethod
    def symmetric(cls, K=3, n=4, m=None, m_eve=6, d=2, p=1.0, snr_db=25.0,
                  epsilon=1.5):
        """Equal-dimension, equal-power configuration.

        Noise variances follow from `snr_db` through :func:`noise_from_snr`
        and are the same at the eavesdropper.

        Examples
        --------
        >>> cfg = SystemConfig.symmetric(K=3, n=4, m_eve=6, d=2, snr_db=10)
        >>> cfg.sigma2_rx
        (0.1, 0.1, 0.1)
        """
        m = n if m is None else m
        s2 = noise_from_snr(p, snr_db)
        return cls(K=K, n_tx=(n,) * K, n_rx=(m,) * K, m_eve=m_eve,
                   d=(d,) * K, p=(p,) * K, sigma2_rx=(s2,) * K,
                   sigma2_eve=s2, epsilon=(epsilon,) * K)

    def with_snr(self, snr_db):
        """Copy with all noise variances set from `snr_db`.

        Receiver `k` uses ``p[k]``; the eavesdropper uses ``p[0]``.
        """
        return replace(
            self,
            sigma2_rx=tuple(noise_from_snr(pk, snr_db) for pk in self.p),
            sigma2_eve=noise_from_snr(self.p[0], snr_db))

    def secrecy_enabled(self, k):
        """Whether the eavesdropper constraint is active for user `k`."""
        return self.epsilon[k] > 0


@dataclass
class ChannelSet:
    """One realisation of all channel matrices.

    Attributes
    ----------
    h : list of list of np.ndarray
        ``h[k][l]`` is the ``n_rx[k] x n_tx[l]`` channel from transmitter
        ``l`` to receiver ``k``.
    h_e : list of np.ndarray
        ``h_e[l]`` is the ``m_eve x n_tx[l]`` channel from transmitter
        ``l`` to the eavesdropper.
    seed : int
        Seed the set was drawn from.
    """
    h: list
    h_e: list
    seed: int = 0


def validate_config(cfg):
    """Check the invariants of a :class:`SystemConfig`.

    Returns
    -------
    SystemConfig
        The same object, when valid.

    Raises
    ------
    ConfigError
        Listing every violated invariant with its user index.
    """
    problems = []
    if cfg.K < 1:
        raise ConfigError(f"K must be >= 1, got {cfg.K}")
    for name in ("n_tx", "n_rx", "d", "p", "sigma2_rx", "epsilon"):
        if len(getattr(cfg, name)) != cfg.K:
            problems.append(f"{name} has {len(getattr(cfg, name))} entries, expected K={cfg.K}")
    if problems:
        raise ConfigError("; ".join(problems))
    if cfg.m_eve < 1:
        problems.append(f"m_eve must be >= 1, got {cfg.m_eve}")
    if not (cfg.sigma2_eve > 0 and math.isfinite(cfg.sigma2_eve)):
        problems.append(f"sigma2_eve must be positive, got {cfg.sigma2_eve}")
    for k in range(cfg.K):
        if cfg.n_tx[k] < 1 or cfg.n_rx[k] < 1:
            problems.append(f"user {k}: antenna counts must be >= 1")
        if not 1 <= cfg.d[k] <= min(cfg.n_tx[k], cfg.n_rx[k]):
            problems.append(f"user {k}: d={cfg.d[k]} outside [1, min(n_tx, n_rx)]"
                            f" = [1, {min(cfg.n_tx[k], cfg.n_rx[k])}]")
        if not (cfg.p[k] > 0 and math.isfinite(cfg.p[k])):
            problems.append(f"user {k}: power p={cfg.p[k]} must be positive")
        if not (cfg.sigma2_rx[k] > 0 and math.isfinite(cfg.sigma2_rx[k])):
            problems.append(f"user {k}: sigma2_rx={cfg.sigma2_rx[k]} must be positive")
        eps = cfg.epsilon[k]
        if not math.isfinite(eps) or (eps != 0 and eps <= 1):
            problems.append(f"user {k}: epsilon={eps} must be 0 (disabled) or > 1")
    if problems:
        raise ConfigError("; ".join(problems))
    return cfg


def check_channels(cfg, ch):
    """Raise :class:`ConfigError` unless `ch` matches the shapes of `cfg`."""
    if len(ch.h) != cfg.K or len(ch.h_e) != cfg.K:
        raise ConfigError("channel set does not have K transmitters")
    for k in range(cfg.K):
        for l in range(cfg.K):
            if ch.h[k][l].shape != (cfg.n_rx[k], cfg.n_tx[l]):
                raise ConfigError(f"h[{k}][{l}] has shape {ch.h[k][l].shape}")
        if ch.h_e[k].shape != (cfg.m_eve, cfg.n_tx[k]):
            raise ConfigError(f"h_e[{k}] has shape {ch.h_e[k].shape}")


def _splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def mix_seed(master, *indices):
    """Derive an independent 64-bit seed from a master seed and indices.

    Examples
    --------
    >>> mix_seed(1, 0) != mix_seed(1, 1)
    True
    """
    h = _splitmix64(int(master) & MASK64)
    for i in indices:
        h = _splitmix64(h ^ (int(i) & MASK64))
    return h


def make_rng(seed):
    """``numpy.random.Generator`` over a Philox stream keyed by `seed`."""
    return np.random.Generator(np.random.Philox(key=int(seed) & MASK64))


def crandn(rng, *shape):
    """Circularly-symmetric complex Gaussian samples of unit variance."""
    g = rng.standard_normal((2,) + shape)
    return (g[0] + 1j * g[1]) / math.sqrt(2.0)


def sample_channels(cfg, seed):
    """Draw all channel matrices with i.i.d. CN(0, 1) entries.

    Parameters
    ----------
    cfg : SystemConfig
        Scenario; only the antenna counts are used.
    seed : int
        64-bit seed. Identical ``(cfg, seed)`` pairs give identical sets.

    Returns
    -------
    ChannelSet
    """
    validate_config(cfg)
    rng = make_rng(seed)
    h = [[crandn(rng, cfg.n_rx[k], cfg.n_tx[l]) for l in range(cfg.K)]
         for k in range(cfg.K)]
    h_e = [crandn(rng, cfg.m_eve, cfg.n_tx[l]) for l in range(cfg.K)]
    return ChannelSet(h=h, h_e=h_e, seed=int(seed))


def noise_from_snr(p, snr_db):
    """Noise variance giving ``10 log10(p / sigma2) = snr_db``.

    Examples
    --------
    >>> noise_from_snr(1.0, 10.0)
    0.1
    """
    return p / 10.0 ** (snr_db / 10.0)


_FIELDS = ("K", "n_tx", "n_rx", "m_eve", "d", "p", "sigma2_rx",
           "sigma2_eve", "epsilon")


def config_to_dict(cfg):
    """Plain-dict form of a :class:`SystemConfig` (lists for tuples)."""
    out = asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in out.items()}


def config_from_dict(data):
    """Build and validate a :class:`SystemConfig` from a mapping.

    Scalars are accepted for per-user fields and broadcast to all users.
    """
    unknown = set(data) - set(_FIELDS)
    missing = set(_FIELDS) - set(data)
    if unknown or missing:
        raise ConfigError(f"config fields: missing {sorted(missing)}, unknown {sorted(unknown)}")
    kw = dict(data)
    K = int(kw["K"])
    for name in ("n_tx", "n_rx", "d", "p", "sigma2_rx", "epsilon"):
        if not isinstance(kw[name], Sequence):
            kw[name] = [kw[name]] * K
    try:
        cfg = SystemConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    return validate_config(cfg)


def save_config(cfg, path):
    """Write `cfg` as JSON."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
        fh.write("\n")


def load_config(path):
    """Read a JSON configuration written by :func:`save_config`.

    Raises
    ------
    ConfigError
        If the content is malformed or invalid.
    OSError
        If the file cannot be read.
    """
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    return config_from_dict(data)
