"""Minimum total-MSE transceiver design with an eavesdropper MSE constraint.

The design minimises ``sum_k Tr(E_k)`` over precoders ``V_k`` subject to
``||V_k||_F^2 <= p_k`` and ``Tr(E_eve,k) >= epsilon_k``, alternating
between MMSE receive filters and multiplier-regularised precoder updates.

Two precoder-update rules are provided.

``method="literal"``
    One outer iteration computes the receivers, solves the power
    multiplier of every user with the previous eavesdropper multiplier,
    forms intermediate precoders, then sweeps the users in order, solving
    the eavesdropper multiplier against a fixed eavesdropper filter through
    a closed-form rational function of ``mu`` and setting the final
    precoder.
``method="restricted"``
    Each user solves, at fixed receivers, the convex problem obtained by
    replacing the eavesdropper MSE (a convex function of the precoder Gram
    matrix when the eavesdropper uses its MMSE filter) by its tangent at
    the current point. The stationarity conditions at a fixed point, and
    the multipliers, coincide with those of the first method.

Notation used below, for user ``k`` with receivers ``U`` and eavesdropper
filters ``U_e`` held fixed::

    A   = sum_l H_lk^H U_l U_l^H H_lk
    M   = H_kk^H U_k
    N   = H_ek^H U_e,k
    Psi = A - mu N N^H,          Theta = M - mu N
    V   = (Psi + lam I)^{-1} Theta
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .metrics import (eve_covariance, eve_mmse_receivers, eve_mse,
                      legit_mse, mmse_receivers)
from .model import crandn, make_rng, validate_config
from .numerics import (HermEig, NumericsError, SolverError,
                       find_root_monotone, herm_eig, solve_hpd)

__all__ = ["MTMSEError", "RegularizationError", "InfeasibleConstraint",
           "TransceiverState", "MultiplierWorkspaceA", "MultiplierWorkspaceB",
           "IterationRecord", "IterationTrace", "MTMSEOptions",
           "init_precoders", "update_receivers", "update_eve_receivers",
           "interference_gram", "build_workspace_a", "solve_lambda_hat",
           "precoder_candidate", "eve_mse_of_precoder", "build_workspace_b",
           "eve_mse_closed_form_mu", "eve_mse_direct_mu", "solve_mu_tilde",
           "mtmse_iterate", "run_mtmse", "kkt_report", "METHODS"]

logger = logging.getLogger(__name__)

METHODS = ("literal", "restricted")

LAMBDA_FLOOR = 1e-12
POLE_GUARD = 1e-12
POLE_RADIUS = 1e-9
MU_MAX = 1e6
SINGULAR_EIG = 1e-12


class MTMSEError(NumericsError):
    """A solver failure inside an iteration, tagged with user and step."""


class RegularizationError(SolverError):
    """``Psi + lam I`` is numerically singular."""


class InfeasibleConstraint(NumericsError):
    """No multiplier below the configured cap meets the eavesdropper target."""


@dataclass
class TransceiverState:
    """Iterate of the alternating design.

    Attributes
    ----------
    v : list of np.ndarray
        Precoders, ``n_tx[k] x d[k]``.
    u : list of np.ndarray
        Receive filters used in the last iteration.
    u_e : list of np.ndarray
        Eavesdropper filters used in the last iteration.
    lam, mu : np.ndarray
        Power and eavesdropper multipliers, one per user.
    iteration : int
        Completed outer iterations.
    flags : list of str
        Notes raised during the run (e.g. an infeasible multiplier solve).
    """
    v: list
    u: list
    u_e: list
    lam: np.ndarray
    mu: np.ndarray
    iteration: int = 0
    flags: list = field(default_factory=list)


@dataclass
class MultiplierWorkspaceA:
    """Matrices behind the power-multiplier equation of one user.

    ``theta`` projected on the eigenvectors of ``psi`` gives the weights of
    ``sum_i w_i / (lam + sigma_i)^2 = p``.
    """
    psi: np.ndarray
    theta: np.ndarray
    eig: HermEig

    @property
    def weights(self):
        proj = self.eig.vectors.conj().T @ self.theta
        return np.sum(np.abs(proj) ** 2, axis=1)


@dataclass
class MultiplierWorkspaceB:
    """Matrices behind the eavesdropper-multiplier equation of one user.

    With ``G = N^H Phi^{-1} N = Gamma diag(Lambda) Gamma^H``,
    ``Delta = N^H Phi^{-1} M``, ``Xi = Delta Delta^H`` and
    ``Pi = Gamma^H Delta^H Gamma``, the eavesdropper MSE of
    ``V(mu) = (Phi - mu N N^H)^{-1} (M - mu N)`` is::

        Tr(Omega) - d + sum_i a_i / (1 - mu Lambda_i)^2
        a_i = (Gamma^H Xi Gamma)_ii - 2 Re(Pi_ii) + 1

    where ``Omega`` collects everything not involving user k's precoder.
    """
    phi: np.ndarray
    m_mat: np.ndarray
    n_mat: np.ndarray
    gamma_lambda: HermEig
    delta: np.ndarray
    xi: np.ndarray
    pi_mat: np.ndarray
    omega: np.ndarray

    @property
    def coefficients(self):
        """Numerators ``a_i`` of the rational function, clipped at 0."""
        gam = self.gamma_lambda.vectors
        a = (np.real(np.einsum("ji,jk,ki->i", gam.conj(), self.xi, gam))
             - 2.0 * np.real(np.diag(self.pi_mat)) + 1.0)
        return np.maximum(a, 0.0)

    @property
    def poles(self):
        """Sorted poles ``1 / Lambda_i`` over positive ``Lambda_i``."""
        lam = self.gamma_lambda.values
        return np.sort(1.0 / lam[lam > 0])


@dataclass(frozen=True)
class IterationRecord:
    """Snapshot of one iterate; ``iteration`` 0 is the initial point."""
    iteration: int
    total_mse: float
    user_mse: tuple
    eve_mse: tuple
    lam: tuple
    mu: tuple
    power: tuple


@dataclass
class IterationTrace:
    """Per-iteration records of a run with its termination status."""
    records: list = field(default_factory=list)
    status: str = "running"

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def iterations(self):
        """Number of completed outer iterations."""
        return len(self.records) - 1

    @property
    def total_mse(self):
        return np.array([r.total_mse for r in self.records])

    def max_increase(self):
        """Largest step-to-step increase of the total MSE (0 if none)."""
        t = self.total_mse
        if t.size < 2:
            return 0.0
        return float(max(0.0, np.max(np.diff(t))))

    def is_monotone(self, slack=1e-9):
        return self.max_increase() <= slack


@dataclass(frozen=True)
class MTMSEOptions:
    """Run controls for :func:`run_mtmse`.

    Attributes
    ----------
    max_iters : int
        Outer-iteration cap.
    rel_tol : float
        Stop when the relative change of the total MSE is at most this.
    seed : int
        Seed of the random initial precoders.
    method : str
        ``"literal"`` or ``"restricted"``; see the module docstring.
    mu_max : float
        Cap of the eavesdropper-multiplier search.
    descent_slack : float
        Total-MSE increases above this are logged as warnings.
    """
    max_iters: int = 50
    rel_tol: float = 1e-6
    seed: int = 0
    method: str = "literal"
    mu_max: float = MU_MAX
    descent_slack: float = 1e-9


def init_precoders(cfg, seed):
    """Random CN(0, 1) precoders scaled to full power ``||V_k||_F^2 = p_k``."""
    rng = make_rng(seed)
    v = []
    for k in range(cfg.K):
        x = crandn(rng, cfg.n_tx[k], cfg.d[k])
        v.append(x * math.sqrt(cfg.p[k]) / np.linalg.norm(x))
    return v


def update_receivers(cfg, ch, v):
    """MMSE receive filters for precoders `v`."""
    return mmse_receivers(cfg, ch, v)


def update_eve_receivers(cfg, ch, v):
    """Eavesdropper MMSE filters for precoders `v`."""
    return eve_mmse_receivers(cfg, ch, v)


def interference_gram(cfg, ch, u, k):
    """``A_k = sum_l H_lk^H U_l U_l^H H_lk``, the precoder-side quadratic term."""
    a = np.zeros((cfg.n_tx[k], cfg.n_tx[k]), dtype=complex)
    for l in range(cfg.K):
        g = ch.h[l][k].conj().T @ u[l]
        a += g @ g.conj().T
    return a


def build_workspace_a(cfg, ch, u, u_e, mu_k, k):
    """Workspace for the power multiplier of user `k` at fixed ``mu_k``."""
    if mu_k < 0:
        raise ValueError("mu_k must be non-negative")
    n = ch.h_e[k].conj().T @ u_e[k]
    psi = interference_gram(cfg, ch, u, k) - mu_k * (n @ n.conj().T)
    psi = 0.5 * (psi + psi.conj().T)
    theta = ch.h[k][k].conj().T @ u[k] - mu_k * n
    return MultiplierWorkspaceA(psi=psi, theta=theta, eig=herm_eig(psi))


def lambda_floor(ws):
    """Smallest admissible power multiplier, ``max(0, -sigma_min) + 1e-12``."""
    return max(0.0, -float(ws.eig.values[0])) + LAMBDA_FLOOR


def solve_lambda_hat(ws, p_k, ftol=1e-12):
    """Power multiplier giving ``||V(lam)||_F^2 = p_k``.

    Parameters
    ----------
    ws : MultiplierWorkspaceA
    p_k : float
        Power budget.
    ftol : float
        Relative tolerance on the power.

    Returns
    -------
    float or None
        The root on ``(lambda_floor(ws), inf)``, or ``None`` when the power
        is already below `p_k` at the floor, i.e. the constraint is inactive.
    """
    if p_k <= 0:
        raise ValueError("p_k must be positive")
    w = ws.weights
    s = ws.eig.values
    lb = lambda_floor(ws)
    if kernels.secular_sum(w, s, lb) <= p_k:
        return None
    return kernels.secular_root(w, s, p_k, lb, ftol)


def precoder_candidate(psi, theta, lam):
    """Solve ``(psi + lam I) V = theta``.

    Raises
    ------
    RegularizationError
        If the smallest eigenvalue magnitude of ``psi + lam I`` is at most
        ``1e-12``; ``min_eig`` carries the offending value.
    """
    a = psi + lam * np.eye(psi.shape[0])
    ev = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    worst = ev[np.argmin(np.abs(ev))]
    if abs(worst) <= SINGULAR_EIG:
        raise RegularizationError(
            f"near-singular precoder system (eigenvalue {worst:.3e})", float(worst))
    return np.linalg.solve(a, theta)


def _candidate_with_retry(psi, theta, lam, k, step):
    try:
        return precoder_candidate(psi, theta, lam)
    except RegularizationError:
        try:
            return precoder_candidate(psi, theta, lam + 1e-10)
        except RegularizationError as exc:
            raise MTMSEError(f"user {k}, {step}: {exc}") from exc


def eve_mse_of_precoder(cfg, ch, u_e, v, k):
    """Eavesdropper MSE of user `k` for precoders `v` and fixed filters `u_e`."""
    return eve_mse(cfg, ch, v, u_e[k], k)


def build_workspace_b(cfg, ch, u, u_e, v, lam_k, k):
    """Workspace for the eavesdropper multiplier of user `k`.

    Parameters
    ----------
    v : list of np.ndarray
        Current precoders of the other users (entry `k` is ignored).
    lam_k : float
        Power multiplier of user `k`, held fixed.
    """
    a = interference_gram(cfg, ch, u, k)
    phi = a + lam_k * np.eye(cfg.n_tx[k])
    phi = 0.5 * (phi + phi.conj().T)
    m = ch.h[k][k].conj().T @ u[k]
    n = ch.h_e[k].conj().T @ u_e[k]
    sol = solve_hpd(phi, np.hstack([n, m]))
    d = cfg.d[k]
    g = n.conj().T @ sol[:, :d]
    delta = n.conj().T @ sol[:, d:]
    gl = herm_eig(g)
    gam = gl.vectors
    c_rest = eve_covariance(cfg, ch, v, exclude=k)
    ue = u_e[k]
    omega = ue.conj().T @ c_rest @ ue + np.eye(d)
    return MultiplierWorkspaceB(
        phi=phi, m_mat=m, n_mat=n, gamma_lambda=gl, delta=delta,
        xi=delta @ delta.conj().T, pi_mat=gam.conj().T @ delta.conj().T @ gam,
        omega=0.5 * (omega + omega.conj().T))


def eve_mse_closed_form_mu(ws, mu, d_k):
    """Eavesdropper MSE of ``V(mu)`` from the rational closed form.

    Raises
    ------
    numerics.NumericsError
        If `mu` lies within ``1e-12`` of a pole ``1 / Lambda_i``.
    """
    poles = ws.poles
    if poles.size and np.min(np.abs(poles - mu)) <= POLE_GUARD:
        raise NumericsError(f"mu={mu} is at a pole of the eavesdropper MSE")
    const = float(np.real(np.trace(ws.omega))) - d_k
    return kernels.rational_value(ws.coefficients, ws.gamma_lambda.values,
                                  const, mu)


def eve_mse_direct_mu(ws, mu):
    """Eavesdropper MSE of ``V(mu)`` by explicit matrix evaluation."""
    n = ws.n_mat
    v = np.linalg.solve(ws.phi - mu * (n @ n.conj().T), ws.m_mat - mu * n)
    e = n.conj().T @ v - np.eye(n.shape[1])
    return float(np.real(np.trace(ws.omega))) - n.shape[1] + float(np.sum(np.abs(e) ** 2))


def _intervals(poles, mu_max):
    lo = 0.0
    for p in poles:
        if p >= mu_max:
            break
        yield lo, p * (1.0 - POLE_RADIUS)
        lo = p * (1.0 + POLE_RADIUS)
    if lo < mu_max:
        yield lo, mu_max


def solve_mu_tilde(ws, epsilon_k, d_k, mu_max=MU_MAX, ftol=1e-10):
    """Smallest ``mu >= 0`` with eavesdropper MSE of ``V(mu)`` equal to `epsilon_k`.

    Returns 0 when the unconstrained candidate already meets the target.
    Otherwise the pole-free intervals ``(0, 1/Lambda_max)``, then the
    intervals between consecutive poles, are searched in order. Every term
    of the rational function is convex on each interval, so an interval
    holds a crossing iff its minimum is below the target; the minimiser is
    located from the monotone derivative.

    Raises
    ------
    InfeasibleConstraint
        If no crossing exists below `mu_max`.
    """
    if epsilon_k <= 0:
        return 0.0
    a = ws.coefficients
    lam = ws.gamma_lambda.values
    const = float(np.real(np.trace(ws.omega))) - d_k
    tol = ftol * max(1.0, epsilon_k)

    def g(mu):
        return kernels.rational_value(a, lam, const, mu) - epsilon_k

    if g(0.0) >= 0:
        return 0.0
    for lo, hi in _intervals(ws.poles, mu_max):
        if hi <= lo:
            continue
        if g(lo) >= 0:
            # Left end already above target: look for the dip.
            argmin = _interval_argmin(a, lam, lo, hi)
            if g(argmin) >= 0:
                continue
            return find_root_monotone(lambda m: -g(m), lo, argmin, tol)
        if g(hi) >= 0:
            return kernels.rational_root(a, lam, const, epsilon_k, lo, hi, tol)
    raise InfeasibleConstraint(
        f"eavesdropper target {epsilon_k} not reachable for mu <= {mu_max}")


def _interval_argmin(a, lam, lo, hi):
    def slope(mu):
        return float(np.sum(2.0 * a * lam / (1.0 - mu * lam) ** 3))
    if slope(hi) <= 0:
        return hi
    if slope(lo) >= 0:
        return lo
    return find_root_monotone(slope, lo, hi, 1e-14)


def _record(cfg, ch, state):
    u = update_receivers(cfg, ch, state.v)
    u_e = update_eve_receivers(cfg, ch, state.v)
    user = tuple(legit_mse(cfg, ch, state.v, u[k], k) for k in range(cfg.K))
    eve = tuple(eve_mse(cfg, ch, state.v, u_e[k], k) for k in range(cfg.K))
    return IterationRecord(
        iteration=state.iteration, total_mse=float(sum(user)), user_mse=user,
        eve_mse=eve, lam=tuple(float(x) for x in state.lam),
        mu=tuple(float(x) for x in state.mu),
        power=tuple(float(np.linalg.norm(x) ** 2) for x in state.v))


def _iterate_literal(cfg, ch, state, mu_max):
    K = cfg.K
    v_prev = state.v
    u = update_receivers(cfg, ch, v_prev)
    u_e = update_eve_receivers(cfg, ch, v_prev)
    lam = np.zeros(K)
    mu = np.array(state.mu, dtype=float)
    flags = list(state.flags)
    v_new = []
    for k in range(K):
        ws = build_workspace_a(cfg, ch, u, u_e, mu[k], k)
        lam_hat = solve_lambda_hat(ws, cfg.p[k])
        if lam_hat is None:
            # Inactive power constraint; keep the system positive definite
            # when psi is indefinite.
            lam[k] = 0.0 if ws.eig.values[0] > 0 else lambda_floor(ws)
        else:
            lam[k] = max(lam_hat, 0.0)
        v_new.append(_candidate_with_retry(ws.psi, ws.theta, lam[k], k,
                                           "intermediate precoder"))
    for k in range(K):
        if cfg.secrecy_enabled(k):
            wsb = build_workspace_b(cfg, ch, u, u_e, v_new, lam[k], k)
            try:
                mu_t = solve_mu_tilde(wsb, cfg.epsilon[k], cfg.d[k], mu_max)
            except InfeasibleConstraint:
                mu_t = mu[k]
                flags.append(f"iteration {state.iteration + 1}: user {k} eavesdropper target infeasible")
            mu[k] = max(mu_t, 0.0)
        else:
            mu[k] = 0.0
        n = ch.h_e[k].conj().T @ u_e[k]
        psi = interference_gram(cfg, ch, u, k) - mu[k] * (n @ n.conj().T)
        theta = ch.h[k][k].conj().T @ u[k] - mu[k] * n
        v_new[k] = _candidate_with_retry(psi, theta, lam[k], k, "final precoder")
    return TransceiverState(v=v_new, u=u, u_e=u_e, lam=lam, mu=mu,
                            iteration=state.iteration + 1, flags=flags)


def _restore_eve(x0, epsilon):
    """Scale factor ``t`` with ``Tr((I + t^2 X0)^{-1}) = epsilon``."""
    xi = np.maximum(np.linalg.eigvalsh(x0), 0.0)
    return find_root_monotone(lambda t: float(np.sum(1.0 / (1.0 + t * t * xi))) - epsilon,
                              0.0, 1.0, 1e-14)


class _TangentQCQP:
    """Per-user convex subproblem of the restricted method.

    minimise ``Tr(V^H A V) - 2 Re Tr(V^H M)`` subject to
    ``||V||_F^2 <= p`` and ``Tr(W V^H Q V) <= c``. Rotating the columns of
    ``V`` onto the eigenvectors of ``W`` decouples them, so each column
    solves ``(A + lam I + mu w_j Q) v_j = m_j``.
    """

    def __init__(self, a, m, q, w_mat, c, p):
        self.a, self.q, self.c, self.p = a, q, c, p
        self.w, self.e = np.linalg.eigh(0.5 * (w_mat + w_mat.conj().T))
        self.m = m @ self.e
        self._cache = {}

    def _eig(self, mu):
        if mu not in self._cache:
            parts = [np.linalg.eigh(self.a + mu * wj * self.q) for wj in self.w]
            s = np.concatenate([x[0] for x in parts])
            wt = np.concatenate([np.abs(x[1].conj().T @ self.m[:, j]) ** 2
                                 for j, x in enumerate(parts)])
            self._cache = {mu: (parts, s, wt)}
        return self._cache[mu]

    def lam_of(self, mu):
        _, s, wt = self._eig(mu)
        lb = max(0.0, -float(np.min(s))) + LAMBDA_FLOOR
        if kernels.secular_sum(wt, s, lb) <= self.p:
            return lb if np.min(s) <= 0 else 0.0
        return kernels.secular_root(wt, s, self.p, lb, 1e-13)

    def precoder(self, lam, mu):
        parts, _, _ = self._eig(mu)
        cols = [vec @ ((vec.conj().T @ self.m[:, j]) / (lam + val))
                for j, (val, vec) in enumerate(parts)]
        return np.stack(cols, axis=1)

    def eve_term(self, mu):
        lam = self.lam_of(mu)
        vp = self.precoder(lam, mu)
        val = float(np.real(np.einsum("ij,ik,kj->j", vp.conj(), self.q, vp)) @ self.w)
        return val, lam, vp

    def solve(self, mu_max):
        val, lam, vp = self.eve_term(0.0)
        mu = 0.0
        if val > self.c:
            hi = 1.0
            while self.eve_term(hi)[0] > self.c:
                hi *= 4.0
                if hi > mu_max:
                    raise InfeasibleConstraint("tangent constraint unreachable")
            mu = find_root_monotone(lambda x: self.eve_term(x)[0] - self.c,
                                    0.0, hi, 1e-12 * max(1.0, abs(self.c)))
            val, lam, vp = self.eve_term(mu)
            if val > self.c:
                # bisection returned the infeasible side of the bracket
                mu = min(hi, mu * (1 + 1e-12) + 1e-15)
                val, lam, vp = self.eve_term(mu)
        return vp @ self.e.conj().T, lam, mu


def _iterate_restricted(cfg, ch, state, mu_max):
    K = cfg.K
    v = [x.copy() for x in state.v]
    u = update_receivers(cfg, ch, v)
    lam = np.zeros(K)
    mu = np.zeros(K)
    flags = list(state.flags)
    for k in range(K):
        a = interference_gram(cfg, ch, u, k)
        m = ch.h[k][k].conj().T @ u[k]
        d = cfg.d[k]
        if cfg.secrecy_enabled(k):
            r = eve_covariance(cfg, ch, v, exclude=k)
            q = ch.h_e[k].conj().T @ solve_hpd(r, ch.h_e[k])
            q = 0.5 * (q + q.conj().T)
            x0 = v[k].conj().T @ q @ v[k]
            if np.real(np.trace(np.linalg.inv(np.eye(d) + x0))) < cfg.epsilon[k]:
                v[k] = v[k] * _restore_eve(x0, cfg.epsilon[k])
                x0 = v[k].conj().T @ q @ v[k]
            inv = np.linalg.inv(np.eye(d) + x0)
            w0 = inv @ inv
            c = float(np.real(np.trace(2.0 * inv - w0))) - cfg.epsilon[k]
        else:
            q = np.zeros_like(a)
            w0 = np.eye(d)
            c = 1.0
        sub = _TangentQCQP(a, m, q, w0, c, cfg.p[k])
        try:
            v[k], lam[k], mu[k] = sub.solve(mu_max)
        except InfeasibleConstraint:
            flags.append(f"iteration {state.iteration + 1}: user {k} eavesdropper target infeasible")
    u_e = update_eve_receivers(cfg, ch, v)
    return TransceiverState(v=v, u=u, u_e=u_e, lam=lam, mu=mu,
                            iteration=state.iteration + 1, flags=flags)


def mtmse_iterate(cfg, ch, state, method="literal", mu_max=MU_MAX):
    """Run one outer iteration and return the new state.

    Parameters
    ----------
    cfg : SystemConfig
    ch : ChannelSet
    state : TransceiverState
        Current iterate; it is not modified.
    method : {"literal", "restricted"}
        Precoder-update rule, see the module docstring.
    mu_max : float
        Cap of the eavesdropper-multiplier search.

    Raises
    ------
    MTMSEError
        On a linear-algebra failure, naming the user and step.
    """
    if method == "literal":
        return _iterate_literal(cfg, ch, state, mu_max)
    if method == "restricted":
        for k in range(cfg.K):
            if cfg.secrecy_enabled(k) and cfg.epsilon[k] >= cfg.d[k]:
                raise ValueError(
                    f"user {k}: epsilon={cfg.epsilon[k]} >= d={cfg.d[k]} cannot be met "
                    "against an MMSE eavesdropper")
        return _iterate_restricted(cfg, ch, state, mu_max)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def initial_state(cfg, ch, seed):
    """State with random full-power precoders and zero multipliers."""
    v = init_precoders(cfg, seed)
    return TransceiverState(v=v, u=update_receivers(cfg, ch, v),
                            u_e=update_eve_receivers(cfg, ch, v),
                            lam=np.zeros(cfg.K), mu=np.zeros(cfg.K))


def run_mtmse(cfg, ch, opts=None, state=None):
    """Iterate until the total MSE settles or the iteration cap is hit.

    Parameters
    ----------
    cfg : SystemConfig
    ch : ChannelSet
    opts : MTMSEOptions, optional
    state : TransceiverState, optional
        Starting point; random precoders from ``opts.seed`` by default.

    Returns
    -------
    state : TransceiverState
    trace : IterationTrace
        ``trace.status`` is ``"converged"`` or ``"max-iterations"``.
    """
    opts = MTMSEOptions() if opts is None else opts
    validate_config(cfg)
    if state is None:
        state = initial_state(cfg, ch, opts.seed)
    trace = IterationTrace(records=[_record(cfg, ch, state)])
    for _ in range(opts.max_iters):
        state = mtmse_iterate(cfg, ch, state, opts.method, opts.mu_max)
        rec = _record(cfg, ch, state)
        prev = trace.records[-1].total_mse
        trace.records.append(rec)
        if rec.total_mse > prev + opts.descent_slack:
            logger.warning("total MSE increased by %.3e at iteration %d",
                           rec.total_mse - prev, state.iteration)
        if abs(rec.total_mse - prev) <= opts.rel_tol * prev:
            trace.status = "converged"
            break
    else:
        trace.status = "max-iterations"
    return state, trace


def kkt_report(cfg, ch, state):
    """First-order optimality figures of a state, per user.

    Receivers and eavesdropper filters are recomputed from ``state.v``.

    Returns
    -------
    list of dict
        Keys: ``power`` (relative excess over the budget, clipped at 0),
        ``eve_gap`` (``epsilon - eve MSE``, clipped at 0), ``lam``, ``mu``,
        ``slack_power`` and ``slack_eve`` (complementary-slackness products
        divided by their scales), ``stationarity`` (relative residual).
    """
    u = update_receivers(cfg, ch, state.v)
    u_e = update_eve_receivers(cfg, ch, state.v)
    out = []
    for k in range(cfg.K):
        vk = state.v[k]
        pw = float(np.linalg.norm(vk) ** 2)
        e = eve_mse(cfg, ch, state.v, u_e[k], k)
        eps = cfg.epsilon[k]
        ws = build_workspace_a(cfg, ch, u, u_e, float(state.mu[k]), k)
        res = (ws.psi + state.lam[k] * np.eye(vk.shape[0])) @ vk - ws.theta
        out.append({
            "power": max(0.0, pw / cfg.p[k] - 1.0),
            "eve_gap": max(0.0, eps - e) if cfg.secrecy_enabled(k) else 0.0,
            "lam": float(state.lam[k]),
            "mu": float(state.mu[k]),
            "slack_power": float(state.lam[k]) * abs(pw - cfg.p[k]) / cfg.p[k],
            "slack_eve": (float(state.mu[k]) * abs(eps - e) / eps
                          if cfg.secrecy_enabled(k) else 0.0),
            "stationarity": float(np.linalg.norm(res) / max(np.linalg.norm(ws.theta), 1e-300)),
        })
    return out
