"""Stage-I fully-digital beamformer: WMMSE updates with dual bisection.

The rate maximization under a power budget and a leakage ceiling is solved by
alternating closed-form receive-filter / weight updates with a Lagrangian
precoder update whose two dual variables (power, leakage) are found by nested
bisection. The precoder update is evaluated in the low-dimensional subspace
spanned by the effective channels, which makes each dual probe O((L+M_W)^3)
instead of O(M_A^3).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .config import SystemConfig
from .detection import NoiseUncertainty, max_leakage

EIG_FLOOR_REL = 1e-12   # relative eigenvalue floor for pseudo-inverses


class NumericalError(RuntimeError):
    """A linear-algebra step lost the preconditions it needs."""


class BracketError(RuntimeError):
    """A dual-variable bracket could not be established."""


@dataclass
class SolverTolerances:
    """Termination knobs for the WMMSE loop and its dual bisections."""

    eps: float = 1e-4            # relative objective change that stops the loop
    t_max: int = 100             # WMMSE iteration cap
    mu_l: float = 0.0
    mu_u: float | None = None    # None: auto bracket from the channel scale
    upsilon_l0: float = 0.0
    upsilon_u0: float | None = None
    bisect_rtol: float = 1e-10   # relative bracket width for both duals
    max_doublings: int = 60

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"eps must be > 0, got {self.eps}")
        if self.mu_u is not None and self.mu_u < self.mu_l:
            raise ValueError("dual bounds must be ordered")
        if self.upsilon_u0 is not None and self.upsilon_u0 < self.upsilon_l0:
            raise ValueError("dual bounds must be ordered")


@dataclass
class WmmseTrace:
    """Per-iteration diagnostics of one WMMSE run."""

    rates: list = field(default_factory=list)
    objective_steps: list = field(default_factory=list)  # Tr(Psi E)-log2|Psi| after each block update
    mu: float = 0.0
    upsilon: float = 0.0
    iterations: int = 0
    power: float = 0.0
    leakage: float = 0.0


def _hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def _pinv_psd_apply(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """pinv(m) @ b for Hermitian PSD m, with a relative eigenvalue floor."""
    w, v = np.linalg.eigh(_hermitize(m))
    lam_max = w[-1] if w.size else 0.0
    if lam_max <= 0.0:
        if np.linalg.norm(b) > 0.0:
            raise NumericalError("all-zero system matrix with a nonzero right-hand side")
        return np.zeros_like(b)
    inv_w = np.where(w > EIG_FLOOR_REL * lam_max, 1.0 / np.maximum(w, 1e-300), 0.0)
    return (v * inv_w) @ (v.conj().T @ b)


# ---------------------------------------------------------------------------
# rate / MSE building blocks
# ---------------------------------------------------------------------------

def covert_rate(H_B: np.ndarray, W: np.ndarray, sigma_b_sq: float) -> float:
    """Achievable rate log2 det(I + H_B W W^H H_B^H / sigma^2), bits/s/Hz."""
    if sigma_b_sq <= 0:
        raise ValueError(f"noise power must be > 0, got {sigma_b_sq}")
    s = np.linalg.svd(H_B @ W, compute_uv=False)
    return float(np.sum(np.log2(1.0 + s**2 / sigma_b_sq)))


def mse_matrix(H_B: np.ndarray, W: np.ndarray, U: np.ndarray,
               sigma_b_sq: float) -> np.ndarray:
    """Symbol-estimate error covariance (I - U^H H_B W)(.)^H + sigma^2 U^H U."""
    l = W.shape[1]
    t = np.eye(l) - U.conj().T @ H_B @ W
    return _hermitize(t @ t.conj().T + sigma_b_sq * (U.conj().T @ U))


def receive_filter(H_B: np.ndarray, W: np.ndarray, sigma_b_sq: float) -> np.ndarray:
    """MMSE receive filter (H_B W W^H H_B^H + sigma^2 I)^{-1} H_B W."""
    if sigma_b_sq <= 0:
        raise NumericalError("receive filter needs sigma_b_sq > 0 for invertibility")
    hw = H_B @ W
    a = _hermitize(hw @ hw.conj().T) + sigma_b_sq * np.eye(H_B.shape[0])
    return np.linalg.solve(a, hw)


def weight_matrix(E: np.ndarray) -> np.ndarray:
    """Inverse of the (regularized, if singular) MSE matrix."""
    e = _hermitize(E)
    l = e.shape[0]
    w = np.linalg.eigvalsh(e)
    if w[0] <= EIG_FLOOR_REL * max(w[-1], 0.0):
        tr = float(np.trace(e).real)
        if tr <= 0.0:
            raise NumericalError("MSE matrix is zero; weight update undefined")
        e = e + (1e-12 * tr / l) * np.eye(l)
    return _hermitize(np.linalg.inv(e))


def wmmse_objective(Psi: np.ndarray, E: np.ndarray) -> float:
    """Surrogate objective Tr(Psi E) - log2 |Psi|."""
    sign, logdet = np.linalg.slogdet(Psi)
    if sign.real <= 0:
        raise NumericalError("weight matrix must be positive definite")
    return float(np.trace(Psi @ E).real - logdet / math.log(2.0))


def wfd_closed_form(H_B: np.ndarray, H_W: np.ndarray, U: np.ndarray,
                    Psi: np.ndarray, mu: float, upsilon: float) -> np.ndarray:
    """Stationary precoder (H_B^H U Psi U^H H_B + mu I + ups H_W^H H_W)^+ H_B^H U Psi."""
    if mu < 0 or upsilon < 0:
        raise ValueError("dual variables must be >= 0")
    hu = H_B.conj().T @ U
    a = hu @ Psi @ hu.conj().T + mu * np.eye(H_B.shape[1])
    if upsilon > 0:
        a = a + upsilon * (H_W.conj().T @ H_W)
    return _pinv_psd_apply(a, hu @ Psi)


# ---------------------------------------------------------------------------
# reduced-subspace precoder solver
# ---------------------------------------------------------------------------

class _ReducedSolver:
    """Evaluates the dual-parametrized precoder in the span of the effective
    channels, so each (mu, upsilon) probe costs O(k^3) with k = L + M_W."""

    def __init__(self, H_B, H_W, U, Psi):
        self.m_a = H_B.shape[1]
        self.l = Psi.shape[0]
        x = np.concatenate([H_B.conj().T @ U, H_W.conj().T], axis=1)
        q, r = np.linalg.qr(x)
        self.q = q
        r1 = r[:, :self.l]
        r2 = r[:, self.l:]
        self.m0 = _hermitize(r1 @ Psi @ r1.conj().T)
        self.m1 = _hermitize(r2 @ r2.conj().T)
        self.b = r1 @ Psi                       # reduced right-hand side
        self.hw_q = H_W @ q                     # for leakage in reduced coords
        self.scale0 = float(np.linalg.norm(self.m0, 2))
        self.scale1 = float(np.linalg.norm(self.m1, 2))

    def solve(self, mu: float, upsilon: float):
        """Returns (W reduced coords, power, leakage) at the given duals."""
        k = self.m0.shape[0]
        m = self.m0 + upsilon * self.m1 + mu * np.eye(k)
        y = _pinv_psd_apply(m, self.b)
        power = float(np.linalg.norm(y) ** 2)
        leakage = float(np.linalg.norm(self.hw_q @ y) ** 2)
        return y, power, leakage

    def full(self, y: np.ndarray) -> np.ndarray:
        return self.q @ y


def bisection_solve(H_B: np.ndarray, H_W: np.ndarray, U: np.ndarray,
                    Psi: np.ndarray, p_max: float, p_leak: float,
                    tol: SolverTolerances | None = None):
    """Precoder update with nested bisection on the two dual variables.

    Returns (W_FD, mu, upsilon) satisfying complementary slackness within the
    bisection tolerance and both constraints on the feasible side: the outer
    search drives the power dual, the inner search (re-solved at the current
    outer trial) drives the leakage dual. Leakage at the warden is monotone
    nonincreasing in its dual, power in the power dual.
    """
    if p_max <= 0 or p_leak <= 0:
        raise ValueError("p_max and p_leak must be > 0")
    tol = tol or SolverTolerances()
    red = _ReducedSolver(H_B, H_W, U, Psi)

    def inner(mu: float):
        """Smallest leakage dual making the leakage feasible at this mu."""
        sol = red.solve(mu, 0.0)
        if sol[2] <= p_leak:
            return sol, 0.0
        ups = tol.upsilon_u0
        if ups is None or ups <= 0.0:
            ups = (red.scale0 + mu) / max(red.scale1, 1e-300) + 1e-300
        for _ in range(tol.max_doublings):
            sol = red.solve(mu, ups)
            if sol[2] <= p_leak:
                break
            ups *= 2.0
        else:
            raise BracketError("leakage dual bracket not found after max doublings")
        lo, hi = tol.upsilon_l0, ups
        sol_hi = sol
        while hi - lo > tol.bisect_rtol * hi:
            mid = 0.5 * (lo + hi)
            sol_mid = red.solve(mu, mid)
            if sol_mid[2] <= p_leak:
                hi, sol_hi = mid, sol_mid
            else:
                lo = mid
        return sol_hi, hi

    sol, upsilon = inner(tol.mu_l)
    if sol[1] <= p_max:
        w = red.full(sol[0])
        return w, tol.mu_l, upsilon

    mu = tol.mu_u
    if mu is None or mu <= 0.0:
        mu = float(np.linalg.norm(H_B.conj().T @ U @ Psi, "fro")) / math.sqrt(p_max)
        mu = max(mu, 1e-300)
    for _ in range(tol.max_doublings):
        sol, upsilon = inner(mu)
        if sol[1] <= p_max:
            break
        mu *= 2.0
    else:
        raise BracketError("power dual bracket not found after max doublings")

    lo, hi = tol.mu_l, mu
    sol_hi, ups_hi = sol, upsilon
    while hi - lo > tol.bisect_rtol * hi:
        mid = 0.5 * (lo + hi)
        sol_mid, ups_mid = inner(mid)
        if sol_mid[1] <= p_max:
            hi, sol_hi, ups_hi = mid, sol_mid, ups_mid
        else:
            lo = mid
    return red.full(sol_hi[0]), hi, ups_hi


# ---------------------------------------------------------------------------
# WMMSE driver
# ---------------------------------------------------------------------------

def effective_channels(channels: ChannelSet, v: np.ndarray):
    """Cascades H diag(v) G and F diag(v) G seen from the transmitter."""
    vg = v[:, None] * channels.G
    return channels.H @ vg, channels.F @ vg


def _feasible_scale(H_W, W, p_max, p_leak) -> float:
    """Scale factor pulling W inside both constraints (1.0 if already inside)."""
    s = 1.0
    power = float(np.linalg.norm(W) ** 2)
    if power > p_max:
        s = min(s, math.sqrt(p_max / power))
    leak = float(np.linalg.norm(H_W @ W) ** 2)
    if leak > p_leak:
        s = min(s, math.sqrt(p_leak / leak))
    return s


def default_precoder_init(H_B: np.ndarray, H_W: np.ndarray, l: int,
                          p_max: float, p_leak: float) -> np.ndarray:
    """Deterministic feasible start: top right singular vectors at full power,
    shrunk if the leakage ceiling demands it."""
    _, _, vh = np.linalg.svd(H_B)
    w = vh[:l].conj().T * math.sqrt(p_max / l)
    return w * _feasible_scale(H_W, w, p_max, p_leak)


def wmmse_fully_digital(channels: ChannelSet, v: np.ndarray, cfg: SystemConfig,
                        tol: SolverTolerances | None = None, *,
                        p_leak: float | None = None,
                        w_init: np.ndarray | None = None):
    """Fully-digital covert precoder for a fixed reflection vector.

    Alternates the closed-form receive-filter / weight updates with the
    bisection precoder update until the rate change falls below tol.eps or
    t_max; the returned precoder satisfies the power and leakage constraints.
    Returns (W_FD, WmmseTrace).
    """
    tol = tol or SolverTolerances(eps=cfg.wmmse_eps, t_max=cfg.wmmse_max_iter)
    h_b, h_w = effective_channels(channels, v)
    sigma_b = cfg.sigma_b_sq
    if p_leak is None:
        p_leak = max_leakage(cfg.kappa, NoiseUncertainty.from_config(cfg))

    if w_init is None:
        w = default_precoder_init(h_b, h_w, cfg.n_streams, cfg.p_max, p_leak)
    else:
        w = w_init * _feasible_scale(h_w, w_init, cfg.p_max, p_leak)

    trace = WmmseTrace()
    rate_prev = covert_rate(h_b, w, sigma_b)
    for t in range(1, tol.t_max + 1):
        u = receive_filter(h_b, w, sigma_b)
        e = mse_matrix(h_b, w, u, sigma_b)
        psi = weight_matrix(e)
        trace.objective_steps.append(wmmse_objective(psi, e))

        w, mu, upsilon = bisection_solve(h_b, h_w, u, psi, cfg.p_max, p_leak, tol)
        trace.objective_steps.append(wmmse_objective(psi, mse_matrix(h_b, w, u, sigma_b)))

        rate = covert_rate(h_b, w, sigma_b)
        trace.rates.append(rate)
        trace.mu, trace.upsilon, trace.iterations = mu, upsilon, t
        if abs(rate - rate_prev) < tol.eps * max(abs(rate_prev), 1e-12):
            rate_prev = rate
            break
        rate_prev = rate

    trace.power = float(np.linalg.norm(w) ** 2)
    trace.leakage = float(np.linalg.norm(h_w @ w) ** 2)
    return w, trace
