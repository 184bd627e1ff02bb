"""Reflection-coefficient design by ADMM under a leakage ceiling.

The surrogate objective and the leakage constraint are quadratic forms in the
reflection vector, obtained from trace/Hadamard identities for diagonal phase
matrices. ADMM splits the unit-modulus constraint off through an auxiliary
phase vector: a convex QCQP step (projected gradient with Dykstra projections
onto discs-and-ellipsoid), a closed-form phase alignment, and a dual update.

Both quadratic forms have rank at most the product of the small matrix ranks,
so the solver works on their thin eigenfactors; cost per sweep is O(N r).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet


class AdmmInfeasibleError(RuntimeError):
    """No unit-modulus phase vector met the leakage ceiling."""


@dataclass(frozen=True)
class RisQuadratics:
    """Quadratic data of the reflection design problem.

    xi and ups are Hermitian PSD (Schur products of PSD matrices); the
    objective is v^H xi v - 2 Re(v^H c) and the leakage is v^H ups v.
    """

    xi: np.ndarray     # (N, N)
    ups: np.ndarray    # (N, N)
    c: np.ndarray      # (N,)


@dataclass
class AdmmState:
    """Iterate of the splitting: relaxed vector, phases, scaled dual, penalty."""

    v: np.ndarray
    phi: np.ndarray
    xi_d: np.ndarray
    rho: float


@dataclass
class AdmmParams:
    """Penalty, stopping, and step options for the reflection ADMM.

    The dual step multiplies the penalty by `dual_step_factor`; the canonical
    choice 1.0 is the default because the doubled step oscillates whenever the
    leakage constraint is strongly active.
    """

    rho: float = 1.0                 # penalty in normalized objective units
    eps: float = 1e-4
    t_max: int = 300
    dual_step_factor: float = 1.0
    adapt_penalty: bool = True
    pgd_max_iter: int = 25           # inexact inner solves; warm-started
    v_init: np.ndarray | None = None


@dataclass
class AdmmInfo:
    iterations: int = 0
    primal_residual: float = 0.0
    objective: float = 0.0
    penalty: float = 1.0
    lagrangian: list = field(default_factory=list)


def build_quadratics(H: np.ndarray, F: np.ndarray, G: np.ndarray,
                     U: np.ndarray, Psi: np.ndarray,
                     W_hat: np.ndarray) -> RisQuadratics:
    """Assemble the reflection-design quadratics from the current beamformers.

    With A = H^H U Psi U^H H, B = G W W^H G^H, Fbar = F^H F the trace
    identities for diagonal phase matrices give xi = A o B^T, ups = Fbar o B^T
    and the linear term as the diagonal of H^H U Psi W^H G^H.
    """
    hu = H.conj().T @ U                     # (N, L)
    hup = hu @ Psi
    a = hup @ hu.conj().T
    gw = G @ W_hat                          # (N, L)
    b = gw @ gw.conj().T
    fbar = F.conj().T @ F
    xi = a * b.T
    ups = fbar * b.T
    c = np.einsum("nl,nl->n", hup, gw.conj())
    return RisQuadratics(xi=0.5 * (xi + xi.conj().T),
                         ups=0.5 * (ups + ups.conj().T),
                         c=c)


def quadratic_objective(q: RisQuadratics, v: np.ndarray) -> float:
    """Surrogate objective v^H xi v - 2 Re(v^H c)."""
    return float((v.conj() @ (q.xi @ v)).real - 2.0 * (v.conj() @ q.c).real)


def reflection_leakage(q: RisQuadratics, v: np.ndarray) -> float:
    return float((v.conj() @ (q.ups @ v)).real)


# ---------------------------------------------------------------------------
# low-rank operators and projections
# ---------------------------------------------------------------------------

class _LowRankPsd:
    """Thin eigenfactor of a Hermitian PSD matrix: A ~= E diag(lam) E^H."""

    def __init__(self, a: np.ndarray, rel_tol: float = 1e-13):
        w, vecs = np.linalg.eigh(0.5 * (a + a.conj().T))
        lam_max = max(float(w[-1]), 0.0) if w.size else 0.0
        keep = w > rel_tol * max(lam_max, 1e-300)
        self.lam = np.maximum(w[keep], 0.0)
        self.vecs = vecs[:, keep]
        self.lam_max = lam_max

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.lam.size == 0:
            return np.zeros_like(v)
        return self.vecs @ (self.lam * (self.vecs.conj().T @ v))

    def quad(self, v: np.ndarray) -> float:
        if self.lam.size == 0:
            return 0.0
        return float(np.sum(self.lam * np.abs(self.vecs.conj().T @ v) ** 2))


def _multiplier_newton(lam: np.ndarray, vt2: np.ndarray, p_leak: float,
                       beta_warm: float = 0.0) -> float:
    """Solve sum lam vt2 / (1 + beta lam)^2 = p_leak for beta >= 0.

    The left-hand side is convex and decreasing, so Newton from any point on
    the infeasible side converges monotonically. A warm start (previous
    multiplier) or the large-beta asymptote seeds the far regime.
    """
    # ranks are tiny (products of small matrix ranks), so plain float loops
    # beat vectorized calls here by an order of magnitude
    lams = lam.tolist()
    lam_vt2 = (lam * vt2).tolist()
    pairs = list(zip(lams, lam_vt2))

    def g_slope(beta):
        g = 0.0
        slope = 0.0
        for lm, lv in pairs:
            inv = 1.0 / (1.0 + beta * lm)
            inv2 = inv * inv
            g += lv * inv2
            slope -= 2.0 * lm * lv * inv2 * inv
        return g, slope

    try:
        seed = 0.67 * math.sqrt(sum(v / l for l, v in zip(lams, vt2.tolist())) / p_leak)
    except (OverflowError, ZeroDivisionError):
        return math.inf
    if not math.isfinite(seed):
        return math.inf
    beta = 0.0
    for cand in (0.8 * beta_warm, seed):
        if cand > beta and g_slope(cand)[0] > p_leak:
            beta = cand
    for _ in range(200):
        g, slope = g_slope(beta)
        if g <= p_leak * (1.0 + 1e-13):
            break
        if not slope < 0.0:
            return math.inf
        beta = beta - (g - p_leak) / slope
    return beta


def _ellipsoid_project_factored(v: np.ndarray, op: _LowRankPsd, p_leak: float,
                                beta_warm: float = 0.0):
    """Euclidean projection onto {x : x^H Ups x <= p_leak} via the eigenbasis.

    Components outside the factor's range pass through unchanged. Returns
    (projection, multiplier) so callers can warm-start the next solve.
    """
    vt = op.vecs.conj().T @ v
    lam = op.lam
    vt2 = np.abs(vt) ** 2
    if float(lam @ vt2) <= p_leak:
        return v, 0.0
    beta = _multiplier_newton(lam, vt2, p_leak, beta_warm)
    if not np.isfinite(beta):
        # budget below the representable range: annihilate the range part
        return v - op.vecs @ vt, math.inf
    xt = vt / (1.0 + beta * lam)
    if float(lam @ np.abs(xt) ** 2) > p_leak * (1.0 + 1e-12):
        return v - op.vecs @ vt, math.inf
    return v + op.vecs @ (xt - vt), beta


def project_ellipsoid(v: np.ndarray, Ups: np.ndarray, p_leak: float) -> np.ndarray:
    """Euclidean projection of v onto {x : x^H Ups x <= p_leak}."""
    if p_leak <= 0:
        raise ValueError(f"leakage budget must be > 0, got {p_leak}")
    out, _ = _ellipsoid_project_factored(np.asarray(v, dtype=complex),
                                         _LowRankPsd(Ups), p_leak)
    return out


def _disc_project(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    over = mag > 1.0
    out = v.copy()
    out[over] = v[over] / mag[over]
    return out


def _dykstra(v: np.ndarray, ups_op: _LowRankPsd, p_leak: float,
             max_iter: int = 25) -> np.ndarray:
    """Projection onto the intersection of the unit discs and the ellipsoid.

    When the clipped point already satisfies the ellipsoid it is the exact
    intersection projection, so the loop is skipped."""
    clipped = _disc_project(v)
    if ups_op.quad(clipped) <= p_leak:
        return clipped
    x = v
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    beta = 0.0
    for _ in range(max_iter):
        y = _disc_project(x + p)
        p = x + p - y
        x_new, beta_new = _ellipsoid_project_factored(y + q, ups_op, p_leak,
                                                      beta_warm=beta)
        beta = beta_new if np.isfinite(beta_new) else 0.0
        q = y + q - x_new
        drift = np.linalg.norm(x_new - x)
        x = x_new
        if drift <= 1e-7 * (1.0 + np.linalg.norm(x)):
            if np.all(np.abs(x) <= 1.0 + 1e-9) and ups_op.quad(x) <= p_leak * (1 + 1e-9):
                break
    return x


def v_update(q: RisQuadratics, phi: np.ndarray, xi_d: np.ndarray, rho: float,
             p_leak: float, max_iter: int = 200, return_info: bool = False):
    """Relaxed-vector step of the splitting: a convex QCQP.

    Minimizes v^H xi v - 2 Re(v^H c) + (rho/2)||v - phi + xi_d/rho||^2 over
    the intersection of the unit discs and the leakage ellipsoid, by projected
    gradient with step 1/lam_max(xi + rho/2 I) and Dykstra projections.
    """
    if rho <= 0:
        raise ValueError(f"penalty must be > 0, got {rho}")
    xi_op = _LowRankPsd(q.xi)
    ups_op = _LowRankPsd(q.ups)
    return _v_update_ops(xi_op, q.c, ups_op, phi, xi_d, rho, p_leak,
                         max_iter=max_iter, return_info=return_info)


def _v_update_ops(xi_op: _LowRankPsd, c: np.ndarray, ups_op: _LowRankPsd,
                  phi: np.ndarray, xi_d: np.ndarray, rho: float, p_leak: float,
                  v0: np.ndarray | None = None, max_iter: int = 200,
                  dykstra_iters: int = 25, step_rtol: float = 1e-10,
                  return_info: bool = False):
    lip = xi_op.lam_max + 0.5 * rho
    b = c + 0.5 * (rho * phi - xi_d)
    v = _dykstra(phi - xi_d / rho if v0 is None else v0, ups_op, p_leak,
                 max_iter=dykstra_iters)
    converged = False
    for it in range(1, max_iter + 1):
        grad_half = xi_op.matvec(v) + 0.5 * rho * v - b
        v_next = _dykstra(v - grad_half / lip, ups_op, p_leak,
                          max_iter=dykstra_iters)
        step = np.linalg.norm(v_next - v)
        v = v_next
        if step <= step_rtol * (1.0 + np.linalg.norm(v)):
            converged = True
            break
    if return_info:
        return v, {"iterations": it, "converged": converged}
    return v


def phi_update(v: np.ndarray, xi_d: np.ndarray, rho: float,
               phi_prev: np.ndarray | None = None) -> np.ndarray:
    """Unit-modulus minimizer of ||v - phi + xi_d/rho||^2: entrywise phase of
    v + xi_d/rho. Zero arguments keep the previous phase (or 1)."""
    target = v + xi_d / rho
    mag = np.abs(target)
    fallback = phi_prev if phi_prev is not None else np.ones_like(v)
    return np.where(mag > 0.0, target / np.where(mag > 0.0, mag, 1.0), fallback)


def dual_update(xi_bar: np.ndarray, v: np.ndarray, phi: np.ndarray,
                rho: float, step_factor: float = 2.0) -> np.ndarray:
    """Dual ascent xi := xi_bar + step_factor * rho * (v - phi)."""
    return xi_bar + step_factor * rho * (v - phi)


# ---------------------------------------------------------------------------
# ADMM driver
# ---------------------------------------------------------------------------

def admm_reflection(channels: ChannelSet, W_RF: np.ndarray, W_BB: np.ndarray,
                    U: np.ndarray, Psi: np.ndarray, p_leak: float,
                    params: AdmmParams | None = None,
                    return_info: bool = False):
    """Reflection vector by ADMM under the leakage ceiling.

    Iterates the relaxed-vector QCQP, the phase alignment, and the dual update
    until the relative augmented-Lagrangian change falls below eps or t_max.
    The returned vector has exactly unit-modulus entries, satisfies the
    leakage constraint within (1 + 1e-6), and never scores worse than the
    caller's `v_init` on the surrogate objective: among all feasible phase
    iterates (plus v_init) the best one is returned.

    The objective is normalized internally by lam_max(xi) so the default
    penalty is meaningful at any channel magnitude.
    """
    params = params or AdmmParams()
    w_hat = W_RF @ W_BB
    q = build_quadratics(channels.H, channels.F, channels.G, U, Psi, w_hat)
    n = q.c.shape[0]

    xi_op = _LowRankPsd(q.xi)
    ups_op = _LowRankPsd(q.ups)
    lam_all = np.linalg.eigvalsh(0.5 * (q.ups + q.ups.conj().T))
    if float(lam_all[0]) * n > p_leak * (1.0 + 1e-6):
        # every unit-modulus vector already exceeds the budget
        raise AdmmInfeasibleError(
            "leakage ceiling is below the smallest unit-modulus leakage; "
            "reduce transmit power or relax the covertness level")
    scale = max(xi_op.lam_max, float(np.linalg.norm(q.c)) / math.sqrt(n), 1e-300)
    xi_n = _LowRankPsd(q.xi / scale)
    c_n = q.c / scale

    def objective_n(v):
        return xi_n.quad(v) - 2.0 * float((v.conj() @ c_n).real)

    def feasible(v):
        return ups_op.quad(v) <= p_leak * (1.0 + 1e-6)

    best_v = None
    best_obj = np.inf

    def consider(v):
        nonlocal best_v, best_obj
        if feasible(v):
            obj = objective_n(v)
            if obj < best_obj:
                best_obj, best_v = obj, v.copy()

    if params.v_init is not None:
        consider(np.asarray(params.v_init, dtype=complex))

    phi = np.exp(1j * np.angle(np.where(q.c == 0, 1.0, q.c)))
    consider(phi)
    state = AdmmState(v=phi.copy(), phi=phi, xi_d=np.zeros(n, dtype=complex),
                      rho=params.rho)

    info = AdmmInfo(penalty=state.rho)
    lag_prev = None
    phi_prev = state.phi
    for t in range(1, params.t_max + 1):
        state.v = _v_update_ops(xi_n, c_n, ups_op, state.phi, state.xi_d,
                                state.rho, p_leak, v0=state.v,
                                max_iter=params.pgd_max_iter, dykstra_iters=25,
                                step_rtol=1e-6)
        consider(np.exp(1j * np.angle(np.where(state.v == 0, 1.0, state.v))))
        state.phi = phi_update(state.v, state.xi_d, state.rho, phi_prev=state.phi)
        consider(state.phi)
        state.xi_d = dual_update(state.xi_d, state.v, state.phi, state.rho,
                                 params.dual_step_factor)

        primal = float(np.linalg.norm(state.v - state.phi))
        dual = state.rho * float(np.linalg.norm(state.phi - phi_prev))
        phi_prev = state.phi
        if params.adapt_penalty:
            if primal > 10.0 * dual:
                state.rho *= 2.0
            elif dual > 10.0 * primal:
                state.rho /= 2.0

        lag = (objective_n(state.v)
               + 0.5 * state.rho * float(np.linalg.norm(
                   state.v - state.phi + state.xi_d / state.rho) ** 2))
        info.lagrangian.append(lag)
        info.iterations = t
        info.primal_residual = primal
        if lag_prev is not None:
            if abs(lag - lag_prev) < params.eps * max(abs(lag_prev), 1e-12):
                break
        lag_prev = lag

    if best_v is None:
        raise AdmmInfeasibleError(
            "no unit-modulus reflection vector met the leakage ceiling; "
            "reduce transmit power or relax the covertness level")

    info.objective = quadratic_objective(q, best_v)
    info.penalty = state.rho
    if return_info:
        return best_v, info
    return best_v
