"""Stage-II hybrid decomposition: analog phases times a small digital matrix.

Factors a fully-digital precoder into a unit-modulus analog matrix and a
baseband matrix by alternating a least-squares baseband update with a
Riemannian conjugate-gradient analog update on the product-of-circles
manifold. With at least twice as many RF chains as streams any precoder is
exactly realizable, and that case is seeded with the exact phase-splitting
construction so the leakage ceiling survives the factorization.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


@dataclass
class HybridPrecoder:
    """Factorized precoder with unit-modulus analog entries."""

    w_rf: np.ndarray          # (M_A, M_RF), |entries| = 1
    w_bb: np.ndarray          # (M_RF, L)
    margin: float = 0.0       # leakage margin reserved during Stage I, watts
    residual: float = 0.0     # relative factorization error
    iterations: int = 0
    stalled: bool = False

    @property
    def product(self) -> np.ndarray:
        return self.w_rf @ self.w_bb


@dataclass
class MoInfo:
    """Diagnostics of one manifold-optimization run."""

    objective: float
    iterations: int
    stalled: bool
    grad_norm_init: float
    grad_norm_final: float


def _vec(a: np.ndarray) -> np.ndarray:
    return a.reshape(-1, order="F")


def _unvec(w: np.ndarray, m_a: int, m_rf: int) -> np.ndarray:
    return w.reshape((m_a, m_rf), order="F")


def fit_error(w_vec: np.ndarray, W_BB: np.ndarray, W_FD: np.ndarray) -> float:
    """Squared factorization error ||W_FD - W_RF W_BB||_F^2 at vec(W_RF)."""
    w_rf = _unvec(w_vec, W_FD.shape[0], W_BB.shape[0])
    return float(np.linalg.norm(W_FD - w_rf @ W_BB, "fro") ** 2)


def baseband_ls(W_RF: np.ndarray, W_FD: np.ndarray) -> np.ndarray:
    """Least-squares baseband matrix (W_RF^H W_RF)^{-1} W_RF^H W_FD.

    Falls back to the pseudo-inverse (with a warning) when the analog matrix
    is rank deficient; the residual is then still orthogonal to its range.
    """
    gram = W_RF.conj().T @ W_RF
    rhs = W_RF.conj().T @ W_FD
    cond = np.linalg.cond(gram)
    if not np.isfinite(cond) or cond > 1e12:
        warnings.warn("analog precoder is rank deficient; using pseudo-inverse",
                      RuntimeWarning, stacklevel=2)
        return np.linalg.pinv(W_RF) @ W_FD
    return np.linalg.solve(gram, rhs)


def euclidean_gradient(w_vec: np.ndarray, W_BB: np.ndarray,
                       W_FD: np.ndarray) -> np.ndarray:
    """Gradient of the fit error with respect to vec(W_RF).

    Matrix form of 2 (W_BB^T kron I)^H ((W_BB^T kron I) w - vec(W_FD)):
    2 vec((W_RF W_BB - W_FD) W_BB^H).
    """
    w_rf = _unvec(w_vec, W_FD.shape[0], W_BB.shape[0])
    return _vec(2.0 * (w_rf @ W_BB - W_FD) @ W_BB.conj().T)


def riemannian_gradient(w_vec: np.ndarray, eucl_grad: np.ndarray) -> np.ndarray:
    """Project the Euclidean gradient onto the tangent space of the circles."""
    radial = np.real(eucl_grad * w_vec.conj())
    return eucl_grad - radial * w_vec


def vector_transport(d_prev: np.ndarray, w_vec: np.ndarray) -> np.ndarray:
    """Carry a tangent vector from the previous point onto the tangent at w."""
    radial = np.real(d_prev * w_vec.conj())
    return d_prev - radial * w_vec


def retract(w_vec: np.ndarray, direction: np.ndarray, tau: float) -> np.ndarray:
    """Entrywise (w + tau d)/|w + tau d|; zero entries keep the previous phase."""
    if tau < 0:
        raise ValueError(f"step size must be >= 0, got {tau}")
    stepped = w_vec + tau * direction
    mag = np.abs(stepped)
    out = np.where(mag > 0.0, stepped / np.where(mag > 0.0, mag, 1.0), w_vec)
    return out


def mo_analog(W_FD: np.ndarray, W_BB: np.ndarray, W_RF_init: np.ndarray,
              eps: float = 1e-8, max_iter: int = 100,
              return_info: bool = False):
    """Analog precoder by Riemannian conjugate gradient on the circle manifold.

    Polak-Ribiere direction updates with a nonnegativity clamp, Armijo
    backtracking (initial step 1, factor 0.5, sufficient decrease 1e-4), and a
    stall flag after 50 rejected halvings. The fit error never increases
    across accepted steps.
    """
    m_a, m_rf = W_RF_init.shape
    w = _vec(W_RF_init).astype(complex)
    e_cur = fit_error(w, W_BB, W_FD)

    grad = riemannian_gradient(w, euclidean_gradient(w, W_BB, W_FD))
    grad_norm0 = float(np.linalg.norm(grad))
    direction = -grad
    stalled = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        slope = float(np.real(np.vdot(grad, direction)))
        if slope >= 0.0:
            direction = -grad
            slope = -float(np.linalg.norm(grad) ** 2)
        if np.linalg.norm(grad) <= 1e-15 * (1.0 + np.linalg.norm(W_FD)):
            break

        tau = 1.0
        accepted = False
        for _ in range(50):
            w_new = retract(w, direction, tau)
            e_new = fit_error(w_new, W_BB, W_FD)
            if e_new <= e_cur + 1e-4 * tau * slope:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            stalled = True
            break

        grad_new = riemannian_gradient(w_new, euclidean_gradient(w_new, W_BB, W_FD))
        denom = max(float(np.linalg.norm(grad) ** 2), 1e-300)
        beta = float(np.real(np.vdot(grad_new, grad_new - vector_transport(grad, w_new)))) / denom
        beta = max(0.0, beta)
        direction = -grad_new + beta * vector_transport(direction, w_new)

        rel_drop = (e_cur - e_new) / max(e_cur, 1e-300)
        w, grad, e_cur = w_new, grad_new, e_new
        if rel_drop < eps:
            break

    w_rf = _unvec(w, m_a, m_rf)
    if return_info:
        info = MoInfo(objective=e_cur, iterations=iterations, stalled=stalled,
                      grad_norm_init=grad_norm0,
                      grad_norm_final=float(np.linalg.norm(grad)))
        return w_rf, info
    return w_rf


# ---------------------------------------------------------------------------
# initializations
# ---------------------------------------------------------------------------

def svd_phase_init(W_FD: np.ndarray, m_rf: int) -> np.ndarray:
    """Analog warm start from the phases of the leading left singular vectors."""
    u, _, _ = np.linalg.svd(W_FD, full_matrices=True)
    return np.exp(1j * np.angle(u[:, :m_rf]))


def phase_split_decompose(W_FD: np.ndarray, m_rf: int):
    """Exact factorization for m_rf >= 2 L.

    Each digital column is realized as the sum of two constant-amplitude phase
    columns: |f| e^{j phi} = c e^{j(phi+delta)} + c e^{j(phi-delta)} with
    2 c cos(delta) = |f|. Residual is at the rounding level.
    """
    m_a, l = W_FD.shape
    if m_rf < 2 * l:
        raise ValueError(f"need m_rf >= 2 L for the exact split, got {m_rf} < {2 * l}")
    w_rf = np.ones((m_a, m_rf), dtype=complex)
    w_bb = np.zeros((m_rf, l), dtype=complex)
    for j in range(l):
        f = W_FD[:, j]
        amp = np.abs(f)
        c = float(amp.max()) / 2.0
        if c == 0.0:
            continue
        delta = np.arccos(np.clip(amp / (2.0 * c), 0.0, 1.0))
        phi = np.angle(f)
        w_rf[:, 2 * j] = np.exp(1j * (phi + delta))
        w_rf[:, 2 * j + 1] = np.exp(1j * (phi - delta))
        w_bb[2 * j, j] = c
        w_bb[2 * j + 1, j] = c
    return w_rf, w_bb


# ---------------------------------------------------------------------------
# alternating driver
# ---------------------------------------------------------------------------

def hybrid_decompose(W_FD: np.ndarray, m_rf: int, p_max: float | None = None,
                     eps: float = 1e-4, t_max: int = 30,
                     mo_eps: float = 1e-8, mo_max_iter: int = 100,
                     margin: float = 0.0) -> HybridPrecoder:
    """Factor a fully-digital precoder into analog phases and a baseband matrix.

    Alternates `baseband_ls` and `mo_analog` until the successive-residual
    ratio drops below eps or t_max rounds pass; the residual never increases
    across rounds. With m_rf >= 2 L the exact phase-splitting construction
    seeds the loop, which then exits at once at the rounding floor. A final
    power rescale caps ||W_RF W_BB||_F^2 at p_max when given.
    """
    if m_rf < 1:
        raise ValueError(f"need at least one RF chain, got {m_rf}")
    m_a, l = W_FD.shape
    norm_fd = float(np.linalg.norm(W_FD, "fro"))
    if norm_fd == 0.0:
        return HybridPrecoder(w_rf=np.ones((m_a, m_rf), dtype=complex),
                              w_bb=np.zeros((m_rf, l), dtype=complex),
                              margin=margin)

    if m_rf >= 2 * l:
        w_rf, w_bb = phase_split_decompose(W_FD, m_rf)
    else:
        w_rf = svd_phase_init(W_FD, m_rf)
        w_bb = baseband_ls(w_rf, W_FD)

    res_prev = float(np.linalg.norm(W_FD - w_rf @ w_bb, "fro") ** 2)
    stalled = False
    rounds = 0
    while res_prev > (1e-12 * norm_fd) ** 2 and rounds < t_max:
        rounds += 1
        w_bb = baseband_ls(w_rf, W_FD)
        w_rf, info = mo_analog(W_FD, w_bb, w_rf, eps=mo_eps,
                               max_iter=mo_max_iter, return_info=True)
        stalled = stalled or info.stalled
        res = float(np.linalg.norm(W_FD - w_rf @ w_bb, "fro") ** 2)
        if res_prev > 0.0 and res / res_prev < eps:
            res_prev = res
            break
        res_prev = res

    if rounds > 0:
        w_bb = baseband_ls(w_rf, W_FD)
        res_prev = float(np.linalg.norm(W_FD - w_rf @ w_bb, "fro") ** 2)

    if p_max is not None:
        power = float(np.linalg.norm(w_rf @ w_bb, "fro") ** 2)
        if power > p_max:
            w_bb = w_bb * np.sqrt(p_max / power)

    return HybridPrecoder(w_rf=w_rf, w_bb=w_bb, margin=margin,
                          residual=float(np.sqrt(res_prev)) / norm_fd,
                          iterations=rounds, stalled=stalled)
