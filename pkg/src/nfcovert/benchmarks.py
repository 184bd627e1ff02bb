"""Reference schemes: fully-digital bound, random phases, far-field model, ZF.

Each scheme shares the channel draw with the proposed design so that paired
rate comparisons are meaningful. The zero-forcing scheme nulls the warden
exactly (its leakage is zero to rounding), the random-phase scheme skips the
reflection optimization, and the far-field scheme replaces the spherical-wave
receiver links with rank-1 planar-wave channels.
"""

from __future__ import annotations

import enum
import math

import numpy as np

from .channel import (ChannelSet, build_far_field_channel, free_space_gain,
                      ris_geometry, ula_response, upa_response)
from .config import SystemConfig
from .detection import NoiseUncertainty, detection_report, max_leakage
from .hybrid import hybrid_decompose
from .orchestrator import (BeamformerState, OptimizationTrace, Solution,
                           alternating_optimization, init_beamformers)
from .wmmse import covert_rate, effective_channels, wmmse_fully_digital


class SchemeId(enum.Enum):
    """Comparison set: the proposed design and its four references."""

    PROPOSED = "proposed"
    FD = "fd"
    RP = "rp"
    FF = "ff"
    ZF = "zf"


def random_phase_v(rng: np.random.Generator, n: int) -> np.ndarray:
    """Unit-modulus vector with i.i.d. phases uniform on (0, 2 pi]."""
    phases = 2.0 * np.pi - rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.exp(1j * phases)


def zf_beamformer(H_B: np.ndarray, H_W: np.ndarray, p_max: float, l: int):
    """Zero-forcing precoder: the intended link's top right singular vectors
    projected onto the warden's null space, renormalized to full power.

    Returns (W_ZF, degenerate); when the warden's rows span the whole antenna
    space the projector vanishes and a zero matrix comes back flagged.
    """
    m_a = H_B.shape[1]
    _, _, vh = np.linalg.svd(H_B)
    w_tilde = vh[:l].conj().T
    projector = np.eye(m_a) - np.linalg.pinv(H_W) @ H_W
    projected = projector @ w_tilde
    norm = np.linalg.norm(projected, "fro")
    if norm < 1e-12 * max(1.0, np.linalg.norm(w_tilde, "fro")):
        return np.zeros((m_a, l), dtype=complex), True
    return math.sqrt(p_max) * projected / norm, False


def sum_path_gain_ris(channels: ChannelSet, W_RF: np.ndarray, W_BB: np.ndarray,
                      v_init: np.ndarray, eps: float = 1e-6,
                      max_iter: int = 200, return_trace: bool = False):
    """Reflection phases maximizing the intended link's sum path gain.

    Projected gradient ascent on v^H (H^H H o (G W W^H G^H)^T) v with
    per-element phase projection; the objective never decreases across
    accepted steps. Armijo backtracking starts from 1/lam_max of the form.
    """
    gw = channels.G @ (W_RF @ W_BB)
    s = (channels.H.conj().T @ channels.H) * (gw @ gw.conj().T).T
    s = 0.5 * (s + s.conj().T)
    lam_max = float(np.linalg.eigvalsh(s)[-1])
    if lam_max <= 0.0:
        return (v_init, [0.0]) if return_trace else v_init

    def objective(v):
        return float((v.conj() @ (s @ v)).real)

    v = np.exp(1j * np.angle(v_init))
    obj = objective(v)
    trace = [obj]
    for _ in range(max_iter):
        grad = 2.0 * (s @ v)
        tau = 1.0 / lam_max
        accepted = False
        for _ in range(40):
            cand = v + tau * grad
            cand = np.exp(1j * np.angle(np.where(cand == 0, v, cand)))
            obj_new = objective(cand)
            if obj_new >= obj:
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            break
        rel_gain = (obj_new - obj) / max(obj, 1e-300)
        v, obj = cand, obj_new
        trace.append(obj)
        if rel_gain < eps:
            break
    if return_trace:
        return v, trace
    return v


def far_field_scenario(cfg: SystemConfig, channels: ChannelSet | None = None,
                       rng: np.random.Generator | None = None) -> ChannelSet:
    """Replace the receiver links with rank-1 planar-wave channels.

    Each far-field link is (receiver steering) x (surface steering at the
    receiver's azimuth)^T scaled by sqrt(M_rx) times the free-space gain at
    the center distance; per-entry magnitudes then match the spherical-wave
    model at the same range. G is reused from `channels` when given.
    """
    ris = ris_geometry(cfg)
    lam = cfg.wavelength_m

    def ff_link(pos, m_rx):
        chi = free_space_gain(cfg.carrier_hz, pos.range_m)
        a_rx = ula_response(-pos.azimuth_rad, m_rx, cfg.d_x, lam)
        a_ris = upa_response(pos.azimuth_rad, 0.0, cfg.n_y, cfg.n_z, cfg.d_x, lam)
        return math.sqrt(m_rx * cfg.n_elements) * chi * np.outer(a_rx, a_ris)

    if channels is not None:
        g = channels.G
    else:
        g = build_far_field_channel(cfg, rng or np.random.default_rng(cfg.seed))
    return ChannelSet(G=g, H=ff_link(cfg.bob, cfg.m_b),
                      F=ff_link(cfg.willie, cfg.m_w), ris=ris,
                      bob=cfg.bob, willie=cfg.willie, carrier_hz=cfg.carrier_hz)


# ---------------------------------------------------------------------------
# scheme runners (shared channel draw in, Solution out)
# ---------------------------------------------------------------------------

def _single_round_solution(cfg: SystemConfig, channels: ChannelSet,
                           v: np.ndarray, w_fd: np.ndarray,
                           use_hybrid: bool, wmmse_iters: int = 0) -> Solution:
    """Package a fixed-reflection design into a Solution record."""
    if use_hybrid:
        hp = hybrid_decompose(w_fd, cfg.m_rf, p_max=cfg.p_max,
                              eps=cfg.hybrid_eps, t_max=cfg.hybrid_max_iter)
        state = BeamformerState(w_rf=hp.w_rf, w_bb=hp.w_bb, w_fd=w_fd, v=v)
    else:
        state = BeamformerState(w_rf=None, w_bb=None, w_fd=w_fd, v=v)
    h_b, h_w = effective_channels(channels, v)
    w_eff = state.effective_precoder
    rate = covert_rate(h_b, w_eff, cfg.sigma_b_sq)
    z = float(np.linalg.norm(h_w @ w_eff) ** 2)
    trace = OptimizationTrace()
    trace.rates.append(rate)
    trace.rates_fd.append(covert_rate(h_b, w_fd, cfg.sigma_b_sq))
    trace.leakages.append(z)
    trace.powers.append(float(np.linalg.norm(w_eff) ** 2))
    trace.wmmse_iterations.append(wmmse_iters)
    trace.admm_iterations.append(0)
    trace.hybrid_residuals.append(hp.residual if use_hybrid else 0.0)
    trace.admm_primal_residuals.append(0.0)
    report = detection_report(z, cfg.kappa, NoiseUncertainty.from_config(cfg))
    return Solution(state=state, rate=rate, report=report, trace=trace)


def run_proposed(cfg: SystemConfig, channels: ChannelSet,
                 rng: np.random.Generator) -> Solution:
    return alternating_optimization(cfg, channels, init_beamformers(cfg, rng),
                                    use_hybrid=True)


def run_fd(cfg: SystemConfig, channels: ChannelSet,
           rng: np.random.Generator) -> Solution:
    return alternating_optimization(cfg, channels, init_beamformers(cfg, rng),
                                    use_hybrid=False)


def run_rp(cfg: SystemConfig, channels: ChannelSet,
           rng: np.random.Generator) -> Solution:
    """Random reflection phases; the transmitter still optimizes its precoder."""
    v = random_phase_v(rng, cfg.n_elements)
    w_fd, wtrace = wmmse_fully_digital(channels, v, cfg)
    return _single_round_solution(cfg, channels, v, w_fd, use_hybrid=True,
                                  wmmse_iters=wtrace.iterations)


def run_zf(cfg: SystemConfig, channels: ChannelSet,
           rng: np.random.Generator) -> Solution:
    """Sum-path-gain reflection phases, then warden-nulling precoder."""
    v0 = random_phase_v(rng, cfg.n_elements)
    h_b0, _ = effective_channels(channels, v0)
    _, _, vh = np.linalg.svd(h_b0)
    w_seed = vh[:cfg.n_streams].conj().T * math.sqrt(cfg.p_max / cfg.n_streams)
    v = sum_path_gain_ris(channels, w_seed, np.eye(cfg.n_streams), v0)
    h_b, h_w = effective_channels(channels, v)
    w_zf, _ = zf_beamformer(h_b, h_w, cfg.p_max, cfg.n_streams)
    return _single_round_solution(cfg, channels, v, w_zf, use_hybrid=True)


def run_ff(cfg: SystemConfig, channels: ChannelSet,
           rng: np.random.Generator) -> Solution:
    """Full design pipeline on the planar-wave channel model."""
    ch_ff = far_field_scenario(cfg, channels=channels)
    return alternating_optimization(cfg, ch_ff, init_beamformers(cfg, rng),
                                    use_hybrid=True)


SCHEME_RUNNERS = {
    SchemeId.PROPOSED: run_proposed,
    SchemeId.FD: run_fd,
    SchemeId.RP: run_rp,
    SchemeId.FF: run_ff,
    SchemeId.ZF: run_zf,
}


def run_scheme(scheme: SchemeId, cfg: SystemConfig, channels: ChannelSet,
               rng: np.random.Generator) -> Solution:
    return SCHEME_RUNNERS[scheme](cfg, channels, rng)
