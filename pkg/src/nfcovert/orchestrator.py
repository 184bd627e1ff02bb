"""Overall alternating optimization across the three design blocks.

One outer round runs the fully-digital WMMSE stage at the current reflection
vector, factorizes the result into the hybrid pair, and then re-optimizes the
reflection vector by ADMM. Every block is ascent-safe, so the covert-rate
trace is monotone nondecreasing (up to floating-point slack) and the final
solution is feasible for the power and leakage constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .config import SystemConfig
from .detection import (DetectionReport, NoiseUncertainty, detection_report,
                        leakage_power, max_leakage)
from .hybrid import hybrid_decompose
from .ris import AdmmParams, admm_reflection
from .wmmse import (SolverTolerances, covert_rate, effective_channels,
                    mse_matrix, receive_filter, weight_matrix,
                    wmmse_fully_digital)


class FeasibilityError(RuntimeError):
    """A solution violates one of the design constraints; the message names it."""


@dataclass
class BeamformerState:
    """All transmit-side and surface-side design variables of one solution."""

    w_rf: np.ndarray | None
    w_bb: np.ndarray | None
    w_fd: np.ndarray
    v: np.ndarray

    @property
    def effective_precoder(self) -> np.ndarray:
        if self.w_rf is None or self.w_bb is None:
            return self.w_fd
        return self.w_rf @ self.w_bb


@dataclass
class OptimizationTrace:
    """Per-outer-round diagnostics of one alternating-optimization run."""

    rates: list = field(default_factory=list)         # hybrid-product rate
    rates_fd: list = field(default_factory=list)      # fully-digital upper bound
    leakages: list = field(default_factory=list)
    powers: list = field(default_factory=list)
    wmmse_iterations: list = field(default_factory=list)
    admm_iterations: list = field(default_factory=list)
    hybrid_residuals: list = field(default_factory=list)
    admm_primal_residuals: list = field(default_factory=list)

    @property
    def outer_iterations(self) -> int:
        return len(self.rates)


@dataclass
class Solution:
    """Converged design point with its audit report and trace."""

    state: BeamformerState
    rate: float
    report: DetectionReport
    trace: OptimizationTrace


def init_beamformers(cfg: SystemConfig, rng: np.random.Generator) -> BeamformerState:
    """Random starting point: uniform phases everywhere, full transmit power."""
    n = cfg.n_elements
    v = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=n))
    w_rf = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, size=(cfg.m_a, cfg.m_rf)))
    w_bb = (rng.standard_normal((cfg.m_rf, cfg.n_streams))
            + 1j * rng.standard_normal((cfg.m_rf, cfg.n_streams)))
    w_bb *= np.sqrt(cfg.p_max) / np.linalg.norm(w_rf @ w_bb, "fro")
    return BeamformerState(w_rf=w_rf, w_bb=w_bb, w_fd=w_rf @ w_bb, v=v)


def _stage_leakage(channels: ChannelSet, v: np.ndarray, w: np.ndarray) -> float:
    _, h_w = effective_channels(channels, v)
    return float(np.linalg.norm(h_w @ w) ** 2)


def alternating_optimization(cfg: SystemConfig, channels: ChannelSet,
                             init: BeamformerState,
                             use_hybrid: bool = True) -> Solution:
    """Joint design of the hybrid precoder and the reflection vector.

    Repeats {fully-digital WMMSE -> hybrid factorization -> reflection ADMM}
    until the relative covert-rate change drops below the configured outer
    tolerance. The trace records the rate after each complete round; the
    blocks are individually non-degrading, so the trace is monotone.
    """
    u_nc = NoiseUncertainty.from_config(cfg)
    p_leak = max_leakage(cfg.kappa, u_nc)
    if p_leak <= 0.0:
        raise FeasibilityError("covertness level leaves no leakage budget "
                               "(kappa = 0 admits only silence)")
    wmmse_tol = SolverTolerances(eps=cfg.wmmse_eps, t_max=cfg.wmmse_max_iter)
    exact_hybrid = cfg.m_rf >= 2 * cfg.n_streams
    delta = 0.0 if exact_hybrid else 0.01 * p_leak

    v = np.asarray(init.v, dtype=complex)
    w_fd = init.w_fd if init.w_fd is not None else init.effective_precoder
    trace = OptimizationTrace()
    hybrid = None
    rate_prev = None

    for _ in range(cfg.ao_max_iter):
        w_fd, wtrace = wmmse_fully_digital(
            channels, v, cfg, wmmse_tol, p_leak=p_leak - delta, w_init=w_fd)

        if use_hybrid:
            hybrid = hybrid_decompose(w_fd, cfg.m_rf, p_max=cfg.p_max,
                                      eps=cfg.hybrid_eps, t_max=cfg.hybrid_max_iter,
                                      margin=delta)
            w_eff = hybrid.product
            if _stage_leakage(channels, v, w_eff) > p_leak * (1.0 + 1e-6):
                if delta == 0.0:
                    # one margin retry before declaring the round infeasible
                    delta = 0.01 * p_leak
                    w_fd, wtrace = wmmse_fully_digital(
                        channels, v, cfg, wmmse_tol, p_leak=p_leak - delta,
                        w_init=w_fd)
                    hybrid = hybrid_decompose(w_fd, cfg.m_rf, p_max=cfg.p_max,
                                              eps=cfg.hybrid_eps,
                                              t_max=cfg.hybrid_max_iter,
                                              margin=delta)
                    w_eff = hybrid.product
                if _stage_leakage(channels, v, w_eff) > p_leak * (1.0 + 1e-6):
                    raise FeasibilityError(
                        "hybrid factorization overshoots the leakage ceiling "
                        "even with the reserved margin")
        else:
            w_eff = w_fd

        h_b, _ = effective_channels(channels, v)
        u = receive_filter(h_b, w_eff, cfg.sigma_b_sq)
        psi = weight_matrix(mse_matrix(h_b, w_eff, u, cfg.sigma_b_sq))
        if use_hybrid:
            w_rf_arg, w_bb_arg = hybrid.w_rf, hybrid.w_bb
        else:
            w_rf_arg, w_bb_arg = w_eff, np.eye(w_eff.shape[1], dtype=complex)
        v, admm_info = admm_reflection(
            channels, w_rf_arg, w_bb_arg, u, psi, p_leak,
            AdmmParams(eps=cfg.admm_eps, t_max=cfg.admm_max_iter, v_init=v),
            return_info=True)

        h_b, h_w = effective_channels(channels, v)
        rate = covert_rate(h_b, w_eff, cfg.sigma_b_sq)
        trace.rates.append(rate)
        trace.rates_fd.append(covert_rate(h_b, w_fd, cfg.sigma_b_sq))
        trace.leakages.append(float(np.linalg.norm(h_w @ w_eff) ** 2))
        trace.powers.append(float(np.linalg.norm(w_eff) ** 2))
        trace.wmmse_iterations.append(wtrace.iterations)
        trace.admm_iterations.append(admm_info.iterations)
        trace.hybrid_residuals.append(hybrid.residual if hybrid else 0.0)
        trace.admm_primal_residuals.append(admm_info.primal_residual)

        if rate_prev is not None and abs(rate - rate_prev) < cfg.ao_eps * max(rate_prev, 1e-12):
            break
        rate_prev = rate

    state = BeamformerState(
        w_rf=hybrid.w_rf if (use_hybrid and hybrid) else None,
        w_bb=hybrid.w_bb if (use_hybrid and hybrid) else None,
        w_fd=w_fd, v=v)
    rate_final = covert_rate(effective_channels(channels, v)[0],
                             state.effective_precoder, cfg.sigma_b_sq)
    z = _stage_leakage(channels, v, state.effective_precoder)
    report = detection_report(z, cfg.kappa, u_nc)
    return Solution(state=state, rate=rate_final, report=report, trace=trace)


def evaluate_solution(sol: Solution, channels: ChannelSet, cfg: SystemConfig):
    """Recompute the audit quantities from scratch and enforce feasibility.

    Returns (DetectionReport, rate); raises FeasibilityError naming the first
    violated constraint.
    """
    u_nc = NoiseUncertainty.from_config(cfg)
    p_leak = max_leakage(cfg.kappa, u_nc)
    state = sol.state
    w_eff = state.effective_precoder

    power = float(np.linalg.norm(w_eff) ** 2)
    if power > cfg.p_max * (1.0 + 1e-6):
        raise FeasibilityError(
            f"transmit power constraint violated: {power:.6e} W > {cfg.p_max:.6e} W")
    if np.any(np.abs(np.abs(state.v) - 1.0) > 1e-9):
        raise FeasibilityError("reflection coefficients are not unit modulus")
    if state.w_rf is not None and np.any(np.abs(np.abs(state.w_rf) - 1.0) > 1e-9):
        raise FeasibilityError("analog precoder entries are not unit modulus")

    if state.w_rf is not None:
        z = leakage_power(channels.F, state.v, channels.G, state.w_rf, state.w_bb)
    else:
        z = leakage_power(channels.F, state.v, channels.G, w_eff,
                          np.eye(w_eff.shape[1]))
    if z > p_leak * (1.0 + 1e-6):
        raise FeasibilityError(
            f"covertness constraint violated: leakage {z:.6e} W > budget {p_leak:.6e} W")

    report = detection_report(z, cfg.kappa, u_nc)
    if report.min_dep < 1.0 - cfg.kappa - 1e-9:
        raise FeasibilityError(
            f"detection error probability {report.min_dep:.9f} fell below "
            f"the covertness level 1 - kappa = {1.0 - cfg.kappa:.9f}")

    h_b, _ = effective_channels(channels, state.v)
    rate = covert_rate(h_b, w_eff, cfg.sigma_b_sq)
    if abs(rate - sol.rate) > 1e-9 * max(1.0, abs(sol.rate)):
        raise FeasibilityError(
            f"stored rate {sol.rate!r} disagrees with the recomputed rate {rate!r}")
    return report, rate
