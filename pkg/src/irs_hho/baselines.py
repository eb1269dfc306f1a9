"""Reference schemes and exact oracles for the single-user IRS problem."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .problem import PROJECTION_MARGIN, TWO_PI, BeamformingSolution, combined_channel, received_power


@dataclass
class BaselineResult:
    scheme: str
    w: np.ndarray
    theta: np.ndarray
    power: float
    iterations: int = 0
    history: list = field(default_factory=list)

    @property
    def solution(self) -> BeamformingSolution:
        return BeamformingSolution(self.w, self.theta)


def _mrt(vec, p_ap):
    norm = np.linalg.norm(vec)
    if norm == 0:
        raise ValueError("cannot form MRT beamformer on a zero channel")
    # a hair inside the ball so rounding never lands outside it
    return np.sqrt(p_ap * (1 - PROJECTION_MARGIN)) * vec / norm


def no_irs_snr(channels: ChannelSet, p_ap: float) -> BaselineResult:
    """MRT on the direct link alone; power ``p_ap * ||h_d||^2``."""
    w = _mrt(channels.h_d, p_ap)
    power = float(np.abs(np.vdot(channels.h_d, w)) ** 2)
    return BaselineResult("no-irs", w, np.zeros(0), power)


def optimal_phases_given_w(channels: ChannelSet, w) -> np.ndarray:
    """IRS phases that co-phase every reflected term with the direct term.

    Terms of zero magnitude get phase 0.
    """
    direct = np.vdot(channels.h_d, w)
    reflected = channels.h_r.conj() * (channels.G @ w)
    ref_angle = np.angle(direct) if direct != 0 else 0.0
    theta = np.mod(ref_angle - np.angle(reflected), TWO_PI)
    theta[reflected == 0] = 0.0
    return theta


def alternating_optimize(channels: ChannelSet, p_ap: float, tol: float = 1e-8,
                         max_iter: int = 1000) -> BaselineResult:
    """Alternate phase alignment and MRT on the combined channel.

    Starts from MRT on the direct link and stops once the relative power
    improvement of a full round drops below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if channels.N == 0:
        res = no_irs_snr(channels, p_ap)
        return BaselineResult("ao", res.w, res.theta, res.power, 0, [res.power])
    if np.linalg.norm(channels.h_d) > 0:
        w = _mrt(channels.h_d, p_ap)
    else:
        w = np.zeros(channels.M, dtype=complex)
        w[0] = np.sqrt(p_ap)
    theta = np.zeros(channels.N)
    power = received_power(channels, BeamformingSolution(w, theta))
    history = [power]
    it = 0
    for it in range(1, max_iter + 1):
        theta = optimal_phases_given_w(channels, w)
        w = _mrt(combined_channel(channels, theta).conj(), p_ap)
        new_power = received_power(channels, BeamformingSolution(w, theta))
        # each half-step maximizes exactly, so only rounding can lower the power
        assert new_power >= power * (1 - 1e-12), "alternating optimization lost power"
        history.append(new_power)
        gain = (new_power - power) / power if power > 0 else np.inf
        power = new_power
        if gain < tol:
            break
    return BaselineResult("ao", w, theta, power, it, history)


def closed_form_optimum_m1(channels: ChannelSet, p_ap: float) -> float:
    """Global optimum for a single AP antenna: ``p_ap * (|h_d| + sum |h_r,n g_n|)^2``."""
    if channels.M != 1:
        raise ValueError("closed form requires M == 1")
    amp = np.abs(channels.h_d[0]) + np.sum(np.abs(channels.h_r) * np.abs(channels.G[:, 0]))
    return float(p_ap * amp**2)


MAX_CANDIDATES = 10**7


def best_grid_phases(direct: complex, terms, levels: int) -> float:
    """Exact max of ``|direct + sum_n terms[n] * exp(j theta_n)|`` over a phase grid.

    The optimum co-phases every term as well as the grid allows with some
    direction ``psi`` of the total.  Each term's best grid point only changes
    when ``psi`` crosses one of ``len(terms) * levels`` breakpoints, so
    evaluating one ``psi`` per arc between breakpoints covers every selection
    an exhaustive search could return.
    """
    terms = np.asarray(terms, dtype=complex)
    grid = TWO_PI * np.arange(levels) / levels
    if terms.size == 0:
        return float(np.abs(direct))
    if levels == 1:
        return float(np.abs(direct + terms.sum()))
    breaks = np.mod(np.angle(terms)[:, None] + TWO_PI * (np.arange(levels) + 0.5) / levels, TWO_PI).ravel()
    breaks = np.sort(np.concatenate([breaks, [0.0]]))
    mids = 0.5 * (breaks + np.append(breaks[1:], breaks[0] + TWO_PI))
    # per-term rotation that best points toward each candidate direction
    best_k = np.rint((mids[:, None] - np.angle(terms)[None, :]) / (TWO_PI / levels)).astype(int) % levels
    totals = direct + np.sum(terms[None, :] * np.exp(1j * grid[best_k]), axis=1)
    return float(np.max(np.abs(totals)))


def brute_force(channels: ChannelSet, p_ap: float, phase_levels: int) -> float:
    """Best received power over a grid of full-power beamformers and IRS phases.

    ``M <= 2``.  For ``M = 2`` the power split ``|w_1|^2 / p_ap`` takes values
    ``k / L`` and the second antenna's relative phase is gridded like the IRS
    phases (``L = phase_levels``); the first antenna's phase is fixed because
    a common phase rotation leaves the power unchanged.  IRS phases are searched
    exactly over the ``L``-point grid for every beamformer candidate.
    """
    M, L = channels.M, int(phase_levels)
    if L < 1:
        raise ValueError("phase_levels must be >= 1")
    if M > 2:
        raise ValueError("brute force supports M <= 2 only")
    grid = TWO_PI * np.arange(L) / L
    if M == 1:
        candidates = [np.array([np.sqrt(p_ap)], dtype=complex)]
    else:
        splits = np.arange(L + 1) / L
        candidates = [np.sqrt(p_ap) * np.array([np.sqrt(a), np.sqrt(1 - a) * np.exp(1j * p)])
                      for a in splits for p in grid]
    cost = len(candidates) * max(channels.N, 1) * L
    if cost > MAX_CANDIDATES:
        raise ValueError(f"grid search needs {cost} evaluations, above the {MAX_CANDIDATES} guard")
    best = 0.0
    for w in candidates:
        direct = np.vdot(channels.h_d, w)
        terms = channels.h_r.conj() * (channels.G @ w)
        best = max(best, best_grid_phases(direct, terms, L) ** 2)
    return best
