import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_hho.baselines import (
    alternating_optimize, best_grid_phases, brute_force, closed_form_optimum_m1,
    no_irs_snr, optimal_phases_given_w,
)
from irs_hho.channel import ChannelSet, Geometry, random_unit_channels, realize_channels
from irs_hho.experiments import run_hho
from irs_hho.problem import BeamformingSolution, ProblemInstance, combined_channel, received_power


def naive_grid_max(ch, p_ap, levels):
    """Exhaustive enumeration over every beamformer and phase-shift grid point."""
    grid = 2 * np.pi * np.arange(levels) / levels
    if ch.M == 1:
        ws = [np.array([np.sqrt(p_ap)], dtype=complex)]
    else:
        ws = [np.sqrt(p_ap) * np.array([np.sqrt(a), np.sqrt(1 - a) * np.exp(1j * p)])
              for a in np.arange(levels + 1) / levels for p in grid]
    best = 0.0
    for w in ws:
        for theta in itertools.product(grid, repeat=ch.N):
            best = max(best, received_power(ch, BeamformingSolution(w, np.array(theta))))
    return best


def test_no_irs_unit_channel():
    ch = ChannelSet([1.0, 0, 0], np.zeros((2, 3)), [0, 0])
    res = no_irs_snr(ch, 1.0)
    assert res.power == pytest.approx(1.0)
    assert res.theta.size == 0


def test_no_irs_rotation_invariant():
    rng = np.random.default_rng(2)
    ch = random_unit_channels(4, 3, rng)
    q, _ = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))
    rotated = ChannelSet(q @ ch.h_d, ch.G, ch.h_r)
    assert no_irs_snr(rotated, 2.0).power == pytest.approx(no_irs_snr(ch, 2.0).power, rel=1e-12)


@given(st.integers(0, 10_000))
def test_no_irs_dominates_feasible_beamformers(seed):
    rng = np.random.default_rng(seed)
    ch = random_unit_channels(3, 2, rng)
    w = rng.normal(size=3) + 1j * rng.normal(size=3)
    w *= np.sqrt(1.5) / np.linalg.norm(w) * rng.uniform()
    assert abs(np.vdot(ch.h_d, w)) ** 2 <= no_irs_snr(ch, 1.5).power * (1 + 1e-12)


def test_no_irs_zero_channel():
    with pytest.raises(ValueError):
        no_irs_snr(ChannelSet([0.0], [[1.0]], [1.0]), 1.0)


def test_phases_already_aligned():
    ch = ChannelSet([1.0, 0.0], np.array([[1.0, 0.0], [2.0, 0.0]]), [0.5, 1.0])
    assert np.array_equal(optimal_phases_given_w(ch, np.array([1.0, 0.0])), [0.0, 0.0])


def test_phases_flip_opposing_term():
    ch = ChannelSet([1.0], [[-1.0]], [1.0])
    theta = optimal_phases_given_w(ch, np.array([1.0 + 0j]))
    assert theta[0] == pytest.approx(np.pi)
    assert received_power(ch, BeamformingSolution(np.array([1.0 + 0j]), theta)) == pytest.approx(4.0)


@given(st.integers(0, 10_000))
def test_phase_alignment_hits_triangle_bound(seed):
    rng = np.random.default_rng(seed)
    ch = random_unit_channels(3, 5, rng)
    w = rng.normal(size=3) + 1j * rng.normal(size=3)
    theta = optimal_phases_given_w(ch, w)
    bound = abs(np.vdot(ch.h_d, w)) + np.sum(np.abs(ch.h_r.conj() * (ch.G @ w)))
    assert abs(combined_channel(ch, theta) @ w) == pytest.approx(bound, rel=1e-9)


def test_zero_reflected_term_gets_zero_phase():
    ch = ChannelSet([1.0], [[0.0], [1.0]], [1.0, 1j])
    assert optimal_phases_given_w(ch, np.array([1.0]))[0] == 0.0


def test_ao_without_irs_matches_no_irs():
    ch = ChannelSet([1.0, 2.0j], np.zeros((0, 2)), np.zeros(0))
    assert alternating_optimize(ch, 1.0).power == pytest.approx(no_irs_snr(ch, 1.0).power)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 6), st.integers(0, 20))
def test_ao_monotone_feasible_and_beats_no_irs(seed, M, N):
    ch = random_unit_channels(M, N, np.random.default_rng(seed))
    res = alternating_optimize(ch, 0.7)
    assert np.all(np.diff(res.history) >= -1e-12 * res.history[-1])
    assert np.sum(np.abs(res.w) ** 2) <= 0.7 * (1 + 1e-9)
    assert res.power >= no_irs_snr(ch, 0.7).power * (1 - 1e-12)


@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("seed", range(5))
def test_ao_matches_closed_form_for_single_antenna(N, seed):
    ch = random_unit_channels(1, N, np.random.default_rng([N, seed]))
    assert alternating_optimize(ch, 2.0).power == pytest.approx(closed_form_optimum_m1(ch, 2.0), rel=1e-6)


def test_closed_form_values():
    assert closed_form_optimum_m1(ChannelSet([1.0], [[1.0]], [1.0]), 1.0) == pytest.approx(4.0)
    ch = ChannelSet([0.5j], [[3.0], [1.0]], [0.0, 0.0])
    assert closed_form_optimum_m1(ch, 2.0) == pytest.approx(2.0 * 0.25)
    with pytest.raises(ValueError):
        closed_form_optimum_m1(random_unit_channels(2, 1, np.random.default_rng(0)), 1.0)


def test_closed_form_bounds_hho():
    ch = random_unit_channels(1, 3, np.random.default_rng(8))
    inst = ProblemInstance(ch, 1.0, 1.0)
    sol, res = run_hho(inst, 10, 40, rng_seed=1)
    assert res.best_fitness <= closed_form_optimum_m1(ch, 1.0) * (1 + 1e-12)


@pytest.mark.parametrize("M,N,L", [(1, 2, 8), (1, 3, 6), (2, 2, 4), (2, 1, 5)])
def test_brute_force_equals_exhaustive_enumeration(M, N, L):
    ch = random_unit_channels(M, N, np.random.default_rng([M, N, L]))
    assert brute_force(ch, 1.3, L) == pytest.approx(naive_grid_max(ch, 1.3, L), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(2, 7))
def test_grid_phase_search_property(seed, N, L):
    rng = np.random.default_rng(seed)
    direct = complex(*rng.normal(size=2))
    terms = rng.normal(size=N) + 1j * rng.normal(size=N)
    grid = 2 * np.pi * np.arange(L) / L
    exhaustive = max(abs(direct + np.sum(terms * np.exp(1j * np.array(t))))
                     for t in itertools.product(grid, repeat=N))
    assert best_grid_phases(direct, terms, L) == pytest.approx(exhaustive, rel=1e-12)


def test_brute_force_single_level_is_zero_phase_power():
    ch = random_unit_channels(1, 3, np.random.default_rng(4))
    expected = received_power(ch, BeamformingSolution(np.array([1.0 + 0j]), np.zeros(3)))
    assert brute_force(ch, 1.0, 1) == pytest.approx(expected)


def test_brute_force_close_to_closed_form():
    ch = random_unit_channels(1, 2, np.random.default_rng(11))
    exact = closed_form_optimum_m1(ch, 1.0)
    bf = brute_force(ch, 1.0, 64)
    assert bf <= exact * (1 + 1e-12)
    assert bf >= 0.995 * exact


@pytest.mark.parametrize("M", [1, 2])
def test_brute_force_nested_grids_non_decreasing(M):
    ch = random_unit_channels(M, 3, np.random.default_rng(21))
    values = [brute_force(ch, 1.0, L) for L in (2, 4, 8, 16)]
    assert all(b >= a * (1 - 1e-12) for a, b in zip(values, values[1:]))


def test_brute_force_guard():
    ch = random_unit_channels(2, 40, np.random.default_rng(0))
    with pytest.raises(ValueError):
        brute_force(ch, 1.0, 128)
    with pytest.raises(ValueError):
        brute_force(random_unit_channels(3, 2, np.random.default_rng(0)), 1.0, 4)


def test_ao_on_physical_channels_beats_no_irs():
    ch = realize_channels(Geometry.for_user_distance(48.0), 8, 50, rng=np.random.default_rng(0), n_y=10)
    inst = ProblemInstance.from_dbm(ch)
    ao = alternating_optimize(ch, inst.p_ap)
    assert ao.power > no_irs_snr(ch, inst.p_ap).power
    assert np.sum(np.abs(ao.w) ** 2) <= inst.p_ap * (1 + 1e-9)
