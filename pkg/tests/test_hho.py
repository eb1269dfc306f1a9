import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irs_hho import hho
from irs_hho.hho import (
    EXPLORATION, HARD_BESIEGE, HARD_DIVE, SOFT_BESIEGE, SOFT_DIVE,
    HhoConfig, dive_step, escaping_energy, exploration_step, hard_besiege,
    initialize_population, levy_flight, optimize, select_branch, soft_besiege, step,
)


def neg_sphere(X):
    return -np.sum(np.atleast_2d(X) ** 2, axis=1)


def cfg(d=3, q=6, t=20, lo=-5.0, hi=5.0, seed=0, **kw):
    return HhoConfig(q, t, np.full(d, lo), np.full(d, hi), rng_seed=seed, **kw)


# --- configuration ---------------------------------------------------------

@pytest.mark.parametrize("kwargs", [
    dict(population_size=1), dict(max_iterations=0), dict(levy_beta=0.0), dict(levy_beta=2.5),
])
def test_config_rejects_invalid(kwargs):
    base = dict(population_size=4, max_iterations=5, lower_bounds=[0.0], upper_bounds=[1.0])
    base.update(kwargs)
    with pytest.raises(ValueError):
        HhoConfig(**base)


def test_config_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        HhoConfig(4, 5, [0.0, 1.0], [1.0, 1.0])


# --- initialization --------------------------------------------------------

def test_initial_population_in_box():
    state = initialize_population(cfg(d=1, q=3, lo=0.0, hi=1.0), neg_sphere, batch=True)
    assert state.positions.shape == (3, 1)
    assert np.all((state.positions >= 0) & (state.positions <= 1))
    assert state.iteration == 0
    assert state.rabbit_fitness == state.fitness.max()


def test_seed_included_verbatim():
    state = initialize_population(cfg(d=1, q=3, lo=0.0, hi=1.0), neg_sphere, seeds=[[0.5]], batch=True)
    assert any(np.array_equal(a.position, [0.5]) for a in state.population)


def test_initialization_deterministic():
    a = initialize_population(cfg(seed=11), neg_sphere, batch=True)
    b = initialize_population(cfg(seed=11), neg_sphere, batch=True)
    assert np.array_equal(a.positions, b.positions)


def test_seed_errors():
    c = cfg(d=2, q=2, lo=0.0, hi=1.0)
    with pytest.raises(ValueError):
        initialize_population(c, neg_sphere, seeds=[[0.5]], batch=True)
    with pytest.raises(ValueError):
        initialize_population(c, neg_sphere, seeds=[[0.5, 0.5]] * 3, batch=True)
    with pytest.raises(ValueError):
        initialize_population(c, neg_sphere, seeds=[[2.0, 0.5]], batch=True)


# --- energy and dispatch ---------------------------------------------------

def test_escaping_energy_values():
    assert escaping_energy(1.0, 0, 100) == 2.0
    assert escaping_energy(0.7, 100, 100) == 0.0
    assert escaping_energy(-0.5, 50, 100) == pytest.approx(-0.5)


@given(st.floats(-1, 1), st.integers(1, 1000), st.data())
def test_energy_envelope(e0, T, data):
    t = data.draw(st.integers(0, T))
    assert abs(escaping_energy(e0, t, T)) <= 2 * (1 - t / T) + 1e-15


@given(st.floats(-2, 2), st.floats(0, 1))
def test_dispatch_exhaustive(energy, r):
    code = int(select_branch(energy, r))
    a = abs(energy)
    expected = [
        a >= 1,
        a < 1 and r >= 0.5 and a >= 0.5,
        a < 1 and r >= 0.5 and a < 0.5,
        a < 1 and r < 0.5 and a >= 0.5,
        a < 1 and r < 0.5 and a < 0.5,
    ]
    assert sum(expected) == 1
    assert expected[code]


# --- position updates ------------------------------------------------------

LB, UB = np.array([-10.0]), np.array([10.0])


def test_exploration_random_member_r1_zero():
    x_rand = np.array([0.3])
    out = exploration_step(np.array([0.1]), x_rand, np.array([0.0]), np.array([1.0]), LB, UB,
                           q=0.9, r1=0.0, r2=0.4, r3=0.5, r4=0.5)
    assert np.array_equal(out, x_rand)


def test_exploration_rabbit_branch_r3_zero():
    out = exploration_step(np.array([0.1]), np.array([0.3]), np.array([0.5]), np.array([2.0]), LB, UB,
                           q=0.1, r1=0.5, r2=0.5, r3=0.0, r4=0.5)
    assert np.array_equal(out, [1.5])


def test_exploration_worked_value():
    out = exploration_step(np.array([0.2]), np.array([0.8]), np.array([0.0]), np.array([0.0]),
                           np.array([0.0]), np.array([1.0]), q=0.9, r1=0.5, r2=0.5, r3=0.0, r4=0.0)
    assert out[0] == pytest.approx(0.5)


def test_soft_besiege_values():
    assert soft_besiege(np.array([3.0]), np.array([5.0]), 0.0, 1.0, LB, UB)[0] == 2.0
    assert soft_besiege(np.array([4.0]), np.array([4.0]), 0.7, 1.0, LB, UB)[0] == 0.0
    assert soft_besiege(np.array([3.0]), np.array([5.0]), 0.5, 1.0, LB, UB)[0] == pytest.approx(1.0)


def test_hard_besiege_values():
    assert hard_besiege(np.array([-3.0]), np.array([5.0]), 0.0, LB, UB)[0] == 5.0
    assert hard_besiege(np.array([5.0]), np.array([5.0]), 0.3, LB, UB)[0] == 5.0
    assert hard_besiege(np.array([3.0]), np.array([5.0]), 0.4, LB, UB)[0] == pytest.approx(4.2)


def test_updates_clamp_to_box():
    out = hard_besiege(np.array([-10.0]), np.array([9.0]), -0.49, LB, UB)
    assert out[0] == 10.0


def test_periodic_coordinates_wrap():
    lb, ub = np.array([0.0, 0.0]), np.array([1.0, 2 * np.pi])
    out = hho.clamp(np.array([1.5, 2 * np.pi + 0.25]), lb, ub, np.array([False, True]))
    assert out[0] == 1.0
    assert out[1] == pytest.approx(0.25)
    out = hho.clamp(np.array([-0.5, -0.25]), lb, ub, np.array([False, True]))
    assert out[0] == 0.0
    assert out[1] == pytest.approx(2 * np.pi - 0.25)


# --- Lévy flight -----------------------------------------------------------

def test_levy_shape_and_scale():
    rng = np.random.default_rng(0)
    v = levy_flight(5, 1.5, 0.01, rng)
    assert v.shape == (5,) and np.all(np.isfinite(v))
    assert np.array_equal(levy_flight(4, 1.5, 0.0, rng), np.zeros(4))


def test_levy_heavy_tail():
    draws = levy_flight(100_000, 1.5, 1.0, np.random.default_rng(123))
    z = (draws - draws.mean()) / draws.std()
    kurtosis = np.mean(z**4) - 3.0
    assert kurtosis > 10


def test_mantegna_sigma_beta_1_5():
    # closed form evaluated independently with the gamma-function values
    # Gamma(2.5) = 1.329340388, Gamma(1.25) = 0.906402477
    expected = (1.329340388 * np.sin(0.75 * np.pi) / (0.906402477 * 1.5 * 2**0.25)) ** (1 / 1.5)
    assert hho.mantegna_sigma(1.5) == pytest.approx(expected, rel=1e-8)


# --- rapid dives -----------------------------------------------------------

def _dive(objective, step_vec):
    return dive_step(np.array([0.0]), objective(np.array([0.0])), np.array([2.0]), np.array([0.0]),
                     0.5, 1.0, np.array(step_vec), LB, UB, objective)


def test_dive_takes_y_when_it_improves():
    # Y = 2 - 0.5 * |2 - 0| = 1 ; Z = 1 + 3 = 4
    pos, fit, n = _dive(lambda x: -(x[0] - 1.0) ** 2, [3.0])
    assert pos[0] == 1.0 and fit == 0.0 and n == 1


def test_dive_takes_z_when_only_z_improves():
    pos, fit, n = _dive(lambda x: -(x[0] - 4.0) ** 2 if x[0] > 2 else -100.0, [3.0])
    assert pos[0] == 4.0 and n == 2


def test_dive_retains_position_otherwise():
    pos, fit, n = _dive(lambda x: -abs(x[0]), [3.0])
    assert pos[0] == 0.0 and fit == 0.0 and n == 2


# --- iteration and full runs ------------------------------------------------

def test_step_grows_trace_monotonically():
    c = cfg(seed=3)
    state = initialize_population(c, neg_sphere, batch=True)
    previous = state.rabbit_fitness
    for k in range(1, 6):
        step(state, neg_sphere, c, batch=True)
        assert len(state.trace) == k
        assert state.trace[-1] >= previous
        previous = state.trace[-1]


def test_all_branches_reachable_over_1000_iterations():
    res = optimize(cfg(q=5, t=1000, seed=9), neg_sphere, batch=True)
    assert all(res.branch_counts[n] > 0 for n in hho.BRANCH_NAMES.values())


def test_single_iteration_trace():
    res = optimize(cfg(t=1), neg_sphere, batch=True)
    assert len(res.trace) == 1


def test_optimize_deterministic():
    a = optimize(cfg(seed=5, t=50), neg_sphere, batch=True)
    b = optimize(cfg(seed=5, t=50), neg_sphere, batch=True)
    assert np.array_equal(a.trace, b.trace)
    assert np.array_equal(a.best_position, b.best_position)
    assert a.evaluations == b.evaluations


def test_pointwise_and_batch_evaluation_agree():
    a = optimize(cfg(seed=2, t=40), neg_sphere, batch=True)
    b = optimize(cfg(seed=2, t=40), lambda x: float(-np.sum(x**2)))
    assert np.array_equal(a.trace, b.trace)


def test_result_consistency_and_eval_bound():
    c = cfg(d=4, q=8, t=60, seed=1)
    res = optimize(c, neg_sphere, batch=True)
    assert res.best_fitness == neg_sphere(res.best_position)[0]
    assert res.evaluations <= c.population_size * (c.max_iterations + 1) * 3


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 6), st.booleans())
def test_box_and_monotonicity(seed, d, wrap):
    lb, ub = np.full(d, -1.0), np.full(d, 2.0)
    seen = []

    def objective(X):
        seen.append(np.array(X))
        return -np.sum((X - 0.3) ** 2, axis=1)

    c = HhoConfig(6, 30, lb, ub, rng_seed=seed, periodic=np.full(d, wrap))
    res = optimize(c, objective, batch=True)
    allx = np.vstack(seen)
    assert np.all(allx >= lb) and np.all(allx <= ub)
    assert np.all(np.diff(res.trace) >= 0)


def test_rabbit_dominates_all_evaluations():
    values = []

    def objective(X):
        f = neg_sphere(X)
        values.extend(f)
        return f

    res = optimize(cfg(seed=4, t=30), objective, batch=True)
    assert res.best_fitness == max(values)


def test_sphere_converges():
    res = optimize(HhoConfig(30, 500, np.full(30, -100.0), np.full(30, 100.0), rng_seed=0), neg_sphere, batch=True)
    assert res.best_fitness > -1e-6


def test_branch_codes_distinct():
    assert len({EXPLORATION, SOFT_BESIEGE, HARD_BESIEGE, SOFT_DIVE, HARD_DIVE}) == 5
