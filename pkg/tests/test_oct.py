import numpy as np
import pytest

from rotorctl.basis import build_basis
from rotorctl.dynamics import TimeGrid, propagate
from rotorctl.errors import DomainError
from rotorctl.oct import OctProblem, fidelity, gradient, optimize
from rotorctl.pulses import GAUSSIAN_THZ, PulseSequence, PulseSpec
from rotorctl.states import basis_state
from rotorctl.targets import target_state

GROUND = target_state(2, 0)


def small_problem(params, **kw):
    # weak guess so that j_cap = 6 keeps the top levels empty
    guess = PulseSpec(GAUSSIAN_THZ, 1e-3, params.period / 5, params.period / 50)
    base = dict(target=target_state(2, 2), n_steps=512, j_cap=6, guess=guess)
    base.update(kw)
    return OctProblem(params, **base)


def test_zero_field_fidelities(co):
    prob = OctProblem(co, GROUND, n_steps=256)
    assert fidelity(np.zeros(256), prob) == pytest.approx(1.0, abs=1e-14)
    target = target_state(2, 10)
    prob = OctProblem(co, target, n_steps=256)
    assert fidelity(np.zeros(256), prob) == pytest.approx(target.coefficients[0] ** 2, abs=1e-12)


def test_zero_gradient_at_stationary_maximum(co):
    prob = OctProblem(co, GROUND, n_steps=256)
    g = gradient(np.zeros(256), prob)
    assert g.shape == (256,)
    assert np.max(np.abs(g)) < 1e-10


def test_gradient_matches_finite_differences(co):
    prob = small_problem(co)
    values = prob.guess_field()
    g = gradient(values, prob)
    rng = np.random.default_rng(1)
    eps = 1e-6
    for k in rng.choice(prob.n_steps, 10, replace=False):
        up = values.copy()
        dn = values.copy()
        up[k] += eps
        dn[k] -= eps
        fd = (fidelity(up, prob) - fidelity(dn, prob)) / (2 * eps)
        assert abs(g[k] - fd) <= 1e-5 * abs(fd)


def test_fidelity_matches_propagate(co):
    prob = small_problem(co)
    values = prob.guess_field()
    seq = PulseSequence(override=prob.samples(values))
    final, _ = propagate(basis_state(build_basis("linear", 6), 0), co, seq, TimeGrid(0.0, prob.T, prob.n_steps))
    ref = abs(np.vdot(prob.target.as_state(6).coefficients, final.coefficients)) ** 2
    assert fidelity(values, prob) == pytest.approx(ref, abs=1e-12)


def test_field_length_checked(co):
    prob = small_problem(co)
    with pytest.raises(DomainError):
        fidelity(np.zeros(10), prob)


def test_problem_validation(co):
    with pytest.raises(DomainError):
        OctProblem(co, GROUND, n_steps=100)
    with pytest.raises(DomainError):
        OctProblem(co, GROUND, horizon=0.0)
    with pytest.raises(DomainError):
        OctProblem(co, target_state(2, 10), j_cap=8)


def test_immediate_success_for_ground_target(co):
    res = optimize(OctProblem(co, GROUND, n_steps=256, guess=PulseSpec(GAUSSIAN_THZ, 0.0, 1.0, 1.0)))
    assert res.converged and res.iterations <= 1
    assert res.fidelity == pytest.approx(1.0, abs=1e-14)


def test_no_control_authority_reports_failure(co):
    prob = small_problem(co, field_bound=0.0)
    res = optimize(prob)
    assert not res.converged
    assert np.all(res.field.values == 0)
    assert res.fidelity == pytest.approx(target_state(2, 2).coefficients[0] ** 2, abs=1e-12)
    assert "exhausted" in res.message


def test_bounded_optimization(co):
    bound = 5e-3
    res = optimize(small_problem(co, field_bound=bound, max_iterations=25))
    assert np.max(np.abs(res.field.values)) <= bound
    assert np.all(np.diff(res.fidelity_history) >= -1e-12)
    assert res.fidelity_history[-1] > res.fidelity_history[0]
    assert len(res.fidelity_history) == res.iterations + 1


def test_penalty_objective_monotone(co):
    res = optimize(small_problem(co, penalty=1e-3, max_iterations=15))
    assert np.all(np.diff(res.objective_history) > 0)


def test_reproducible(co):
    a = optimize(small_problem(co, max_iterations=10))
    b = optimize(small_problem(co, max_iterations=10))
    assert np.array_equal(a.field.values, b.field.values)
    assert a.fidelity == b.fidelity and a.iterations == b.iterations


def test_overflowing_trials_are_rejected(co):
    # j_cap = 6 is too tight for this target: the ascent ends at the guard, not at the goal
    res = optimize(small_problem(co))
    assert not res.converged and 0.5 < res.fidelity < 0.99
    assert np.all(np.diff(res.fidelity_history) >= -1e-12)


def test_small_problem_reaches_goal(co):
    res = optimize(small_problem(co, j_cap=8))
    assert res.converged and res.fidelity >= 0.99
    assert np.all(np.diff(res.fidelity_history) >= -1e-12)
