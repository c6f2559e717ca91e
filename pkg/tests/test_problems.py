import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import fracdp as F
from fracdp.errors import DomainError
from fracdp.suites import random_piecewise_control, random_positions

from conftest import ALPHAS, closed_value, example_start


def history_ending_at(grid, j, x, slope):
    """History with constant Caputo derivative ``slope`` and ``w(t_j) = x``."""
    w0 = x - slope * grid.tau(j) ** grid.alpha / math.gamma(grid.alpha + 1)
    return F.Position.from_psi(grid, [w0], np.full((j, 1), slope))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_example_constants(alpha):
    assert F.example_w0(alpha) == 2 ** (alpha - 1) + 1
    th = F.example_switch_time(alpha)
    assert 1.0 < th < 2.0
    assert 2 ** (alpha - 1) - 1 + (2 - th) ** alpha == pytest.approx(0.0, abs=1e-14)


def test_val_star_trivial_cases():
    g = F.Grid(2.0, 100, 0.5)
    assert F.val_star(F.make_initial_position(g, [1.3])) == 1.3
    assert F.val_star(F.Position.from_path(g, np.full(40, -0.7))) == pytest.approx(-0.7, abs=1e-15)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_val_star_predicts_zero_control_terminal_state(alpha, rng):
    P = F.example_problem(alpha, 2.0, 200)
    hist = F.solve_motion(P, example_start(P), F.ControlSignal.constant(P.grid, 0, 100, -1.0), 100).position
    cont = F.solve_motion(P, hist, F.ControlSignal.constant(P.grid, 100, 200, 0.0), 200)
    assert F.val_star(hist) == pytest.approx(cont.terminal_state[0], abs=1e-9)
    # closed form of the same prediction: w0 - (2^a - 1)
    assert F.val_star(hist) == pytest.approx(F.example_w0(alpha) - 2**alpha + 1, abs=1e-9)
    for pos in random_positions(P, example_start(P), 20, rng):
        end = F.solve_motion(P, pos, F.ControlSignal.constant(P.grid, pos.t_index, 200, 0.0), 200)
        assert F.val_star(pos) == pytest.approx(end.terminal_state[0], abs=1e-9)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_phi_closed_forms(alpha):
    P = F.example_problem(alpha, 2.0, 200)
    s = example_start(P)
    assert F.phi_example(s) == pytest.approx(closed_value(alpha), abs=1e-14)
    end = F.solve_motion(P, s, F.ControlSignal.constant(P.grid, 0, 200, 1.0), 200).position
    assert F.phi_example(end) == pytest.approx(end.state[0] ** 2, abs=1e-14)
    with pytest.raises(DomainError):
        F.phi_example_grad(end)
    inside = F.make_initial_position(P.grid, [0.3])
    assert F.phi_example(inside) == 0.0
    assert F.phi_example_dt(inside) == 0.0 and F.phi_example_grad(inside)[0] == 0.0


def test_phi_branch_boundary_is_zero():
    g = F.Grid(2.0, 100, 0.5)
    edge = F.make_initial_position(g, [2**0.5])
    assert F.phi_example(edge) == 0.0
    assert F.phi_example_dt(edge) == 0.0 and F.phi_example_grad(edge)[0] == 0.0


def test_u_star_branches():
    g = F.Grid(2.0, 100, 0.5)
    assert F.u_star_example(F.make_initial_position(g, [3.0])) == -1.0
    assert F.u_star_example(F.make_initial_position(g, [-3.0])) == 1.0
    assert F.u_star_example(F.make_initial_position(g, [0.5])) == 0.0


@pytest.mark.parametrize("alpha", ALPHAS)
def test_phi_solves_hjb_on_random_positions(alpha, rng):
    P = F.example_problem(alpha, 2.0, 200)
    phi = F.example_functional()
    start = F.make_initial_position(P.grid, [float(rng.uniform(-3, 3))])
    for pos in random_positions(P, start, 100, rng):
        assert abs(F.hjb_residual(P, phi, pos)) <= 1e-9


@given(st.sampled_from(ALPHAS), st.floats(-3, 3), st.integers(0, 2**32 - 1))
def test_phi_nonincreasing_along_motions(alpha, x0, seed):
    # phi is a value: along any motion it can only grow, up to discretization slack
    r = np.random.default_rng(seed)
    P = F.example_problem(alpha, 2.0, 100)
    m = F.solve_motion(P, F.make_initial_position(P.grid, [x0]), random_piecewise_control(P, 0, 100, r), 100)
    omega = np.array([F.phi_example(F.restrict(m, j)) for j in range(101)])
    assert np.all(np.diff(omega) >= -2e-2)


def test_classical_limit_lattice(rng):
    T = 2.0
    g = F.Grid(T, 200, 0.999)
    worst = 0.0
    for t in np.linspace(0.0, 1.8, 10):
        j = g.index_of(t)
        for x in np.linspace(-3.0, 3.0, 10):
            pos = history_ending_at(g, j, x, float(rng.uniform(-1, 1)))
            worst = max(worst, abs(F.phi_example(pos) - F.classical_value(t, x, T)))
    assert worst <= 5e-2


def test_catalog():
    assert set(F.CATALOG) >= {"paper-example", "zero-dynamics", "zero-cost", "linear"}
    P = F.build_problem("paper-example", 0.5, 2.0, 50)
    assert P.name == "paper-example" and P.c_f == pytest.approx(math.gamma(1.5)) and P.lambda_f == 0.0
    L = F.build_problem("linear", 0.5, 1.0, 10, a=-2.0, b=0.5, r=1.0)
    assert L.c_f == 2.0 and L.lambda_f == 2.0 and L.has_running_cost
    with pytest.raises(DomainError):
        F.build_problem("nope", 0.5, 1.0, 10)
    with pytest.raises(DomainError):
        F.example_problem(controls=(2.0,))
    for name in F.CATALOG:
        assert F.build_problem(name, 0.5, 1.0, 10).spot_check(5.0) == []


def test_example_ubar_blends_switch_cell():
    g = F.Grid(2.0, 200, 0.5)
    u = F.example_ubar(g, 100)
    th = F.example_switch_time(0.5)
    k = int(th / g.h)
    assert np.all(u.values[: k - 100] == -1.0) and np.all(u.values[k - 99 :] == 0.0)
    assert u.values[k - 100, 0] == pytest.approx(-(th - g.tau(k)) / g.h)
