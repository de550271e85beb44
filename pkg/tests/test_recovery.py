import json
import numpy as np
import pytest
from scipy.optimize import least_squares

from conftest import with_bounds
from data_loaders.load import parse, apply_stress
from models.misocp import build_misocp
from models.minlp import build_minlp
from loops.bnb import solve_misocp, S_OPTIMAL
from loops.evaluation import certify, design_cost
from loops.recovery import FixedSubproblem, solve_fixed, recover, recover_one, settle_directions, \
    extract_assignment, FEASIBLE, FAILED


SPLIT = 10.0 * np.sqrt(30.0) / (np.sqrt(20.0) + np.sqrt(30.0))


def forward(network, built=()):
    """ Every arc forward, candidates built only when listed """
    assignment = {}
    for a in network.arcs:
        assignment[('yplus', a.id)], assignment[('yminus', a.id)] = 1, 0
        if a.candidate:
            assignment[('zp' if a.lossy else 'zc', a.id)] = int(a.id in built)
    return assignment


@pytest.fixture
def single_pipe():
    return parse(json.dumps({
        "schema_version": 1,
        "metadata": {"name": "single-pipe"},
        "nodes": [{"id": "u", "q": 1.0, "p_lo": 0.0, "p_hi": 70.0},
                  {"id": "v", "q": -1.0, "p_lo": 0.0, "p_hi": 70.0}],
        "arcs": [{"id": "p", "from": "u", "to": "v", "kind": "pipe", "w": 2.0}],
        "groups": [],
    }))


def test_single_pipe(single_pipe):
    sub = FixedSubproblem(single_pipe, forward(single_pipe))
    sol = solve_fixed(sub, sub.initial_point({}))
    assert sol.converged
    beta, phi, ratio = sub.split(sol.u)
    assert phi['p'] == pytest.approx(1.0, abs=1e-8)
    assert beta['u'] - beta['v'] == pytest.approx(2.0, abs=1e-5)
    assert ratio == {}


def test_subproblem_layout(tiny_loop):
    sub = FixedSubproblem(tiny_loop, forward(tiny_loop))
    # d is not built
    assert [a.id for a in sub.active] == ['a', 'b', 'c']
    assert sub.families == [('flow', 3), ('weymouth', 3), ('ratio', 0), ('equal', 0)]
    u = sub.initial_point({})
    assert sub.jacobian(u).shape == (6, 6)


def test_loop_split(tiny_loop):
    sub = FixedSubproblem(tiny_loop, forward(tiny_loop))
    sol = solve_fixed(sub, sub.initial_point({}), {'RES_TOL': 1e-12})
    assert sol.converged
    beta, phi, _ = sub.split(sol.u)
    assert phi['a'] == pytest.approx(SPLIT, rel=1e-8)
    assert phi['b'] == pytest.approx(phi['a'], rel=1e-8)
    assert phi['a'] + phi['c'] == pytest.approx(10.0, abs=1e-8)
    assert phi['d'] == 0.0
    assert beta['s'] - beta['t'] == pytest.approx(20.0 * SPLIT ** 2, rel=1e-8)


def test_far_start_converges(tiny_loop):
    sub = FixedSubproblem(tiny_loop, forward(tiny_loop))
    # pressures inverted against the flow, every flow pinned at its lower bound
    warm = {('beta', 's'): 1600.0, ('beta', 'm'): 4900.0, ('beta', 't'): 4900.0}
    sol = solve_fixed(sub, sub.initial_point(warm), {'RES_TOL': 1e-12})
    assert sol.converged
    assert sol.iterations < 200
    _, phi, _ = sub.split(sol.u)
    assert phi['a'] == pytest.approx(SPLIT, rel=1e-8)


@pytest.mark.parametrize("fixture,built", [('tiny_loop', ()), ('tiny3', ('p2',))])
def test_matches_least_squares(request, fixture, built):
    network = request.getfixturevalue(fixture)
    sub = FixedSubproblem(network, forward(network, built))
    x0 = sub.initial_point({})
    sol = solve_fixed(sub, x0, {'RES_TOL': 1e-12})
    assert sol.converged

    reference = least_squares(sub.evaluate, x0, jac=sub.jacobian, bounds=(sub.lo, sub.hi), method='trf',
                              x_scale='jac', ftol=1e-15, xtol=1e-15, gtol=1e-15)
    assert np.abs(reference.fun).max() <= 1e-8
    # pressures are free up to the compressor ratio, flows are not
    _, phi, _ = sub.split(sol.u)
    _, phi_ref, _ = sub.split(reference.x)
    for a in phi:
        assert phi[a] == pytest.approx(phi_ref[a], abs=1e-6)


def test_unreachable_design_fails(tiny3):
    network = with_bounds(tiny3, t=(55.0, 70.0))
    res = recover_one(build_minlp(network), forward(network), {}, 0)
    assert res.status == FAILED
    assert res.max_residual > 1e-3
    assert res.objective == 0.0


def test_settle_directions(tiny_loop):
    assignment = forward(tiny_loop)
    assignment[('yplus', 'd')], assignment[('yminus', 'd')] = 0, 1
    settled = settle_directions(tiny_loop, assignment, {'s': 3000.0, 'm': 2800.0, 't': 2500.0})
    assert (settled[('yplus', 'd')], settled[('yminus', 'd')]) == (1, 0)
    # active arcs keep theirs
    settled = settle_directions(tiny_loop, assignment, {'s': 2000.0, 'm': 2800.0, 't': 2500.0})
    assert (settled[('yplus', 'a')], settled[('yminus', 'a')]) == (1, 0)
    assert assignment[('yplus', 'd')] == 0


def test_certify(tiny_loop):
    minlp = build_minlp(tiny_loop)
    assignment = forward(tiny_loop)
    sub = FixedSubproblem(tiny_loop, assignment)
    beta, phi, _ = sub.split(solve_fixed(sub, sub.initial_point({}), {'RES_TOL': 1e-12}).u)

    report = certify(minlp, beta, phi, assignment)
    assert report.feasible
    assert {'bounds', 'flow', 'dirsum', 'dirflow', 'dirpress', 'gating', 'weymouth'} <= set(report.families)
    assert report.max_violation <= 1e-5

    phi['a'] += 0.1
    report = certify(minlp, beta, phi, assignment)
    assert not report.feasible
    assert report.families['flow'] == pytest.approx(0.1)
    assert report.families['weymouth'] > 1.0


def test_design_cost(tiny_loop):
    minlp = build_minlp(tiny_loop)
    assert design_cost(minlp, forward(tiny_loop)) == 0.0
    assert design_cost(minlp, forward(tiny_loop, built={'d'})) == 50.0


@pytest.mark.parametrize("p_lo_t,cost", [(30.0, 0.0), (55.0, 100.0)])
def test_recover_solve_report(tiny3, p_lo_t, cost):
    network = with_bounds(tiny3, t=(p_lo_t, 70.0))
    program = build_misocp(network)
    report = solve_misocp(program)
    assert report.status == S_OPTIMAL

    assignment, warm = extract_assignment(program, report.incumbent)
    assert ('beta', 's') in warm and ('zp', 'p2') in assignment

    res = recover(build_minlp(network), report, program)
    assert res.status == FEASIBLE
    assert res.objective == pytest.approx(cost)
    assert res.certificate.feasible
    assert res.pool_index == 0
    assert res.beta['t'] >= p_lo_t ** 2 - 1e-6
    assert 1.0 - 1e-9 <= res.ratio['k1'] <= 1.2 + 1e-9


def test_recover_nothing(tiny3):
    program = build_misocp(apply_stress(tiny3, 100.0))
    report = solve_misocp(program)
    assert recover(build_minlp(program.network), report, program) is None
