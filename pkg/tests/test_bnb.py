import json
import numpy as np
import pytest

from conftest import load, with_bounds
from oracles import enumerate_designs, optimum, random_tiny, LOOP_ROUTES, BUNDLE_ROUTES
from data_loaders.load import parse, apply_stress
from models.misocp import build_misocp
from models.minlp import build_minlp
from models.pla import build_pla_mip
from models.program import ConeRow, PLAIN, PERSPECTIVE, GE
from loops.bnb import solve_misocp, solve_relaxation, check_candidate, S_OPTIMAL, S_INFEASIBLE, S_LOWER, S_UPPER, \
    S_UNKNOWN
from loops.separation import separate_cone_cuts, cone_violation, root_cuts, CutPool
from loops.recovery import recover, FEASIBLE
from utils.utils import DEFAULT_SOLVER_CONFIG


def built(program, report):
    return sorted(v.subject for v in program.binaries
                  if v.kind in ('zp', 'zc') and report.incumbent[v.index] > 0.5)


def solve(network, **config):
    program = build_misocp(network, config)
    return program, solve_misocp(program, config)


def test_tiny3_base(tiny3):
    program, report = solve(tiny3)
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(0.0, abs=1e-9)
    assert report.gap <= 1e-4
    assert built(program, report) == []
    assert check_candidate(report.incumbent, program, 1e-6)


def test_tiny3_needs_candidate(tiny3):
    program, report = solve(with_bounds(tiny3, t=(55.0, 70.0)))
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(100.0)
    assert report.bound == pytest.approx(100.0, abs=1e-5)
    assert built(program, report) == ['p2']
    assert program.objective_value(report.incumbent) == pytest.approx(report.objective)
    assert report.pool[0].objective == pytest.approx(100.0)


def test_tiny3_absurd_stress(tiny3):
    _, report = solve(apply_stress(tiny3, 100.0))
    assert report.status == S_INFEASIBLE
    assert report.incumbent is None and report.objective is None


def test_tiny_loop(tiny_loop):
    _, report = solve(tiny_loop)
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(0.0, abs=1e-9)

    program, report = solve(with_bounds(tiny_loop, t=(68.0, 70.0)))
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(50.0)
    assert built(program, report) == ['d']


def test_cuts_do_not_change_optimum(tiny_loop):
    network = with_bounds(tiny_loop, t=(68.0, 70.0))
    _, with_cuts = solve(network, CUTS=True)
    _, without = solve(network, CUTS=False)
    assert with_cuts.objective == pytest.approx(without.objective)


def test_threads_agree(tiny_loop):
    network = with_bounds(tiny_loop, t=(68.0, 70.0))
    _, single = solve(network, THREADS=1)
    _, batched = solve(network, THREADS=3)
    assert batched.status == single.status == S_OPTIMAL
    assert batched.objective == pytest.approx(single.objective)


def test_deterministic(tiny3):
    network = with_bounds(tiny3, t=(55.0, 70.0))
    _, first = solve(network)
    _, second = solve(network)
    assert (first.status, first.objective, first.bound, first.nodes, first.cuts, first.lp_iterations) == \
           (second.status, second.objective, second.bound, second.nodes, second.cuts, second.lp_iterations)
    assert np.array_equal(first.incumbent, second.incumbent)


def test_node_limit(tiny3):
    _, report = solve(with_bounds(tiny3, t=(55.0, 70.0)), NODE_LIMIT=0)
    assert report.status == S_UNKNOWN
    assert report.nodes == 0


def test_relaxation_bound(tiny3):
    network = with_bounds(tiny3, t=(55.0, 70.0))
    report = solve_relaxation(build_misocp(network))
    assert report.status == S_LOWER
    assert report.incumbent is None
    assert -1e-6 <= report.bound <= 100.0 + 1e-6

    report = solve_relaxation(build_misocp(apply_stress(tiny3, 100.0)))
    assert report.status == S_INFEASIBLE


@pytest.mark.parametrize("p_lo_t,expected", [(30.0, 0.0), (55.0, 0.0), (62.0, 100.0)])
def test_pla_tiny3(tiny3, p_lo_t, expected):
    network = with_bounds(tiny3, t=(p_lo_t, 70.0))
    report = solve_misocp(build_pla_mip(network, 2))
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(expected, abs=1e-9)
    assert report.cuts == 0
    _, exact = solve(network)
    assert report.objective <= exact.objective + 1e-9


@pytest.mark.parametrize("p_lo_t", [64.25, 65.0, 65.5])
def test_pla_never_above_misocp(tiny_loop, p_lo_t):
    network = with_bounds(tiny_loop, t=(p_lo_t, 70.0))
    pla = solve_misocp(build_pla_mip(network, 3))
    _, exact = solve(network)
    assert pla.status == exact.status == S_OPTIMAL
    assert exact.objective == pytest.approx(0.0, abs=1e-9)
    assert pla.objective <= exact.objective + 1e-9


def random_cases(shape, count, seed):
    """ `count` random tiny instances whose designs all sit clearly on one side of feasibility """
    rng = np.random.default_rng(seed)
    routes, head = (LOOP_ROUTES, 's') if shape == 'loop' else (BUNDLE_ROUTES, 'c')
    cases = []
    while len(cases) < count:
        network = parse(json.dumps(random_tiny(rng, shape)))
        designs = enumerate_designs(network, routes, head, 't')
        if min(d.margin for d in designs) > 0.02:
            cases.append((network, optimum(designs)))
    return cases


@pytest.mark.parametrize("shape,seed", [('loop', 11), ('bundle', 12)])
def test_matches_enumeration(shape, seed):
    for network, expected in random_cases(shape, 25, seed):
        _, report = solve(network)
        if expected is None:
            assert report.status == S_INFEASIBLE
        else:
            assert report.status == S_OPTIMAL
            assert report.objective == pytest.approx(expected, abs=1e-6)


def test_separation_cuts_off_point(tiny3):
    program = build_misocp(tiny3)
    plain = program.cones[0]
    x = np.zeros(program.n)
    x[plain.phi], x[plain.gamma] = 4.0, 100.0              # w phi^2 = 320
    assert cone_violation(plain, x) == pytest.approx(220.0)

    cuts = separate_cone_cuts(x, program.cones, 1e-6, 10.0, 1e-6)
    assert len(cuts) == 1
    assert cuts[0].violation(x) == pytest.approx(220.0)

    x[plain.phi] = 1e-7
    assert separate_cone_cuts(x, program.cones, 1e-6, 10.0, 1e-6) == []


def test_cone_tolerance_is_absolute(tiny3):
    program = build_misocp(tiny3)
    plain = program.cones[0]
    x = np.zeros(program.n)
    x[plain.phi], x[plain.gamma] = 10.0, 2000.0 - 1e-3     # off by 5e-7 of w phi^2
    assert cone_violation(plain, x) == pytest.approx(1e-3)
    assert len(separate_cone_cuts(x, [plain], 1e-6, 10.0, 1e-6)) == 1
    x[plain.gamma] = 2000.0 - 1e-7
    assert separate_cone_cuts(x, [plain], 1e-6, 10.0, 1e-6) == []


@pytest.mark.parametrize("fixture,p_lo_t,expected", [('tiny3', 55.0, 100.0), ('tiny_loop', 68.0, 50.0)])
def test_leaves_separate_until_clean(request, fixture, p_lo_t, expected):
    """ No rounds at fractional nodes, so every cone is settled at the integral leaves """
    network = with_bounds(request.getfixturevalue(fixture), t=(p_lo_t, 70.0))
    program, report = solve(network, CUT_ROUNDS=0)
    assert report.status == S_OPTIMAL
    assert report.objective == pytest.approx(expected)
    assert check_candidate(report.incumbent, program, 1e-6)


def test_perspective_separation_clips():
    cone = ConeRow(PERSPECTIVE, 0, 1, 2, 2.0, 'cone')
    x = np.array([0.0, 3.0, 0.1])
    cut = separate_cone_cuts(x, [cone], 1e-6, 10.0, 1e-6)[0]
    # phi / z = 30 is clipped to Phi = 10
    assert dict(cut.coefs) == {0: 1.0, 1: -40.0, 2: 200.0}
    assert cut.violation(x) > 0


def test_cut_pool():
    cones = [ConeRow(PLAIN, 0, 1, None, 1.0, 'cone'), ConeRow(PLAIN, 2, 3, None, 2.0, 'cone')]
    pool = CutPool(4)
    assert pool.add(root_cuts(cones, 10.0)) == 8
    assert pool.add(root_cuts(cones, 10.0)) == 0
    assert len(pool) == 8
    A, senses, rhs = pool.matrix()
    assert A.shape == (8, 4)
    assert set(senses) == {GE}
    assert root_cuts(cones, 10.0)[0] in pool


@pytest.mark.slow
@pytest.mark.parametrize("name", ['belgian-A', 'belgian-A1', 'belgian-A2', 'belgian-A3'])
def test_belgian_a_series(name):
    network = load(name)
    program = build_misocp(network)
    report = solve_misocp(program, {'TIME_LIMIT': 600.0})
    assert report.status == S_OPTIMAL
    assert report.gap <= 1e-6
    assert check_candidate(report.incumbent, program, 1e-6)
    if name == 'belgian-A':
        assert report.objective == pytest.approx(0.0, abs=1e-9)

    res = recover(build_minlp(network), report, program)
    assert res.status == FEASIBLE
    assert res.certificate.feasible
    assert res.max_residual <= 1e-6
    assert res.objective == pytest.approx(report.objective, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("name", ['belgian-A2', 'belgian-A3'])
def test_belgian_pla_below_misocp(name):
    network = load(name)
    pla = solve_misocp(build_pla_mip(network, DEFAULT_SOLVER_CONFIG['PLA_SEGMENTS']), {'TIME_LIMIT': 600.0})
    _, exact = solve(network, TIME_LIMIT=600.0)
    assert pla.status == exact.status == S_OPTIMAL
    assert pla.objective < exact.objective - 1e-6


@pytest.mark.slow
def test_belgian_b1_cuts_reduce_nodes():
    network = load('belgian-B1')
    _, with_cuts = solve(network, TIME_LIMIT=1800.0)
    _, without = solve(network, TIME_LIMIT=1800.0, CUTS=False)
    assert with_cuts.status == without.status == S_OPTIMAL
    assert with_cuts.objective == pytest.approx(without.objective, abs=1e-6)
    assert with_cuts.nodes < without.nodes
