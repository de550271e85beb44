import numpy as np
import pytest

from conftest import load
from oracles import enumerate_designs, LOOP_ROUTES, BUNDLE_ROUTES
from network.gas_network import GasNetwork, Node, Arc, PIPE, VALVE, COMPRESSOR
from models.program import size_summary, MISOCP, MINLP, PLAMIP, PLAIN, PERSPECTIVE, LE, GE, EQ
from models.misocp import build_misocp
from models.minlp import build_minlp
from models.pla import build_pla_mip, pla_breakpoints, pla_value, pla_error
from models.cuts import add_integer_cuts
from models.lp_format import export_lp
from loops.separation import tangent_cut
from utils.utils_run import BadParameters


def single_pipe(bounds_i, bounds_j, w=1.0):
    nodes = [Node('i', 1.0, *bounds_i), Node('j', -1.0, *bounds_j)]
    return GasNetwork(nodes, [Arc('p', 'i', 'j', PIPE, w=w)])


def test_sizes_belgian_a():
    network = load('belgian-A')
    sizes = size_summary(build_misocp(network))
    assert (sizes['binaries'], sizes['continuous'], sizes['cones']) == (54, 73, 24)

    sizes = size_summary(build_minlp(network))
    assert (sizes['binaries'], sizes['continuous'], sizes['cones']) == (54, 49, 0)
    assert sizes['nonlinear_rows'] == 24
    assert sizes['quadratic_terms'] == 96


def test_sizes_belgian_b():
    sizes = size_summary(build_misocp(load('belgian-B1')))
    assert (sizes['binaries'], sizes['continuous'], sizes['cones']) == (384, 264, 116)


def test_program_kinds(tiny3):
    assert build_misocp(tiny3).kind == MISOCP
    assert build_minlp(tiny3).kind == MINLP
    assert build_pla_mip(tiny3, 4).kind == PLAMIP


def test_variable_layout(tiny3):
    program = build_misocp(tiny3)
    kinds = [v.kind for v in program.vars]
    assert kinds == ['beta'] * 3 + ['phi'] * 3 + ['gamma'] * 2 + ['yplus'] * 3 + ['yminus'] * 3 + ['zp']
    assert program.ref('beta', 's').lo == pytest.approx(2500.0)
    assert program.ref('phi', 'p1').hi == pytest.approx(10.0)
    assert [program.vars[i].kind for i in program.branching_order()] == ['yplus'] * 3 + ['yminus'] * 3 + ['zp']
    assert program.objective == {program.var('zp', 'p2'): 100.0}


def test_cone_forms(tiny3):
    program = build_misocp(tiny3)
    forms = {program.vars[c.gamma].subject: c.form for c in program.cones}
    assert forms == {'p1': PLAIN, 'p2': PERSPECTIVE}
    assert program.cones[1].z == program.var('zp', 'p2')


def test_unidirectional_compressor(tiny3):
    arcs = [a._replace(bidirectional=False) if a.kind == COMPRESSOR else a for a in tiny3.arcs]
    program = build_misocp(tiny3.with_arcs(arcs))
    assert program.ref('yminus', 'k1').hi == 0
    assert len([r for r in program.lin if r.tag == 'ratio']) == 2
    assert len([r for r in build_misocp(tiny3).lin if r.tag == 'ratio']) == 4


def test_valve_rows():
    nodes = [Node('i', 1.0, 0.0, 100.0), Node('j', -1.0, 0.0, 100.0)]
    program = build_misocp(GasNetwork(nodes, [Arc('v1', 'i', 'j', VALVE)]))
    assert program.has_var('v', 'v1')
    assert len([r for r in program.lin if r.tag == 'gating']) == 2
    assert len([r for r in program.lin if r.tag == 'ratio']) == 4
    assert program.cones == []


def implied_gamma(program, x):
    """ Tightest gamma interval the four McCormick rows leave at the other coordinates of x """
    g = program.var('gamma', 'p')
    lower, upper = -np.inf, np.inf
    for r in program.lin:
        if not r.tag.startswith('mc'):
            continue
        rest = sum(c * x[i] for i, c in r.coefs if i != g)
        if r.sense == GE:
            lower = max(lower, r.rhs - rest)
        else:
            upper = min(upper, r.rhs - rest)
    return lower, upper


@pytest.mark.parametrize("seed", range(20))
def test_mccormick_exact(seed):
    rng = np.random.default_rng(seed)
    lo_i, lo_j = rng.uniform(0.0, 2500.0, size=2)
    hi_i, hi_j = lo_i + rng.uniform(1.0, 2500.0), lo_j + rng.uniform(1.0, 2500.0)
    program = build_misocp(single_pipe((lo_i, hi_i), (lo_j, hi_j)), {'CUTS': False})
    bi, bj = program.var('beta', 'i'), program.var('beta', 'j')
    yp, ym = program.var('yplus', 'p'), program.var('yminus', 'p')

    x = np.zeros(program.n)
    for _ in range(250):
        x[bi], x[bj] = rng.uniform(lo_i, hi_i), rng.uniform(lo_j, hi_j)
        for sign in (1, -1):
            x[yp], x[ym] = (1, 0) if sign > 0 else (0, 1)
            lower, upper = implied_gamma(program, x)
            exact = sign * (x[bi] - x[bj])
            assert lower == pytest.approx(exact, abs=1e-9)
            assert upper == pytest.approx(exact, abs=1e-9)


def test_integer_cuts_tiny_loop(tiny_loop):
    program = build_misocp(tiny_loop, {'CUTS': False})
    assert add_integer_cuts(program, tiny_loop) == 4
    tags = [r.tag for r in program.lin[-4:]]
    assert tags == ['cut_injection', 'cut_degree2', 'cut_demand', 'cut_parallel']

    degree2 = program.lin[-3]
    assert dict(degree2.coefs) == {program.var('yplus', 'a'): 1.0, program.var('yplus', 'b'): -1.0}
    assert degree2.sense == EQ

    injection = program.lin[-4]
    assert injection.sense == GE and injection.rhs == 1.0
    assert {program.vars[i].name for i, _ in injection.coefs} == {'yplus(a)', 'yplus(c)', 'yplus(d)'}


def test_cuts_toggle(tiny_loop):
    with_cuts = build_misocp(tiny_loop)
    without = build_misocp(tiny_loop, {'CUTS': False})
    assert len(with_cuts.lin) == len(without.lin) + 4
    assert not any(r.tag.startswith('cut_') for r in without.lin)


def test_degree2_skips_switchable():
    nodes = [Node('i', 1.0, 0.0, 100.0), Node('m', 0.0, 0.0, 100.0), Node('j', -1.0, 0.0, 100.0)]
    arcs = [Arc('p', 'i', 'm', PIPE, w=1.0), Arc('v1', 'm', 'j', VALVE)]
    program = build_misocp(GasNetwork(nodes, arcs))
    assert not any(r.tag == 'cut_degree2' for r in program.lin)


def test_degree2_two_inflows():
    nodes = [Node('i', 1.0, 0.0, 100.0), Node('m', 0.0, 0.0, 100.0), Node('j', -1.0, 0.0, 100.0)]
    arcs = [Arc('p', 'i', 'm', PIPE, w=1.0), Arc('q', 'j', 'm', PIPE, w=1.0)]
    program = build_misocp(GasNetwork(nodes, arcs))
    row = [r for r in program.lin if r.tag == 'cut_degree2'][0]
    assert dict(row.coefs) == {program.var('yplus', 'p'): 1.0, program.var('yminus', 'q'): -1.0}


def test_reversed_parallel_cut():
    nodes = [Node('i', 1.0, 0.0, 100.0), Node('j', -1.0, 0.0, 100.0)]
    arcs = [Arc('p', 'i', 'j', PIPE, w=1.0), Arc('q', 'j', 'i', PIPE, w=2.0)]
    program = build_misocp(GasNetwork(nodes, arcs))
    row = [r for r in program.lin if r.tag == 'cut_parallel'][0]
    assert dict(row.coefs) == {program.var('yplus', 'p'): 1.0, program.var('yminus', 'q'): -1.0}


def physical_point(program, network, design, head):
    """ MISOCP point of an enumerated design: top pressure at `head`, gamma = w phi^2 on built pipes """
    x = np.zeros(program.n)
    beta = {head: network.node(head).beta_hi}
    for a in network.arcs:
        if a.kind == COMPRESSOR:
            beta[a.src] = beta[a.dst] / a.alpha_hi
    # every route leaves head, so walking arcs in order settles each node once its inlet is known
    for a in network.arcs:
        if a.kind == PIPE and a.src in beta and a.dst not in beta and a.id in design.flows:
            beta[a.dst] = beta[a.src] - a.w * design.flows[a.id] ** 2

    total = sum(n.q for n in network.nodes if n.q > 0)
    for n in network.nodes:
        x[program.var('beta', n.id)] = beta[n.id]
    for a in network.arcs:
        flow = total if a.kind == COMPRESSOR else design.flows.get(a.id, 0.0)
        x[program.var('phi', a.id)] = flow
        x[program.var('yplus', a.id)] = 1.0
        if a.candidate:
            x[program.var('zp', a.id)] = float(a.id in design.built)
        if a.kind == PIPE:
            x[program.var('gamma', a.id)] = beta[a.src] - beta[a.dst]
    return x


@pytest.mark.parametrize("name,routes,head,tail", [
    ('tiny-loop', LOOP_ROUTES, 's', 't'),
    ('tiny-3', BUNDLE_ROUTES, 'c', 't'),
])
def test_relaxation_holds_physical_points(name, routes, head, tail):
    network = load(name)
    program = build_misocp(network)
    lo, hi = program.bounds()
    designs = [d for d in enumerate_designs(network, routes, head, tail) if d.feasible]
    assert designs

    for design in designs:
        x = physical_point(program, network, design, head)
        assert np.all(x >= lo - 1e-9) and np.all(x <= hi + 1e-9)
        for tag, viol in program.lin_violations(x).items():
            assert viol <= 1e-9 * 5000, tag
        for c in program.cones:
            assert c.violation(x) <= 1e-9
            # the root tangents are valid there too
            for phi_hat in (-10.0, -5.0, 5.0, 10.0):
                assert tangent_cut(c, phi_hat).violation(x) <= 1e-9


def test_tangent_cuts_valid_on_cone():
    """ 1000 points on or above the cones against 100 tangents each """
    rng = np.random.default_rng(7)
    n = 1000
    w = rng.uniform(0.1, 50.0, size=n)
    phi = rng.uniform(-10.0, 10.0, size=n)
    z = rng.uniform(0.05, 1.0, size=n)
    z[100:200] = 1.0
    gamma = w * phi ** 2 / z * rng.uniform(1.0, 2.0, size=n)
    # switched off: no flow, any gamma >= 0
    z[:100], phi[:100] = 0.0, 0.0
    gamma[:100] = rng.uniform(0.0, 10.0, size=100)

    for phi_hat in np.linspace(-10.0, 10.0, 100):
        slack = gamma - 2 * w * phi_hat * phi + w * phi_hat ** 2 * z
        assert np.all(slack >= -1e-9 * np.maximum(1.0, gamma))


def test_tangent_cut_rows(tiny3):
    program = build_misocp(tiny3)
    plain, persp = program.cones
    row = tangent_cut(plain, 5.0)
    assert row.sense == GE and row.rhs == pytest.approx(-500.0)
    assert dict(row.coefs) == {plain.gamma: 1.0, plain.phi: -200.0}
    row = tangent_cut(persp, 5.0)
    assert row.rhs == 0.0
    assert dict(row.coefs) == {persp.gamma: 1.0, persp.phi: -200.0, persp.z: 500.0}


def test_pla_breakpoints():
    x, g = pla_breakpoints(10.0, 2)
    assert list(x) == [-10.0, 0.0, 10.0]
    assert list(g) == [-100.0, 0.0, 100.0]
    assert pla_value(5.0, 10.0, 2) == pytest.approx(50.0)
    assert pla_value(-10.0, 10.0, 60) == pytest.approx(-100.0)


def test_pla_band_contains_weymouth():
    error = pla_error(10.0, 7)
    assert error == pytest.approx((20.0 / 7) ** 2 / 4)
    for phi in np.linspace(0.0, 10.0, 37):
        f = pla_value(phi, 10.0, 7)
        assert f - error - 1e-12 <= phi * phi <= f + 1e-12
        # odd around zero
        assert pla_value(-phi, 10.0, 7) == pytest.approx(-f)


@pytest.mark.parametrize("segments", [1, 0, 2.5, '4'])
def test_pla_bad_segments(tiny3, segments):
    with pytest.raises(BadParameters):
        build_pla_mip(tiny3, segments)


def test_pla_sizes(tiny3):
    program = build_pla_mip(tiny3, 4)
    sizes = size_summary(program)
    # y+/y- on three arcs, one candidate, three segment binaries on each of two pipes
    assert sizes['binaries'] == 6 + 1 + 6
    assert sizes['continuous'] == 3 + 3 + 2 + 2 * 4
    assert sizes['cones'] == 0 and sizes['nonlinear_rows'] == 0
    assert [r.sense for r in program.lin if r.tag == 'weymouth'] == [GE, LE, LE, GE]


def test_pla_point(tiny3):
    """ All flow through p1 at phi = 10 fills every segment """
    program = build_pla_mip(tiny3, 4)
    x = np.zeros(program.n)
    x[program.var('phi', 'p1')] = 10.0
    x[program.var('pla_f', 'p1')] = 100.0
    for k in range(1, 5):
        x[program.var('pla_delta', ('p1', k))] = 1.0
    for k in range(1, 4):
        x[program.var('pla_bin', ('p1', k))] = 1.0
    x[program.var('phi', 'p2')] = 0.0
    x[program.var('pla_f', 'p2')] = 0.0
    for k in range(1, 3):
        x[program.var('pla_delta', ('p2', k))] = 1.0
        x[program.var('pla_bin', ('p2', k))] = 1.0
    pla_rows = [r for r in program.lin if r.tag == 'pla']
    assert max(r.violation(x) for r in pla_rows) == pytest.approx(0.0, abs=1e-9)


def test_pla_weymouth_band(tiny3):
    """ phi = 10 on p1 with four segments: the drop may sit anywhere in [w (100 - 6.25), w 100] """
    program = build_pla_mip(tiny3, 4)
    rows = [r for r in program.lin if r.tag == 'weymouth'][:2]
    x = np.zeros(program.n)
    x[program.var('pla_f', 'p1')] = 100.0
    x[program.var('yplus', 'p1')] = 1.0
    x[program.var('beta', 'c')] = 4900.0
    for drop, ok in [(2000.0, True), (1875.0, True), (1900.0, True), (1870.0, False), (2001.0, False)]:
        x[program.var('beta', 't')] = 4900.0 - drop
        assert (max(r.violation(x) for r in rows) <= 1e-9) == ok

    # reversed flow mirrors the band
    x[program.var('pla_f', 'p1')] = -100.0
    x[program.var('yplus', 'p1')], x[program.var('yminus', 'p1')] = 0.0, 1.0
    for drop, ok in [(-2000.0, True), (-1875.0, True), (-1870.0, False)]:
        x[program.var('beta', 't')] = 4900.0 - drop
        assert (max(r.violation(x) for r in rows) <= 1e-9) == ok


def test_export_lp(tiny3):
    text = export_lp(build_misocp(tiny3))
    lines = text.splitlines()
    assert lines[0].startswith('\\ MISOCP')
    for section in ('Minimize', 'Subject To', 'Bounds', 'Binaries', 'End'):
        assert section in lines
    assert ' obj: 100 zp_p2' in lines
    assert ' cone_1: - gamma_p1 + [ 20 phi_p1 ^2 ] <= 0' in lines
    assert ' cone_2: [ 20 phi_p2 ^2 - gamma_p2 * zp_p2 ] <= 0' in lines
    assert ' 2500 <= beta_s <= 4900' in lines
    assert lines[-1] == 'End'


def test_export_lp_minlp(tiny3):
    text = export_lp(build_minlp(tiny3))
    assert '\\ weymouth_1: (yplus_p1 - yminus_p1) * (beta_c - beta_t) = 20 phi_p1 ^2' in text
    assert '\\ weymouth_2: zp_p2 * (yplus_p2 - yminus_p2)' in text


def test_export_lp_line_width():
    text = export_lp(build_misocp(load('belgian-B1')))
    long = [line for line in text.splitlines() if len(line) > 100 and '^2' not in line]
    assert long == []
    names = text.split('Binaries\n')[1].split('End')[0].split()
    assert len(names) == 384
    assert len(set(names)) == 384
