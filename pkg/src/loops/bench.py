"""
Solve and sweep harness behind the command line: build -> solve -> recover -> certify, then
report files and benchmark rows.
"""
import csv
import json
from pathlib import Path
from tqdm import tqdm
from typing import NamedTuple, Optional, List, Dict, Tuple, Union

from data_loaders.data_manager import DataManager
from data_loaders.load import apply_stress, add_parallel_candidates
from network.gas_network import GasNetwork
from models.program import size_summary
from models.misocp import build_misocp
from models.minlp import build_minlp
from models.pla import build_pla_mip
from utils.utils import get_config, level_to_factor, status_token, status_glyph, status_from_token, fmt_num, \
    EXIT_OK, EXIT_BAD_INSTANCE, EXIT_INFEASIBLE, EXIT_LIMIT
from utils.utils_run import FancyDict, Timer, InstanceError, UnknownInstance, DomainError, ImproperCMDArguments, \
    BadParameters

from .bnb import solve_misocp, solve_relaxation, SolveReport, S_OPTIMAL, S_INFEASIBLE, S_LOWER
from .recovery import recover, FEASIBLE


CSV_FIELDS = ['instance', 'level', 'model', 'cpu', 'objective', 'bound', 'gap', 'status']


class BenchRow(NamedTuple):
    instance: str
    level: float
    model: str
    cpu: Optional[float]
    objective: Optional[float]
    bound: Optional[float]
    gap: Optional[float]
    status: str

    @property
    def glyph(self) -> str:
        return status_glyph(self.status)



def _csv_num(x: Optional[float]) -> str:
    return '' if x is None else repr(float(x))


def _csv_float(s: str) -> Optional[float]:
    return None if s == '' else float(s)


def write_rows(path: Union[str, Path], rows: List[BenchRow]):
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(CSV_FIELDS)
        for r in rows:
            writer.writerow([r.instance, _csv_num(r.level), r.model, _csv_num(r.cpu), _csv_num(r.objective),
                             _csv_num(r.bound), _csv_num(r.gap), status_token(r.status)])


def read_rows(path: Union[str, Path]) -> List[BenchRow]:
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.DictReader(f)
        return [BenchRow(d['instance'], float(d['level']), d['model'], _csv_float(d['cpu']),
                         _csv_float(d['objective']), _csv_float(d['bound']), _csv_float(d['gap']),
                         status_from_token(d['status'])) for d in reader]



def instance_name(config: Dict, metadata: Dict) -> str:
    if config.get('INSTANCE'):
        return config['INSTANCE']
    return metadata.get('name') or Path(config['FILE']).stem


def build_model(network: GasNetwork, config: Dict):
    if config['MODEL'] == 'pla':
        return build_pla_mip(network, config['PLA_SEGMENTS'], config)
    if config['MODEL'] in ('misocp', 'relax-only'):
        return build_misocp(network, config)
    raise BadParameters(f"--model {config['MODEL']}")


def solve_network(network: GasNetwork, config: Dict) -> Tuple[SolveReport, Dict]:
    """ Build and solve one network; also returns the sizes and build time """
    with Timer() as t_build:
        program = build_model(network, config)
    if config['MODEL'] == 'relax-only':
        report = solve_relaxation(program, config)
    else:
        report = solve_misocp(program, config)
    return report, {'program': program, 'sizes': size_summary(program), 'build': t_build.interval}


def exit_code(status: str, model: str) -> int:
    if status == S_OPTIMAL or (model == 'relax-only' and status == S_LOWER):
        return EXIT_OK
    if status == S_INFEASIBLE:
        return EXIT_INFEASIBLE
    return EXIT_LIMIT



def render_solve(result: Dict) -> str:
    lines = [f"instance    {result['instance']}",
             f"model       {result['model']}",
             f"stress      {result['stress']}",
             f"status      {status_glyph(result['status'])} {result['status']}",
             f"objective   {fmt_num(result['objective'])}",
             f"bound       {fmt_num(result['bound'])}",
             f"gap %       {fmt_num(result['gap'], 6)}",
             f"nodes       {result['nodes']}",
             f"cuts        {result['cuts']}",
             f"sizes       " + ' '.join(f"{k}={v}" for k, v in result['sizes'].items()),
             f"expansions  {', '.join(result['expansions']) or '-'}"]
    rec = result.get('recovery')
    if rec:
        lines.append(f"recovery    {rec['status']} objective={fmt_num(rec['objective'])} "
                     f"residual={rec['max_residual']:.3e}")
    if result.get('timings'):
        lines.append(f"timings     " + ' '.join(f"{k}={v:.3f}s" for k, v in result['timings'].items()))
    return '\n'.join(lines) + '\n'


def cmd_solve(config: Union[dict, FancyDict]) -> int:
    """
    Build, solve, recover and certify one instance; writes <out>/<instance>_<model>.json and .txt

    :return: exit code, 0 solved, 1 bad instance, 2 infeasible, 3 limit hit
    """
    config = get_config(config)
    try:
        network, metadata = DataManager.load(config)
    except (InstanceError, UnknownInstance, DomainError, ImproperCMDArguments, OSError) as e:
        print(f"[solve] error: {e}", flush=True)
        for v in getattr(e, 'violations', []):
            print(f"[solve]   {v.code} {v.subject}: {v.message}", flush=True)
        return EXIT_BAD_INSTANCE

    name = instance_name(config, metadata)
    if config['VERBOSE']:
        print(f"[solve] instance: {name} nodes: {len(network.nodes)} arcs: {len(network.arcs)} "
              f"candidates: {len(network.candidates())}", flush=True)

    with Timer() as t_solve:
        report, built = solve_network(network, config)

    program = built['program']
    expansions = [v.subject for v in program.binaries
                  if v.kind in ('zp', 'zc') and report.incumbent is not None and report.incumbent[v.index] > 0.5]

    recovery, t_recover = None, 0.0
    if report.incumbent is not None:
        with Timer() as t_rec:
            rec = recover(build_minlp(network), report, program, config=config)
        t_recover = t_rec.interval
        recovery = {'status': rec.status, 'objective': rec.objective, 'max_residual': rec.max_residual,
                    'families': rec.certificate.families, 'pool_index': rec.pool_index}

    result = {
        'instance': name,
        'model': config['MODEL'],
        'stress': config['STRESS'],
        'status': report.status,
        'token': status_token(report.status),
        'objective': report.objective,
        'bound': report.bound,
        'gap': report.gap,
        'nodes': report.nodes,
        'cuts': report.cuts,
        'lp_iterations': report.lp_iterations,
        'sizes': built['sizes'],
        'expansions': expansions,
        'recovery': recovery,
    }
    if config['TIMINGS']:
        result['timings'] = {'build': built['build'], 'solve': t_solve.interval - built['build'], 'recover': t_recover}

    text = render_solve(result)
    print(text, end='', flush=True)
    if config.get('OUT'):
        out = Path(config['OUT'])
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{name}_{config['MODEL']}.json", 'w', encoding='utf-8') as f:
            json.dump(result, f, indent=2, ensure_ascii=False)
            f.write('\n')
        with open(out / f"{name}_{config['MODEL']}.txt", 'w', encoding='utf-8') as f:
            f.write(text)

    code = exit_code(report.status, config['MODEL'])
    if code == EXIT_OK and recovery is not None and recovery['status'] != FEASIBLE:
        # a design with no certified operating point is not a solution
        print(f"[solve] error: recovery failed, best residual {recovery['max_residual']:.3e}", flush=True)
        return EXIT_LIMIT
    return code



def sweep_network(network: GasNetwork, metadata: Dict) -> GasNetwork:
    """ Existing arcs plus one parallel candidate per existing pipe, priced from metadata when given """
    return add_parallel_candidates(network, costs=metadata.get('sweep_costs'))


def cmd_stress_sweep(config: Union[dict, FancyDict], levels: List[float]) -> Tuple[int, List[BenchRow]]:
    """
    Solve the parallel-pipe expansion of an instance at each stress level (percent over base loads).

    Levels are solved in increasing order; once a level is infeasible every higher level is reported
    infeasible without solving. Writes <out>/<instance>_sweep.csv.
    """
    config = get_config(config)
    base = {**config, 'STRESS': 1.0}
    try:
        network, metadata = DataManager.load(base)
        network = sweep_network(network, metadata)
    except (InstanceError, UnknownInstance, DomainError, ImproperCMDArguments, OSError) as e:
        print(f"[sweep] error: {e}", flush=True)
        return EXIT_BAD_INSTANCE, []

    name = instance_name(config, metadata)
    rows, infeasible = [], False
    for level in tqdm(sorted(levels), desc=f'sweep {name}', disable=not config['VERBOSE']):
        if infeasible:
            rows.append(BenchRow(name, level, config['MODEL'], None, None, None, None, S_INFEASIBLE))
            continue

        with Timer() as t:
            report, _ = solve_network(apply_stress(network, level_to_factor(level)), config)
        cpu = t.interval if config['TIMINGS'] else None
        rows.append(BenchRow(name, level, config['MODEL'], cpu, report.objective, report.bound, report.gap,
                             report.status))
        infeasible = report.status == S_INFEASIBLE

    if config.get('OUT'):
        out = Path(config['OUT'])
        out.mkdir(parents=True, exist_ok=True)
        write_rows(out / f"{name}_sweep.csv", rows)

    for r in rows:
        print(f"[sweep] level: {fmt_num(r.level, 1)} objective: {fmt_num(r.objective)} {r.glyph}", flush=True)

    codes = [exit_code(r.status, config['MODEL']) for r in rows]
    return (EXIT_LIMIT if EXIT_LIMIT in codes else EXIT_OK), rows
