import sys
import argparse
from pathlib import Path

from data_loaders.data_manager import DataManager
from data_loaders.load import serialize
from models.lp_format import export_lp
from loops.bench import cmd_solve, cmd_stress_sweep, build_model
from studies.make_tables import cmd_report
from utils.utils import *
from utils.utils_run import convert_nicely, InstanceError, UnknownInstance, ImproperCMDArguments, BadParameters, \
    DomainError


DEFAULT_LEVELS = [0, 5, 10, 20, 50, 100, 150, 200, 250, 300]


def add_instance_args(p):
    p.add_argument("--instance", help=f"Embedded or search-path instance, one of {', '.join(KNOWN_INSTANCES)}", type=str, default=None)
    p.add_argument("--file", help="Instance JSON file", type=str, default=None)


def add_solver_args(p):
    p.add_argument("--model", help="misocp, pla or relax-only", type=str, default='misocp', choices=KNOWN_MODELS)
    p.add_argument("--stress", help="Load factor applied to every injection and demand", type=float, default=1.0)
    p.add_argument("--gap-tol", help="Absolute optimality gap", type=float, default=DEFAULT_SOLVER_CONFIG['GAP_TOL'])
    p.add_argument("--time-limit", help="Wall-clock seconds", type=float, default=DEFAULT_SOLVER_CONFIG['TIME_LIMIT'])
    p.add_argument("--node-limit", help="Branch-and-bound nodes", type=int, default=None)
    p.add_argument("--threads", help="Nodes evaluated per batch", type=int, default=1)
    p.add_argument("--cuts", help="Integer cuts, on|off", type=str, default='on')
    p.add_argument("--segments", help="PLA segments", type=int, default=DEFAULT_SOLVER_CONFIG['PLA_SEGMENTS'])
    p.add_argument("--no-timings", help="Leave wall-clock times out of the outputs", action='store_true', default=False)
    p.add_argument("--out", help="Output directory", type=str, default='results')
    p.add_argument("--verbose", action='store_true', default=False)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='gtnep', description="Gas transmission network expansion planning")
    sub = parser.add_subparsers(dest='command')

    p = sub.add_parser('solve', help="Solve one instance")
    add_instance_args(p)
    add_solver_args(p)

    p = sub.add_parser('sweep', help="Stress sweep with parallel-pipe candidates")
    add_instance_args(p)
    add_solver_args(p)
    p.add_argument("--levels", help="Comma separated stress levels in percent", type=str,
                   default=','.join(map(str, DEFAULT_LEVELS)))

    p = sub.add_parser('report', help="Tabulate a results directory")
    p.add_argument("results_dir", help="Directory with solve reports and sweep CSVs")

    p = sub.add_parser('validate', help="Parse and validate an instance")
    add_instance_args(p)
    p.add_argument("--dump", help="Write the normalised instance JSON here", type=str, default=None)

    p = sub.add_parser('export-lp', help="Write the model in LP format")
    add_instance_args(p)
    add_solver_args(p)

    return parser


def config_from_args(cmd_args) -> dict:
    config = get_config()
    config['INSTANCE'] = cmd_args.instance
    config['FILE'] = cmd_args.file
    if hasattr(cmd_args, 'model'):
        cuts = convert_nicely(cmd_args.cuts, possible_types=(bool,))
        if not isinstance(cuts, bool):
            raise BadParameters(f"--cuts {cmd_args.cuts}")
        config['MODEL'] = cmd_args.model
        config['STRESS'] = cmd_args.stress
        config['GAP_TOL'] = cmd_args.gap_tol
        config['TIME_LIMIT'] = cmd_args.time_limit
        config['NODE_LIMIT'] = cmd_args.node_limit
        config['THREADS'] = cmd_args.threads
        config['CUTS'] = cuts
        config['PLA_SEGMENTS'] = cmd_args.segments
        config['TIMINGS'] = not cmd_args.no_timings
        config['OUT'] = cmd_args.out
        config['VERBOSE'] = cmd_args.verbose
    return config


def cmd_validate(config: dict, dump: str = None) -> int:
    """ 0 when the instance parses and validates, 1 otherwise """
    try:
        network, metadata = DataManager.load(config)
    except (InstanceError, UnknownInstance, DomainError, ImproperCMDArguments, OSError) as e:
        print(f"[validate] error: {e}", flush=True)
        for v in getattr(e, 'violations', []):
            print(f"[validate]   {v.code} {v.subject}: {v.message}", flush=True)
        return EXIT_BAD_INSTANCE

    print(f"[validate] ok: {network.num_physical_nodes} nodes ({len(network.nodes)} with dummies), "
          f"{len(network.arcs)} arcs, {len(network.candidates())} candidates", flush=True)
    if dump:
        with open(dump, 'w', encoding='utf-8') as f:
            f.write(serialize(network, metadata))
    return EXIT_OK


def cmd_export_lp(config: dict) -> int:
    try:
        network, metadata = DataManager.load(config)
    except (InstanceError, UnknownInstance, DomainError, ImproperCMDArguments, OSError) as e:
        print(f"[export-lp] error: {e}", flush=True)
        return EXIT_BAD_INSTANCE

    name = config['INSTANCE'] or metadata.get('name') or Path(config['FILE']).stem
    out = Path(config['OUT'])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}_{config['MODEL']}.lp"
    with open(path, 'w', encoding='utf-8') as f:
        f.write(export_lp(build_model(network, config)))
    print(f"[export-lp] wrote {path}", flush=True)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    cmd_args = parser.parse_args(argv)
    if cmd_args.command is None:
        parser.print_help()
        return EXIT_BAD_INSTANCE

    if cmd_args.command == 'report':
        return cmd_report(cmd_args.results_dir)

    try:
        config = config_from_args(cmd_args)
        if config.get('STRESS', 1.0) <= 0:
            raise BadParameters(f"--stress {config['STRESS']}")
    except BadParameters as e:
        print(f"[{cmd_args.command}] error: {e}", flush=True)
        return EXIT_BAD_INSTANCE

    if config['VERBOSE']:
        print("\nConfig\n------", flush=True)
        print(config, flush=True)
        print("\n", flush=True)

    if cmd_args.command == 'solve':
        return cmd_solve(config)
    if cmd_args.command == 'sweep':
        levels = [float(x) for x in cmd_args.levels.split(',') if x.strip()]
        return cmd_stress_sweep(config, levels)[0]
    if cmd_args.command == 'validate':
        return cmd_validate(config, cmd_args.dump)
    if cmd_args.command == 'export-lp':
        return cmd_export_lp(config)


if __name__ == "__main__":
    sys.exit(main())
