"""
Collect solve reports and sweep CSVs of a results directory into one results table:
one row per instance and stress level, CPU / Obj / Gap / status per model.
"""
import json
from pathlib import Path
from collections import OrderedDict
from typing import List, Union

from loops.bench import BenchRow, read_rows, write_rows
from utils.utils import fmt_num, status_glyph, KNOWN_MODELS, EXIT_OK, EXIT_BAD_INSTANCE


def collect_rows(results_dir: Path) -> List[BenchRow]:
    rows = []
    for path in sorted(results_dir.glob('*.json')):
        with open(path, 'r', encoding='utf-8') as f:
            d = json.load(f)
        if 'status' not in d or 'model' not in d:
            continue
        cpu = sum(d['timings'].values()) if d.get('timings') else None
        level = round((d.get('stress', 1.0) - 1.0) * 100.0, 10)
        rows.append(BenchRow(d['instance'], level, d['model'], cpu, d.get('objective'), d.get('bound'), d.get('gap'),
                             d['status']))
    for path in sorted(results_dir.glob('*_sweep.csv')):
        rows.extend(read_rows(path))
    return rows


def render_table(rows: List[BenchRow]) -> str:
    models = [m for m in KNOWN_MODELS if any(r.model == m for r in rows)]
    table = OrderedDict()
    for r in sorted(rows, key=lambda r: (r.instance, r.level)):
        table.setdefault((r.instance, r.level), {})[r.model] = r

    header = ['Instance', 'Stress%']
    for m in models:
        header += [f"{m} CPU", 'Obj', 'Gap', '']
    body = []
    for (inst, level), by_model in table.items():
        line = [inst, fmt_num(level, 1)]
        for m in models:
            r = by_model.get(m)
            if r is None:
                line += ['', '', '', '']
            else:
                line += [fmt_num(r.cpu), fmt_num(r.objective), fmt_num(r.gap), status_glyph(r.status)]
        body.append(line)

    widths = [max(len(row[k]) for row in [header] + body) for k in range(len(header))]
    fmt = lambda row: '  '.join(cell.rjust(w) if k > 0 else cell.ljust(w) for k, (cell, w) in enumerate(zip(row, widths)))
    lines = [fmt(header), '-' * len(fmt(header))] + [fmt(row) for row in body]
    lines.append('★ optimal  △ lower bound only  ▽ upper bound only  † infeasible  ‡ unknown')
    return '\n'.join(line.rstrip() for line in lines) + '\n'


def cmd_report(results_dir: Union[str, Path]) -> int:
    """
    Render <dir>/report.txt and <dir>/report.csv from the reports found in `results_dir`

    :return: exit code, 1 when the directory is missing or holds no results
    """
    results_dir = Path(results_dir)
    if not results_dir.is_dir():
        print(f"[report] error: {results_dir} is not a directory", flush=True)
        return EXIT_BAD_INSTANCE

    rows = collect_rows(results_dir)
    if not rows:
        print(f"[report] error: no results in {results_dir}", flush=True)
        return EXIT_BAD_INSTANCE

    text = render_table(rows)
    print(text, end='', flush=True)
    with open(results_dir / 'report.txt', 'w', encoding='utf-8') as f:
        f.write(text)
    write_rows(results_dir / 'report.csv', sorted(rows, key=lambda r: (r.instance, r.level, r.model)))
    return EXIT_OK
