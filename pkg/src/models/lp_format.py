"""
CPLEX LP text export, for cross-checking a program with an external solver.
"""
import re
from typing import List

from .program import MathProgram, PLAIN, LE, EQ, GE

LINE_WIDTH = 100


def _var_names(program: MathProgram) -> List[str]:
    names, taken = [], set()
    for v in program.vars:
        subject = '_'.join(map(str, v.subject)) if isinstance(v.subject, tuple) else str(v.subject)
        name = re.sub(r'[^A-Za-z0-9_.]', '_', f"{v.kind}_{subject}")
        if name in taken:
            name = f"{name}_{v.index}"
        taken.add(name)
        names.append(name)
    return names


def _num(x: float) -> str:
    return f"{x:.12g}"


def _terms(coefs, names) -> str:
    out = []
    for i, c in coefs:
        sign = '-' if c < 0 else '+'
        mag = abs(c)
        out.append(f"{sign} {names[i]}" if mag == 1 else f"{sign} {_num(mag)} {names[i]}")
    if not out:
        return '0'
    text = ' '.join(out)
    return text[2:] if text.startswith('+ ') else text


def _wrap(line: str) -> List[str]:
    """ LP readers cap line length; break between terms """
    if len(line) <= LINE_WIDTH:
        return [line]
    tokens = line.split(' ')
    signed = any(t in ('+', '-') for t in tokens)

    # a term is a sign and everything up to the next sign
    chunks = [tokens[0]]
    for tok in tokens[1:]:
        if tok in ('+', '-') or not signed:
            chunks.append(tok)
        else:
            chunks[-1] += ' ' + tok

    lines, cur = [], chunks[0]
    for chunk in chunks[1:]:
        if cur.strip() and len(cur) + len(chunk) + 1 > LINE_WIDTH:
            lines.append(cur)
            cur = '   ' + chunk
        else:
            cur = f"{cur} {chunk}"
    lines.append(cur)
    return lines


def export_lp(program: MathProgram) -> str:
    """
    Program as CPLEX LP text. Cones become quadratic rows `[ w phi ^2 - gamma * z ] <= 0`;
    bilinear rows of a MINLP have no LP-format equivalent and are listed as comments.
    """
    names = _var_names(program)
    sense = {LE: '<=', EQ: '=', GE: '>='}
    lines = [f"\\ {program.kind} model, {program.n} variables", "Minimize"]
    lines += _wrap(f" obj: {_terms(sorted(program.objective.items()), names)}")
    lines.append("Subject To")

    counts = {}
    for r in program.lin:
        counts[r.tag] = counts.get(r.tag, 0) + 1
        lines += _wrap(f" {r.tag}_{counts[r.tag]}: {_terms(r.coefs, names)} {sense[r.sense]} {_num(r.rhs)}")

    for k, c in enumerate(program.cones, 1):
        if c.form == PLAIN:
            lines.append(f" cone_{k}: - {names[c.gamma]} + [ {_num(c.w)} {names[c.phi]} ^2 ] <= 0")
        else:
            lines.append(f" cone_{k}: [ {_num(c.w)} {names[c.phi]} ^2 - {names[c.gamma]} * {names[c.z]} ] <= 0")

    for k, b in enumerate(program.bilinear, 1):
        z = f"{names[b.z]} * " if b.z is not None else ''
        lines.append(f"\\ weymouth_{k}: {z}({names[b.yplus]} - {names[b.yminus]}) * "
                     f"({names[b.beta_i]} - {names[b.beta_j]}) = {_num(b.w)} {names[b.phi]} ^2")

    lines.append("Bounds")
    for v, name in zip(program.vars, names):
        if not v.binary:
            lines.append(f" {_num(v.lo)} <= {name} <= {_num(v.hi)}")
    for v, name in zip(program.vars, names):
        if v.binary and v.hi < 1:
            lines.append(f" {name} = 0")

    lines.append("Binaries")
    lines += _wrap(' ' + ' '.join(name for v, name in zip(program.vars, names) if v.binary))
    lines.append("End")
    return '\n'.join(lines) + '\n'
