"""Command-line front end.

Input is a JSON document; see README.md for the schema.  Exit status is 0
when every verdict is conclusive, 2 when some verdict is INDETERMINATE or
NOT_CONCLUDED, and 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

from sympy import isprime

from . import growth, module_homology as mh
from .padic import (
    PrecisionError,
    euler_phi_ppower,
    format_coefficient,
    make_padic,
    parse_direction,
)
from .series import PowerSeries1, PowerSeries2, PrecisionPolicy, project
from .weierstrass import (
    N_MAX_DEFAULT,
    GrowthFormulaInput,
    corank_table,
    cyclotomic_multiplicity,
    weierstrass_prepare,
)

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

MAX_COEFF_PREC = 200
MAX_DEGREE_BOUND = 64
MAX_NMAX = 8


class InputError(ValueError):
    pass


@dataclass
class AnalysisConfig:
    p: int
    coeff_prec: int = 20
    degree_bound: int = 16
    series: list = field(default_factory=list)
    directions: list = field(default_factory=list)
    direction_text: list = field(default_factory=list)
    height: growth.HeightValue = field(default_factory=growth.HeightValue.derive)
    ac_free_rank: int = 1
    setting: growth.MazurSetting = field(default_factory=growth.MazurSetting)
    hypotheses: dict | None = None
    hypothesis_flags: frozenset = frozenset({growth.H_IMC_ASSUMED})
    oracle: dict | None = None
    n_max: int = N_MAX_DEFAULT

    @property
    def policy(self) -> PrecisionPolicy:
        return PrecisionPolicy(self.coeff_prec, self.degree_bound)


def _int_field(doc: dict, name: str, default=None, lo=None, hi=None) -> int:
    if name not in doc:
        if default is None:
            raise InputError(f"missing required field '{name}'")
        return default
    v = doc[name]
    if not isinstance(v, int) or isinstance(v, bool):
        raise InputError(f"field '{name}' must be an integer, got {v!r}")
    if lo is not None and v < lo or hi is not None and v > hi:
        raise InputError(f"field '{name}' = {v} outside [{lo}, {hi}]")
    return v


def _parse_height(text, p: int, prec: int) -> growth.HeightValue:
    if text == "derive":
        return growth.HeightValue.derive()
    if text == "nonzero":
        return growth.HeightValue.nonzero()
    try:
        q = Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise InputError(f"field 'height' must be 'derive', 'nonzero' or num/den, got {text!r}") from None
    return growth.HeightValue.explicit(make_padic(p, q.numerator, q.denominator, prec))


def parse_document(doc: dict, precision: int | None = None,
                   degree_bound: int | None = None, n_max: int | None = None) -> AnalysisConfig:
    if not isinstance(doc, dict):
        raise InputError("input must be a JSON object")
    p = _int_field(doc, "p")
    if p < 2 or not isprime(p):
        raise InputError(f"field 'p': p must be prime, got {p}")
    prec = precision if precision is not None else _int_field(doc, "coeff_prec", 20, 1, MAX_COEFF_PREC)
    deg = degree_bound if degree_bound is not None else \
        _int_field(doc, "degree_bound", 16, 2, MAX_DEGREE_BOUND)
    if not 1 <= prec <= MAX_COEFF_PREC:
        raise InputError(f"precision {prec} outside [1, {MAX_COEFF_PREC}]")
    if not 2 <= deg <= MAX_DEGREE_BOUND:
        raise InputError(f"degree bound {deg} outside [2, {MAX_DEGREE_BOUND}]")
    cfg = AnalysisConfig(p, prec, deg)
    cfg.n_max = n_max if n_max is not None else _int_field(doc, "n_max", N_MAX_DEFAULT, 0, MAX_NMAX)
    if not 0 <= cfg.n_max <= MAX_NMAX:
        raise InputError(f"nmax {cfg.n_max} outside [0, {MAX_NMAX}]")

    series = doc.get("series", [])
    if not isinstance(series, list):
        raise InputError("field 'series' must be a list of [i, j, coeff] triples")
    for k, row in enumerate(series):
        if not (isinstance(row, list) and len(row) == 3):
            raise InputError(f"series[{k}]: expected [i, j, coeff], got {row!r}")
    cfg.series = series

    dirs = doc.get("directions", [])
    if not isinstance(dirs, list):
        raise InputError("field 'directions' must be a list of 'a:b' strings")
    for k, text in enumerate(dirs):
        try:
            cfg.directions.append(parse_direction(str(text), p, prec))
        except (ValueError, PrecisionError) as exc:
            raise InputError(f"directions[{k}] ({text!r}): {exc}") from None
        cfg.direction_text.append(str(text))

    cfg.height = _parse_height(doc.get("height", "derive"), p, prec)
    cfg.ac_free_rank = _int_field(doc, "ac_free_rank", 1, 0)

    setting = doc.get("setting", {})
    if not isinstance(setting, dict):
        raise InputError("field 'setting' must be an object")
    try:
        cm = growth.CMClass(setting.get("cm_class", "GENERIC"))
    except ValueError:
        raise InputError(f"setting.cm_class must be GENERIC or EXCEPTIONAL, "
                         f"got {setting.get('cm_class')!r}") from None
    sign = setting.get("sign", -1)
    if sign not in (1, -1):
        raise InputError(f"setting.sign must be +1 or -1, got {sign!r}")
    cfg.setting = growth.MazurSetting(cm, sign)

    hyp = doc.get("hypotheses")
    if hyp is not None:
        if not isinstance(hyp, dict) or "N" not in hyp or "D" not in hyp:
            raise InputError("field 'hypotheses' must be an object with N and D")
        cfg.hypotheses = {"N": _int_field(hyp, "N", lo=1), "D": _int_field(hyp, "D")}

    flags = doc.get("hypothesis_flags")
    if flags is not None:
        bad = [f for f in flags if f not in (growth.H_IMC_ASSUMED, growth.INTEGRAL)]
        if bad:
            raise InputError(f"field 'hypothesis_flags': unknown flag(s) {bad}")
        cfg.hypothesis_flags = frozenset(flags)
    cfg.oracle = doc.get("oracle")
    return cfg


def parse_input(path: str, **overrides):
    """Read a JSON input file; returns (TwoVarLFunction, AnalysisConfig)."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None
    cfg = parse_document(doc, **overrides)
    return _lfunction(cfg, path), cfg


def _series2(cfg: AnalysisConfig) -> PowerSeries2:
    try:
        return PowerSeries2.from_triples(cfg.p, cfg.policy, cfg.series)
    except ValueError as exc:
        raise InputError(f"field 'series': {exc}") from None


def _series1(cfg: AnalysisConfig) -> PowerSeries1:
    bad = [row for row in cfg.series if row[1] != 0]
    if bad:
        raise InputError(f"field 'series': one-variable input needs j = 0, got {bad[0]!r}")
    try:
        return PowerSeries1.from_triples(cfg.p, cfg.policy, cfg.series)
    except ValueError as exc:
        raise InputError(f"field 'series': {exc}") from None


def _lfunction(cfg: AnalysisConfig, provenance: str) -> growth.TwoVarLFunction:
    return growth.TwoVarLFunction(_series2(cfg), provenance, cfg.hypothesis_flags)


# -- commands -------------------------------------------------------------------


def cmd_analyze(cfg: AnalysisConfig, L: growth.TwoVarLFunction):
    if not cfg.directions:
        raise InputError("field 'directions' is empty")
    reports = growth.analyze(L, cfg.directions, cfg.height, cfg.ac_free_rank,
                             cfg.setting, n_max=cfg.n_max)
    status = EXIT_OK if all(r.is_conclusive() for r in reports) else EXIT_INCONCLUSIVE
    out = {"command": "analyze", "p": cfg.p, "coeff_prec": cfg.coeff_prec,
           "degree_bound": cfg.degree_bound,
           "reports": [r.to_dict() for r in reports]}
    if cfg.hypotheses:
        out["hypotheses"] = growth.check_hypotheses(
            cfg.hypotheses["N"], cfg.hypotheses["D"], cfg.p).to_dict()
    return out, status


def cmd_project(cfg: AnalysisConfig, L: growth.TwoVarLFunction):
    if not cfg.directions:
        raise InputError("field 'directions' is empty")
    rows, status = [], EXIT_OK
    for text, d in zip(cfg.direction_text, cfg.directions):
        proj = project(L.series, d)
        certified = bool(proj.certified_terms())
        if not certified:
            status = EXIT_INCONCLUSIVE
        rows.append({"direction": text, "label": d.label(), "chart": d.chart.value,
                     "series": proj.to_triples(), "certified_nonzero": certified})
    return {"command": "project", "p": cfg.p, "coeff_prec": cfg.coeff_prec,
            "projections": rows}, status


def cmd_weierstrass(cfg: AnalysisConfig, L=None):
    f = _series1(cfg)
    try:
        data = weierstrass_prepare(f)
    except PrecisionError as exc:
        return {"command": "weierstrass", "p": cfg.p, "verdict": "INDETERMINATE",
                "reason": str(exc)}, EXIT_INCONCLUSIVE
    return {"command": "weierstrass", "p": cfg.p, "verdict": "OK",
            "mu": data.mu, "lambda": data.lam,
            "distinguished": [format_coefficient(c, cfg.coeff_prec) for c in data.distinguished],
            "distinguished_residues": [_residue_text(c) for c in data.distinguished],
            "unit": data.unit.to_triples()}, EXIT_OK


def _residue_text(c) -> str:
    if c.is_exact_zero():
        return "0"
    if c.abs_prec == float("inf") or c.valuation < 0:
        return format_coefficient(c)
    return f"{c.residue()} + O({c.prime}^{c.abs_prec})"


def cmd_growth_table(cfg: AnalysisConfig, L=None):
    f = _series1(cfg) if cfg.series else None
    inp = GrowthFormulaInput(cfg.ac_free_rank, f, prime=cfg.p)
    try:
        table = corank_table(inp, cfg.n_max)
        present = [f is not None and cyclotomic_multiplicity(f, n) >= 1
                   for n in range(cfg.n_max + 1)]
    except PrecisionError as exc:
        return {"command": "growth-table", "p": cfg.p, "verdict": "INDETERMINATE",
                "reason": str(exc)}, EXIT_INCONCLUSIVE
    p = cfg.p
    rows = [{"n": n, "p^n": p**n, "phi(p^n)": euler_phi_ppower(p, n),
             "cyclotomic_factor_present": present[n], "corank": c,
             "corank - r*p^n": c - cfg.ac_free_rank * p**n}
            for n, c in table]
    return {"command": "growth-table", "p": p, "free_rank": cfg.ac_free_rank,
            "verdict": "OK", "rows": rows}, EXIT_OK


def cmd_hypotheses(cfg: AnalysisConfig, L=None):
    if not cfg.hypotheses:
        raise InputError("missing required field 'hypotheses'")
    rep = growth.check_hypotheses(cfg.hypotheses["N"], cfg.hypotheses["D"], cfg.p)
    return {"command": "hypotheses", **rep.to_dict()}, EXIT_OK


def _parse_generator(g, p: int, prec: int, where: str):
    if isinstance(g, dict) and "fab" in g:
        try:
            return mh.Fab(parse_direction(str(g["fab"]), p, prec))
        except (ValueError, PrecisionError) as exc:
            raise InputError(f"{where}: {exc}") from None
    if isinstance(g, dict) and "poly" in g:
        terms = {}
        for row in g["poly"]:
            if not (isinstance(row, list) and len(row) == 3 and all(isinstance(x, int) for x in row)):
                raise InputError(f"{where}: poly terms must be [i, j, integer], got {row!r}")
            terms[(row[0], row[1])] = terms.get((row[0], row[1]), 0) + row[2]
        return mh.Poly.of(terms)
    raise InputError(f"{where}: generator must be {{'fab': 'a:b'}} or {{'poly': [...]}}")


def cmd_oracle(cfg: AnalysisConfig, L=None):
    oracle_doc = cfg.oracle
    if not isinstance(oracle_doc, dict):
        raise InputError("missing required field 'oracle'")
    p, status = cfg.p, EXIT_OK
    out = {"command": "oracle", "p": p, "label": "consistency check"}

    levels = oracle_doc.get("levels", [[2, 1], [2, 2]])
    modules = []
    for k, mod in enumerate(oracle_doc.get("modules", [])):
        gens = [_parse_generator(g, p, cfg.coeff_prec, f"oracle.modules[{k}].generators[{i}]")
                for i, g in enumerate(mod.get("generators", []))]
        M = mh.CyclicModulePresentation(p, gens, mod.get("label", f"module {k}"))
        pn = mh.pseudo_null_sufficient(M)
        per_dir = []
        for text, d in zip(cfg.direction_text, cfg.directions):
            cov = mh.coinvariants_torsion(M, d)
            rows = mh.f_torsion_finite_level(M, d, levels)
            by_m = {}
            for r in rows:
                by_m.setdefault(r.m, set()).add(r.log_kernel_size)
            constant = all(len(v) == 1 for v in by_m.values())
            if cov.verdict is not mh.Verdict.TORSION or not constant:
                status = EXIT_INCONCLUSIVE
            per_dir.append({
                "direction": text,
                "coinvariants": cov.verdict.value,
                "kernel_sizes": [{"m": r.m, "n": r.n, "log_p_kernel": r.log_kernel_size,
                                  "log_p_module": r.log_module_size} for r in rows],
                "kernel_constant_in_n": constant,
            })
        modules.append({"label": M.label, "pseudo_null": pn.verdict.value,
                        "catalog": pn.catalog, "directions": per_dir})
    out["modules"] = modules

    if "torsion_char" in oracle_doc:
        f_poly = oracle_doc["torsion_char"]
        if not (isinstance(f_poly, list) and all(isinstance(c, int) for c in f_poly)):
            raise InputError("oracle.torsion_char must be a list of integers")
        m = oracle_doc.get("m", 3)
        pol = PrecisionPolicy(cfg.coeff_prec, cfg.degree_bound)
        f = PowerSeries1.from_ints(p, pol, f_poly)
        formula = dict(corank_table(GrowthFormulaInput(0, f), oracle_doc.get("n_max", 2)))
        rows = []
        for n, c in sorted(formula.items()):
            rank = mh.finite_level_rank(f_poly, p, m, n)
            agree = rank == c
            if not agree:
                status = EXIT_INCONCLUSIVE
            rows.append({"n": n, "m": m, "oracle_rank": rank, "formula_corank": c,
                         "agree": agree})
        out["corank_comparison"] = rows
    return out, status


COMMANDS = {
    "analyze": cmd_analyze,
    "project": cmd_project,
    "weierstrass": cmd_weierstrass,
    "growth-table": cmd_growth_table,
    "hypotheses": cmd_hypotheses,
    "oracle": cmd_oracle,
}


def run_command(cmd: str, cfg: AnalysisConfig, L=None):
    needs_L = cmd in ("analyze", "project")
    if needs_L and L is None:
        L = _lfunction(cfg, "")
    return COMMANDS[cmd](cfg, L)


# -- rendering ----------------------------------------------------------------------


def render_structured(out: dict) -> str:
    return json.dumps(out, sort_keys=True, indent=2) + "\n"


def _table(headers: list, rows: list) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def render_table(out: dict) -> str:
    cmd = out["command"]
    parts = [f"# {cmd}  p={out['p']}"]
    if cmd == "analyze":
        rows = []
        for r in out["reports"]:
            nv = r["nonvanishing"]
            rows.append([r["direction"]["label"], r["chart"], r["derivative_value"],
                         r["closed_form_value"], nv["kind"], r["torsion_verdict"],
                         r["lambda"], r["mu"], r["predicted_c"], r["mazur_c"]])
        parts.append(_table(["direction", "chart", "dL", "closed form", "nonvanishing",
                             "torsion", "lambda", "mu", "c", "mazur c"], rows))
        for r in out["reports"]:
            if r["corank_table"]:
                p = out["p"]
                parts.append(f"\ncorank table along {r['direction']['label']}")
                parts.append(_table(["n", "p^n", "phi(p^n)", "corank"],
                                    [[n, p**n, euler_phi_ppower(p, n), c]
                                     for n, c in r["corank_table"]]))
            for note in r["notes"]:
                parts.append(f"  note {r['direction']['label']}: {note}")
        if "hypotheses" in out:
            h = out["hypotheses"]
            parts.append(f"\nhypotheses: ghh_ok={h['ghh_ok']} p_splits={h['p_splits']} "
                         f"({h['ghh_reason']})")
    elif cmd == "project":
        for r in out["projections"]:
            parts.append(f"{r['label']} [{r['chart']}] certified={r['certified_nonzero']}")
            parts.append(_table(["degree", "coefficient"], [[i, c] for i, _, c in r["series"]]))
    elif cmd == "weierstrass":
        if out["verdict"] != "OK":
            parts.append(f"INDETERMINATE: {out['reason']}")
        else:
            parts.append(f"mu = {out['mu']}  lambda = {out['lambda']}")
            parts.append("P = " + " + ".join(f"({c})*T^{k}" for k, c in
                                              enumerate(out["distinguished_residues"])))
    elif cmd == "growth-table":
        if out["verdict"] != "OK":
            parts.append(f"INDETERMINATE: {out['reason']}")
        else:
            parts.append(_table(["n", "p^n", "phi(p^n)", "factor", "corank", "corank - r p^n"],
                                [[r["n"], r["p^n"], r["phi(p^n)"],
                                  "yes" if r["cyclotomic_factor_present"] else "no",
                                  r["corank"], r["corank - r*p^n"]] for r in out["rows"]]))
    elif cmd == "hypotheses":
        for key in ("N", "D", "p_splits", "ghh_ok", "ghh_reason", "p_ge_5",
                    "squarefree_N_minus"):
            parts.append(f"{key}: {out[key]}")
        for key in ("N_plus", "N_minus", "ramified"):
            parts.append(f"{key}: {out[key]['value']} {out[key]['factors']}")
    elif cmd == "oracle":
        for mod in out["modules"]:
            parts.append(f"{mod['label']}: pseudo-null {mod['pseudo_null']} ({mod['catalog']})")
            rows = []
            for d in mod["directions"]:
                ks = " ".join(f"(m={k['m']},n={k['n']}):p^{k['log_p_kernel']}"
                              for k in d["kernel_sizes"])
                rows.append([d["direction"], d["coinvariants"], ks, d["kernel_constant_in_n"]])
            parts.append(_table(["direction", "H0", "|M[f]|", "constant"], rows))
        if "corank_comparison" in out:
            parts.append(_table(["n", "m", "oracle", "formula", "agree"],
                                [[r["n"], r["m"], r["oracle_rank"], r["formula_corank"],
                                  r["agree"]] for r in out["corank_comparison"]]))
    return "\n".join(parts) + "\n"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zpgrowth",
                                 description="Selmer corank growth along Z_p-extensions")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("input", help="JSON input file")
    ap.add_argument("--precision", type=int, help="override coeff_prec")
    ap.add_argument("--degree-bound", type=int, help="override degree_bound")
    ap.add_argument("--nmax", type=int, help="highest level n for corank tables")
    ap.add_argument("--output", choices=["structured", "table"], default="structured")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        L, cfg = parse_input(args.input, precision=args.precision,
                             degree_bound=args.degree_bound, n_max=args.nmax)
        out, status = run_command(args.command, cfg, L)
    except (InputError, ValueError, ArithmeticError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    render = render_table if args.output == "table" else render_structured
    sys.stdout.write(render(out))
    return status


if __name__ == "__main__":
    sys.exit(main())
