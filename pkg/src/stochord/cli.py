"""``stochord`` command-line front end.

Exit codes: 0 Holds/Confirmed/success, 1 Violated/Refuted, 2 Inconclusive,
3 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import combinators as cb
from . import harness
from .config import DEFAULT, ToleranceConfig
from .distributions import Distribution, Grid, from_json
from .errors import StochordError
from .orders import OrderKind, check
from .verdict import OrderVerdict, Status

EXIT_OK, EXIT_VIOLATED, EXIT_INCONCLUSIVE, EXIT_ERROR = 0, 1, 2, 3

_STATUS_EXIT = {Status.HOLDS: EXIT_OK, Status.VIOLATED: EXIT_VIOLATED, Status.INCONCLUSIVE: EXIT_INCONCLUSIVE}
_OUTCOME_EXIT = {
    harness.Outcome.CONFIRMED: EXIT_OK,
    harness.Outcome.REFUTED: EXIT_VIOLATED,
    harness.Outcome.INCONCLUSIVE: EXIT_INCONCLUSIVE,
    harness.Outcome.SKIPPED: EXIT_INCONCLUSIVE,
}


class UsageError(Exception):
    """Bad command-line input; the message names the offending option."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------- parsing


def _load_json_arg(text: str, field: str):
    """Inline JSON, or a path to a JSON file.  Returns (value, base_dir)."""
    s = text.strip()
    if s[:1] in "{[":
        try:
            return json.loads(s), None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{field}: malformed JSON ({exc.msg} at column {exc.colno})") from None
    path = Path(text)
    if not path.exists():
        raise UsageError(f"{field}: '{text}' is neither inline JSON nor an existing file")
    if path.suffix.lower() == ".csv":
        return {"type": "grid", "file": str(path.resolve())}, None
    try:
        return json.loads(path.read_text()), path.parent
    except json.JSONDecodeError as exc:
        raise UsageError(f"{field}: file '{text}' is not valid JSON ({exc.msg})") from None


def parse_spec(text: str, field: str) -> Distribution:
    obj, base = _load_json_arg(text, field)
    try:
        return from_json(obj, base)
    except (StochordError, ValueError, TypeError) as exc:
        raise UsageError(f"{field}: {exc}") from None


def parse_specs(items: list[str], field: str) -> list[Distribution]:
    out = []
    for text in items:
        obj, base = _load_json_arg(text, field)
        objs = obj if isinstance(obj, list) else [obj]
        for o in objs:
            name = f"{field}[{len(out)}]"
            try:
                out.append(from_json(o, base))
            except (StochordError, ValueError, TypeError) as exc:
                raise UsageError(f"{name}: {exc}") from None
    if not out:
        raise UsageError(f"{field}: at least one distribution is required")
    return out


def _config(ns) -> ToleranceConfig:
    try:
        return DEFAULT.replace(eps_ineq=ns.eps, eps_rel=ns.eps, grid_size=ns.grid,
                               max_deriv_order=ns.max_deriv, moment_horizon=ns.moments)
    except ValueError as exc:
        raise UsageError(f"tolerance options: {exc}") from None


# ----------------------------------------------------------------- output


def _emit(ns, payload, text: str | None = None):
    if text is None:
        text = json.dumps(payload, indent=2, sort_keys=False, allow_nan=False, default=_json_default) + "\n"
    if ns.output:
        Path(ns.output).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _sanitize(obj):
    """Replace non-finite floats with None so output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


def _pretty_verdict(v: OrderVerdict) -> str:
    line = f"{v.status.value}  margin={v.margin:.6g}"
    if v.label:
        line += f"  ({v.label})"
    if v.witness is not None:
        w = v.witness
        line += f"\n  witness at {w.location}: lhs={w.lhs:.10g} rhs={w.rhs:.10g}"
    if v.reason:
        line += f"\n  {v.reason}"
    return line + "\n"


def _csv_text(header: list[str], columns: list[np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


# ------------------------------------------------------------- subcommands


def cmd_check(ns) -> int:
    cfg = _config(ns)
    x, y = parse_spec(ns.x, "--x"), parse_spec(ns.y, "--y")
    try:
        v = check(ns.order, x, y, cfg)
    except (StochordError, ValueError) as exc:
        raise UsageError(f"check {ns.order}: {exc}") from None
    if ns.format == "pretty":
        _emit(ns, None, _pretty_verdict(v))
    else:
        _emit(ns, _sanitize(v.to_json()))
    return _STATUS_EXIT[v.status]


def cmd_combine(ns) -> int:
    cfg = _config(ns)
    x, z = parse_spec(ns.x, "--x"), parse_spec(ns.z, "--z")
    try:
        d = cb.sum_of_independent(x, z, cfg) if ns.kind == "sum" else cb.product_of_independent(x, z, cfg)
    except (StochordError, ValueError) as exc:
        raise UsageError(f"--z: {exc}") from None
    if ns.format == "csv":
        if not isinstance(d, Grid):
            raise UsageError("--format csv: the result has a closed form; use json")
        header = ["t", "cdf", "atom"] + (["pdf"] if d.pdf_values is not None else [])
        cols = [d.points, d.cdf_values, d.atom_masses] + ([d.pdf_values] if d.pdf_values is not None else [])
        _emit(ns, None, _csv_text(header, cols))
        return EXIT_OK
    _emit(ns, _sanitize(d.to_json()))
    return EXIT_OK


def cmd_property(ns) -> int:
    cfg = _config(ns)
    x, y, z = parse_spec(ns.x, "--x"), parse_spec(ns.y, "--y"), parse_spec(ns.z, "--z")
    fn = harness.verify_additivity if ns.kind == "additivity" else harness.verify_multiplicativity
    try:
        r = fn(ns.order, x, y, z, cfg)
    except (StochordError, ValueError) as exc:
        raise UsageError(f"--z: {exc}") from None
    if ns.format == "pretty":
        lines = [f"{r.property.value} of {r.order.name}: {r.outcome.value}"]
        if r.premise_verdict:
            lines.append("premise: " + _pretty_verdict(r.premise_verdict).rstrip())
        if r.conclusion_verdict:
            lines.append("conclusion: " + _pretty_verdict(r.conclusion_verdict).rstrip())
        _emit(ns, None, "\n".join(lines) + "\n")
    else:
        _emit(ns, _sanitize(r.to_json()))
    return _OUTCOME_EXIT[r.outcome]


def cmd_axioms(ns) -> int:
    cfg = _config(ns)
    pool = parse_specs(ns.pool, "--pool")
    reports = harness.verify_axioms(ns.order, pool, cfg)
    tally = {o.value: 0 for o in harness.Outcome}
    for r in reports:
        tally[r.outcome.value] += 1
    _emit(ns, _sanitize({"order": OrderKind.parse(ns.order).name, "summary": tally,
                         "reports": [r.to_json() for r in reports]}))
    if tally["Refuted"]:
        return EXIT_VIOLATED
    return EXIT_INCONCLUSIVE if tally["Inconclusive"] else EXIT_OK


def cmd_reproduce(ns) -> int:
    cfg = _config(ns)
    if ns.what == "remark2":
        res = harness.reproduce_remark2(cfg)
        if ns.format == "csv":
            c = res.curves
            names = ["t", "F_X", "F_Y", "F_0", "F_Y-X"]
            _emit(ns, None, _csv_text(names, [c[k] for k in names]))
        else:
            _emit(ns, _sanitize(res.to_json()))
        return EXIT_OK if res.reproduced else EXIT_VIOLATED
    if ns.what == "remark5":
        res = harness.reproduce_remark5(cfg)
        _emit(ns, _sanitize(res.to_json()))
        return EXIT_OK if res.reproduced else EXIT_VIOLATED
    spec = harness.SuiteSpec()
    if ns.suite:
        obj, _ = _load_json_arg(ns.suite, "--suite")
        try:
            spec = harness.SuiteSpec.from_json(obj)
        except (ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"--suite: {exc}") from None
    res = harness.reproduce_table1(spec, cfg)
    if ns.format == "pretty":
        lines = [f"{'order':8s} {'additivity':16s} {'multiplicativity':16s}"]
        for o, row in res.matrix.items():
            lines.append(f"{o.name:8s} {row.get('additivity', '-'):16s} {row.get('multiplicativity', '-'):16s}")
        lines.append(f"matches published table: {res.matches_published}")
        _emit(ns, None, "\n".join(lines) + "\n")
    else:
        _emit(ns, _sanitize(res.to_json(include_reports=ns.reports)))
    return EXIT_OK if res.matches_published else EXIT_VIOLATED


def plot_cdf(specs: list[Distribution], a: float, b: float, step: float) -> tuple[list[str], list[np.ndarray]]:
    """CDF columns on ``a, a+step, ..., b``."""
    if not (np.isfinite(a) and np.isfinite(b) and np.isfinite(step)):
        raise UsageError("--from/--to/--step: values must be finite")
    if step <= 0:
        raise UsageError("--step: must be positive")
    if b <= a:
        raise UsageError("--from/--to: empty range")
    n = int(round((b - a) / step)) + 1
    t = np.round(a + step * np.arange(n), 12)
    cols = [t] + [np.asarray(d.cdf(t), float) for d in specs]
    return ["t"] + [f"F_{i + 1}" for i in range(len(specs))], cols


def cmd_plot_cdf(ns) -> int:
    specs = parse_specs(ns.specs, "--specs")
    header, cols = plot_cdf(specs, ns.start, ns.stop, ns.step)
    if ns.format == "json":
        _emit(ns, {h: c.tolist() for h, c in zip(header, cols)})
    else:
        _emit(ns, None, _csv_text(header, cols))
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--eps", type=float, help=f"inequality tolerance (default {DEFAULT.eps_ineq:g})")
    common.add_argument("--grid", type=int, help="grid size for evaluation and combination")
    common.add_argument("--max-deriv", dest="max_deriv", type=int, help="highest derivative order for conv")
    common.add_argument("--moments", type=int, help="moment horizon for the moment order")
    common.add_argument("-o", "--output", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv", "pretty"))

    p = _Parser(prog="stochord", description="Decide stochastic orders and check their preservation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    orders = [k.value for k in OrderKind]

    c = sub.add_parser("check", parents=[common], help="decide X <= Y in one order")
    c.add_argument("order", choices=orders)
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.set_defaults(func=cmd_check)

    c = sub.add_parser("combine", parents=[common], help="law of X+Z or XZ for independent X, Z")
    c.add_argument("kind", choices=("sum", "product"))
    c.add_argument("--x", required=True)
    c.add_argument("--z", required=True)
    c.set_defaults(func=cmd_combine)

    c = sub.add_parser("property", parents=[common], help="test preservation under an independent Z")
    c.add_argument("kind", choices=("additivity", "multiplicativity"))
    c.add_argument("--order", required=True, choices=orders)
    c.add_argument("--x", required=True)
    c.add_argument("--y", required=True)
    c.add_argument("--z", required=True)
    c.set_defaults(func=cmd_property)

    c = sub.add_parser("axioms", parents=[common], help="reflexivity, antisymmetry, transitivity on a pool")
    c.add_argument("--order", required=True, choices=orders)
    c.add_argument("--pool", required=True, nargs="+")
    c.set_defaults(func=cmd_axioms)

    c = sub.add_parser("reproduce", parents=[common], help="rerun a worked example or the summary table")
    c.add_argument("what", choices=("remark2", "remark5", "table1"))
    c.add_argument("--suite", help="suite spec JSON (inline or file) for table1")
    c.add_argument("--reports", action="store_true", help="include every per-triple report in table1 output")
    c.set_defaults(func=cmd_reproduce)

    c = sub.add_parser("plot-cdf", parents=[common], help="CDF values on a uniform grid as CSV")
    c.add_argument("--specs", required=True, nargs="+")
    c.add_argument("--from", dest="start", type=float, required=True)
    c.add_argument("--to", dest="stop", type=float, required=True)
    c.add_argument("--step", type=float, required=True)
    c.set_defaults(func=cmd_plot_cdf)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except UsageError as exc:
        print(f"stochord: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except BrokenPipeError:
        return EXIT_OK
    except (StochordError, OSError) as exc:
        print(f"stochord: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
