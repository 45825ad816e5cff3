"""Batch front end: ``padic-lipschitz run spec.json`` and ``padic-lipschitz eval``.

A problem spec is a JSON document::

    {"schema": 1, "p": 3, "precision": 40, "window": [0, 3],
     "seed": 0, "samples": 2000, "exhaust": 5,
     "family": [{"y": ["0"], "function": {"a": 1, "b": 1, "e": "1",
                 "c_prime": "0", "source": {...}, "target": {...}}}],
     "tasks": ["check-jacobian", "extend:isometric", "verify-lipschitz:1"]}

``target`` may be omitted and is then inferred.  Tasks are either strings
(``check-jacobian``, ``verify-identities``, ``extend:<method>``, ``glue``,
``verify-lipschitz:<claimed>``) or objects carrying the same data plus
optional per-task ``seed``/``samples``/``exhaust`` overrides.

Exit status: 0 when every task passes, 1 when one fails, 2 when the problem file
does not parse (nothing is written in that case).
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import OutsideRepresentablePrecision, PadicError, SpecParseError
from .extension import (
    ExtendedFunction,
    Family,
    FamilyMember,
    extend_by_center,
    extend_isometric,
    extend_with_phi,
    glue,
)
from .functions import (
    PreparedFunction,
    check_jacobian,
    prepare,
    validate,
)
from .geometry import CellFiber, PointSet
from .padic import (
    PLUS_INFINITY,
    PadicApprox,
    format_rational,
    is_prime,
    parse_rational,
    valuation,
)
from .verify import (
    Lattice,
    SampleConfig,
    closure_oracle,
    estimate_lipschitz,
    nearest_point_oracle,
    verify_identities,
)

SCHEMA = 1
METHODS = ("center", "phi", "isometric")
TASKS = ("check-jacobian", "verify-identities", "extend", "glue", "verify-lipschitz")
LIPSCHITZ_TARGETS = ("input", "oracle") + METHODS


@dataclass
class ProblemSpec:
    p: int
    precision: int
    window: Tuple[int, int]
    seed: int
    samples: int
    exhaust: int
    family: Family
    tasks: List[dict] = field(default_factory=list)

    def config(self, task: Optional[dict] = None) -> SampleConfig:
        task = task or {}
        return SampleConfig(seed=int(task.get("seed", self.seed)),
                            samples=int(task.get("samples", self.samples)),
                            precision=self.precision, l_window=self.window,
                            exhaust=int(task.get("exhaust", self.exhaust)))

    def to_dict(self) -> dict:
        return {"schema": SCHEMA, "p": self.p, "precision": self.precision,
                "window": list(self.window), "seed": self.seed, "samples": self.samples,
                "exhaust": self.exhaust,
                "family": [{"y": [format_rational(v) for v in m.y],
                            "function": m.function.to_dict()} for m in self.family.members],
                "tasks": self.tasks}


def _parse_task(raw, previous: List[dict]) -> dict:
    if isinstance(raw, str):
        name, _, arg = raw.partition(":")
        raw = {"task": name}
        if name == "extend":
            raw["method"] = arg
        elif name == "verify-lipschitz":
            raw["claimed"] = arg
        elif name == "glue" and arg:
            raw["method"] = arg
        elif arg:
            raise SpecParseError(f"task {name!r} takes no argument")
    if not isinstance(raw, dict) or raw.get("task") not in TASKS:
        raise SpecParseError(f"unknown task {raw!r}")
    task = dict(raw)
    name = task["task"]
    if name in ("extend", "glue"):
        task.setdefault("method", "isometric")
        if task["method"] not in METHODS:
            raise SpecParseError(f"unknown extension method {task['method']!r}")
    if name == "verify-lipschitz":
        if "claimed" not in task or task["claimed"] in ("", None):
            raise SpecParseError("verify-lipschitz needs a claimed constant")
        claimed = parse_rational(task["claimed"])
        if claimed <= 0:
            raise SpecParseError("claimed constant must be positive")
        task["claimed"] = format_rational(claimed)
        if "method" not in task:
            built = [t["method"] for t in previous if t["task"] == "extend"]
            task["method"] = built[-1] if built else "input"
        if task["method"] not in LIPSCHITZ_TARGETS:
            raise SpecParseError(f"unknown verification target {task['method']!r}")
    for key in ("seed", "samples", "exhaust"):
        if key in task:
            task[key] = int(task[key])
    return task


def _parse_member(p: int, precision: int, raw: dict) -> FamilyMember:
    y = tuple(parse_rational(v) for v in raw.get("y", []))
    d = raw["function"]
    if "target" in d:
        g = PreparedFunction.from_dict(p, d, precision)
        validate(g)
    else:
        source = CellFiber.from_dict(p, d["source"])
        branch = None if d.get("branch") is None else int(d["branch"])
        g = prepare(int(d["a"]), int(d["b"]), parse_rational(d["e"]), source,
                    parse_rational(d.get("c_prime", "0")), branch, precision)
    return FamilyMember(y, g)


def parse_spec(data: dict) -> ProblemSpec:
    """Validate a spec document; every failure becomes :class:`SpecParseError`."""
    try:
        if data.get("schema", SCHEMA) != SCHEMA:
            raise SpecParseError(f"unsupported schema {data.get('schema')!r}")
        p = int(data["p"])
        if not is_prime(p):
            raise SpecParseError(f"p={p} is not prime")
        precision = int(data.get("precision", 40))
        window = tuple(int(v) for v in data.get("window", (0, 3)))
        if len(window) != 2 or window[0] > window[1]:
            raise SpecParseError(f"bad window {window}")
        members = [_parse_member(p, precision, m) for m in data["family"]]
        if not members:
            raise SpecParseError("the family is empty")
        for m in members:
            depth = max(m.function.source.m, m.function.target.m)
            if precision < depth + 4:
                raise SpecParseError(f"precision {precision} < max(m, m') + 4 = {depth + 4}")
        tasks: List[dict] = []
        for raw in data.get("tasks", []):
            tasks.append(_parse_task(raw, tasks))
        return ProblemSpec(p, precision, window, int(data.get("seed", 0)),
                           int(data.get("samples", 2000)), int(data.get("exhaust", 5)),
                           Family(p, tuple(members)), tasks)
    except SpecParseError:
        raise
    except (PadicError, ValueError, KeyError, TypeError) as exc:
        raise SpecParseError(f"{type(exc).__name__}: {exc}") from exc


def load_spec(path) -> ProblemSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecParseError("the problem file must be a JSON object")
    return parse_spec(data)


# --- task execution ------------------------------------------------------------

def _builder(method: str):
    return {"center": extend_by_center, "phi": extend_with_phi,
            "isometric": extend_isometric}[method]


def build_extensions(spec: ProblemSpec, method: str) -> List[Tuple[tuple, List[int], ExtendedFunction]]:
    """(y, fold order of its cells, extension) for every parameter tuple."""
    out = []
    build = _builder(method)
    for y in spec.family.parameters():
        cells = spec.family.cells(y)
        exts = [build(g, spec.window) if method == "isometric" else build(g) for g in cells]
        order = list(range(len(cells)))
        ext = exts[0] if len(cells) == 1 else glue(
            [(PointSet((g.source,)), e) for g, e in zip(cells, exts)])
        out.append((y, order, ext))
    return out


def _y_json(y) -> list:
    return [format_rational(v) for v in y]


def _lattice(spec: ProblemSpec, cfg: SampleConfig) -> Lattice:
    lo = spec.window[0]
    return Lattice(spec.p, lo, max(cfg.exhaust - lo, 1))


class _InputFunction:
    """The family member over one y, evaluated on whichever cell holds x."""

    def __init__(self, cells: Sequence[PreparedFunction]):
        self.cells = list(cells)
        self.p = cells[0].p

    def __call__(self, x):
        for g in self.cells:
            if g.source.contains(x):
                return g(x)
        raise ValueError(f"{x} outside every cell")


def _run_check_jacobian(spec, task, cfg, state):
    results, ok = [], True
    for m in spec.family.members:
        g = m.function
        if g.source.is_zero_cell or g.a == 0:
            results.append({"y": _y_json(m.y), "status": "pass", "detail": "constant"})
            continue
        for B in g.source.balls(*spec.window):
            digits = max(2, cfg.exhaust - B.l - B.m)
            rep = check_jacobian(g, B, cfg.samples, cfg.seed, digits, cfg.cap)
            ok = ok and rep.passed
            results.append({"y": _y_json(m.y), "l": B.l,
                            "status": "pass" if rep.passed else "fail", **rep.to_dict()})
    return ok, results


def _run_verify_identities(spec, task, cfg, state):
    results, ok = [], True
    for m in spec.family.members:
        rep = verify_identities(m.function, cfg)
        ok = ok and rep.passed
        results.append({"y": _y_json(m.y), **rep.to_dict()})
    return ok, results


def _run_extend(spec, task, cfg, state):
    method = task["method"]
    built = build_extensions(spec, method)
    state[method] = built
    results = []
    ok = True
    for y, order, ext in built:
        restricted = all(ext(x) == g(x) or _same(ext(x), g(x))
                         for g in spec.family.cells(y) for x in g.source.sample_points())
        ok = ok and restricted
        results.append({"y": _y_json(y), "claimed_lipschitz": format_rational(ext.claimed_lipschitz),
                        "provenance": ext.provenance, "pieces": len(ext.pieces.pieces),
                        "fold_order": order, "restriction_exact": restricted})
    return ok, results


def _same(u, v) -> bool:
    if isinstance(u, PadicApprox) or isinstance(v, PadicApprox):
        d = u - v
        return isinstance(d, PadicApprox) and d.is_indeterminate
    return u == v


def _run_glue(spec, task, cfg, state):
    method = task["method"]
    built = build_extensions(spec, method)
    results, ok = [], True
    for y, order, ext in built:
        est = estimate_lipschitz(ext, _lattice(spec, cfg), cfg, ext.claimed_lipschitz, spec.p)
        ok = ok and est.passed
        results.append({"y": _y_json(y), "fold_order": order, "method": method,
                        **est.to_dict()})
    return ok, results


def _target_function(spec, method: str, y, state):
    cells = spec.family.cells(y)
    if method == "input":
        return _InputFunction(cells), PointSet(tuple(g.source for g in cells))
    if method == "oracle":
        if len(cells) == 1:
            return closure_oracle(cells[0]), None
        return nearest_point_oracle(PointSet(tuple(g.source for g in cells)),
                                    _InputFunction(cells)), None
    if method not in state:
        state[method] = build_extensions(spec, method)
    ext = next(e for yy, _, e in state[method] if yy == y)
    return ext, None


def _run_verify_lipschitz(spec, task, cfg, state):
    claimed = parse_rational(task["claimed"])
    results, ok = [], True
    for y in spec.family.parameters():
        f, domain = _target_function(spec, task["method"], y, state)
        if domain is None:
            domain = _lattice(spec, cfg)
        est = estimate_lipschitz(f, domain, cfg, claimed, spec.p)
        ok = ok and est.passed
        results.append({"y": _y_json(y), "method": task["method"], **est.to_dict()})
    return ok, results


RUNNERS = {"check-jacobian": _run_check_jacobian, "verify-identities": _run_verify_identities,
           "extend": _run_extend, "glue": _run_glue, "verify-lipschitz": _run_verify_lipschitz}


def run_spec(spec: ProblemSpec) -> Tuple[dict, Dict[str, list]]:
    """Execute every task; returns the report and the extensions built."""
    state: Dict[str, list] = {}
    entries = []
    overall = True
    for task in spec.tasks:
        cfg = spec.config(task)
        try:
            ok, results = RUNNERS[task["task"]](spec, task, cfg, state)
            error = None
        except PadicError as exc:
            ok, results, error = False, [], f"{type(exc).__name__}: {exc}"
        overall = overall and ok
        entry = {**task, "status": "pass" if ok else "fail", "results": results}
        if error:
            entry["error"] = error
        entries.append(entry)
    report = {"schema": SCHEMA, "p": spec.p, "precision": spec.precision,
              "window": list(spec.window), "seed": spec.seed, "samples": spec.samples,
              "exhaust": spec.exhaust, "tasks": entries,
              "overall": "pass" if overall else "fail"}
    return report, state


def extension_document(spec: ProblemSpec, method: str, built) -> dict:
    return {"schema": SCHEMA, "p": spec.p, "precision": spec.precision, "method": method,
            "extensions": [{"y": _y_json(y), "fold_order": order, "extension": ext.to_dict()}
                           for y, order, ext in built]}


def load_extension_document(path) -> Tuple[int, List[Tuple[tuple, ExtendedFunction]]]:
    data = json.loads(Path(path).read_text())
    p, precision = int(data["p"]), int(data.get("precision", 40))
    return p, [(tuple(parse_rational(v) for v in item["y"]),
                ExtendedFunction.from_dict(p, item["extension"], precision))
               for item in data["extensions"]]


def render_text(report: dict) -> str:
    lines = [f"p={report['p']} window={report['window']} seed={report['seed']}"]
    for t in report["tasks"]:
        label = t["task"] + (f":{t['method']}" if "method" in t else "")
        if "claimed" in t:
            label += f" claimed={t['claimed']}"
        lines.append(f"{t['status'].upper():4} {label}")
        if "error" in t:
            lines.append(f"     {t['error']}")
        for r in t["results"]:
            bits = [f"y={','.join(r['y'])}"]
            if "l" in r:
                bits.append(f"l={r['l']} derivative_order={r.get('derivative_order')}")
            for key in ("ratio", "bound", "claimed_lipschitz", "detail"):
                if r.get(key):
                    bits.append(f"{key}={r[key]}")
            if r.get("witness") and r.get("passed") is False:
                bits.append(f"witness={r['witness']}")
            if "overall" in r:
                bits.append(f"identities={r['overall']}")
            lines.append("     " + " ".join(bits))
    lines.append(f"overall: {report['overall']}")
    return "\n".join(lines) + "\n"


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# --- argument handling ----------------------------------------------------------

def _window(text: str) -> Tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError("window must look like lo:hi")
    return int(lo), int(hi)


def _apply_flags(data: dict, args) -> dict:
    data = dict(data)
    for key in ("seed", "samples", "precision"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "window", None) is not None:
        data["window"] = list(args.window)
    return data


def _read_json(path) -> dict:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecParseError(f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise SpecParseError("the problem file must be a JSON object")
    return data


def cmd_run(args) -> int:
    try:
        spec = parse_spec(_apply_flags(_read_json(args.spec), args))
    except SpecParseError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    report, state = run_spec(spec)
    text = dump_json(report) if args.format == "json" else render_text(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"report.{args.format if args.format == 'json' else 'txt'}").write_text(text)
        for method, built in sorted(state.items()):
            (out / f"extension-{method}.json").write_text(
                dump_json(extension_document(spec, method, built)))
    else:
        sys.stdout.write(text)
    return 0 if report["overall"] == "pass" else 1


def format_value(v) -> str:
    if isinstance(v, PadicApprox):
        return str(v)
    return format_rational(v)


def evaluate(spec: ProblemSpec, x: Fraction, y_index: int = 0, method: Optional[str] = None,
             extension_path=None):
    lo = spec.window[0]
    v = valuation(x, spec.p)
    if v is not PLUS_INFINITY and v < lo:
        raise OutsideRepresentablePrecision(
            f"ord({format_rational(x)}) = {v} lies below the window start {lo}")
    if extension_path is not None:
        _, items = load_extension_document(extension_path)
        exts = [e for _, e in items]
    else:
        if method is None:
            methods = [t["method"] for t in spec.tasks if t["task"] == "extend"]
            if not methods:
                raise SpecParseError("no extend task in the problem file and no --extension given")
            method = methods[0]
        exts = [e for _, _, e in build_extensions(spec, method)]
    if not 0 <= y_index < len(exts):
        raise SpecParseError(f"y-index {y_index} out of range (0..{len(exts) - 1})")
    return exts[y_index](x)


def cmd_eval(args) -> int:
    try:
        spec = parse_spec(_apply_flags(_read_json(args.spec), args))
        x = parse_rational(args.x)
    except (SpecParseError, ValueError) as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    try:
        value = evaluate(spec, x, args.y_index, args.method, args.extension)
    except SpecParseError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    except PadicError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(format_value(value))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="padic-lipschitz",
                                     description="Lipschitz extensions over Q_p")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("spec", help="problem spec (JSON)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--samples", type=int)
        sp.add_argument("--precision", type=int)
        sp.add_argument("--window", type=_window, help="order window lo:hi")

    run = sub.add_parser("run", help="execute the tasks of a spec")
    common(run)
    run.add_argument("--out", help="directory for the report and extension files")
    run.add_argument("--format", choices=("json", "text"), default="json")
    run.set_defaults(func=cmd_run)

    ev = sub.add_parser("eval", help="evaluate an extension at a rational point")
    common(ev)
    ev.add_argument("x", help="rational point, e.g. 2/3")
    ev.add_argument("--y-index", type=int, default=0)
    ev.add_argument("--method", choices=METHODS)
    ev.add_argument("--extension", help="saved extension file instead of rebuilding")
    ev.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
