"""Scenario files, command dispatch and deterministic reports.

A scenario is a JSON document describing one problem context (variables and
a Poisson bivector) plus an ordered list of commands.  Commands are strings
``"<op> <args> [-> name]"``; a ``-> name`` suffix stores the output so later
commands can refer to it.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, Optional

import jsonschema

from .charge import (
    Charge,
    MCElement,
    MCResidual,
    ObstructionWitness,
    construct_charge,
    l_geo,
    l_nor,
    lift_normalized_mc,
    mc_check,
)
from .errors import BFVError, NotCoisotropicError, SchemaError
from .gauge import GaugeHomotopy, compose_homotopies, is_pure, project_generator
from .poisson import (
    CoisotropyWitness,
    JacobiWitness,
    PoissonBivector,
    check_coisotropic_section,
    check_jacobi,
    inverse_flow_point,
    numeric_flow_sample,
)
from .poly import Poly, VarTable, poly_parse
from .superalg import BFVElement, parse_element, serialize_element

TIME_VAR = "t"

# exit codes
EXIT_OK = 0
EXIT_WITNESS = 1
EXIT_USAGE = 2

SCHEMA = {
    "type": "object",
    "required": ["base_vars", "fiber_rank", "poisson"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "base_vars": {"type": "array", "items": {"type": "string"}},
        "fiber_rank": {"type": "integer", "minimum": 1},
        "fiber_vars": {"type": "array", "items": {"type": "string"}},
        "poisson": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["a", "b", "poly"],
                "additionalProperties": False,
                "properties": {
                    "a": {"type": "integer", "minimum": 1},
                    "b": {"type": "integer", "minimum": 1},
                    "poly": {"type": "string"},
                },
            },
        },
        "sections": {
            "type": "object",
            "additionalProperties": {"type": "array", "items": {"type": "string"}},
        },
        "generators": {"type": "object", "additionalProperties": {"type": "string"}},
        "homotopies": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["start", "segments"],
                "additionalProperties": False,
                "properties": {
                    "start": {"type": "string"},
                    "segments": {"type": "array", "items": {"type": "string"}},
                    "sample_points": {
                        "type": "array",
                        "items": {"type": "array", "items": {"type": "string"}},
                    },
                },
            },
        },
        "commands": {"type": "array", "items": {"type": "string"}},
    },
}

COMMANDS = ("validate", "coisotropy", "charge", "mc-lift", "mc-check", "gauge", "project", "compose")


def _num(x: float) -> str:
    return format(float(x), ".12g")


# -- loading ---------------------------------------------------------------------

@dataclass
class Scenario:
    vars: VarTable
    pi: PoissonBivector
    raw: dict
    sections: dict = field(default_factory=dict)
    generators: dict = field(default_factory=dict)
    homotopies: dict = field(default_factory=dict)
    commands: list = field(default_factory=list)
    name: str = ""


def _split_command(text: str) -> tuple[str, str, Optional[str]]:
    body, _, target = text.partition("->")
    target = target.strip() or None
    op, _, args = body.strip().partition(" ")
    return op, args.strip(), target


def load_scenario(source) -> Scenario:
    """Validate and load a scenario from a path or an already-parsed dict."""
    if isinstance(source, (str, os.PathLike)):
        try:
            with open(source, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"scenario is not valid JSON: {exc}") from exc
        name = os.path.basename(os.fspath(source))
    else:
        data = source
        name = data.get("name", "")
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"schema violation at {where}: {exc.message}") from exc

    k = data["fiber_rank"]
    fiber = data.get("fiber_vars") or [f"y{i}" for i in range(1, k + 1)]
    if len(fiber) != k:
        raise SchemaError(f"fiber_vars has {len(fiber)} names but fiber_rank is {k}")
    try:
        vars = VarTable(tuple(data["base_vars"]), tuple(fiber), TIME_VAR)
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"bad variable table: {exc}") from exc

    n = vars.ncoords
    entries = {}
    for pos, e in enumerate(data["poisson"]):
        a, b = e["a"], e["b"]
        if a > n or b > n:
            raise SchemaError(f"poisson/{pos}: index out of range 1..{n}")
        if a == b:
            raise SchemaError(f"poisson/{pos}: diagonal entry")
        if (min(a, b), max(a, b)) in entries:
            raise SchemaError(f"poisson/{pos}: duplicate entry")
        p = _parse_poly(e["poly"], vars, f"poisson/{pos}")
        if vars.time_index is not None and p.depends_on([vars.time_index]):
            raise SchemaError(f"poisson/{pos}: entries must not depend on time")
        entries[(min(a, b), max(a, b))] = p if a < b else -p
    pi = PoissonBivector(vars, {(a - 1, b - 1): p for (a, b), p in entries.items()})

    sections = {}
    for key, coeffs in data.get("sections", {}).items():
        if len(coeffs) != k:
            raise SchemaError(f"sections/{key}: expected {k} polynomials")
        sections[key] = [_parse_poly(c, vars, f"sections/{key}") for c in coeffs]

    generators = {key: _parse_el(g, vars, f"generators/{key}") for key, g in data.get("generators", {}).items()}

    homotopies = {}
    for key, h in data.get("homotopies", {}).items():
        segs = []
        for pos, s in enumerate(h["segments"]):
            segs.append(generators[s] if s in generators else _parse_el(s, vars, f"homotopies/{key}/segments/{pos}"))
        points = []
        for p in h.get("sample_points", []):
            if len(p) != n:
                raise SchemaError(f"homotopies/{key}: sample points need {n} coordinates")
            points.append([_parse_poly(c, vars, f"homotopies/{key}/sample_points") for c in p])
            if not all(c.is_constant() for c in points[-1]):
                raise SchemaError(f"homotopies/{key}: sample points must be rational constants")
        homotopies[key] = {"start": h["start"], "segments": segs, "points": points}

    commands = []
    for pos, c in enumerate(data.get("commands", [])):
        op, args, target = _split_command(c)
        if op not in COMMANDS:
            raise SchemaError(f"commands/{pos}: unknown command {op!r}")
        commands.append((c.strip(), op, args, target))

    return Scenario(vars, pi, data, sections, generators, homotopies, commands, data.get("name", name))


def _parse_poly(text, vars, where) -> Poly:
    try:
        return poly_parse(text, vars)
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


def _parse_el(text, vars, where) -> BFVElement:
    try:
        return parse_element(text, vars)
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"{where}: {exc}") from exc


# -- diagnostics -----------------------------------------------------------------

def explain_failure(witness) -> str:
    """Human-readable diagnostic for a failure witness."""
    if isinstance(witness, NotCoisotropicError) and witness.witness is not None:
        witness = witness.witness
    if isinstance(witness, JacobiWitness):
        return _explain_jacobi(witness)
    if isinstance(witness, CoisotropyWitness):
        i, j = witness.pair
        vars = witness.value.vars
        yi, yj = vars.fiber_vars[i - 1], vars.fiber_vars[j - 1]
        return (
            f"coisotrope criterion fails: the bracket of the graph generators for the fiber pair "
            f"({i},{j}) [{yi}, {yj}] restricts to {witness.value} on the section, not 0"
        )
    if isinstance(witness, ObstructionWitness):
        return (
            f"charge obstruction at iteration {witness.iteration}: the lowest component "
            f"{witness.element} of 1/2[Omega,Omega] has nonzero restriction {witness.pr_image} "
            f"to the zero section, so it is not delta-exact and the zero section is not coisotropic"
        )
    if isinstance(witness, MCResidual):
        return f"Maurer-Cartan equation fails: [Omega+beta, Omega+beta] = {witness.residual}"
    raise ValueError("no failure to explain")


def _explain_jacobi(w: JacobiWitness) -> str:
    vars = w.value.vars
    a, b, c = w.indices
    names = ", ".join(vars.names[i] for i in w.indices)
    return (
        f"Jacobi identity fails for the coordinate triple ({a + 1},{b + 1},{c + 1}) [{names}]: "
        f"the jacobiator is {w.value}, not 0"
    )


# -- running ---------------------------------------------------------------------

class CommandFailure(Exception):
    """A command produced a mathematical witness rather than a result."""

    def __init__(self, status: str, output: dict):
        super().__init__(status)
        self.status = status
        self.output = output


@dataclass
class Options:
    steps: int = 1000
    nil_cap: int = 64
    tol: float = 1e-6


class _Runner:
    def __init__(self, sc: Scenario, opts: Options):
        self.sc = sc
        self.vars = sc.vars
        self.opts = opts
        self.env: dict[str, Any] = {}
        self._charge: Optional[Charge] = None
        self._obstruction: Optional[ObstructionWitness] = None
        self.built: dict[str, GaugeHomotopy] = {}

    # helpers
    def charge(self) -> Charge:
        if self._charge is None and self._obstruction is None:
            out = construct_charge(self.sc.pi)
            if isinstance(out, ObstructionWitness):
                self._obstruction = out
            else:
                self._charge = out
        if self._charge is None:
            raise BFVError("no BFV charge: the zero section is not coisotropic")
        return self._charge

    def section(self, arg: str) -> list[Poly]:
        arg = arg.strip()
        if arg in self.sc.sections:
            return self.sc.sections[arg]
        if arg.startswith("(") and arg.endswith(")"):
            parts = _split_top_level(arg[1:-1])
            if len(parts) != self.vars.k:
                raise BFVError(f"section needs {self.vars.k} coefficients")
            return [poly_parse(p, self.vars) for p in parts]
        raise BFVError(f"unknown section {arg!r}")

    def mc_element(self, arg: str) -> MCElement:
        arg = arg.strip()
        hit = self.env.get(arg)
        if isinstance(hit, MCElement):
            return hit
        if isinstance(hit, GaugeHomotopy):
            return hit.end
        if arg in self.sc.homotopies:
            return self.homotopy(arg).end
        return MCElement(parse_element(arg, self.vars))

    def homotopy(self, name: str) -> GaugeHomotopy:
        hit = self.env.get(name)
        if isinstance(hit, GaugeHomotopy):
            return hit
        if name in self.built:
            return self.built[name]
        spec = self.sc.homotopies.get(name)
        if spec is None:
            raise BFVError(f"unknown homotopy {name!r}")
        start = self.mc_element(spec["start"])
        h = GaugeHomotopy.build(self.charge(), start, spec["segments"], self.opts.nil_cap)
        self.built[name] = h
        return h

    # commands
    def validate(self, args):
        verdict = check_jacobi(self.sc.pi)
        if verdict is not True:
            raise CommandFailure("jacobi-failure", {
                "witness": {"indices": [i + 1 for i in verdict.indices], "value": str(verdict.value)},
                "explanation": explain_failure(verdict),
            })
        return {"jacobi": True}, None

    def coisotropy(self, args):
        nu = self.section(args)
        verdict = check_coisotropic_section(self.sc.pi, nu)
        out = {"section": [str(c) for c in nu]}
        if verdict is not True:
            out["witness"] = {"pair": list(verdict.pair), "value": str(verdict.value)}
            out["explanation"] = explain_failure(verdict)
            raise CommandFailure("not-coisotropic", out)
        out["coisotropic"] = True
        return out, None

    def charge_cmd(self, args):
        try:
            ch = self.charge()
        except BFVError:
            w = self._obstruction
            raise CommandFailure("obstruction", {
                "witness": {
                    "iteration": w.iteration,
                    "element": serialize_element(w.element),
                    "pr_image": serialize_element(w.pr_image),
                },
                "explanation": explain_failure(w),
            })
        comps = {}
        for r in sorted(set(ch.element.resolution_degrees())):
            comps[str(r)] = serialize_element(ch.component(r))
        return {"charge": serialize_element(ch.element), "iterations": ch.iterations, "components": comps}, ch

    def mc_lift(self, args):
        mu = self.section(args)
        try:
            beta = lift_normalized_mc(self.charge(), mu)
        except NotCoisotropicError as exc:
            w = exc.witness
            out = {"mu": [str(c) for c in mu]}
            if isinstance(w, CoisotropyWitness):
                out["witness"] = {"pair": list(w.pair), "value": str(w.value)}
                out["explanation"] = explain_failure(w)
            else:
                out["explanation"] = str(exc)
            raise CommandFailure("not-coisotropic", out)
        return {
            "mu": [str(c) for c in mu],
            "beta": serialize_element(beta.beta),
            "l_nor": [str(c) for c in l_nor(beta)],
            "mc_check": mc_check(self.charge(), beta) is True,
        }, beta

    def mc_check_cmd(self, args):
        beta = self.mc_element(args)
        verdict = mc_check(self.charge(), beta)
        out = {"element": serialize_element(beta.beta)}
        if verdict is not True:
            out["residual"] = serialize_element(verdict.residual)
            out["explanation"] = explain_failure(verdict)
            raise CommandFailure("mc-residual", out)
        out["mc_check"] = True
        return out, beta

    def gauge(self, args):
        name = args.strip()
        h = self.homotopy(name)
        segs = []
        for seg in h.segments:
            segs.append({
                "generator": serialize_element(seg.generator.element),
                "r_min": seg.generator.r_min,
                "dyson_depth": seg.family.depth,
                "pure": seg.generator.is_pure(),
                "end": serialize_element(seg.end.beta),
            })
        out = {
            "start": serialize_element(h.start.beta),
            "end": serialize_element(h.end.beta),
            "pure": is_pure(h),
            "mc_check": mc_check(self.charge(), h.end) is True,
            "segments": segs,
        }
        if h.end.witness is not None:
            out["l_geo"] = [str(c) for c in l_geo(self.sc.pi, h.end)]
        self.env[name] = h
        return out, h

    def project(self, args):
        name = args.strip()
        h = self.homotopy(name)
        spec = self.sc.homotopies.get(name, {})
        points = [[c.constant_value() for c in p] for p in spec.get("points", [])]
        out = {"hamiltonians": [str(project_generator(s.generator)) for s in h.segments]}
        if points:
            out["flows"] = [self._flow_check(s, points) for s in h.segments]
        return out, None

    def _flow_check(self, seg, points):
        """Numeric cross-check of one segment at the sample points."""
        F = project_generator(seg.generator)
        fam = seg.family.at(1)
        only_00 = seg.generator.element.bidegrees() <= {(0, 0)}
        report = {"endpoints": []}
        worst = 0.0
        for p in points:
            traj = numeric_flow_sample(self.sc.pi, F, p, self.opts.steps)
            report["endpoints"].append([_num(v) for v in traj[-1]])
            if only_00:
                back = inverse_flow_point(self.sc.pi, F, p, 1.0, self.opts.steps)
                assign = {a: v for a, v in enumerate(p)}
                for a, img in enumerate(fam.coords):
                    sym = float(img.scalar_part().evaluate(assign))
                    worst = max(worst, abs(sym - float(back[a])))
        if only_00:
            report["max_pullback_error"] = _num(worst)
            report["within_tol"] = bool(worst <= self.opts.tol)
        return report

    def compose(self, args):
        parts = args.split()
        if len(parts) != 2:
            raise BFVError("compose needs two homotopy names")
        h = compose_homotopies(self.homotopy(parts[0]), self.homotopy(parts[1]))
        return {
            "start": serialize_element(h.start.beta),
            "end": serialize_element(h.end.beta),
            "segments": len(h.segments),
            "pure": is_pure(h),
        }, h

    def run(self, op: str, args: str):
        fn = {
            "validate": self.validate,
            "coisotropy": self.coisotropy,
            "charge": self.charge_cmd,
            "mc-lift": self.mc_lift,
            "mc-check": self.mc_check_cmd,
            "gauge": self.gauge,
            "project": self.project,
            "compose": self.compose,
        }[op]
        return fn(args)


def _split_top_level(text: str) -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur).strip())
            cur = []
            continue
        depth += ch in "({"
        depth -= ch in ")}"
        cur.append(ch)
    parts.append("".join(cur).strip())
    return parts


@dataclass
class Report:
    scenario: str
    context: dict
    results: list
    timing: dict

    @property
    def exit_code(self) -> int:
        return max((r["exit_code"] for r in self.results), default=EXIT_OK)

    @property
    def status(self) -> str:
        return {EXIT_OK: "ok", EXIT_WITNESS: "failed"}[self.exit_code]

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "scenario": self.scenario,
            "context": self.context,
            "results": self.results,
            "summary": {"status": self.status, "exit_code": self.exit_code},
        }
        if timing:
            d["timing"] = self.timing
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2, ensure_ascii=False) + "\n"


def run_scenario(source, options: Optional[Options] = None) -> Report:
    """Execute every command of a scenario in order and collect a :class:`Report`."""
    opts = options or Options()
    sc = load_scenario(source)
    runner = _Runner(sc, opts)
    results = []
    timings = []
    t_all = time.perf_counter()
    for index, (text, op, args, target) in enumerate(sc.commands):
        t0 = time.perf_counter()
        entry = {"index": index, "command": text}
        try:
            output, value = runner.run(op, args)
            entry.update(status="ok", exit_code=EXIT_OK, output=output)
            if target:
                if value is None:
                    raise BFVError(f"command {op!r} has no output to name")
                runner.env[target] = value
        except CommandFailure as f:
            entry.update(status=f.status, exit_code=EXIT_WITNESS, output=f.output)
        except (BFVError, ValueError, KeyError, ArithmeticError) as exc:
            entry.update(status="error", exit_code=EXIT_WITNESS,
                         error={"type": type(exc).__name__, "message": str(exc).strip("'\"")})
        results.append(entry)
        timings.append(round(time.perf_counter() - t0, 6))
    timing = {"total_s": round(time.perf_counter() - t_all, 6), "commands_s": timings}
    vars = sc.vars
    context = {
        "base_vars": list(vars.base_vars),
        "fiber_vars": list(vars.fiber_vars),
        "time_var": vars.time_var,
        "poisson": [
            {"a": a + 1, "b": b + 1, "poly": str(p)} for (a, b), p in sorted(sc.pi.entries.items())
        ],
    }
    return Report(sc.name, context, results, timing)
