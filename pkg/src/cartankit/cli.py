"""Command line front end: GeometrySpec files in, verdict reports out.

A GeometrySpec is a JSON document holding one chart and the geometric
objects living on it (tables of expression strings; see
schema/geometry_spec.schema.json for the field-by-field index
conventions).  Commands:

    cartankit validate <file>       axioms / well-formedness of every object
    cartankit check <file> --pipeline {cartan,theorem-a,transitive,
                                       riemann,poisson,geometry}
    cartankit holonomy <file> --point ... --plane i j --side h
    cartankit identities <file>     the structural identity battery

Reports are JSON on stdout and byte-stable for a fixed seed; timing
fields appear only under --timings so that the default output stays
reproducible.  Exit status: 0 all verdicts pass, 1 some verdict fails
(or is undecidable), 2 the input itself is unusable (schema violation,
unresolved reference, bad shape, violated chart guard).

When a file carries several objects the canonical pipeline pair is
resolved with the precedence metric > poisson > parallelism > algebroid
> action > foliation; `check --pipeline geometry` dispatches on the same
precedence to the object's own full pipeline.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import __version__
from .algebroid import (
    Algebroid,
    LieAlgebra,
    build_action_algebroid,
    build_foliation_algebroid,
    build_poisson_algebroid,
    tangent_algebroid,
)
from .algebroid import validate as validate_algebroid
from .bundles import LOW, TM, UP, Section, TensorField
from .cartan import (
    Parallelism,
    check_cartan,
    cotangent_connection,
    holonomy_check,
    identity_battery,
    parallelism_report,
    poisson_report,
    riemann_pipeline,
    theorem_a_verdict,
    transitive_symmetry_check,
)
from .connections import TMConnection, christoffel
from .symcore import Chart, Expr, ZeroPolicy, canon, is_zero, parse, to_text

_SCHEMA_PATH = Path(__file__).resolve().parent.parent.parent / "schema" / "geometry_spec.schema.json"

PIPELINES = ("cartan", "theorem-a", "transitive", "riemann", "poisson", "geometry")


class SpecError(Exception):
    """Unusable input: carries a JSON-pointer-ish path when known."""

    def __init__(self, message: str, path: str = ""):
        super().__init__(message)
        self.path = path
        self.message = message


def _pointer(parts) -> str:
    return "/" + "/".join(str(p) for p in parts) if parts else ""


def _load_schema() -> dict:
    candidates = [_SCHEMA_PATH]
    # editable installs see the repo schema; installed trees keep a copy
    # next to the package
    candidates.append(Path(__file__).resolve().parent / "geometry_spec.schema.json")
    for c in candidates:
        if c.is_file():
            return json.loads(c.read_text())
    raise RuntimeError("geometry_spec.schema.json not found")


def schema_errors(doc) -> List[Tuple[str, str]]:
    """Sorted (pointer, message) pairs; empty means structurally valid."""
    import jsonschema

    validator = jsonschema.Draft7Validator(_load_schema())
    found = []
    for err in validator.iter_errors(doc):
        found.append((_pointer(err.absolute_path), err.message))
    found.sort()
    return found


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _scalar_expr(value, chart: Chart, path: str) -> Expr:
    try:
        if isinstance(value, str):
            return canon(parse(value, chart))
        return canon(parse(repr(value), chart))
    except Exception as exc:
        raise SpecError(f"bad expression {value!r}: {exc}", path) from None


def _expr_array(table, chart: Chart, path: str, shape=None) -> np.ndarray:
    arr = np.array(table, dtype=object)
    if shape is not None and arr.shape != shape:
        raise SpecError(
            f"expected shape {shape}, got {arr.shape}", path
        )
    out = np.empty(arr.shape, dtype=object)
    for idx in np.ndindex(*arr.shape):
        out[idx] = _scalar_expr(arr[idx], chart, path + _pointer(idx))
    return out


def _fraction_cube(table, path: str) -> list:
    out = []
    for a, plane in enumerate(table):
        rows = []
        for b, row in enumerate(plane):
            vals = []
            for c, v in enumerate(row):
                try:
                    vals.append(Fraction(v) if isinstance(v, str) else Fraction(v))
                except (ValueError, ZeroDivisionError, TypeError) as exc:
                    raise SpecError(
                        f"bad rational constant {v!r}: {exc}",
                        path + _pointer((a, b, c)),
                    ) from None
            rows.append(vals)
        out.append(rows)
    return out


class GeometrySpec:
    """Parsed GeometrySpec document.

    Parsing is syntax and shape only; mathematical validation (axioms,
    integrability, nondegeneracy) happens when objects are built.
    """

    def __init__(self, doc: dict):
        errors = schema_errors(doc)
        if errors:
            path, message = errors[0]
            raise SpecError(message, path)
        self.name = doc.get("name")
        self.seed = doc.get("seed", 0)
        self.run = tuple(doc.get("run", ()))

        cdoc = doc["chart"]
        coords = tuple(cdoc["coords"])
        try:
            box = [(Fraction(lo), Fraction(hi)) for lo, hi in cdoc["box"]]
            bare = Chart(coords, box)
        except (ValueError, ZeroDivisionError) as exc:
            raise SpecError(str(exc), "/chart") from None
        guards = tuple(
            _scalar_expr(gtext, bare, f"/chart/guards/{i}")
            for i, gtext in enumerate(cdoc.get("guards", ()))
        )
        try:
            self.chart = Chart(coords, box, guards=guards)
        except ValueError as exc:
            raise SpecError(str(exc), "/chart/guards") from None
        n = self.chart.dim

        self.lie_algebra_table = None
        if "lie_algebra" in doc:
            self.lie_algebra_table = _fraction_cube(
                doc["lie_algebra"]["structure"], "/lie_algebra/structure"
            )

        self.action_fields = None
        if "action_fields" in doc:
            if self.lie_algebra_table is None:
                raise SpecError(
                    "action_fields requires a lie_algebra", "/action_fields"
                )
            r = len(self.lie_algebra_table)
            self.action_fields = _expr_array(
                doc["action_fields"], self.chart, "/action_fields", shape=(r, n)
            )
        elif self.lie_algebra_table is not None:
            raise SpecError(
                "lie_algebra without action_fields has nothing to act through",
                "/lie_algebra",
            )

        self.algebroid_tables = None
        if "algebroid" in doc:
            r = doc["algebroid"]["rank"]
            self.algebroid_tables = (
                r,
                _expr_array(
                    doc["algebroid"]["anchor"], self.chart, "/algebroid/anchor", (n, r)
                ),
                _expr_array(
                    doc["algebroid"]["structure"],
                    self.chart,
                    "/algebroid/structure",
                    (r, r, r),
                ),
            )

        self.poisson = None
        if "poisson" in doc:
            self.poisson = _expr_array(doc["poisson"], self.chart, "/poisson", (n, n))

        self.metric = None
        if "metric" in doc:
            self.metric = _expr_array(doc["metric"], self.chart, "/metric", (n, n))

        self.h_frame = None
        if "h_frame" in doc:
            if self.metric is None:
                raise SpecError("h_frame requires a metric", "/h_frame")
            self.h_frame = [
                _expr_array(mat, self.chart, f"/h_frame/{p}", (n, n))
                for p, mat in enumerate(doc["h_frame"])
            ]

        self.foliation_frame = None
        if "foliation_frame" in doc:
            arr = _expr_array(doc["foliation_frame"], self.chart, "/foliation_frame")
            if arr.shape[1] != n:
                raise SpecError(
                    f"each frame field needs {n} components", "/foliation_frame"
                )
            self.foliation_frame = arr

        self.parallelism_tables = None
        if "parallelism" in doc:
            model = _fraction_cube(
                doc["parallelism"]["structure"], "/parallelism/structure"
            )
            if len(model) != n:
                raise SpecError(
                    f"model algebra dimension {len(model)} != chart dimension {n}",
                    "/parallelism/structure",
                )
            omega = _expr_array(
                doc["parallelism"]["omega"], self.chart, "/parallelism/omega", (n, n)
            )
            self.parallelism_tables = (omega, model)

        self.connections = {}
        for cname, cdef in doc.get("connections", {}).items():
            gamma = np.array(cdef["gamma"], dtype=object)
            if gamma.ndim != 3 or gamma.shape[0] != n or gamma.shape[1] != gamma.shape[2]:
                raise SpecError(
                    f"gamma must have shape ({n}, rank, rank)",
                    f"/connections/{cname}/gamma",
                )
            self.connections[cname] = (
                cdef["target"],
                _expr_array(cdef["gamma"], self.chart, f"/connections/{cname}/gamma"),
            )

        if not any(
            x is not None
            for x in (
                self.action_fields,
                self.algebroid_tables,
                self.poisson,
                self.metric,
                self.foliation_frame,
                self.parallelism_tables,
            )
        ):
            raise SpecError("no geometric object declared", "")

    # -- serialization ----------------------------------------------------

    def serialize(self) -> dict:
        def txt(e):
            return to_text(canon(e))

        def table(arr):
            if arr.ndim == 1:
                return [txt(x) for x in arr]
            return [table(arr[i]) for i in range(arr.shape[0])]

        doc = {
            "spec_version": 1,
            "chart": {
                "coords": list(self.chart.coords),
                "box": [[str(lo), str(hi)] for lo, hi in self.chart.box],
            },
        }
        if self.chart.guards:
            doc["chart"]["guards"] = [txt(g) for g in self.chart.guards]
        if self.name is not None:
            doc["name"] = self.name
        if self.lie_algebra_table is not None:
            doc["lie_algebra"] = {
                "structure": [
                    [[str(c) for c in row] for row in plane]
                    for plane in self.lie_algebra_table
                ]
            }
        if self.action_fields is not None:
            doc["action_fields"] = table(self.action_fields)
        if self.algebroid_tables is not None:
            r, rho, structure = self.algebroid_tables
            doc["algebroid"] = {
                "rank": r,
                "anchor": table(rho),
                "structure": table(structure),
            }
        if self.poisson is not None:
            doc["poisson"] = table(self.poisson)
        if self.metric is not None:
            doc["metric"] = table(self.metric)
        if self.h_frame is not None:
            doc["h_frame"] = [table(m) for m in self.h_frame]
        if self.foliation_frame is not None:
            doc["foliation_frame"] = table(self.foliation_frame)
        if self.parallelism_tables is not None:
            omega, model = self.parallelism_tables
            doc["parallelism"] = {
                "omega": table(omega),
                "structure": [
                    [[str(c) for c in row] for row in plane] for plane in model
                ],
            }
        if self.connections:
            doc["connections"] = {
                cname: {"target": target, "gamma": table(gamma)}
                for cname, (target, gamma) in sorted(self.connections.items())
            }
        if self.run:
            doc["run"] = list(self.run)
        if self.seed:
            doc["seed"] = self.seed
        return doc

    def __eq__(self, other):
        return isinstance(other, GeometrySpec) and self.serialize() == other.serialize()

    def __repr__(self):
        return f"<spec {self.name or 'unnamed'} dim={self.chart.dim}>"


def load_spec(path) -> GeometrySpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"not valid JSON: {exc}") from None
    return GeometrySpec(doc)


# ---------------------------------------------------------------------------
# Building objects
# ---------------------------------------------------------------------------


class BuildFailure(Exception):
    """Object tables parse but fail their mathematical validation."""

    def __init__(self, check_name: str, message: str):
        super().__init__(message)
        self.check_name = check_name
        self.message = message


class Workspace:
    """Objects built from a spec, constructed lazily and cached."""

    def __init__(self, spec: GeometrySpec, policy: ZeroPolicy):
        self.spec = spec
        self.policy = policy
        self._cache = {}

    def _build(self, key, fn):
        if key not in self._cache:
            self._cache[key] = fn()
        return self._cache[key]

    # -- leaf objects -----------------------------------------------------

    def lie_algebra(self) -> LieAlgebra:
        def make():
            table = self.spec.lie_algebra_table
            try:
                return LieAlgebra(len(table), table)
            except ValueError as exc:
                raise BuildFailure("lie_algebra", str(exc)) from None

        return self._build("lie_algebra", make)

    def action_algebroid(self) -> Algebroid:
        def make():
            fields = [
                Section(self.spec.chart, list(row), "tm")
                for row in self.spec.action_fields
            ]
            try:
                return build_action_algebroid(self.lie_algebra(), fields, self.policy)
            except ValueError as exc:
                raise BuildFailure("action_algebroid", str(exc)) from None

        return self._build("action_algebroid", make)

    def direct_algebroid(self) -> Algebroid:
        def make():
            r, rho, structure = self.spec.algebroid_tables
            try:
                return Algebroid(self.spec.chart, r, rho, structure)
            except ValueError as exc:
                raise BuildFailure("algebroid", str(exc)) from None

        return self._build("direct_algebroid", make)

    def poisson_tensor(self) -> TensorField:
        def make():
            try:
                return TensorField(
                    self.spec.chart,
                    ((UP, TM), (UP, TM)),
                    self.spec.poisson,
                    antisymmetric=((0, 1),),
                    policy=self.policy,
                )
            except ValueError as exc:
                raise BuildFailure("poisson", str(exc)) from None

        return self._build("poisson_tensor", make)

    def poisson_algebroid(self) -> Algebroid:
        def make():
            try:
                return build_poisson_algebroid(self.poisson_tensor(), self.policy)
            except ValueError as exc:
                raise BuildFailure("poisson_algebroid", str(exc)) from None

        return self._build("poisson_algebroid", make)

    def metric_tensor(self) -> TensorField:
        def make():
            return TensorField(
                self.spec.chart, ((LOW, TM), (LOW, TM)), self.spec.metric
            )

        return self._build("metric_tensor", make)

    def riemann_report(self):
        def make():
            h = None
            if self.spec.h_frame is not None:
                h = [m for m in self.spec.h_frame]
            try:
                return riemann_pipeline(self.metric_tensor(), h_frame=h, policy=self.policy)
            except ValueError as exc:
                raise BuildFailure("metric", str(exc)) from None

        return self._build("riemann_report", make)

    def foliation_algebroid(self) -> Algebroid:
        def make():
            fields = [
                Section(self.spec.chart, list(row), "tm")
                for row in self.spec.foliation_frame
            ]
            try:
                return build_foliation_algebroid(fields, self.policy)
            except ValueError as exc:
                raise BuildFailure("foliation", str(exc)) from None

        return self._build("foliation_algebroid", make)

    def parallelism(self) -> Parallelism:
        def make():
            omega, model = self.spec.parallelism_tables
            try:
                algebra = LieAlgebra(len(model), model)
            except ValueError as exc:
                raise BuildFailure("model_algebra", str(exc)) from None
            try:
                return Parallelism(self.spec.chart, algebra, omega)
            except ValueError as exc:
                raise BuildFailure("parallelism", str(exc)) from None

        return self._build("parallelism", make)

    # -- connection lookup ------------------------------------------------

    def named_connection(self, target: str, rank: int) -> Optional[TMConnection]:
        """The unique declared connection with the given target, if any."""
        matches = [
            (cname, gamma)
            for cname, (ctarget, gamma) in sorted(self.spec.connections.items())
            if ctarget == target
        ]
        if not matches:
            return None
        if len(matches) > 1:
            raise SpecError(
                f"ambiguous: {len(matches)} connections target {target!r}",
                "/connections",
            )
        cname, gamma = matches[0]
        if gamma.shape != (self.spec.chart.dim, rank, rank):
            raise SpecError(
                f"gamma shape {gamma.shape} does not fit rank {rank}",
                f"/connections/{cname}/gamma",
            )
        kind = "tm" if target == "tm" and rank == self.spec.chart.dim else "g"
        return TMConnection(self.spec.chart, gamma, target=kind)

    # -- canonical pipeline pair ------------------------------------------

    def kind(self) -> str:
        s = self.spec
        for kind, present in (
            ("metric", s.metric is not None),
            ("poisson", s.poisson is not None),
            ("parallelism", s.parallelism_tables is not None),
            ("algebroid", s.algebroid_tables is not None),
            ("action", s.action_fields is not None),
            ("foliation", s.foliation_frame is not None),
        ):
            if present:
                return kind
        raise SpecError("no geometric object declared")

    def pair(self) -> Tuple[Algebroid, TMConnection]:
        """The algebroid and compatible-candidate connection for the file."""
        kind = self.kind()
        n = self.spec.chart.dim
        if kind == "metric":
            rep = self.riemann_report()
            return rep.algebroid, rep.cartan_connection
        if kind == "poisson":
            g = self.poisson_algebroid()
            base = self.named_connection("tm", n) or TMConnection.flat(
                self.spec.chart, n, target="tm"
            )
            return g, cotangent_connection(base)
        if kind == "parallelism":
            g = tangent_algebroid(self.spec.chart)
            D = self.parallelism().connection()
            return g, TMConnection(self.spec.chart, D.gamma, target="g")
        if kind == "algebroid":
            g = self.direct_algebroid()
        elif kind == "action":
            g = self.action_algebroid()
        else:
            g = self.foliation_algebroid()
        conn = self.named_connection("algebroid", g.rank) or TMConnection.flat(
            self.spec.chart, g.rank, target="g"
        )
        return g, conn

    def tm_connection(self) -> TMConnection:
        """A tangent-bundle connection for transport: the metric's own,
        the coframe's, or a declared tm-target table."""
        n = self.spec.chart.dim
        if self.spec.metric is not None:
            return christoffel(self.metric_tensor())
        if self.spec.parallelism_tables is not None:
            return self.parallelism().connection()
        named = self.named_connection("tm", n)
        if named is not None:
            return named
        raise SpecError("no tangent connection available for transport")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def _check_dict(name, status, path="symbolic", **extra) -> dict:
    out = {"name": name, "status": status, "path": path}
    out.update({k: v for k, v in extra.items() if v is not None})
    return out


def _axiom_dicts(report) -> List[dict]:
    out = []
    for c in report.checks:
        d = _check_dict(
            c.name,
            "pass" if c.ok else "fail",
            c.path,
            detail=c.detail,
            value=c.value,
        )
        if c.witness is not None:
            d["witness"] = [float(x) for x in c.witness]
        out.append(d)
    return out


def _metric_checks(ws: Workspace) -> List[dict]:
    sigma = ws.metric_tensor()
    chart, policy = ws.spec.chart, ws.policy
    n = chart.dim
    checks = []
    sym = "pass"
    witness = None
    for i in range(n):
        for j in range(i + 1, n):
            v = is_zero(sigma[i, j] - sigma[j, i], chart, policy)
            if not v.zero:
                sym, witness = "fail", v.witness
    d = _check_dict("metric_symmetric", sym, "probabilistic")
    if witness is not None:
        d["witness"] = [float(x) for x in witness]
    checks.append(d)
    try:
        from .cartan import _det_expr
        from .symcore import evaluate

        det = _det_expr([[sigma[i, j] for j in range(n)] for i in range(n)])
        points = list(chart.sample_points(policy.samples, policy.seed))
        points.append(np.array(chart.midpoint()))
        bad = None
        for p in points:
            if abs(evaluate(det, chart.env(p))) <= 1e-9:
                bad = p
                break
        if bad is None:
            checks.append(_check_dict("metric_nondegenerate", "pass", "probabilistic"))
        else:
            checks.append(
                _check_dict(
                    "metric_nondegenerate",
                    "fail",
                    "probabilistic",
                    witness=[float(x) for x in bad],
                )
            )
    except ZeroDivisionError:
        checks.append(_check_dict("metric_nondegenerate", "undecidable", "undecidable"))
    return checks


def cmd_validate(ws: Workspace) -> List[dict]:
    checks = []
    spec = ws.spec

    def attempt(label, fn, on_pass):
        try:
            obj = fn()
        except BuildFailure as exc:
            checks.append(
                _check_dict(exc.check_name, "fail", "probabilistic", detail=exc.message)
            )
            return None
        checks.extend(on_pass(obj))
        return obj

    if spec.lie_algebra_table is not None:
        attempt(
            "lie_algebra",
            ws.lie_algebra,
            lambda alg: [_check_dict("lie_algebra_axioms", "pass", "symbolic")],
        )
    for label, present, builder in (
        ("action_algebroid", spec.action_fields is not None, ws.action_algebroid),
        ("algebroid", spec.algebroid_tables is not None, ws.direct_algebroid),
        ("poisson_algebroid", spec.poisson is not None, ws.poisson_algebroid),
        ("foliation_algebroid", spec.foliation_frame is not None, ws.foliation_algebroid),
    ):
        if present:
            attempt(
                label,
                builder,
                lambda g: _axiom_dicts(validate_algebroid(g, ws.policy)),
            )
    if spec.metric is not None:
        checks.extend(_metric_checks(ws))
    if spec.parallelism_tables is not None:
        attempt(
            "parallelism",
            ws.parallelism,
            lambda P: [_check_dict("coframe_invertible", "pass", "probabilistic")],
        )
    return checks


def cmd_check(ws: Workspace, pipeline: str) -> List[dict]:
    if pipeline == "geometry":
        kind = ws.kind()
        pipeline = {
            "metric": "riemann",
            "poisson": "poisson",
            "parallelism": "parallelism",
        }.get(kind, "theorem-a")
    if pipeline == "riemann":
        if ws.spec.metric is None:
            raise SpecError("file declares no metric table", "/metric")
        return [ws.riemann_report().verdict.as_dict()]
    if pipeline == "poisson":
        if ws.spec.poisson is None:
            raise SpecError("file declares no poisson table", "/poisson")
        base = ws.named_connection("tm", ws.spec.chart.dim) or TMConnection.flat(
            ws.spec.chart, ws.spec.chart.dim, target="tm"
        )
        try:
            report = poisson_report(ws.poisson_tensor(), base, ws.policy)
        except ValueError as exc:
            raise BuildFailure("poisson_algebroid", str(exc)) from None
        return [report.verdict.as_dict()]
    if pipeline == "parallelism":
        if ws.spec.parallelism_tables is None:
            raise SpecError("file declares no parallelism table", "/parallelism")
        return [parallelism_report(ws.parallelism(), ws.policy).verdict.as_dict()]
    g, conn = ws.pair()
    if pipeline == "cartan":
        return [check_cartan(g, conn, ws.policy).as_dict()]
    if pipeline == "theorem-a":
        return [theorem_a_verdict(g, conn, ws.policy).as_dict()]
    if pipeline == "transitive":
        try:
            return [transitive_symmetry_check(g, conn, ws.policy).as_dict()]
        except ValueError as exc:
            raise SpecError(str(exc)) from None
    raise SpecError(f"unknown pipeline {pipeline!r}")


def cmd_identities(ws: Workspace) -> List[dict]:
    g, conn = ws.pair()
    return [identity_battery(g, conn, ws.policy).as_dict()]


def cmd_holonomy(ws: Workspace, point, plane, side, steps) -> List[dict]:
    conn = ws.tm_connection()
    try:
        res = holonomy_check(conn, point, tuple(plane), side, steps=steps)
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    bound = max(ws.policy.abs_tol, abs(side) ** 3)
    ok = res.defect_norm <= bound
    d = _check_dict(
        "holonomy_consistency",
        "pass" if ok else "fail",
        "probabilistic",
        detail=f"plane ({plane[0]},{plane[1]}), side {side}, {steps} steps",
    )
    d["value"] = res.defect_norm
    d["third_order_bound"] = bound
    d["log_holonomy"] = res.log_holonomy.tolist()
    d["curvature_term"] = res.curvature_term.tolist()
    if not ok:
        d["witness"] = [float(x) for x in point]
    return [d]


# ---------------------------------------------------------------------------
# Report assembly / entry point
# ---------------------------------------------------------------------------


def _overall(checks: List[dict]) -> str:
    # only top-level verdicts decide; children explain them
    passing = {"pass", "locally_symmetric"}
    top = [d["status"] for d in checks]
    if all(s in passing for s in top):
        return "pass"
    if any(s == "undecidable" for s in top):
        if any(s not in passing and s != "undecidable" for s in top):
            return "fail"
        return "undecidable"
    return "fail"


def _emit(report: dict, pretty: bool) -> str:
    if pretty:
        return json.dumps(report, indent=2, sort_keys=True)
    return json.dumps(report, sort_keys=True, separators=(",", ":"))


def run(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cartankit",
        description="verify geometric structures declared in GeometrySpec files",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="GeometrySpec JSON document")
    common.add_argument("--seed", type=int, default=None, help="sampling seed (default: file seed or 0)")
    common.add_argument("--samples", type=int, default=32)
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--json", action="store_true", help="compact JSON output (default)")
    common.add_argument("--pretty", action="store_true", help="indented JSON output")
    common.add_argument("--timings", action="store_true", help="include elapsed_ms fields")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common])
    p_check = sub.add_parser("check", parents=[common])
    p_check.add_argument("--pipeline", choices=PIPELINES, default="geometry")
    p_hol = sub.add_parser("holonomy", parents=[common])
    p_hol.add_argument("--point", type=float, nargs="+", required=True)
    p_hol.add_argument("--plane", type=int, nargs=2, required=True)
    p_hol.add_argument("--side", type=float, required=True)
    p_hol.add_argument("--steps", type=int, default=64)
    sub.add_parser("identities", parents=[common])

    args = parser.parse_args(argv)

    report = {
        "tool": f"cartankit {__version__}",
        "command": args.command,
        "input": args.file,
    }
    started = time.perf_counter()
    try:
        spec = load_spec(args.file)
        seed = args.seed if args.seed is not None else spec.seed
        policy = ZeroPolicy(
            samples=args.samples, abs_tol=args.tol, rel_tol=args.tol, seed=seed
        )
        ws = Workspace(spec, policy)
        report.update(seed=seed, samples=args.samples, tol=args.tol)
        if spec.name:
            report["name"] = spec.name
        if args.command == "validate":
            checks = cmd_validate(ws)
        elif args.command == "check":
            report["pipeline"] = args.pipeline
            checks = cmd_check(ws, args.pipeline)
        elif args.command == "identities":
            checks = cmd_identities(ws)
        else:
            checks = cmd_holonomy(ws, args.point, args.plane, args.side, args.steps)
        report["checks"] = checks
        report["status"] = _overall(checks)
    except (SpecError, BuildFailure) as exc:
        if isinstance(exc, BuildFailure):
            # a build rejected mathematically while a pipeline needed it:
            # that is a verdict failure, not an input error
            report["checks"] = [
                _check_dict(exc.check_name, "fail", "probabilistic", detail=exc.message)
            ]
            report["status"] = "fail"
            if args.timings:
                report["elapsed_ms"] = (time.perf_counter() - started) * 1000.0
            print(_emit(report, args.pretty))
            return 1
        report["status"] = "error"
        err = {"message": exc.message}
        if exc.path:
            err["path"] = exc.path
        report["errors"] = [err]
        print(_emit(report, args.pretty))
        return 2
    if args.timings:
        report["elapsed_ms"] = (time.perf_counter() - started) * 1000.0
    print(_emit(report, args.pretty))
    return 0 if report["status"] == "pass" else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
