"""Scenario configuration: JSON schema, loading, validation and model construction."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from . import liecore
from .base import BasePath, BaseSpace
from .bundle import ConnectionField, EuclideanBundle
from .charts import ChartDatum, simple_neighborhood
from .errors import ConfigError, FoliationLabError
from .expr import Expr, base_vars, fiber_vars
from .foliation import FiberFoliation, GroupBundle, GroupClosureSpec, TotalVectorField

SCHEMA_VERSION = 1
MUTATIONS = ("drop_conjugation", "wrong_quotient_solve")

_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 1}
_matrix = {"type": "array", "items": _vector, "minItems": 1}
_names = {"type": "array", "items": {"type": "string"}}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "name", "base", "fiber"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "matrices": {"type": "object", "additionalProperties": _matrix},
        "base": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["circle", "torus2", "product_box", "mapping_torus"]},
                "leaf_dim": {"type": "integer", "minimum": 1, "maximum": 4},
                "slice_dim": {"type": "integer", "minimum": 0, "maximum": 4},
                "box": {"type": "array", "items": {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}},
                "monodromy": {"type": "string"},
            },
        },
        "connection": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "scope": {"enum": ["leafwise", "full"]},
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["f", "matrix"],
                            "additionalProperties": False,
                            "properties": {"f": {"type": ["string", "number"]}, "matrix": {"type": "string"}},
                        },
                    },
                },
            },
        },
        "fiber": {
            "type": "object",
            "required": ["n", "invariants"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1, "maximum": liecore.MAX_DIM},
                "algebra": _names,
                "finite_part": _names,
                "invariants": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "closure": _names,
            },
        },
        "fields": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "base_part", "fiber_part", "srf_tangent"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "base_part": {"type": "array", "items": {"type": ["string", "number"]}},
                    "fiber_part": {"type": "array", "items": {"type": ["string", "number"]}},
                    "srf_tangent": {"type": "boolean"},
                    "expect_killing": {"type": "boolean"},
                    "expect_matrix": {"type": "string"},
                },
            },
        },
        "charts": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["alpha"],
                "additionalProperties": False,
                "properties": {
                    "alpha": {"type": "array", "items": _vector, "minItems": 2},
                    "plaque_halfwidth": {"type": "number", "exclusiveMinimum": 0},
                    "slice_halfwidth": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "expected": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "holonomy_dim": {"type": "integer", "minimum": 0},
                "holonomy_order": {"type": "integer", "minimum": 1},
                "closed_form": {
                    "type": "object",
                    "required": ["c", "matrix"],
                    "additionalProperties": False,
                    "properties": {"c": _number, "matrix": {"type": "string"}},
                },
                "closure_density": {"type": "boolean"},
            },
        },
        "run": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "seed": {"type": "integer", "minimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "seed_point": {
                    "type": "object",
                    "required": ["b", "v"],
                    "additionalProperties": False,
                    "properties": {"b": _vector, "v": _vector},
                },
                "objects": {"type": "array", "items": _vector},
                "budget": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "max_points": {"type": "integer", "minimum": 0},
                        "group_steps": {"type": "integer", "minimum": 1},
                        "pairs": {"type": "integer", "minimum": 1},
                        "triples": {"type": "integer", "minimum": 1},
                        "chart_samples": {"type": "integer", "minimum": 1},
                        "frames": {"type": "integer", "minimum": 1},
                    },
                },
                "tolerances": {"type": "object", "additionalProperties": _number},
                "mutations": {"type": "array", "items": {"enum": list(MUTATIONS)}},
                "plots": {"type": "boolean"},
            },
        },
    },
}

DEFAULT_TOLERANCES = {
    "orthogonality": 1e-8,
    "isometry": 1e-8,
    "closed_form": 1e-6,
    "arrow": 1e-9,
    "representation": 1e-7,
    "invariant": 1e-6,
    "holonomy_order": 1e-6,
    "killing": 1e-6,
    "killing_reject": 0.9,
    "linear_part": 1e-6,
    "idempotence": 1e-12,
    "round_trip": 1e-8,
    "transition": 1e-7,
    "cocycle": 1e-7,
    "dependency": 1e-7,
    "closure": 0.05,
    "mutation": 1e-3,
}


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path) if path else ""


def validate_schema(data):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _pointer(err.absolute_path))


def config_hash(data) -> str:
    canonical = json.dumps(data, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class ScenarioConfig:
    data: dict
    source: str = ""
    hash: str = ""
    scenario: "Scenario" = field(default=None, repr=False)

    @property
    def name(self):
        return self.data["name"]


def builtin_names():
    return sorted(p.name[:-5] for p in resources.files("foliation_lab.scenarios").iterdir() if p.name.endswith(".json"))


def read_config_text(path) -> tuple[str, str]:
    """Text of a config file; ``builtin:NAME`` reads a packaged scenario."""
    path = str(path)
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        res = resources.files("foliation_lab.scenarios") / f"{name}.json"
        if not res.is_file():
            raise ConfigError(f"no built-in scenario {name!r}; available: {', '.join(builtin_names())}")
        return res.read_text(encoding="utf-8"), path
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        return p.read_text(encoding="utf-8"), str(p)
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config file is not UTF-8: {exc}") from None


def load_config(path) -> ScenarioConfig:
    """Parse, schema-validate and semantically validate a scenario file."""
    text, source = read_config_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(data, source)


def config_from_dict(data, source="<dict>") -> ScenarioConfig:
    validate_schema(data)
    scenario = Scenario(data)
    return ScenarioConfig(data, source, config_hash(data), scenario)


class Scenario:
    """Model objects built from a validated config."""

    def __init__(self, data):
        self.data = data
        self.name = data["name"]
        self.matrices = self._matrices(data.get("matrices", {}))
        self.base = self._base(data["base"])
        fiber = data["fiber"]
        self.n = fiber["n"]
        self.bundle = EuclideanBundle(self.base, self.n)
        self.conn = self._connection(data.get("connection", {}))
        self.fib = self._fiber(fiber)
        run = data.get("run", {})
        self.run = run
        self.seed = int(run.get("seed", 0))
        self.step = float(run.get("step", 1e-3))
        self.eps = float(run.get("eps", 0.1))
        self.tolerances = {**DEFAULT_TOLERANCES, **run.get("tolerances", {})}
        self.mutations = tuple(run.get("mutations", ()))
        self.budget = run.get("budget", {})
        self.plots = bool(run.get("plots", True))
        sp = run.get("seed_point", {})
        b0 = sp.get("b", [0.0] * self.base.dim)
        v0 = sp.get("v", [1.0] + [0.0] * (self.n - 1))
        if len(b0) != self.base.dim:
            raise ConfigError(f"seed base point needs {self.base.dim} coordinates", "/run/seed_point/b")
        if len(v0) != self.n:
            raise ConfigError(f"seed fiber vector needs {self.n} coordinates", "/run/seed_point/v")
        self.b0 = np.array(b0, dtype=float)
        self.v0 = np.array(v0, dtype=float)
        self.gb = GroupBundle(self.fib, self.conn, self.b0, step=1e-2)
        self.gb_hat = GroupBundle(self.fib, self.conn, self.b0, step=1e-2, closure=True)
        self.objects = self._objects(run.get("objects"))
        self.fields = self._fields(data.get("fields", []))
        self.charts = self._charts(data.get("charts", []))
        self.expected = data.get("expected", {})
        cf = self.expected.get("closed_form")
        if cf is not None:
            self._lookup(cf["matrix"], "/expected/closed_form/matrix", skew=True)

    def _matrices(self, raw):
        out = {}
        for name, rows in raw.items():
            m = np.array(rows, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ConfigError(f"matrix {name!r} is not square", f"/matrices/{name}")
            out[name] = m
        return out

    def _lookup(self, name, pointer, skew=False, orthogonal=False):
        if name not in self.matrices:
            raise ConfigError(f"unknown matrix name {name!r}", pointer)
        m = self.matrices[name]
        if m.shape != (self.n, self.n):
            raise ConfigError(f"matrix {name!r} has shape {m.shape}, fiber dimension is {self.n}", pointer)
        if skew and liecore.skew_defect(m) > liecore.SKEW_TOL:
            raise ConfigError(f"matrix {name!r} is not skew-symmetric (defect {liecore.skew_defect(m):.2e})", pointer)
        if orthogonal and liecore.orthogonality_defect(m) > liecore.ORTHO_TOL:
            raise ConfigError(f"matrix {name!r} is not orthogonal", pointer)
        return m

    def _base(self, spec):
        kind = spec["kind"]
        defaults = {"circle": (1, 0), "torus2": (2, 0), "mapping_torus": (1, 1), "product_box": (1, 1)}[kind]
        leaf_dim = spec.get("leaf_dim", defaults[0])
        slice_dim = spec.get("slice_dim", defaults[1])
        mono = None
        if "monodromy" in spec:
            if spec["monodromy"] not in self.matrices:
                raise ConfigError(f"unknown matrix name {spec['monodromy']!r}", "/base/monodromy")
            mono = self.matrices[spec["monodromy"]]
        try:
            return BaseSpace(kind, leaf_dim, slice_dim, tuple(tuple(iv) for iv in spec.get("box", ())), mono)
        except ConfigError as exc:
            raise ConfigError(exc.message, "/base") from None

    def _connection(self, spec):
        terms = []
        names = base_vars(self.base.dim)
        raw = spec.get("terms", [])
        if len(raw) > self.base.dim:
            raise ConfigError("more coefficient blocks than base coordinates", "/connection/terms")
        for i, block in enumerate(raw):
            row = []
            for j, term in enumerate(block):
                ptr = f"/connection/terms/{i}/{j}"
                row.append((Expr(term["f"], names, ptr + "/f"), self._lookup(term["matrix"], ptr + "/matrix", skew=True)))
            terms.append(row)
        conn = ConnectionField(self.bundle, terms, spec.get("scope", "leafwise"))
        self._check_periodic(conn)
        return conn

    def _check_periodic(self, conn):
        """Coefficients must be 2 pi periodic in every periodic coordinate."""
        rng = np.random.default_rng(11)
        lo = np.array([lo for lo, _ in self.base.box])
        hi = np.array([hi for _, hi in self.base.box])
        for _ in range(8):
            p = rng.uniform(lo, hi)
            for axis in self.base.periodic_axes:
                q = p.copy()
                q[axis] += 2 * np.pi
                if self.base.kind == "mapping_torus":
                    continue
                for i in range(self.base.dim):
                    if liecore.max_abs(conn.component(i, p) - conn.component(i, q)) > 1e-9:
                        raise ConfigError(f"coefficient of coordinate {i} is not periodic in x{axis}",
                                          f"/connection/terms/{i}")

    def _fiber(self, spec):
        gens = [self._lookup(g, f"/fiber/algebra/{i}", skew=True) for i, g in enumerate(spec.get("algebra", []))]
        algebra = liecore.LieSubalgebra(self.n, tuple(gens))
        closure = None
        if "closure" in spec:
            cgens = [self._lookup(g, f"/fiber/closure/{i}", skew=True) for i, g in enumerate(spec["closure"])]
            closure = GroupClosureSpec(liecore.LieSubalgebra(self.n, tuple(cgens)))
        finite = [self._lookup(g, f"/fiber/finite_part/{i}", orthogonal=True) for i, g in enumerate(spec.get("finite_part", []))]
        names = fiber_vars(self.n)
        for i, src in enumerate(spec["invariants"]):
            Expr(src, names, f"/fiber/invariants/{i}")
        try:
            return FiberFoliation.from_expressions(algebra, spec["invariants"], finite_part=finite, closure=closure)
        except ConfigError as exc:
            ptr = "/fiber/closure" if "closure" in str(exc) else "/fiber/algebra"
            raise ConfigError(exc.message, ptr) from None

    def _objects(self, raw):
        if raw is None:
            out = []
            for t in (0.0, 1.0, 2.5, 4.0):
                p = self.b0.copy()
                p[0] += t if self.base.periodic[0] else t * 0.1
                out.append(p)
            return out
        out = []
        for i, p in enumerate(raw):
            p = np.array(p, dtype=float)
            if len(p) != self.base.dim:
                raise ConfigError("object has the wrong dimension", f"/run/objects/{i}")
            if not self.base.is_leafwise(p - self.b0):
                raise ConfigError("objects must lie on the leaf of the seed point", f"/run/objects/{i}")
            out.append(p)
        return out

    def _fields(self, raw):
        out = []
        for i, f in enumerate(raw):
            try:
                field_ = TotalVectorField(self.base.dim, self.n, f["base_part"], f["fiber_part"], f["name"])
            except ConfigError as exc:
                raise ConfigError(exc.message, f"/fields/{i}") from None
            field_.srf_tangent = f["srf_tangent"]
            field_.expect_killing = f.get("expect_killing", f["srf_tangent"])
            field_.expect_matrix = None
            if "expect_matrix" in f:
                field_.expect_matrix = self._lookup(f["expect_matrix"], f"/fields/{i}/expect_matrix")
            out.append(field_)
        return out

    def _charts(self, raw):
        out = []
        for i, c in enumerate(raw):
            ptr = f"/charts/{i}"
            try:
                alpha = BasePath(self.base, c["alpha"])
                U0 = simple_neighborhood(self.base, alpha.start, c.get("plaque_halfwidth", 1.0), c.get("slice_halfwidth", 0.4))
                U1 = simple_neighborhood(self.base, self.base.wrap(alpha.end), c.get("plaque_halfwidth", 1.0),
                                         c.get("slice_halfwidth", 0.4))
                out.append(ChartDatum(alpha, U0, U1))
            except FoliationLabError as exc:
                raise ConfigError(str(exc), ptr) from None
        return out

    @property
    def seed_point(self):
        return (self.b0.copy(), self.v0.copy())

    def leaf_loops(self, point=None):
        from .leaves import holonomy_loops

        return holonomy_loops(self.base, self.b0 if point is None else point)

    def order_path(self):
        """Leafwise non-loop path used for convergence-order measurements."""
        q = self.b0.copy()
        q[0] += 2.5 if self.base.periodic[0] else 0.5 * (self.base.box[0][1] - self.b0[0])
        return BasePath.line(self.base, self.b0, q)
