"""Regenerate the packaged scenario JSON files."""

import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "foliation_lab" / "scenarios"

J = [[0, -1], [1, 0]]
L = {
    "L0": [[0, 0, 0], [0, 0, -1], [0, 1, 0]],
    "L1": [[0, 0, 1], [0, 0, 0], [-1, 0, 0]],
    "L2": [[0, -1, 0], [1, 0, 0], [0, 0, 0]],
}
R2 = math.sqrt(2.0)
SO2 = {"n": 2, "algebra": ["J"], "invariants": ["v0*v0 + v1*v1"]}
SO3 = {"n": 3, "algebra": ["L0", "L1", "L2"], "invariants": ["v0*v0 + v1*v1 + v2*v2"]}


def circle(name, c, description, **extra):
    fields = [
        {"name": "horizontal", "base_part": ["1"], "fiber_part": [f"{c!r}*v1", f"-{c!r}*v0"], "srf_tangent": True},
        {"name": "rotation", "base_part": ["0"], "fiber_part": ["-v1", "v0"], "srf_tangent": True, "expect_matrix": "J"},
        {"name": "swirl", "base_part": ["0"], "fiber_part": ["-(1 + v0*v0 + v1*v1)*v1", "(1 + v0*v0 + v1*v1)*v0"],
         "srf_tangent": True, "expect_matrix": "J"},
        {"name": "rotation_plus_quadratic", "base_part": ["0"], "fiber_part": ["-v1 + v0*v0 + v1*v1", "v0"],
         "srf_tangent": False, "expect_killing": True, "expect_matrix": "J"},
        {"name": "hyperbolic", "base_part": ["0"], "fiber_part": ["v0", "-v1"], "srf_tangent": False,
         "expect_matrix": "D"},
    ]
    data = {
        "schema_version": 1,
        "name": name,
        "description": description,
        "matrices": {"J": J, "D": [[1, 0], [0, -1]]},
        "base": {"kind": "circle"},
        "connection": {"scope": "leafwise", "terms": [[{"f": c, "matrix": "J"}]] if c else []},
        "fiber": SO2,
        "fields": fields,
        "expected": {"closed_form": {"c": c, "matrix": "J"}},
        "run": {"seed": 20240601, "step": 1e-3, "eps": 0.1, "seed_point": {"b": [0.0], "v": [1.0, 0.0]}},
    }
    for k, v in extra.items():
        data[k].update(v)
    return data


def scenarios():
    out = {}
    out["flat_circle"] = circle("flat_circle", 0.0, "Trivial R^2 bundle over a circle, flat connection, K0 = SO(2).",
                                expected={"holonomy_order": 1, "holonomy_dim": 0})
    out["circle_quarter"] = circle("circle_quarter", 0.25,
                                   "Constant connection 0.25 J over a circle: holonomy is rotation by -pi/2.",
                                   expected={"holonomy_order": 4, "holonomy_dim": 1})
    out["circle_third"] = circle("circle_third", 1.0 / 3.0,
                                 "Constant connection J/3 over a circle: holonomy of order 3.",
                                 expected={"holonomy_order": 3})
    out["wrong_quotient"] = circle("wrong_quotient", 0.0,
                                   "Flat circle with the quotient multiplication solving for the inverse group element.",
                                   run={"mutations": ["wrong_quotient_solve"]})
    out["torus_commuting"] = {
        "schema_version": 1,
        "name": "torus_commuting",
        "description": "Commuting constant connection on a 2-torus: abelian holonomy.",
        "matrices": {"J": J},
        "base": {"kind": "torus2"},
        "connection": {"terms": [[{"f": 0.25, "matrix": "J"}], [{"f": 0.125, "matrix": "J"}]]},
        "fiber": SO2,
        "fields": [
            {"name": "horizontal_x0", "base_part": ["1", "0"], "fiber_part": ["0.25*v1", "-0.25*v0"], "srf_tangent": True},
            {"name": "horizontal_x1", "base_part": ["0", "1"], "fiber_part": ["0.125*v1", "-0.125*v0"],
             "srf_tangent": True},
            {"name": "rotation", "base_part": ["0", "0"], "fiber_part": ["-v1", "v0"], "srf_tangent": True,
             "expect_matrix": "J"},
        ],
        "expected": {"holonomy_dim": 1},
        "run": {"seed": 7, "eps": 0.4, "seed_point": {"b": [0.0, 0.0], "v": [1.0, 0.0]}},
    }
    out["torus_so3"] = {
        "schema_version": 1,
        "name": "torus_so3",
        "description": "Non-commuting connection on a 2-torus with full so(3) holonomy.",
        "matrices": L,
        "base": {"kind": "torus2"},
        "connection": {"terms": [[{"f": 0.4, "matrix": "L0"}], [{"f": "0.35*cos(x0)", "matrix": "L1"}]]},
        "fiber": SO3,
        "expected": {"holonomy_dim": 3},
        "run": {"seed": 11, "eps": 0.7, "seed_point": {"b": [0.0, 0.0], "v": [1.0, 0.0, 0.0]},
                "budget": {"pairs": 300, "triples": 100}},
    }
    so3_circle_terms = [[{"f": 0.3, "matrix": "L0"}, {"f": "0.5*sin(x0)", "matrix": "L1"}]]
    out["so3_circle"] = {
        "schema_version": 1,
        "name": "so3_circle",
        "description": "Non-commuting connection over a circle with K0 = SO(3).",
        "matrices": L,
        "base": {"kind": "circle"},
        "connection": {"terms": so3_circle_terms},
        "fiber": SO3,
        "run": {"seed": 5, "eps": 0.5, "seed_point": {"b": [0.0], "v": [0.0, 0.6, 0.8]},
                "budget": {"pairs": 300, "triples": 100}},
    }
    out["mutated_multiplication"] = {
        **out["so3_circle"],
        "name": "mutated_multiplication",
        "description": "so3_circle with the path-class multiplication skipping the conjugation by transport.",
        "run": {**out["so3_circle"]["run"], "mutations": ["drop_conjugation"]},
    }
    out["closure_torus"] = {
        "schema_version": 1,
        "name": "closure_torus",
        "description": "Irrational line in the maximal torus of SO(4) with closure T^2, over a short flat leaf.",
        "matrices": {
            "line": [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -R2], [0, 0, R2, 0]],
            "T1": [[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]],
            "T2": [[0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]],
        },
        "base": {"kind": "product_box", "leaf_dim": 1, "slice_dim": 0, "box": [[0.0, 0.1]]},
        "fiber": {"n": 4, "algebra": ["line"], "closure": ["T1", "T2"],
                  "invariants": ["v0*v0 + v1*v1", "v2*v2 + v3*v3"]},
        "expected": {"closure_density": True},
        "run": {"seed": 3, "eps": 0.1, "seed_point": {"b": [0.0], "v": [1 / R2, 0.0, 1 / R2, 0.0]},
                "objects": [[0.0], [0.05], [0.1]], "budget": {"pairs": 500, "triples": 200}},
    }
    c, s = math.cos(0.7), math.sin(0.7)
    out["mapping_torus_charts"] = {
        "schema_version": 1,
        "name": "mapping_torus_charts",
        "description": "Mapping torus of a slice rotation with a full-scope connection and three overlapping charts.",
        "matrices": {**L, "M": [[c, -s], [s, c]]},
        "base": {"kind": "mapping_torus", "leaf_dim": 1, "slice_dim": 2,
                 "box": [[0.0, 2 * math.pi], [-1.0, 1.0], [-1.0, 1.0]], "monodromy": "M"},
        "connection": {"scope": "full", "terms": [
            [{"f": 0.3, "matrix": "L0"}, {"f": "0.2*(x1*x1 + x2*x2)", "matrix": "L1"}],
            [{"f": "-x2", "matrix": "L2"}],
            [{"f": "x1", "matrix": "L2"}],
        ]},
        "fiber": SO3,
        "charts": [
            {"alpha": [[t, 0.0, 0.0], [t + 2 * math.pi, 0.0, 0.0]], "plaque_halfwidth": 1.0, "slice_halfwidth": 0.4}
            for t in (0.0, 0.3, -0.2 + 2 * math.pi)
        ],
        "run": {"seed": 13, "eps": 0.7, "seed_point": {"b": [0.0, 0.0, 0.0], "v": [1.0, 0.0, 0.0]},
                "budget": {"pairs": 300, "triples": 100, "chart_samples": 200}},
    }
    return out


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, data in scenarios().items():
        (OUT / f"{name}.json").write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
        print(name)


if __name__ == "__main__":
    main()
