"""Verification suites: checks grouped by topic, run concurrently, merged by check id."""

from __future__ import annotations

import os
import platform
import time
import traceback
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy

from . import __version__, liecore
from .base import BasePath, coordinate_loop
from .bundle import (
    EXACT,
    FrameElement,
    default_small_loops,
    holonomy_algebra_dim,
    holonomy_sample,
    parallel_transport,
    right_action_free_check,
    transport_convergence_order,
)
from .charts import Atlas, ChartDatum, base_holonomy_map, coordinate_defect, dependency_defects, random_chart_point
from .charts import simple_neighborhood, smoothness_ratio
from .errors import ConfigError, FoliationLabError, NotInDomainError
from .foliation import (
    factor_flow,
    flow_isometries,
    homothety,
    killing_check,
    lifted_leaf_dim_check,
    linearize_field,
)
from .groupoid import (
    BundleOfGroups,
    PairGroupoid,
    PathClassGroupoid,
    TransformationGroupoid,
    antipodal_quotient,
    axiom_suite,
    frame_gauge_quotient,
    leafwise_moves,
    orbit,
    pathclass_transformation_groupoid,
    representation_check,
)
from .leaves import Budget, base_lattice, directed_hausdorff, group_step, hausdorff, leaf_sample, leaf_sample_via_flows
from .leaves import total_point

SUITES = ("axioms", "transport", "leaves", "linearize", "charts")
THREADS_ENV = "FOLIATION_LAB_THREADS"

AXIOM_ANCHOR = "s(gh) = s(h); t(gh) = t(g); (fg)h = f(gh); 1_x h = h; g 1_x = g; g g^-1 = 1_t(g)"


@dataclass
class CheckResult:
    id: str
    anchor: str
    defect: float
    tol: float
    status: str
    details: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.status == "pass"

    def to_json(self):
        out = {
            "id": self.id,
            "anchor": self.anchor,
            "defect": _num(self.defect),
            "tol": _num(self.tol),
            "status": self.status,
            "passed": self.passed,
            "details": _jsonable(self.details),
        }
        if not self.passed:
            out["inputs"] = _jsonable(self.inputs)
        return out


def _num(x):
    if x is None:
        return None
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


@dataclass(frozen=True)
class Check:
    id: str
    suite: str
    anchor: str
    fn: object
    applies: object = None


REGISTRY: list[Check] = []


def check(suite, check_id, anchor, applies=None):
    def deco(fn):
        REGISTRY.append(Check(check_id, suite, anchor, fn, applies))
        return fn

    return deco


def verdict(defect, tol, details=None, inputs=None, lower=False):
    """Pass when ``defect <= tol`` (or ``>= tol`` with ``lower``)."""
    ok = defect >= tol if lower else defect <= tol
    return float(defect), float(tol), ("pass" if ok else "fail"), details or {}, inputs or {}


def thread_count():
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def check_rng(seed, check_id):
    return np.random.default_rng([int(seed), zlib.crc32(check_id.encode("utf-8"))])


class Context:
    """Per-run scratch space: scenario, leaf samples for plotting."""

    def __init__(self, scenario):
        self.sc = scenario
        self.samples = {}


# ----------------------------------------------------------------- axioms


def _pairs(sc):
    return int(sc.budget.get("pairs", 1000)), int(sc.budget.get("triples", 300))


def _axiom_result(report, tol, mutated=False):
    details = {"defects": report["defects"], "pairs": report["pairs"], "triples": report["triples"]}
    return verdict(report["max_defect"], tol, details)


@check("axioms", "axioms.pair", AXIOM_ANCHOR)
def _pair(ctx, rng):
    pairs, triples = _pairs(ctx.sc)
    return _axiom_result(axiom_suite(PairGroupoid(range(5)), rng, pairs, triples), 0.0)


@check("axioms", "axioms.bundle_of_groups", AXIOM_ANCHOR)
def _bundle(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    G = BundleOfGroups.from_group_bundle(sc.gb, [sc.base.wrap(p) for p in sc.objects])
    return _axiom_result(axiom_suite(G, rng, pairs, triples), sc.tolerances["arrow"])


@check("axioms", "axioms.transformation_bundle_of_groups", "(g, he)(h, e) = (gh, e); 1_e = (1_pi(e), e); (g, e)^-1 = (g^-1, ge)")
def _transformation(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    G = BundleOfGroups.from_group_bundle(sc.gb, [sc.base.wrap(p) for p in sc.objects])
    T = TransformationGroupoid(G, lambda g, v: g[1] @ v, lambda x, r: r.normal(size=sc.n))
    return _axiom_result(axiom_suite(T, rng, pairs, triples), sc.tolerances["arrow"])


@check("axioms", "axioms.quotient_frames", "[g][h] = [g(ha)] with s(g) = t(h)a")
def _quotient_frames(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    mutation = "wrong_quotient_solve" if "wrong_quotient_solve" in sc.mutations else None
    Q = frame_gauge_quotient(len(sc.objects), sc.n, mutation)
    res = _axiom_result(axiom_suite(Q, rng, pairs, triples), sc.tolerances["arrow"])
    res[3]["mutation"] = mutation
    return res


@check("axioms", "axioms.quotient_antipodal", "[g][h] = [g(ha)] with s(g) = t(h)a")
def _quotient_antipodal(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    Q = antipodal_quotient()
    report = axiom_suite(Q, rng, pairs, triples)
    table = antipodal_table_defect(Q)
    details = {"defects": report["defects"], **table}
    return verdict(max(report["max_defect"], table["table_mismatches"]), 0.0, details)


def antipodal_table_defect(Q) -> dict:
    """Brute-force the quotient of the pair groupoid of {1, -1, 2, -2} by x -> -x.

    Every upstairs composite of representatives must land in the class the
    quotient multiplication returns.
    """
    U = Q.U
    arrows = [(y, x) for y in U.objects for x in U.objects]
    classes = {Q.normal_form(g) for g in arrows}
    objects = {Q.project(x) for x in U.objects}
    mismatches = 0
    products = 0
    for g in arrows:
        for h in arrows:
            if Q.source(g) != Q.target(h):
                continue
            expected = Q.compose(g, h)
            for a in (1, -1):
                for b in (1, -1):
                    g2, h2 = Q.act_arrow(g, a), Q.act_arrow(h, b)
                    if U.composable(g2, h2):
                        products += 1
                        if Q.normal_form(U.compose(g2, h2)) != expected:
                            mismatches += 1
    isotropy = sum(1 for c in classes if Q.source(c) == Q.target(c) == 1)
    return {"objects": len(objects), "arrows": len(classes), "isotropy_at_1": isotropy,
            "table_products": products, "table_mismatches": mismatches}


def _pathclass(sc):
    mutation = "drop_conjugation" if "drop_conjugation" in sc.mutations else None
    return PathClassGroupoid(sc.conn, sc.gb, sc.objects, step=1e-2, mutation=mutation)


@check("axioms", "axioms.path_class",
       "[alpha, k_alpha][beta, k_beta] = [alpha*beta, C_beta(k_alpha) k_beta]; [alpha, k]^-1 = [alpha^-1, C_alpha^-1(k^-1)]")
def _path_class(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    G = _pathclass(sc)
    res = _axiom_result(axiom_suite(G, rng, pairs, triples), sc.tolerances["arrow"])
    res[3]["mutation"] = G.mutation
    return res


@check("axioms", "axioms.path_class_action", "(g, he)(h, e) = (gh, e) over the path-class groupoid")
def _path_class_action(ctx, rng):
    sc = ctx.sc
    pairs, triples = _pairs(sc)
    T = pathclass_transformation_groupoid(_pathclass(sc))
    return _axiom_result(axiom_suite(T, rng, pairs, triples), sc.tolerances["arrow"])


@check("axioms", "axioms.representation", "g(he) = (gh)e; 1_pi(e) e = e")
def _representation(ctx, rng):
    sc = ctx.sc
    G = _pathclass(sc)
    rep = representation_check(G, G.act, lambda x, r: r.normal(size=sc.n), rng, trials=200)
    return verdict(rep["max_defect"], sc.tolerances["representation"], {"defects": rep["defects"]})


@check("axioms", "axioms.holonomy_in_group", "H_p subset K_p")
def _holonomy_in_group(ctx, rng):
    sc = ctx.sc
    worst = 0.0
    count = 0
    for p in sc.objects:
        t = sc.gb.transport_from_b0(sc.base.wrap(p))
        for loop in sc.leaf_loops(p):
            for path in (loop, loop * loop):
                g = parallel_transport(path, sc.conn, 1e-2)
                worst = max(worst, sc.fib.invariant_defect(t.T @ g @ t))
                count += 1
    return verdict(worst, sc.tolerances["invariant"], {"loops": count})


# --------------------------------------------------------------- transport


@check("transport", "transport.isometry", "P_alpha is a linear isometry E_alpha(0) -> E_alpha(1)")
def _isometry(ctx, rng):
    sc = ctx.sc
    paths = list(sc.leaf_loops()) + [sc.order_path()]
    for p in sc.objects[1:]:
        paths.append(BasePath.line(sc.base, sc.b0, p))
    norm_defect = 0.0
    ortho = 0.0
    for path in paths:
        P = parallel_transport(path, sc.conn, sc.step)
        ortho = max(ortho, liecore.orthogonality_defect(P))
        for _ in range(16):
            v = rng.normal(size=sc.n)
            norm_defect = max(norm_defect, abs(np.linalg.norm(P @ v) - np.linalg.norm(v)))
    d = max(norm_defect, ortho)
    return verdict(d, sc.tolerances["isometry"], {"norm_defect": norm_defect, "orthogonality": ortho,
                                                  "paths": len(paths), "step": sc.step})


@check("transport", "transport.closed_form", "P_loop = exp(-2 pi c J) for constant A = c J",
       applies=lambda sc: "closed_form" in sc.expected)
def _closed_form(ctx, rng):
    sc = ctx.sc
    cf = sc.expected["closed_form"]
    loop = coordinate_loop(sc.base, sc.b0, 0)
    P = parallel_transport(loop, sc.conn, sc.step)
    exact = liecore.exp_skew(-2 * np.pi * cf["c"] * sc.matrices[cf["matrix"]])
    return verdict(liecore.max_abs(P - exact), sc.tolerances["closed_form"], {"c": cf["c"]})


@check("transport", "transport.rk4_order", "observed order of the transport integrator")
def _order(ctx, rng):
    sc = ctx.sc
    order = transport_convergence_order(sc.order_path(), sc.conn, step=0.1)
    if order == EXACT:
        return verdict(0.0, 0.5, {"order": "exact"})
    return verdict(abs(order - 4.0), 0.5, {"order": order})


@check("transport", "transport.functoriality", "P_(alpha*beta) = P_alpha P_beta")
def _functoriality(ctx, rng):
    sc = ctx.sc
    worst = 0.0
    objs = sc.objects
    for i in range(len(objs) - 1):
        a = BasePath.line(sc.base, objs[i], objs[i + 1])
        b = BasePath.line(sc.base, sc.b0, objs[i])
        ab = a * b
        worst = max(worst, liecore.max_abs(parallel_transport(ab, sc.conn, sc.step)
                                           - parallel_transport(a, sc.conn, sc.step) @ parallel_transport(b, sc.conn, sc.step)))
    return verdict(worst, sc.tolerances["orthogonality"] * 100, {"pairs": len(objs) - 1})


@check("transport", "holonomy.element_order", "g^m = I, g != I for the generating loop",
       applies=lambda sc: "holonomy_order" in sc.expected)
def _holonomy_order(ctx, rng):
    sc = ctx.sc
    m = sc.expected["holonomy_order"]
    g = holonomy_sample(sc.b0, [coordinate_loop(sc.base, sc.b0, 0)], sc.conn, sc.step)[0]
    power = liecore.max_abs(np.linalg.matrix_power(g, m) - np.eye(sc.n))
    order = liecore.element_order(g, max_order=4 * m, tol=sc.tolerances["holonomy_order"])
    distance_from_identity = liecore.max_abs(g - np.eye(sc.n))
    d = power if order == m else max(power, 1.0)
    return verdict(d, sc.tolerances["holonomy_order"], {"order": order, "g_minus_identity": distance_from_identity})


@check("transport", "holonomy.algebra_dim", "dim h_b from holonomy samples and small loops",
       applies=lambda sc: "holonomy_dim" in sc.expected)
def _holonomy_dim(ctx, rng):
    sc = ctx.sc
    samples = holonomy_sample(sc.b0, sc.leaf_loops(), sc.conn, sc.step)
    small = default_small_loops(sc.base, sc.b0)
    dim = holonomy_algebra_dim(samples, small, sc.conn, sc.step, tol=1e-6)
    return verdict(abs(dim - sc.expected["holonomy_dim"]), 0.0, {"dim": dim, "expected": sc.expected["holonomy_dim"]})


@check("transport", "frames.free_action", "O(n) acts freely on the right of O(E)")
def _free(ctx, rng):
    sc = ctx.sc
    frames = [FrameElement(sc.base.wrap(p), liecore.random_orthogonal(sc.n, rng)) for p in sc.objects]
    rep = right_action_free_check(frames, rng, trials=100)
    return verdict(0.0 if rep["free"] else 1.0, 0.0, rep)


def _lifted(sc, rng, closure):
    gb = sc.gb_hat if closure else sc.gb
    count = int(sc.budget.get("frames", 8))
    points = [sc.base.wrap(sc.objects[i % len(sc.objects)]) for i in range(count)]
    frames = [liecore.random_orthogonal(sc.n, rng) for _ in range(count)]
    rep = lifted_leaf_dim_check(sc.conn, gb.generators_at, points, frames, sc.base.leaf_dim)
    bad = sum(1 for r in rep["ranks"] if r != rep["expected"])
    return verdict(bad, 0.0, rep)


@check("transport", "frames.lifted_leaf_dim", "dim lifted leaf = dim F_B leaf + dim K0")
def _lifted_k0(ctx, rng):
    return _lifted(ctx.sc, rng, False)


@check("transport", "frames.lifted_leaf_dim_closure", "dim lifted leaf = dim F_B leaf + dim closure(K0)",
       applies=lambda sc: sc.fib.closure.algebra.rank > sc.fib.algebra.rank)
def _lifted_closure(ctx, rng):
    return _lifted(ctx.sc, rng, True)


# ------------------------------------------------------------------ leaves


def _budget(sc, **kw):
    b = sc.budget
    return Budget(eps=kw.get("eps", sc.eps), max_points=int(b.get("max_points", 200_000)),
                  spread_base=kw.get("spread_base", True), group_steps=kw.get("group_steps"),
                  step=1e-2, seed=sc.seed)


def _inconclusive(details, tol):
    return float("nan"), tol, "inconclusive", details, {}


@check("leaves", "leaves.invariance", "every point of L_xi = H K0(xi) has the invariant values of xi")
def _leaf_invariance(ctx, rng):
    sc = ctx.sc
    s = leaf_sample("F_ell", sc.seed_point, sc.conn, sc.gb, _budget(sc))
    ctx.samples["F_ell"] = s
    if s.partial:
        return _inconclusive({"points": len(s), "partial": True}, sc.tolerances["invariant"])
    from .leaves import invariant_spread

    d = invariant_spread(s, sc.fib, sc.base.dim)
    return verdict(d, sc.tolerances["invariant"], {"points": len(s)})


@check("leaves", "leaves.nesting", "F_tau subset F_ell subset F")
def _nesting(ctx, rng):
    sc = ctx.sc
    from .leaves import invariant_spread

    budget = _budget(sc)
    samples = {k: leaf_sample(k, sc.seed_point, sc.conn, sc.gb, budget) for k in ("F_tau", "F_ell", "F")}
    ctx.samples["F_tau"] = samples["F_tau"]
    ctx.samples["F"] = samples["F"]
    if any(s.partial for s in samples.values()):
        return _inconclusive({k: len(s) for k, s in samples.items()}, 2 * sc.eps)
    periods = samples["F"].periods
    inner = directed_hausdorff(samples["F_tau"].points, samples["F_ell"].points, periods)
    outer = directed_hausdorff(samples["F_ell"].points, samples["F"].points, periods)
    level = max(invariant_spread(s, sc.fib, sc.base.dim) for s in samples.values())
    details = {"tau_in_ell": inner, "ell_in_F": outer, "invariant_spread": level,
               "points": {k: len(s) for k, s in samples.items()}}
    ok_level = level <= sc.tolerances["invariant"]
    d = max(inner, outer)
    res = verdict(d, 2 * sc.eps, details)
    if not ok_level:
        return res[0], res[1], "fail", details, {}
    return res


def _generating_fields(sc):
    out = []
    for f in sc.fields:
        if not f.srf_tangent:
            continue
        lin = linearize_field(f, base_point=sc.b0)
        if killing_check(lin, rng=np.random.default_rng(0)) <= sc.tolerances["killing"]:
            out.append(lin)
    return out


@check("leaves", "leaves.flows_equal_linearized", "orbits of linearized flows = leaves of F_ell",
       applies=lambda sc: any(f.srf_tangent for f in sc.fields))
def _flows(ctx, rng):
    sc = ctx.sc
    lins = _generating_fields(sc)
    a = leaf_sample("F_ell", sc.seed_point, sc.conn, sc.gb, _budget(sc))
    b = leaf_sample_via_flows(sc.seed_point, lins, sc.conn, _budget(sc))
    if a.partial or b.partial:
        return _inconclusive({"points": [len(a), len(b)]}, 2 * sc.eps)
    d = hausdorff(a.points, b.points, a.periods)
    return verdict(d, 2 * sc.eps, {"points": [len(a), len(b)], "fields": len(lins)})


@check("leaves", "leaves.orbit_equals_leaf", "orbits of G(nabla, K) x E are the leaves of F_ell")
def _orbit(ctx, rng):
    sc = ctx.sc
    budget = _budget(sc)
    G = PathClassGroupoid(sc.conn, sc.gb, [sc.b0], step=1e-2)
    _, steps = base_lattice(sc.base, sc.b0, sc.eps, True)
    gens = sc.gb.base_generators
    deltas = [group_step(g, np.linalg.norm(sc.v0), sc.eps) for g in gens]
    deltas = [d for d in deltas if d is not None]
    delta = min(deltas) if deltas else 0.0
    T = pathclass_transformation_groupoid(G)
    moves = leafwise_moves(G, steps, delta, lambda b: sc.gb.generators_at(sc.base.wrap(b)) if delta else [])
    pts, partial = orbit(T, sc.seed_point, moves, lambda e: total_point(sc.base, e[0], e[1]), sc.eps / 4,
                         budget=budget.max_points)
    leaf = leaf_sample("F_ell", sc.seed_point, sc.conn, sc.gb, budget)
    if partial or leaf.partial:
        return _inconclusive({"points": [len(pts), len(leaf)]}, 2 * sc.eps)
    d = hausdorff(pts, leaf.points, leaf.periods)
    return verdict(d, 2 * sc.eps, {"points": [len(pts), len(leaf)]})


@check("leaves", "leaves.closure_density", "closure of K0 xi is swept out by K0 xi",
       applies=lambda sc: bool(sc.expected.get("closure_density")))
def _closure(ctx, rng):
    sc = ctx.sc
    hat = leaf_sample("F_hat", sc.seed_point, sc.conn, sc.gb, _budget(sc, spread_base=False))
    ctx.samples["F_hat_fiber"] = hat
    dists = []
    for N in (100, 1000, 10000):
        s = leaf_sample("F_ell", sc.seed_point, sc.conn, sc.gb, _budget(sc, spread_base=False, group_steps=N))
        if N == 10000:
            ctx.samples["F_ell_fiber"] = s
        dists.append(hausdorff(s.points, hat.points, hat.periods))
    monotone = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    details = {"N": [100, 1000, 10000], "hausdorff": dists, "monotone": monotone, "hat_points": len(hat)}
    if hat.partial:
        return _inconclusive(details, sc.tolerances["closure"])
    res = verdict(dists[-1], sc.tolerances["closure"], details)
    if not monotone:
        return res[0], res[1], "fail", details, {}
    return res


# --------------------------------------------------------------- linearize


def _field_checks(sc):
    return [f for f in sc.fields]


@check("linearize", "linearize.killing", "0 = <X^l_v, v> for fields tangent to the foliation")
def _killing(ctx, rng):
    sc = ctx.sc
    rows = {}
    bad = 0
    worst = 0.0
    for f in sc.fields:
        lin = linearize_field(f, base_point=sc.b0)
        d = killing_check(lin, samples=2000, rng=rng)
        if f.expect_killing:
            ok = d <= sc.tolerances["killing"]
            worst = max(worst, d)
        else:
            ok = d >= sc.tolerances["killing_reject"]
        rows[f.name] = {"defect": d, "tangent": f.srf_tangent, "expect_killing": f.expect_killing, "as_declared": ok}
        bad += 0 if ok else 1
    if not sc.fields:
        return verdict(0.0, 0.0, {"fields": 0})
    return verdict(bad, 0.0, {"fields": rows, "max_expected_killing_defect": worst})


@check("linearize", "linearize.linear_part", "X^l = lim_{lambda -> 0} (h_lambda^-1)_* X",
       applies=lambda sc: any(f.expect_matrix is not None for f in sc.fields))
def _linear_part(ctx, rng):
    sc = ctx.sc
    worst = 0.0
    rows = {}
    for f in sc.fields:
        if f.expect_matrix is None:
            continue
        lin = linearize_field(f, base_point=sc.b0)
        d = liecore.max_abs(lin.fiber_matrix(sc.b0) - f.expect_matrix)
        rows[f.name] = d
        worst = max(worst, d)
    return verdict(worst, sc.tolerances["linear_part"], {"fields": rows})


@check("linearize", "linearize.idempotence", "linearizing a linear field returns it")
def _idempotence(ctx, rng):
    sc = ctx.sc
    worst = 0.0
    for f in sc.fields:
        lin = linearize_field(f, base_point=sc.b0)
        again = linearize_field(lin, n=sc.n, base_point=sc.b0)
        worst = max(worst, liecore.max_abs(again.fiber_matrix(sc.b0) - lin.fiber_matrix(sc.b0)))
    return verdict(worst, sc.tolerances["idempotence"], {"fields": len(sc.fields)})


@check("linearize", "linearize.homothety", "h_lambda o h_mu = h_(lambda mu); h_1 = id")
def _homothety(ctx, rng):
    sc = ctx.sc
    worst = 0.0
    for _ in range(50):
        p = (sc.b0, rng.normal(size=sc.n))
        lam, mu = rng.uniform(0.1, 3.0, size=2)
        a = homothety(lam, homothety(mu, p))[1]
        b = homothety(lam * mu, p)[1]
        worst = max(worst, liecore.max_abs(a - b), liecore.max_abs(homothety(1.0, p)[1] - p[1]))
    return verdict(worst, 1e-12)


@check("linearize", "linearize.factor_flow", "k_t = P_(b_t -> b_0) o phi_t is a curve in K0 from the identity",
       applies=lambda sc: any(f.srf_tangent for f in sc.fields))
def _factor(ctx, rng):
    sc = ctx.sc
    worst_o = worst_i = worst_0 = 0.0
    for lin in _generating_fields(sc):
        flow = flow_isometries(lin, sc.b0, np.linspace(0.0, 1.0, 6), step=1e-2)
        rows = factor_flow(flow, sc.conn, sc.fib, step=sc.step, tol=sc.tolerances["invariant"])
        worst_0 = max(worst_0, liecore.max_abs(rows[0]["k"] - np.eye(sc.n)))
        worst_o = max(worst_o, max(r["orthogonality"] for r in rows))
        worst_i = max(worst_i, max(r["invariant"] for r in rows))
    details = {"k0_minus_identity": worst_0, "orthogonality": worst_o, "invariant": worst_i}
    ok = worst_0 == 0.0 and worst_o <= sc.tolerances["orthogonality"] and worst_i <= sc.tolerances["invariant"]
    return (max(worst_o, worst_i), sc.tolerances["invariant"], "pass" if ok else "fail", details, {})


# ------------------------------------------------------------------ charts


def _atlas(sc):
    return Atlas(sc.conn, sc.gb, step=2e-3)


def _has_charts(n):
    return lambda sc: len(sc.charts) >= n


@check("charts", "charts.round_trip", "Phi o Phi^-1 = id; Phi^-1 o Phi = id", applies=_has_charts(1))
def _round_trip(ctx, rng):
    sc = ctx.sc
    at = _atlas(sc)
    D = sc.charts[0]
    samples = int(sc.budget.get("chart_samples", 200))
    fwd = back = 0.0
    worst_input = None
    for _ in range(samples):
        point = random_chart_point(D, sc.gb, rng)
        arrow = at.inverse(D, *point)
        d = coordinate_defect(at.forward(D, arrow), point)
        again = at.inverse(D, *at.forward(D, arrow))
        e = liecore.max_abs(again.effective - arrow.effective)
        if max(d, e) > max(fwd, back):
            worst_input = point
        fwd, back = max(fwd, d), max(back, e)
    inputs = {"k": worst_input[0], "x0": worst_input[1][0], "y0": worst_input[1][1], "x1": worst_input[2]} if worst_input else {}
    return verdict(max(fwd, back), sc.tolerances["round_trip"], {"forward_inverse": fwd, "inverse_forward": back,
                                                                "samples": samples}, inputs)


def _overlap_samples(sc, at, D, rng, count, others):
    out = []
    tries = 0
    while len(out) < count and tries < 20 * count:
        tries += 1
        point = random_chart_point(D, sc.gb, rng, shrink=0.4)
        try:
            for Dt in others:
                at.transition(D, Dt, *point)
        except NotInDomainError:
            continue
        out.append(point)
    return out


@check("charts", "charts.transition_oracle", "F(x0, y0, x1, k) agrees with Phi_~ o Phi^-1", applies=_has_charts(2))
def _transition(ctx, rng):
    sc = ctx.sc
    at = _atlas(sc)
    D, Dt = sc.charts[0], sc.charts[1]
    pts = _overlap_samples(sc, at, D, rng, int(sc.budget.get("chart_samples", 200)) // 4, [Dt])
    worst = 0.0
    for p in pts:
        worst = max(worst, coordinate_defect(at.transition(D, Dt, *p), at.transition_oracle(D, Dt, *p)))
    if not pts:
        return _inconclusive({"samples": 0}, sc.tolerances["transition"])
    return verdict(worst, sc.tolerances["transition"], {"samples": len(pts)})


@check("charts", "charts.cocycle", "transition(D -> D~) then (D~ -> D^) = (D -> D^)", applies=_has_charts(3))
def _cocycle(ctx, rng):
    sc = ctx.sc
    at = _atlas(sc)
    D, Dt, Dh = sc.charts[:3]
    pts = _overlap_samples(sc, at, D, rng, int(sc.budget.get("chart_samples", 200)) // 4, [Dt, Dh])
    worst = 0.0
    for p in pts:
        try:
            two = at.transition(Dt, Dh, *at.transition(D, Dt, *p))
        except NotInDomainError:
            continue
        worst = max(worst, coordinate_defect(two, at.transition(D, Dh, *p)))
    if not pts:
        return _inconclusive({"samples": 0}, sc.tolerances["cocycle"])
    return verdict(worst, sc.tolerances["cocycle"], {"samples": len(pts)})


@check("charts", "charts.dependency_pattern", "x~0 = x~0(x0, y0), y~0 = y~0(y0), x~1 = x~1(x1, y0)",
       applies=_has_charts(2))
def _dependency(ctx, rng):
    sc = ctx.sc
    at = _atlas(sc)
    D, Dt = sc.charts[0], sc.charts[1]
    worst = {}
    for p in _overlap_samples(sc, at, D, rng, 5, [Dt]):
        for k, v in dependency_defects(at, D, Dt, p[1], p[2]).items():
            worst[k] = max(worst.get(k, 0.0), v)
    return verdict(max(worst.values(), default=0.0), sc.tolerances["dependency"], worst)


@check("charts", "charts.smoothness", "transition maps are C^1 (derivative estimates converge)", applies=_has_charts(2))
def _smooth(ctx, rng):
    sc = ctx.sc
    at = _atlas(sc)
    D, Dt = sc.charts[0], sc.charts[1]
    worst = {"max_derivative": 0.0, "refinement_gap": 0.0}
    for p in _overlap_samples(sc, at, D, rng, 3, [Dt]):
        r = smoothness_ratio(at, D, Dt, *p)
        worst = {k: max(worst[k], r[k]) for k in worst}
    return verdict(worst["refinement_gap"], 1e-4, worst)


def reversed_chart(D: ChartDatum) -> ChartDatum:
    """Chart datum along ``alpha^-1``, starting in the end chart of ``D``."""
    base = D.base
    m = base.deck_between(D.alpha.end, np.asarray(D.U1.marked))
    rev = D.alpha.reversed().translated(m)
    U1 = simple_neighborhood(base, base.wrap(rev.end), D.U0.box[0][1], D.U0.box[-1][1])
    return ChartDatum(rev, D.U1, U1)


@check("charts", "charts.base_holonomy", "phi_(alpha^-1) o phi_alpha = id on the slice",
       applies=lambda sc: len(sc.charts) >= 1 and sc.base.slice_dim > 0)
def _base_holonomy(ctx, rng):
    sc = ctx.sc
    base = sc.base
    D = sc.charts[0]
    back = reversed_chart(D)
    turns = base.winding(D.alpha.start, D.alpha.end)[0] if base.kind == "mapping_torus" else 0
    mono = np.eye(base.slice_dim)
    if base.kind == "mapping_torus":
        mono = np.linalg.matrix_power(base.monodromy if turns >= 0 else base.monodromy.T, abs(turns))
    worst = declared = 0.0
    for _ in range(50):
        y = rng.uniform(-0.5, 0.5, size=base.slice_dim) * D.U0.box[-1][1]
        there = base_holonomy_map(D, y)
        worst = max(worst, liecore.max_abs(base_holonomy_map(back, there) - y))
        declared = max(declared, liecore.max_abs(there - mono @ y))
    return verdict(max(worst, declared), 1e-9, {"round_trip": worst, "declared_monodromy": declared})


# ------------------------------------------------------------------ runner


def selected_checks(scenario, suite):
    if suite != "all" and suite not in SUITES:
        raise ConfigError(f"unknown suite {suite!r}")
    out = []
    for c in REGISTRY:
        if suite != "all" and c.suite != suite:
            continue
        if c.applies is not None and not c.applies(scenario):
            continue
        out.append(c)
    return sorted(out, key=lambda c: c.id)


def run_check(c: Check, ctx, seed):
    rng = check_rng(seed, c.id)
    t0 = time.perf_counter()
    try:
        defect, tol, status, details, inputs = c.fn(ctx, rng)
        result = CheckResult(c.id, c.anchor, defect, tol, status, details, inputs)
    except FoliationLabError as exc:
        result = CheckResult(c.id, c.anchor, float("inf"), 0.0, "error",
                             {"error": type(exc).__name__, "message": str(exc)})
    except Exception as exc:  # noqa: BLE001 - one broken check must not abort the suite
        result = CheckResult(c.id, c.anchor, float("inf"), 0.0, "error",
                             {"error": type(exc).__name__, "message": str(exc),
                              "where": traceback.extract_tb(exc.__traceback__)[-1].name})
    if not result.passed:
        # enough to replay the check in isolation
        result.inputs = {**result.inputs, "check_id": c.id, "seed": int(seed),
                         "rng_entropy": [int(seed), zlib.crc32(c.id.encode("utf-8"))]}
    return result, time.perf_counter() - t0


@dataclass
class RunReport:
    scenario: str
    suite: str
    seed: int
    config_hash: str
    checks: list
    timings: dict
    samples: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self):
        return 0 if self.passed else 1

    def to_json(self):
        return {
            "schema_version": 1,
            "scenario": self.scenario,
            "suite": self.suite,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "environment": {
                "foliation_lab": __version__,
                "python": platform.python_version(),
                "numpy": np.__version__,
                "scipy": scipy.__version__,
            },
            "summary": {
                "checks": len(self.checks),
                "passed": sum(c.passed for c in self.checks),
                "failed": sum(c.status == "fail" for c in self.checks),
                "inconclusive": sum(c.status == "inconclusive" for c in self.checks),
                "errors": sum(c.status == "error" for c in self.checks),
            },
            "checks": [c.to_json() for c in self.checks],
        }


def run_suite(config, suite="all", seed=None, threads=None) -> RunReport:
    """Run the checks of ``suite`` for a loaded config; results are ordered by check id."""
    sc = config.scenario
    seed = sc.seed if seed is None else int(seed)
    threads = thread_count() if threads is None else threads
    checks = selected_checks(sc, suite)
    ctx = Context(sc)
    if threads <= 1:
        outcomes = [run_check(c, ctx, seed) for c in checks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(lambda c: run_check(c, ctx, seed), checks))
    results = [r for r, _ in outcomes]
    timings = {r.id: t for r, t in outcomes}
    return RunReport(sc.name, suite, seed, config.hash, results, timings, dict(sorted(ctx.samples.items())))
