"""JSON encodings of curves, sheaves, charges, data, scenarios and traces.

Rationals travel as strings ``"p/q"`` (or plain integers on input).  Every
reader validates against a JSON schema before building objects, so malformed
input fails with :class:`SchemaError` instead of a stray ``KeyError``.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Dict, List, Mapping, Optional

import jsonschema

from .bounds_audit import Report, Scenario, scenario_from_datum
from .charge import ChargeDatum, ChargeValue
from .curve_graph import CurveGraph, Edge, MarkedPoint, Vertex
from .error_charge import FMDatum, LatticeBasis, TorsionRecord
from .reduction_engine import Move, Payload, ReductionState, TraceStep
from .sheaf_on_tree import EdgeGluing, SheafOnTree, SplittingType


class SchemaError(ValueError):
    """Input does not match its schema or violates a type invariant."""


RATIONAL = {
    "oneOf": [
        {"type": "integer"},
        {"type": "string", "pattern": r"^-?\d+(/[1-9]\d*)?$"},
    ]
}
ID = {"type": "string", "minLength": 1}
NAT = {"type": "integer", "minimum": 0}

CURVE = {
    "type": "object",
    "required": ["vertices"],
    "additionalProperties": False,
    "properties": {
        "vertices": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id"],
                "additionalProperties": False,
                "properties": {"id": ID, "genus": NAT, "label": {"type": ["string", "null"]}},
            },
        },
        "edges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "ends"],
                "additionalProperties": False,
                "properties": {"id": ID, "ends": {"type": "array", "items": ID, "minItems": 2, "maxItems": 2}},
            },
        },
        "marked_points": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["id", "vertex"],
                "additionalProperties": False,
                "properties": {"id": ID, "vertex": ID},
            },
        },
    },
}

MATRIX = {"type": "array", "items": {"type": "array", "items": RATIONAL}}

SHEAF = {
    "type": "object",
    "required": ["tree", "rank", "vertex_types"],
    "additionalProperties": False,
    "properties": {
        "tree": CURVE,
        "rank": {"type": "integer", "minimum": 1},
        "vertex_types": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "integer"}}},
        "edge_defects": {"type": "object", "additionalProperties": NAT},
        "gluing": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["points", "projections", "identification"],
                "additionalProperties": False,
                "properties": {
                    "points": {"type": "array", "items": RATIONAL, "minItems": 2, "maxItems": 2},
                    "projections": {"type": "array", "items": MATRIX, "minItems": 2, "maxItems": 2},
                    "identification": MATRIX,
                },
            },
        },
    },
}

CHARGE = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "chi": {"type": "integer"},
        "b_beta": RATIONAL,
        "jl_beta": RATIONAL,
        "h_beta": NAT,
    },
}

CHARGE_VALUE = {
    "type": "object",
    "required": ["re", "im"],
    "additionalProperties": False,
    "properties": {"re": RATIONAL, "im": RATIONAL},
}

TORSION = {
    "type": "object",
    "required": ["point", "charge"],
    "additionalProperties": False,
    "properties": {"point": ID, "charge": CHARGE},
}

DATUM = {
    "type": "object",
    "required": ["curve", "rank", "total_charge"],
    "additionalProperties": False,
    "properties": {
        "curve": CURVE,
        "rank": {"type": "integer", "minimum": 1},
        "total_charge": CHARGE,
        "core_charge": CHARGE,
        "vertex_types": SHEAF["properties"]["vertex_types"],
        "core_degrees": {"type": "object", "additionalProperties": {"type": "integer"}},
        "vertex_charges": {"type": "object", "additionalProperties": CHARGE},
        "edge_defects": {"type": "object", "additionalProperties": NAT},
        "point_torsions": {"type": "array", "items": TORSION},
        "vertical_torsions": {"type": "array", "items": TORSION},
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"re_unit": RATIONAL, "im_unit": RATIONAL},
        },
    },
}

STABILITY = {
    "type": "object",
    "required": ["total"],
    "additionalProperties": False,
    "properties": {"total": CHARGE, "subobjects": {"type": "array", "items": CHARGE}},
}

TREE_QUERY = {
    "type": "object",
    "required": ["curve"],
    "additionalProperties": False,
    "properties": {
        "curve": CURVE,
        "subcurve": {
            "type": "object",
            "required": ["vertices"],
            "additionalProperties": False,
            "properties": {"vertices": {"type": "array", "items": ID}},
        },
    },
}

SCENARIO = {
    "oneOf": [
        {
            "type": "object",
            "required": ["datum"],
            "additionalProperties": False,
            "properties": {"datum": DATUM},
        },
        {
            "type": "object",
            "required": ["rank", "total_h"],
            "additionalProperties": False,
            "properties": {
                "rank": {"type": "integer", "minimum": 1},
                "total_h": NAT,
                "vertical_h": {"type": "array", "items": {"type": "integer"}},
                "fragment": SHEAF,
                "n_a": NAT,
                "torsion_length": NAT,
                "core_defects": {"type": "array", "items": {"type": "integer"}},
                "core_node_count": NAT,
                "chi_core": {"type": "integer"},
                "chi_quotient": {"type": "integer"},
                "attach_count": NAT,
                "trees": {"type": "array", "items": CURVE},
            },
        },
    ]
}


def validate(obj: Any, schema: Mapping) -> None:
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SchemaError(f"{where}: {exc.message}") from None


def rational(x: Any) -> Fraction:
    return Fraction(x)


def rat_str(x) -> str:
    return str(Fraction(x))


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# curves and sheaves


def curve_to_json(g: CurveGraph) -> Dict:
    out: Dict[str, Any] = {
        "vertices": [{"id": v.id, "genus": v.genus, **({"label": v.label} if v.label else {})} for v in g.vertices],
        "edges": [{"id": e.id, "ends": list(e.ends)} for e in g.edges],
    }
    if g.marked_points:
        out["marked_points"] = [{"id": m.id, "vertex": m.vertex} for m in g.marked_points]
    return out


def _curve(obj: Mapping) -> CurveGraph:
    return CurveGraph(
        tuple(Vertex(v["id"], v.get("genus", 0), v.get("label")) for v in obj["vertices"]),
        tuple(Edge(e["id"], tuple(e["ends"])) for e in obj.get("edges", ())),
        tuple(MarkedPoint(m["id"], m["vertex"]) for m in obj.get("marked_points", ())),
    )


def _matrix(rows) -> tuple:
    return tuple(tuple(rational(x) for x in row) for row in rows)


def _matrix_json(rows) -> List[List[str]]:
    return [[rat_str(x) for x in row] for row in rows]


def sheaf_to_json(F: SheafOnTree) -> Dict:
    out: Dict[str, Any] = {
        "tree": curve_to_json(F.tree),
        "rank": F.rank,
        "vertex_types": {v: list(t.parts) for v, t in F.vertex_types.items()},
        "edge_defects": dict(F.edge_defects),
    }
    if F.gluing is not None:
        out["gluing"] = {
            e: {
                "points": [rat_str(p) for p in g.points],
                "projections": [_matrix_json(m) for m in g.projections],
                "identification": _matrix_json(g.identification),
            }
            for e, g in F.gluing.items()
        }
    return out


def _sheaf(obj: Mapping) -> SheafOnTree:
    gluing = None
    if "gluing" in obj:
        gluing = {
            e: EdgeGluing(
                tuple(rational(p) for p in g["points"]),
                tuple(_matrix(m) for m in g["projections"]),
                _matrix(g["identification"]),
            )
            for e, g in obj["gluing"].items()
        }
    return SheafOnTree(
        _curve(obj["tree"]),
        obj["rank"],
        {v: SplittingType(tuple(p)) for v, p in obj["vertex_types"].items()},
        dict(obj.get("edge_defects", {})),
        gluing,
    )


# ---------------------------------------------------------------------------
# charges and data


def charge_to_json(c: ChargeDatum) -> Dict:
    return {
        "chi": c.chi,
        "b_beta": rat_str(c.b_dot_beta),
        "jl_beta": rat_str(c.jl_dot_beta),
        "h_beta": c.h_dot_beta,
    }


def _charge(obj: Mapping) -> ChargeDatum:
    return ChargeDatum(
        obj.get("chi", 0),
        rational(obj.get("b_beta", 0)),
        rational(obj.get("jl_beta", 0)),
        obj.get("h_beta", 0),
    )


def value_to_json(z: ChargeValue) -> Dict:
    return {"re": rat_str(z.re), "im": rat_str(z.im)}


def _value(obj: Mapping) -> ChargeValue:
    return ChargeValue(rational(obj["re"]), rational(obj["im"]))


def _torsion_json(rec: TorsionRecord) -> Dict:
    return {"point": rec.point, "charge": charge_to_json(rec.charge)}


def _torsion(obj: Mapping) -> TorsionRecord:
    return TorsionRecord(obj["point"], _charge(obj["charge"]))


def datum_to_json(d: FMDatum) -> Dict:
    return {
        "curve": curve_to_json(d.curve),
        "rank": d.rank,
        "total_charge": charge_to_json(d.total_charge),
        "core_charge": charge_to_json(d.core_charge),
        "vertex_types": {v: list(t.parts) for v, t in d.splitting.items() if any(t.parts)},
        "core_degrees": dict(d.core_degrees),
        "vertex_charges": {v: charge_to_json(c) for v, c in d.vertex_charges.items()},
        "edge_defects": {e: x for e, x in d.edge_defects.items() if x},
        "point_torsions": [_torsion_json(r) for r in d.point_torsions],
        "vertical_torsions": [_torsion_json(r) for r in d.vertical_torsions],
        "lattice": {"re_unit": rat_str(d.lattice.re_unit), "im_unit": rat_str(d.lattice.im_unit)},
    }


def _datum(obj: Mapping) -> FMDatum:
    lat = obj.get("lattice", {})
    return FMDatum(
        curve=_curve(obj["curve"]),
        rank=obj["rank"],
        total_charge=_charge(obj["total_charge"]),
        core_charge=_charge(obj.get("core_charge", {})),
        splitting={v: SplittingType(tuple(p)) for v, p in obj.get("vertex_types", {}).items()},
        core_degrees=dict(obj.get("core_degrees", {})),
        vertex_charges={v: _charge(c) for v, c in obj.get("vertex_charges", {}).items()},
        edge_defects=dict(obj.get("edge_defects", {})),
        point_torsions=tuple(_torsion(r) for r in obj.get("point_torsions", ())),
        vertical_torsions=tuple(_torsion(r) for r in obj.get("vertical_torsions", ())),
        lattice=LatticeBasis(rational(lat.get("re_unit", 1)), rational(lat.get("im_unit", 1))),
    )


# ---------------------------------------------------------------------------
# scenarios and reports


def _scenario(obj: Mapping) -> Scenario:
    if "datum" in obj:
        return scenario_from_datum(_datum(obj["datum"]))
    return Scenario(
        rank=obj["rank"],
        total_h=obj["total_h"],
        vertical_h=tuple(obj.get("vertical_h", ())),
        fragment=_sheaf(obj["fragment"]) if "fragment" in obj else None,
        n_a=obj.get("n_a", 0),
        torsion_length=obj.get("torsion_length", 0),
        core_defects=tuple(obj.get("core_defects", ())),
        core_node_count=obj.get("core_node_count", 0),
        chi_core=obj.get("chi_core", 0),
        chi_quotient=obj.get("chi_quotient", 0),
        attach_count=obj.get("attach_count", 0),
        trees=tuple(_curve(t) for t in obj.get("trees", ())),
    )


def scenario_to_json(s: Scenario) -> Dict:
    out: Dict[str, Any] = {
        "rank": s.rank,
        "total_h": s.total_h,
        "vertical_h": list(s.vertical_h),
        "n_a": s.n_a,
        "torsion_length": s.torsion_length,
        "core_defects": list(s.core_defects),
        "core_node_count": s.core_node_count,
        "chi_core": s.chi_core,
        "chi_quotient": s.chi_quotient,
        "attach_count": s.attach_count,
        "trees": [curve_to_json(t) for t in s.trees],
    }
    if s.fragment is not None:
        out["fragment"] = sheaf_to_json(s.fragment)
    return out


def report_to_json(r: Report) -> Dict:
    return {"check": r.check, "passed": r.passed, "informational": r.informational, "detail": plain(r.detail)}


# ---------------------------------------------------------------------------
# moves and traces


def plain(x: Any) -> Any:
    """Turn certificate values into JSON-ready data."""
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return rat_str(x)
    if isinstance(x, ChargeValue):
        return value_to_json(x)
    if isinstance(x, ChargeDatum):
        return charge_to_json(x)
    if isinstance(x, Mapping):
        return {str(k): plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        items = [plain(v) for v in x]
        return sorted(items) if isinstance(x, (set, frozenset)) else items
    raise TypeError(f"cannot encode {type(x).__name__}")


def payload_to_json(p: Payload) -> Dict:
    return {
        "tree": curve_to_json(p.tree),
        "attach": list(p.attach),
        "splitting": {v: list(t.parts) for v, t in p.splitting.items()},
        "internal_defects": dict(p.internal_defects),
        "contact_defects": list(p.contact_defects),
        "contact_edges": list(p.contact_edges),
        "vertex_charges": {v: charge_to_json(c) for v, c in p.vertex_charges.items()},
        "residual": [_torsion_json(r) for r in p.residual],
        "ker_chi": p.ker_chi,
    }


def payload_from_json(obj: Mapping) -> Payload:
    return Payload(
        tree=_curve(obj["tree"]),
        attach=tuple(obj["attach"]),
        splitting={v: SplittingType(tuple(p)) for v, p in obj.get("splitting", {}).items()},
        internal_defects=dict(obj.get("internal_defects", {})),
        contact_defects=tuple(obj.get("contact_defects", ())),
        contact_edges=tuple(obj.get("contact_edges", ())),
        vertex_charges={v: _charge(c) for v, c in obj.get("vertex_charges", {}).items()},
        residual=tuple(_torsion(r) for r in obj.get("residual", ())),
        ker_chi=obj.get("ker_chi", 0),
    )


def move_to_json(m: Move) -> Dict:
    out: Dict[str, Any] = {"kind": m.kind}
    if m.site is not None:
        out["site"] = m.site
    if m.payload is not None:
        out["payload"] = payload_to_json(m.payload)
    if m.target:
        out["target"] = sorted(m.target)
    return out


def move_from_json(obj: Mapping) -> Move:
    payload = payload_from_json(obj["payload"]) if "payload" in obj else None
    return Move(obj["kind"], obj.get("site"), payload, frozenset(obj.get("target", ())))


def step_to_json(step: TraceStep) -> Dict:
    return {
        "move": move_to_json(step.move),
        "err_before": value_to_json(step.err_before),
        "err_after": value_to_json(step.err_after),
        "certificate": plain(step.certificate),
    }


def trace_to_json(initial: FMDatum, final: ReductionState, seed: Optional[int] = None) -> Dict:
    return {
        "seed": seed,
        "initial": datum_to_json(initial),
        "steps": [step_to_json(s) for s in final.trace],
        "final": datum_to_json(final.datum),
    }


# ---------------------------------------------------------------------------
# checked readers


def _checked(schema, build):
    def read(obj: Any):
        validate(obj, schema)
        try:
            return build(obj)
        except (ValueError, TypeError, ZeroDivisionError) as exc:
            raise SchemaError(str(exc)) from None

    return read


read_curve = _checked(CURVE, _curve)
read_sheaf = _checked(SHEAF, _sheaf)
read_charge = _checked(CHARGE, _charge)
read_value = _checked(CHARGE_VALUE, _value)
read_datum = _checked(DATUM, _datum)
read_scenario = _checked(SCENARIO, _scenario)
