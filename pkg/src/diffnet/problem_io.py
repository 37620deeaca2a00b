"""Problem-file loading and report serialization.

A problem file is one JSON document:

    {
      "subsystem": {"A": [[...]], "B": [[...]], "C": [[...]]},
      "graph": {"N": 3, "edges": [{"u": 1, "v": 2, "kind": "undirected"}]},
      "driven": [1],
      "weights": {"edges": [{"u": 1, "v": 2, "W": [[...]]}]},   # optional
      "options": {"seed": 0, "trials": 5, "rank_rel_tol": 1e-9}  # optional
    }

Matrices are dense row-major nested lists. ``kind`` defaults to undirected.
Reports serialize to JSON with complex numbers as {"re": ..., "im": ...}
objects and round-trip back into the report dataclasses.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .assembly import MatrixWeights, VectorWeights
from .errors import ProblemFileError
from .subsystem import SubsystemModel, validate_model
from .topology import DIRECTED, UNDIRECTED, DrivenSet, Edge, NetworkGraph
from .verdict import (
    AnalysisReport,
    CertificationReport,
    ConditionRecord,
    TrialResult,
    Verdict,
)

REPORT_SCHEMA = "diffnet-report/v1"
LUMP_SCHEMA = "diffnet-lump/v1"
PROBLEM_SCHEMA = "diffnet-problem/v1"

_TOP_LEVEL_KEYS = {"$schema", "subsystem", "graph", "driven", "weights", "options"}
_OPTION_KEYS = {"seed", "trials", "rank_rel_tol", "eig_match_tol", "wall"}


@dataclass(frozen=True)
class Problem:
    """A parsed problem file, ready for the analysis entry points."""

    model: SubsystemModel
    graph: NetworkGraph
    driven: DrivenSet
    weights: VectorWeights | MatrixWeights | None
    options: dict


def _fail(msg: str) -> ProblemFileError:
    return ProblemFileError(msg)


def _require_mapping(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise _fail(f"{where} must be a JSON object, got {type(value).__name__}")
    return value


def _matrix(value, where: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise _fail(f"{where} is not a numeric array: {exc}") from None
    if arr.ndim not in (1, 2) or arr.size == 0:
        raise _fail(f"{where} must be a non-empty 1-D or 2-D numeric array")
    if not np.all(np.isfinite(arr)):
        raise _fail(f"{where} contains non-finite entries")
    return arr


def _int_field(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(f"{where} must be an integer, got {value!r}")
    return value


def _parse_subsystem(doc: dict) -> SubsystemModel:
    sub = _require_mapping(doc.get("subsystem"), '"subsystem"')
    missing = {"A", "B", "C"} - set(sub)
    if missing:
        raise _fail(f'"subsystem" is missing members: {sorted(missing)}')
    extra = set(sub) - {"A", "B", "C"}
    if extra:
        raise _fail(f'"subsystem" has unknown members: {sorted(extra)}')
    model = SubsystemModel(
        _matrix(sub["A"], 'subsystem "A"'),
        _matrix(sub["B"], 'subsystem "B"'),
        _matrix(sub["C"], 'subsystem "C"'),
    )
    violations = validate_model(model)
    if violations:
        raise _fail("invalid subsystem: " + "; ".join(violations))
    return model


def _parse_graph(doc: dict) -> NetworkGraph:
    g = _require_mapping(doc.get("graph"), '"graph"')
    extra = set(g) - {"N", "edges"}
    if extra:
        raise _fail(f'"graph" has unknown members: {sorted(extra)}')
    if "N" not in g:
        raise _fail('"graph" is missing "N"')
    n = _int_field(g["N"], 'graph "N"')
    entries = g.get("edges", [])
    if not isinstance(entries, list):
        raise _fail('graph "edges" must be a list')
    edges = []
    for i, entry in enumerate(entries):
        e = _require_mapping(entry, f"edge #{i}")
        extra = set(e) - {"u", "v", "kind"}
        if extra:
            raise _fail(f"edge #{i} has unknown members: {sorted(extra)}")
        if "u" not in e or "v" not in e:
            raise _fail(f'edge #{i} needs both "u" and "v"')
        kind = e.get("kind", UNDIRECTED)
        if kind not in (UNDIRECTED, DIRECTED):
            raise _fail(
                f'edge #{i} kind must be "{UNDIRECTED}" or "{DIRECTED}", got {kind!r}'
            )
        edges.append(
            Edge(_int_field(e["u"], f'edge #{i} "u"'), _int_field(e["v"], f'edge #{i} "v"'), kind)
        )
    try:
        return NetworkGraph(n, tuple(edges))
    except ValueError as exc:
        raise _fail(f"invalid graph: {exc}") from None


def _parse_driven(doc: dict, graph: NetworkGraph) -> DrivenSet:
    raw = doc.get("driven")
    if not isinstance(raw, list):
        raise _fail('"driven" must be a list of vertex ids')
    try:
        driven = DrivenSet(frozenset(_int_field(v, '"driven" entry') for v in raw))
        driven.validate_for(graph)
    except ValueError as exc:
        raise _fail(f"invalid driven set: {exc}") from None
    return driven


def _match_edge(graph: NetworkGraph, u: int, v: int) -> Edge | None:
    # a directed (u, v) is the specific match; an undirected pair never
    # coexists with another edge on the same vertices, so order is free
    directed_key = (DIRECTED, u, v)
    undirected_key = (UNDIRECTED, min(u, v), max(u, v))
    for edge in graph.edges:
        if edge.key() == directed_key:
            return edge
    for edge in graph.edges:
        if edge.key() == undirected_key:
            return edge
    return None


def _parse_weights(doc: dict, graph: NetworkGraph, model: SubsystemModel):
    raw = doc.get("weights")
    if raw is None:
        return None
    w = _require_mapping(raw, '"weights"')
    extra = set(w) - {"edges"}
    if extra:
        raise _fail(f'"weights" has unknown members: {sorted(extra)}')
    entries = w.get("edges")
    if not isinstance(entries, list):
        raise _fail('weights "edges" must be a list')

    p, r = model.num_inputs, model.num_outputs
    by_key: dict[tuple, np.ndarray] = {}
    for i, entry in enumerate(entries):
        e = _require_mapping(entry, f"weight #{i}")
        extra = set(e) - {"u", "v", "W"}
        if extra:
            raise _fail(f"weight #{i} has unknown members: {sorted(extra)}")
        if "u" not in e or "v" not in e or "W" not in e:
            raise _fail(f'weight #{i} needs "u", "v" and "W"')
        u = _int_field(e["u"], f'weight #{i} "u"')
        v = _int_field(e["v"], f'weight #{i} "v"')
        edge = _match_edge(graph, u, v)
        if edge is None:
            raise _fail(f"weight #{i} references no edge between {u} and {v}")
        if edge.key() in by_key:
            raise _fail(f"duplicate weight for edge between {u} and {v}")
        block = np.atleast_2d(_matrix(e["W"], f'weight #{i} "W"'))
        if block.shape != (p, r):
            raise _fail(
                f"weight #{i} has shape {block.shape}, expected {(p, r)} "
                "from the subsystem's input and output counts"
            )
        by_key[edge.key()] = block

    missing = [e for e in graph.edges if e.key() not in by_key]
    if missing:
        raise _fail(
            "weights must cover every edge; missing: "
            + ", ".join(f"({e.u}, {e.v})" for e in missing)
        )
    if p == 1:
        return VectorWeights(r, {k: b.reshape(-1) for k, b in by_key.items()})
    return MatrixWeights((p, r), by_key)


def _parse_options(doc: dict) -> dict:
    raw = doc.get("options")
    if raw is None:
        return {}
    opts = dict(_require_mapping(raw, '"options"'))
    extra = set(opts) - _OPTION_KEYS
    if extra:
        raise _fail(f'"options" has unknown members: {sorted(extra)}')
    if "seed" in opts:
        opts["seed"] = _int_field(opts["seed"], 'options "seed"')
    if "trials" in opts:
        trials = _int_field(opts["trials"], 'options "trials"')
        if trials < 1:
            raise _fail(f'options "trials" must be at least 1, got {trials}')
        opts["trials"] = trials
    for key in ("rank_rel_tol", "eig_match_tol"):
        if key in opts:
            val = opts[key]
            if isinstance(val, bool) or not isinstance(val, (int, float)):
                raise _fail(f'options "{key}" must be a number, got {val!r}')
            opts[key] = float(val)
    if "wall" in opts:
        wall = _require_mapping(opts["wall"], 'options "wall"')
        needed = {"stiffness_over_mass", "damping_over_mass"}
        if set(wall) != needed:
            raise _fail(f'options "wall" must have exactly the members {sorted(needed)}')
        opts["wall"] = {k: float(wall[k]) for k in needed}
    return opts


def parse_problem(text: str) -> Problem:
    """Parse and fully validate one problem document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise _fail(
            f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    doc = _require_mapping(doc, "problem document")
    extra = set(doc) - _TOP_LEVEL_KEYS
    if extra:
        raise _fail(f"unknown top-level members: {sorted(extra)}")
    for required in ("subsystem", "graph", "driven"):
        if required not in doc:
            raise _fail(f'missing required member "{required}"')

    model = _parse_subsystem(doc)
    graph = _parse_graph(doc)
    driven = _parse_driven(doc, graph)
    weights = _parse_weights(doc, graph, model)
    options = _parse_options(doc)
    return Problem(model, graph, driven, weights, options)


def load_problem(path) -> tuple[Problem, str]:
    """Load a problem file; returns the problem and its input digest."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise _fail(f"cannot read {path}: {exc}") from None
    digest = hashlib.sha256(raw).hexdigest()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise _fail(f"{path} is not UTF-8 text: {exc}") from None
    return parse_problem(text), digest


def _jsonable(value):
    """Recursively convert report payloads to JSON-safe structures."""
    if isinstance(value, complex):
        return {"re": value.real, "im": value.imag}
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def _complex_from_json(value) -> complex:
    if isinstance(value, dict):
        return complex(value["re"], value["im"])
    return complex(value)


# witness payload keys that carry complex eigenvalues
_COMPLEX_WITNESS_KEYS = {"deficient_eigenvalues", "fixed_modes"}


def _witness_from_json(value):
    if value is None:
        return None
    out = {}
    for key, payload in value.items():
        if key in _COMPLEX_WITNESS_KEYS:
            out[key] = tuple(_complex_from_json(v) for v in payload)
        elif isinstance(payload, list):
            out[key] = tuple(payload)
        else:
            out[key] = payload
    return out


def certification_to_json(cert: CertificationReport) -> dict:
    return {
        "trials": cert.trials,
        "per_trial": [
            {
                "stream_id": t.stream_id,
                "controllable": t.controllable,
                "deficient_count": t.deficient_count,
                "error": t.error,
            }
            for t in cert.per_trial
        ],
        "any_controllable": cert.any_controllable,
        "compared_verdict": cert.compared_verdict,
        "agree_with_verdict": cert.agree_with_verdict,
    }


def certification_from_json(doc: dict) -> CertificationReport:
    return CertificationReport(
        trials=doc["trials"],
        per_trial=tuple(
            TrialResult(
                stream_id=t["stream_id"],
                controllable=t["controllable"],
                deficient_count=t["deficient_count"],
                error=t.get("error"),
            )
            for t in doc["per_trial"]
        ),
        any_controllable=doc["any_controllable"],
        compared_verdict=doc["compared_verdict"],
        agree_with_verdict=doc["agree_with_verdict"],
    )


def analysis_to_json(report: AnalysisReport) -> dict:
    return {
        "verdict": report.verdict.value,
        "theorem_used": report.theorem_used,
        "conditions": [
            {"name": c.name, "holds": c.holds, "witness": _jsonable(c.witness)}
            for c in report.conditions
        ],
        "notes": list(report.notes),
        "certification": (
            None
            if report.certification is None
            else certification_to_json(report.certification)
        ),
    }


def analysis_from_json(doc: dict) -> AnalysisReport:
    cert = doc.get("certification")
    return AnalysisReport(
        verdict=Verdict(doc["verdict"]),
        theorem_used=doc["theorem_used"],
        conditions=tuple(
            ConditionRecord(c["name"], c["holds"], _witness_from_json(c["witness"]))
            for c in doc["conditions"]
        ),
        certification=None if cert is None else certification_from_json(cert),
        notes=tuple(doc["notes"]),
    )


def report_document(
    report: AnalysisReport,
    tool_version: str,
    input_digest: str | None = None,
    options: dict | None = None,
) -> dict:
    """Full report file: analysis plus provenance for reproducibility."""
    doc = {
        "$schema": REPORT_SCHEMA,
        "tool": {"name": "diffnet", "version": tool_version},
        "analysis": analysis_to_json(report),
    }
    if input_digest is not None:
        doc["input"] = {"sha256": input_digest}
    if options:
        doc["options"] = _jsonable(options)
    return doc


def weights_to_json(graph: NetworkGraph, weights) -> dict:
    rows = []
    for edge in graph.edges:
        if isinstance(weights, VectorWeights):
            block = weights.row(edge)[None, :]
        else:
            block = weights.block(edge)
        rows.append(
            {"u": edge.u, "v": edge.v, "kind": edge.kind, "W": _jsonable(block)}
        )
    return {"edges": rows}


def dump_json(doc: dict) -> str:
    """Canonical serialization: key-sorted, compact, newline-terminated.

    Byte-identical output for equal documents, so fixed-seed runs are
    reproducible at the file level.
    """
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
