"""Structural controllability verdicts and their numerical certification.

The criteria implemented here decide, from the network topology and one
copy of the node dynamics, whether some (equivalently, almost every) choice
of edge weights makes the assembled network controllable. Every verdict can
be cross-examined by a Monte Carlo PBH oracle on sampled weights.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .assembly import (
    VectorWeights,
    assemble_lumped_mimo,
    assemble_lumped_simo,
    sample_weights,
    scalar_laplacians,
)
from .errors import ConsistencyError, NumericError, PremiseError
from .numerics import (
    DEFAULT_TOL,
    RandomSource,
    ToleranceConfig,
    dedupe_eigenvalues,
    eigenvalues,
    generic_rank,
    kron,
    pbh_controllable,
    pbh_eigen_checks,
)
from .subsystem import (
    SubsystemModel,
    check_controllable,
    check_observable,
    fixed_modes,
    require_valid,
)
from .topology import (
    DrivenSet,
    NetworkGraph,
    all_cycles_input_reachable,
    aux_digraph,
    incidence_matrices,
    input_reachable_set,
    is_globally_input_reachable,
)

DEFAULT_CERTIFY_TRIALS = 5


class Verdict(str, Enum):
    CONTROLLABLE = "STRUCTURALLY_CONTROLLABLE"
    NOT_CONTROLLABLE = "NOT_STRUCTURALLY_CONTROLLABLE"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ConditionRecord:
    """One necessary/sufficient condition with a witness when it fails."""

    name: str
    holds: bool
    witness: object = None


@dataclass(frozen=True)
class TrialResult:
    """One Monte Carlo draw: sampled weights, assembled, PBH-tested."""

    stream_id: int
    controllable: bool | None
    deficient_count: int | None
    error: str | None = None


@dataclass(frozen=True)
class CertificationReport:
    """Monte Carlo evidence beside the verdict it examines.

    ``any_controllable`` uses existence semantics: one controllable draw
    certifies that controllable weights exist. Agreement means the evidence
    is consistent with the compared verdict (an inconclusive verdict cannot
    be contradicted). All trials uncontrollable against a controllable
    verdict is reported as disagreement, a numerical red flag left for the
    caller to adjudicate.
    """

    trials: int
    per_trial: tuple[TrialResult, ...]
    any_controllable: bool
    compared_verdict: str
    agree_with_verdict: bool


@dataclass(frozen=True)
class AnalysisReport:
    verdict: Verdict
    theorem_used: str
    conditions: tuple[ConditionRecord, ...]
    certification: CertificationReport | None = None
    notes: tuple[str, ...] = ()

    def with_certification(self, cert: CertificationReport) -> "AnalysisReport":
        return dataclasses.replace(self, certification=cert)

    def condition(self, name: str) -> ConditionRecord:
        for rec in self.conditions:
            if rec.name == name:
                return rec
        raise KeyError(name)


def _eig_witness(deficient) -> dict:
    return {"deficient_eigenvalues": tuple(complex(z) for z in deficient)}


def _criterion_family(graph: NetworkGraph) -> tuple[str, tuple[str, ...]]:
    if graph.has_directed_edges():
        return "2", ("directed influences present: semi-symmetric criteria applied",)
    return "1", ()


def analyze_simo(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> AnalysisReport:
    """Exact verdict for single-input nodes with vector edge weights.

    With every vertex driven, subsystem controllability alone decides.
    Otherwise the verdict is the conjunction of three conditions, each
    necessary and together sufficient: (A, b) controllable, (A, C)
    observable, and every vertex reachable from the driven set.
    """
    require_valid(model)
    if model.num_inputs != 1:
        raise ValueError(
            "single-input analysis needs a one-column input matrix; "
            "use the matrix-weight analyzer for multi-input nodes"
        )
    driven.validate_for(graph)

    if len(driven) == graph.num_vertices:
        ok, deficient = check_controllable(model, tol)
        record = ConditionRecord(
            "subsystem_controllable", ok, None if ok else _eig_witness(deficient)
        )
        return AnalysisReport(
            verdict=Verdict.CONTROLLABLE if ok else Verdict.NOT_CONTROLLABLE,
            theorem_used="trivial-case",
            conditions=(record,),
            notes=("every vertex is driven: subsystem controllability decides",),
        )

    theorem, notes = _criterion_family(graph)
    ctrb_ok, ctrb_def = check_controllable(model, tol)
    obsv_ok, obsv_def = check_observable(model, tol)
    reach = input_reachable_set(graph, driven)
    reach_ok = len(reach) == graph.num_vertices
    unreachable = sorted(set(range(1, graph.num_vertices + 1)) - set(reach))

    conditions = (
        ConditionRecord(
            "subsystem_controllable",
            ctrb_ok,
            None if ctrb_ok else _eig_witness(ctrb_def),
        ),
        ConditionRecord(
            "subsystem_observable",
            obsv_ok,
            None if obsv_ok else _eig_witness(obsv_def),
        ),
        ConditionRecord(
            "globally_input_reachable",
            reach_ok,
            None if reach_ok else {"unreachable_vertices": tuple(unreachable)},
        ),
    )
    verdict = (
        Verdict.CONTROLLABLE
        if ctrb_ok and obsv_ok and reach_ok
        else Verdict.NOT_CONTROLLABLE
    )
    return AnalysisReport(verdict, theorem, conditions, notes=notes)


def analyze_mimo(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    tol: ToleranceConfig = DEFAULT_TOL,
    rng: RandomSource = RandomSource(0),
    weight_shape: tuple[int, int] | None = None,
) -> AnalysisReport:
    """Verdict for multi-input nodes with matrix edge weights.

    When (A, B, C) has no fixed mode, global input-reachability is
    equivalent to structural controllability. Reachability stays necessary
    regardless, so an unreachable topology is decisive; fixed modes on a
    reachable topology leave the criterion silent and the verdict is
    INCONCLUSIVE. Single-input models are delegated to the exact
    single-input criteria (their conditions are necessary and sufficient,
    and the p = r = 1 case must agree with the single-input verdict).
    """
    require_valid(model)
    shape = (model.num_inputs, model.num_outputs)
    if weight_shape is not None and tuple(weight_shape) != shape:
        raise ValueError(
            f"declared weight shape {tuple(weight_shape)} does not match the "
            f"model's (inputs, outputs) = {shape}"
        )
    if model.num_inputs == 1:
        report = analyze_simo(model, graph, driven, tol)
        return dataclasses.replace(
            report,
            notes=report.notes
            + ("single-input model: exact single-input criteria applied",),
        )
    if graph.has_directed_edges():
        raise ValueError(
            "matrix-weight analysis covers undirected topologies only; "
            "model directed influences with single-input nodes instead"
        )
    driven.validate_for(graph)

    if len(driven) == graph.num_vertices:
        ok, deficient = check_controllable(model, tol)
        record = ConditionRecord(
            "subsystem_controllable", ok, None if ok else _eig_witness(deficient)
        )
        return AnalysisReport(
            verdict=Verdict.CONTROLLABLE if ok else Verdict.NOT_CONTROLLABLE,
            theorem_used="trivial-case",
            conditions=(record,),
            notes=("every vertex is driven: subsystem controllability decides",),
        )

    modes = fixed_modes(model, rng, tol)
    reach = input_reachable_set(graph, driven)
    reach_ok = len(reach) == graph.num_vertices
    unreachable = sorted(set(range(1, graph.num_vertices + 1)) - set(reach))

    conditions = (
        ConditionRecord(
            "no_fixed_mode",
            modes.empty,
            None
            if modes.empty
            else {
                "fixed_modes": tuple(
                    complex(z) for z in dedupe_eigenvalues(modes.fixed_modes, tol)
                )
            },
        ),
        ConditionRecord(
            "globally_input_reachable",
            reach_ok,
            None if reach_ok else {"unreachable_vertices": tuple(unreachable)},
        ),
    )
    notes: tuple[str, ...] = ()
    if not reach_ok:
        verdict = Verdict.NOT_CONTROLLABLE
    elif modes.empty:
        verdict = Verdict.CONTROLLABLE
    else:
        verdict = Verdict.INCONCLUSIVE
        notes = (
            "fixed modes present on a reachable topology: the matrix-weight "
            "criterion is sufficient-only and makes no claim here",
        )
    return AnalysisReport(verdict, "3", conditions, notes=notes)


def analyze(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    tol: ToleranceConfig = DEFAULT_TOL,
    rng: RandomSource = RandomSource(0),
) -> AnalysisReport:
    """Dispatch on the model's input count."""
    if model.num_inputs == 1:
        return analyze_simo(model, graph, driven, tol)
    return analyze_mimo(model, graph, driven, tol, rng)


def certify_monte_carlo(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    trials: int = DEFAULT_CERTIFY_TRIALS,
    rng: RandomSource = RandomSource(0),
    tol: ToleranceConfig = DEFAULT_TOL,
    weight_scale: float = 1.0,
    a_shift: np.ndarray | None = None,
    analysis: AnalysisReport | None = None,
) -> CertificationReport:
    """Monte Carlo PBH oracle over sampled weights.

    Each trial derives its own stream from the source, samples one generic
    weight per edge, assembles the lumped pair, and runs the PBH test at
    every eigenvalue. ``a_shift`` (added to the assembled state matrix
    before testing) accommodates grounding-style modifications. Numeric
    failures are recorded per trial and never abort the run.
    """
    if trials < 1:
        raise ValueError(f"certification needs at least one trial, got {trials}")
    require_valid(model)
    driven.validate_for(graph)
    if analysis is None:
        analysis = analyze(model, graph, driven, tol)

    p, r = model.num_inputs, model.num_outputs
    per: list[TrialResult] = []
    any_ok = False
    for t in range(trials):
        src = rng.derive(t)
        try:
            w = sample_weights(graph, (p, r), src, weight_scale)
            if p == 1:
                lumped = assemble_lumped_simo(model, graph, w, driven)
            else:
                lumped = assemble_lumped_mimo(model, graph, w, driven)
            a_sys = lumped.a_sys
            if a_shift is not None:
                shift = np.asarray(a_shift, dtype=float)
                if shift.shape != a_sys.shape:
                    raise ValueError(
                        f"state-matrix shift has shape {shift.shape}, "
                        f"expected {a_sys.shape}"
                    )
                a_sys = a_sys + shift
            checks = pbh_eigen_checks(a_sys, lumped.b_sys, tol)
            controllable = all(c.full for c in checks)
            deficient = sum(1 for c in checks if not c.full)
            per.append(TrialResult(src.stream_id, controllable, deficient))
            any_ok = any_ok or controllable
        except NumericError as exc:
            per.append(TrialResult(src.stream_id, None, None, str(exc)))

    if analysis.verdict is Verdict.CONTROLLABLE:
        agree = any_ok
    elif analysis.verdict is Verdict.NOT_CONTROLLABLE:
        agree = not any_ok
    else:
        agree = True
    return CertificationReport(
        trials=trials,
        per_trial=tuple(per),
        any_controllable=any_ok,
        compared_verdict=analysis.verdict.value,
        agree_with_verdict=agree,
    )


def reduce_scalar_weight(model: SubsystemModel) -> SubsystemModel:
    """Collapse the coupling channels into one summed output row.

    Models the constraint of a single scalar weight per edge: with all
    channel Laplacians equal, the coupling acts through c_1 + ... + c_r.
    The summed row may cancel to zero; the result is returned as-is and
    callers decide how to treat that degenerate output.
    """
    require_valid(model)
    summed = model.c.sum(axis=0, keepdims=True)
    return SubsystemModel(model.a, model.b, summed)


def analyze_scalar_constrained(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    tol: ToleranceConfig = DEFAULT_TOL,
) -> AnalysisReport:
    """Verdict when every edge is forced to carry one scalar weight.

    A controllable scalar-constrained network is controllable in the
    vector-weighted sense (the constraint picks particular weights), but
    not conversely. If the summed coupling row cancels to zero the
    constrained network has no coupling at all and cannot be controllable
    unless every vertex is driven.
    """
    require_valid(model)
    reduced = reduce_scalar_weight(model)
    note = "channels constrained to a single scalar weight per edge"
    if not np.any(reduced.c):
        if len(driven) == graph.num_vertices:
            ok, deficient = check_controllable(model, tol)
            record = ConditionRecord(
                "subsystem_controllable", ok, None if ok else _eig_witness(deficient)
            )
            return AnalysisReport(
                verdict=Verdict.CONTROLLABLE if ok else Verdict.NOT_CONTROLLABLE,
                theorem_used="trivial-case",
                conditions=(record,),
                notes=(note, "every vertex is driven: coupling is irrelevant"),
            )
        theorem, extra = _criterion_family(graph)
        record = ConditionRecord(
            "scalar_reduced_coupling_nonzero",
            False,
            {"summed_output_row": tuple(float(x) for x in reduced.c.reshape(-1))},
        )
        return AnalysisReport(
            verdict=Verdict.NOT_CONTROLLABLE,
            theorem_used=theorem,
            conditions=(record,),
            notes=(note, "the channel sum cancels: no coupling survives") + extra,
        )
    report = analyze_simo(reduced, graph, driven, tol)
    return dataclasses.replace(report, notes=report.notes + (note,))


def laplacian_leader_controllability(
    graph: NetworkGraph,
    leader: int,
    trials: int = 3,
    rng: RandomSource = RandomSource(0),
    tol: ToleranceConfig = DEFAULT_TOL,
    weight_scale: float = 1.0,
) -> bool:
    """Single-leader controllability of -L on a connected undirected graph.

    Samples generic scalar weights, builds the weighted Laplacian, and PBH
    tests the pair (-L, e_leader). On a connected undirected graph this
    holds for almost every weight draw, so every trial is expected to pass;
    returns True only if all do.
    """
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if graph.has_directed_edges():
        raise PremiseError("leader controllability is stated for undirected graphs")
    if not 1 <= leader <= graph.num_vertices:
        raise ValueError(
            f"leader {leader} outside the vertex range 1..{graph.num_vertices}"
        )
    reach = input_reachable_set(graph, DrivenSet(frozenset({leader})))
    if len(reach) != graph.num_vertices:
        raise PremiseError(
            "graph is not connected: vertices "
            f"{sorted(set(range(1, graph.num_vertices + 1)) - set(reach))} "
            "are cut off from the leader"
        )
    basis = np.eye(graph.num_vertices)
    for t in range(trials):
        w = sample_weights(graph, (1, 1), rng.derive(t), weight_scale)
        lap = scalar_laplacians(graph, w)[0]
        ok, _ = pbh_controllable(-lap, basis[:, leader - 1 : leader], tol)
        if not ok:
            return False
    return True


@dataclass(frozen=True)
class AuxConditionDetail:
    """Both auxiliary-digraph cycle checks plus the topology comparison."""

    edge_pattern_holds: bool
    vertex_pattern_holds: bool
    edge_pattern_witness: tuple[int, ...] | None
    vertex_pattern_witness: tuple[int, ...] | None
    num_edge_states: int
    num_vertex_states: int
    graph_reachable: bool


def aux_condition_check(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    tol: ToleranceConfig = DEFAULT_TOL,
):
    """Cycle input-reachability on two pattern-equivalent auxiliary digraphs.

    Pattern one lives on coupling-channel copies of the edges (built from
    the incidence product K_I K and K_I Delta); pattern two on channel
    copies of the vertices (built from a structural Laplacian and Delta).
    The two must agree; the shared boolean is returned with the detail.

    Premises: single-input nodes with (A, b) controllable and no zero
    coupling row.
    """
    require_valid(model)
    if model.num_inputs != 1:
        raise ValueError("the auxiliary-digraph condition is built on single-input nodes")
    ctrb_ok, deficient = check_controllable(model, tol)
    if not ctrb_ok:
        raise PremiseError(
            "the pattern equivalence assumes (A, b) controllable; deficient at "
            + ", ".join(str(z) for z in deficient)
        )
    driven.validate_for(graph)

    r = model.num_outputs
    real = incidence_matrices(graph)
    delta = driven.delta(graph.num_vertices)
    ones_rr = np.ones((r, r))
    ones_r1 = np.ones((r, 1))

    kik = real.incidence @ real.injection
    kid = real.incidence @ delta
    dg_edge = aux_digraph(kron(ones_rr, kik), kron(ones_r1, kid))
    edge_ok, edge_wit = all_cycles_input_reachable(dg_edge)

    unit = VectorWeights.from_edge_arrays(
        graph, [np.ones(1) for _ in graph.edges], channels=1
    )
    lap_pattern = scalar_laplacians(graph, unit)[0]
    dg_vertex = aux_digraph(kron(ones_rr, lap_pattern), kron(ones_r1, delta))
    vertex_ok, vertex_wit = all_cycles_input_reachable(dg_vertex)

    if edge_ok != vertex_ok:
        raise ConsistencyError(
            "pattern-equivalent auxiliary digraphs disagree: "
            f"edge pattern {edge_ok}, vertex pattern {vertex_ok}"
        )
    detail = AuxConditionDetail(
        edge_pattern_holds=edge_ok,
        vertex_pattern_holds=vertex_ok,
        edge_pattern_witness=edge_wit,
        vertex_pattern_witness=vertex_wit,
        num_edge_states=dg_edge.num_states,
        num_vertex_states=dg_vertex.num_states,
        graph_reachable=is_globally_input_reachable(graph, driven),
    )
    return edge_ok, detail


@dataclass(frozen=True)
class RankCheckDetail:
    eigenvalue: complex
    generic_rank: int
    required: int
    ok: bool


def rank_condition_check(
    model: SubsystemModel,
    graph: NetworkGraph,
    driven: DrivenSet,
    rng: RandomSource = RandomSource(0),
    tol: ToleranceConfig = DEFAULT_TOL,
    trials: int = 3,
):
    """Generic rank of [lambda I - A_sys, B_sys] at each subsystem eigenvalue.

    For a structurally controllable single-input network the sampled
    maximum rank must reach full row rank at every distinct eigenvalue of
    A. Eigenvalues are deduplicated within the matching tolerance; each one
    gets its own derived sample stream.
    """
    require_valid(model)
    if model.num_inputs != 1:
        raise ValueError("the rank condition is stated for single-input nodes")
    driven.validate_for(graph)

    n = model.order
    n_vertices = graph.num_vertices
    r = model.num_outputs
    m = graph.num_edges
    required = n_vertices * n
    b_sys = kron(driven.delta(n_vertices), model.b)
    eye_sys = np.eye(required)
    distinct = dedupe_eigenvalues(eigenvalues(model.a), tol)

    def assemble(s: np.ndarray) -> np.ndarray:
        w = VectorWeights.from_edge_arrays(graph, s.reshape(m, r), channels=r)
        return assemble_lumped_simo(model, graph, w, driven).a_sys

    details: list[RankCheckDetail] = []
    all_ok = True
    for i, lam in enumerate(distinct):
        def matfn(s, lam=lam):
            return np.hstack([lam * eye_sys - assemble(s), b_sys])

        got = generic_rank(matfn, m * r, trials, rng.derive(i), tol)
        ok = got == required
        details.append(RankCheckDetail(complex(lam), got, required, ok))
        all_ok = all_ok and ok
    return all_ok, tuple(details)
