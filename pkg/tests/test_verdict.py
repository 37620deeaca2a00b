"""Verdict engines, Monte Carlo certification, and the side criteria."""

import numpy as np
import pytest

from conftest import (
    ensure_incoming_influence,
    random_driven,
    random_graph,
    random_model,
    verdict_bool,
)
from diffnet.assembly import (
    VectorWeights,
    assemble_lumped_simo,
    mass_spring_chain,
    wall_shift_matrix,
)
from diffnet.errors import PremiseError
from diffnet.numerics import RandomSource
from diffnet.subsystem import SubsystemModel, check_controllable
from diffnet.topology import DIRECTED, DrivenSet, Edge, NetworkGraph
from diffnet.verdict import (
    AnalysisReport,
    Verdict,
    analyze,
    analyze_mimo,
    analyze_scalar_constrained,
    analyze_simo,
    aux_condition_check,
    certify_monte_carlo,
    laplacian_leader_controllability,
    rank_condition_check,
    reduce_scalar_weight,
)


def double_integrator(c=None) -> SubsystemModel:
    return SubsystemModel(
        [[0.0, 1.0], [0.0, 0.0]],
        [0.0, 1.0],
        np.eye(2) if c is None else c,
    )


def chain_graph(n: int) -> NetworkGraph:
    return NetworkGraph(n, tuple(Edge(i, i + 1) for i in range(1, n)))


def first_driven() -> DrivenSet:
    return DrivenSet(frozenset({1}))


class TestSingleInputAnalysis:
    def test_chain_is_structurally_controllable(self):
        report = analyze_simo(double_integrator(), chain_graph(4), first_driven())
        assert report.verdict is Verdict.CONTROLLABLE
        assert report.theorem_used == "1"
        assert all(rec.holds for rec in report.conditions)
        assert {rec.name for rec in report.conditions} == {
            "subsystem_controllable",
            "subsystem_observable",
            "globally_input_reachable",
        }

    def test_velocity_only_coupling_fails_observability(self):
        model = double_integrator(c=[[0.0, 1.0]])
        report = analyze_simo(model, chain_graph(3), first_driven())
        assert report.verdict is Verdict.NOT_CONTROLLABLE
        rec = report.condition("subsystem_observable")
        assert not rec.holds
        (lam,) = rec.witness["deficient_eigenvalues"]
        assert abs(lam) < 1e-7

    def test_reversed_directed_chain_unreachable(self):
        g = NetworkGraph(3, (Edge(2, 1, DIRECTED), Edge(3, 2, DIRECTED)))
        report = analyze_simo(double_integrator(), g, first_driven())
        assert report.verdict is Verdict.NOT_CONTROLLABLE
        assert report.theorem_used == "2"
        rec = report.condition("globally_input_reachable")
        assert rec.witness == {"unreachable_vertices": (2, 3)}
        assert any("directed" in note for note in report.notes)

    def test_nobody_driven_is_never_controllable(self):
        report = analyze_simo(double_integrator(), chain_graph(2), DrivenSet())
        assert report.verdict is Verdict.NOT_CONTROLLABLE
        rec = report.condition("globally_input_reachable")
        assert rec.witness == {"unreachable_vertices": (1, 2)}

    def test_everyone_driven_reduces_to_the_node_test(self):
        report = analyze_simo(
            double_integrator(), chain_graph(3), DrivenSet(frozenset({1, 2, 3}))
        )
        assert report.verdict is Verdict.CONTROLLABLE
        assert report.theorem_used == "trivial-case"
        assert len(report.conditions) == 1

        broken = SubsystemModel(np.eye(2), [1.0, 0.0], np.eye(2))
        report = analyze_simo(broken, chain_graph(2), DrivenSet(frozenset({1, 2})))
        assert report.verdict is Verdict.NOT_CONTROLLABLE

    def test_rejects_multi_input_model(self):
        model = SubsystemModel(np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            analyze_simo(model, chain_graph(2), first_driven())

    def test_condition_lookup_raises_on_unknown_name(self):
        report = analyze_simo(double_integrator(), chain_graph(2), first_driven())
        with pytest.raises(KeyError):
            report.condition("no_such_condition")


class TestMatrixWeightAnalysis:
    def test_single_input_model_delegates_to_exact_criteria(self):
        model = double_integrator()
        g, d = chain_graph(3), first_driven()
        report = analyze_mimo(model, g, d)
        exact = analyze_simo(model, g, d)
        assert report.verdict is exact.verdict
        assert report.theorem_used == exact.theorem_used
        assert any("single-input" in note for note in report.notes)

    def test_no_fixed_mode_and_reachable_is_controllable(self):
        model = SubsystemModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), np.eye(2))
        report = analyze_mimo(model, chain_graph(3), first_driven())
        assert report.verdict is Verdict.CONTROLLABLE
        assert report.theorem_used == "3"
        assert report.condition("no_fixed_mode").holds

    def test_unreachable_topology_is_decisive(self):
        model = SubsystemModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), np.eye(2))
        g = NetworkGraph(3, (Edge(1, 2),))
        report = analyze_mimo(model, g, first_driven())
        assert report.verdict is Verdict.NOT_CONTROLLABLE
        assert report.condition("globally_input_reachable").witness == {
            "unreachable_vertices": (3,)
        }

    def test_fixed_mode_on_reachable_topology_is_inconclusive(self):
        # second state decoupled from both input and output: a fixed mode at 2
        a = np.diag([1.0, 2.0])
        b = np.array([[1.0, 0.5], [0.0, 0.0]])
        c = np.array([[1.0, 0.0], [1.0, 0.0]])
        model = SubsystemModel(a, b, c)
        report = analyze_mimo(model, chain_graph(2), first_driven())
        assert report.verdict is Verdict.INCONCLUSIVE
        rec = report.condition("no_fixed_mode")
        assert not rec.holds
        assert any(abs(z - 2.0) < 1e-7 for z in rec.witness["fixed_modes"])
        assert report.notes

    def test_everyone_driven_reduces_to_the_node_test(self):
        model = SubsystemModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), np.eye(2))
        report = analyze_mimo(model, chain_graph(2), DrivenSet(frozenset({1, 2})))
        assert report.verdict is Verdict.CONTROLLABLE
        assert report.theorem_used == "trivial-case"

    def test_rejects_directed_edges_with_guidance(self):
        model = SubsystemModel(np.eye(2), np.eye(2), np.eye(2))
        g = NetworkGraph(2, (Edge(1, 2, DIRECTED),))
        with pytest.raises(ValueError, match="single-input"):
            analyze_mimo(model, g, first_driven())

    def test_rejects_mismatched_weight_shape(self):
        model = SubsystemModel(np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(ValueError, match="shape"):
            analyze_mimo(model, chain_graph(2), first_driven(), weight_shape=(1, 2))

    def test_dispatcher_picks_engine_by_input_count(self):
        simo = analyze(double_integrator(), chain_graph(2), first_driven())
        assert simo.theorem_used == "1"
        mimo_model = SubsystemModel([[0.0, 1.0], [-1.0, 0.0]], np.eye(2), np.eye(2))
        mimo = analyze(mimo_model, chain_graph(2), first_driven())
        assert mimo.theorem_used == "3"


class TestCertification:
    def test_controllable_chain_every_trial_passes(self):
        model, g, d = double_integrator(), chain_graph(3), first_driven()
        analysis = analyze_simo(model, g, d)
        cert = certify_monte_carlo(model, g, d, trials=5, rng=RandomSource(42))
        assert cert.trials == 5 and len(cert.per_trial) == 5
        assert all(t.controllable for t in cert.per_trial)
        assert all(t.deficient_count == 0 for t in cert.per_trial)
        assert cert.any_controllable
        assert cert.compared_verdict == analysis.verdict.value
        assert cert.agree_with_verdict

    def test_not_verdict_agrees_when_no_trial_is_controllable(self):
        model = double_integrator(c=[[0.0, 1.0]])
        cert = certify_monte_carlo(
            model, chain_graph(3), first_driven(), trials=5, rng=RandomSource(1)
        )
        assert not cert.any_controllable
        assert cert.agree_with_verdict
        assert cert.compared_verdict == Verdict.NOT_CONTROLLABLE.value

    def test_broken_topology_deficiency_scales_with_cut_off_states(self):
        # vertex 3 cut off: its whole node block stays input-free every draw
        g = NetworkGraph(3, (Edge(1, 2),))
        cert = certify_monte_carlo(
            double_integrator(), g, first_driven(), trials=4, rng=RandomSource(9)
        )
        for t in cert.per_trial:
            assert t.controllable is False
            assert t.deficient_count >= 2

    def test_single_vertex_network(self):
        g = NetworkGraph(1)
        cert = certify_monte_carlo(
            double_integrator(), g, first_driven(), trials=2, rng=RandomSource(3)
        )
        assert cert.any_controllable and cert.agree_with_verdict

    def test_rejects_nonpositive_trials(self):
        with pytest.raises(ValueError):
            certify_monte_carlo(
                double_integrator(), chain_graph(2), first_driven(), trials=0
            )

    def test_doctored_analysis_is_reported_as_disagreement(self):
        model = double_integrator(c=[[0.0, 1.0]])
        fake = AnalysisReport(Verdict.CONTROLLABLE, "1", ())
        cert = certify_monte_carlo(
            model, chain_graph(3), first_driven(), trials=3, analysis=fake
        )
        assert not cert.any_controllable
        assert not cert.agree_with_verdict

    def test_inconclusive_verdict_cannot_be_contradicted(self):
        fake = AnalysisReport(Verdict.INCONCLUSIVE, "3", ())
        cert = certify_monte_carlo(
            double_integrator(), chain_graph(2), first_driven(), trials=2, analysis=fake
        )
        assert cert.agree_with_verdict

    def test_state_shift_certifies_grounded_variant(self):
        chain = mass_spring_chain(3, 1.0, springs=(1.0, 2.0, 3.0), dampers=(0.1, 0.2, 0.3))
        cert = certify_monte_carlo(
            chain.model,
            chain.graph,
            chain.driven_template,
            trials=3,
            rng=RandomSource(5),
            a_shift=wall_shift_matrix(chain),
        )
        assert cert.any_controllable and cert.agree_with_verdict

    def test_state_shift_shape_is_checked(self):
        with pytest.raises(ValueError, match="shift"):
            certify_monte_carlo(
                double_integrator(),
                chain_graph(2),
                first_driven(),
                trials=1,
                a_shift=np.zeros((2, 2)),
            )

    def test_report_attachment(self):
        model, g, d = double_integrator(), chain_graph(2), first_driven()
        report = analyze_simo(model, g, d)
        cert = certify_monte_carlo(model, g, d, trials=2, analysis=report)
        assert report.certification is None
        merged = report.with_certification(cert)
        assert merged.certification is cert
        assert merged.verdict is report.verdict


class TestVerdictAgainstOracle:
    def test_random_instances_agree_with_certification(self):
        gen = np.random.default_rng(1234)
        checked = 0
        controllable_seen = 0
        for i in range(100):
            n_vertices = int(gen.integers(2, 6))
            graph = random_graph(gen, n_vertices, edge_prob=0.6)
            driven = random_driven(gen, n_vertices, allow_full=False)
            model = random_model(
                gen, int(gen.integers(1, 4)), int(gen.integers(1, 3))
            )
            report = analyze_simo(model, graph, driven)
            cert = certify_monte_carlo(
                model, graph, driven, trials=3, rng=RandomSource(1000 + i),
                analysis=report,
            )
            assert cert.agree_with_verdict, (
                f"instance {i}: verdict {report.verdict} but "
                f"{sum(bool(t.controllable) for t in cert.per_trial)}/3 "
                "trials controllable"
            )
            checked += 1
            controllable_seen += report.verdict is Verdict.CONTROLLABLE
        assert checked == 100
        # the generator must exercise both verdicts
        assert 10 <= controllable_seen <= 90

    def test_certification_stable_across_sources(self):
        gen = np.random.default_rng(77)
        for i in range(20):
            n_vertices = int(gen.integers(2, 5))
            graph = random_graph(gen, n_vertices, edge_prob=0.7)
            driven = random_driven(gen, n_vertices)
            model = random_model(gen, int(gen.integers(1, 3)), int(gen.integers(1, 3)))
            report = analyze_simo(model, graph, driven)
            for seed in (1, 2, 3):
                cert = certify_monte_carlo(
                    model, graph, driven, trials=2, rng=RandomSource(seed),
                    analysis=report,
                )
                assert cert.agree_with_verdict, f"instance {i}, source seed {seed}"


class TestScalarConstraint:
    def test_reduction_sums_channels(self):
        model = double_integrator(c=[[1.0, 0.0], [0.5, 2.0]])
        reduced = reduce_scalar_weight(model)
        assert np.allclose(reduced.c, [[1.5, 2.0]])
        assert np.array_equal(reduced.a, model.a)

    def test_cancelling_channels_lose_controllability(self):
        model = double_integrator(c=[[1.0, 0.0], [-1.0, 0.0]])
        vector_report = analyze_simo(model, chain_graph(3), first_driven())
        assert vector_report.verdict is Verdict.CONTROLLABLE

        scalar_report = analyze_scalar_constrained(
            model, chain_graph(3), first_driven()
        )
        assert scalar_report.verdict is Verdict.NOT_CONTROLLABLE
        rec = scalar_report.condition("scalar_reduced_coupling_nonzero")
        assert not rec.holds
        assert rec.witness["summed_output_row"] == (0.0, 0.0)

    def test_cancelling_channels_with_everyone_driven(self):
        model = double_integrator(c=[[1.0, 0.0], [-1.0, 0.0]])
        report = analyze_scalar_constrained(
            model, chain_graph(2), DrivenSet(frozenset({1, 2}))
        )
        assert report.verdict is Verdict.CONTROLLABLE
        assert report.theorem_used == "trivial-case"

    def test_surviving_sum_delegates_to_exact_criteria(self):
        model = double_integrator()
        report = analyze_scalar_constrained(model, chain_graph(3), first_driven())
        assert report.verdict is Verdict.CONTROLLABLE
        assert any("scalar" in note for note in report.notes)

    def test_equal_channel_weights_realize_the_reduced_network(self):
        model = double_integrator(c=[[1.0, 0.5], [0.2, 2.0]])
        g = chain_graph(3)
        scalars = [1.7, 0.6]
        full = VectorWeights.from_edge_arrays(
            g, [[s, s] for s in scalars], channels=2
        )
        reduced = reduce_scalar_weight(model)
        collapsed = VectorWeights.from_edge_arrays(g, [[s] for s in scalars], channels=1)
        lhs = assemble_lumped_simo(model, g, full, first_driven())
        rhs = assemble_lumped_simo(reduced, g, collapsed, first_driven())
        assert np.allclose(lhs.a_sys, rhs.a_sys)

    def test_scalar_controllable_implies_vector_controllable(self):
        gen = np.random.default_rng(321)
        seen = 0
        for _ in range(30):
            n_vertices = int(gen.integers(2, 5))
            graph = random_graph(gen, n_vertices, edge_prob=0.6)
            driven = random_driven(gen, n_vertices)
            model = random_model(gen, int(gen.integers(1, 4)), int(gen.integers(1, 3)))
            scalar_report = analyze_scalar_constrained(model, graph, driven)
            if scalar_report.verdict is not Verdict.CONTROLLABLE:
                continue
            seen += 1
            assert verdict_bool(analyze_simo(model, graph, driven).verdict)
        assert seen >= 5


class TestLeaderControllability:
    def test_path_star_cycle_leaders(self):
        path = chain_graph(4)
        star = NetworkGraph(4, (Edge(1, 2), Edge(1, 3), Edge(1, 4)))
        cycle = NetworkGraph(
            4, (Edge(1, 2), Edge(2, 3), Edge(3, 4), Edge(1, 4))
        )
        for g in (path, star, cycle):
            for leader in range(1, 5):
                assert laplacian_leader_controllability(
                    g, leader, rng=RandomSource(11 * leader)
                )

    def test_directed_graph_rejected(self):
        g = NetworkGraph(2, (Edge(1, 2, DIRECTED),))
        with pytest.raises(PremiseError):
            laplacian_leader_controllability(g, 1)

    def test_disconnected_graph_rejected(self):
        g = NetworkGraph(3, (Edge(1, 2),))
        with pytest.raises(PremiseError, match="connected"):
            laplacian_leader_controllability(g, 1)

    def test_leader_out_of_range(self):
        with pytest.raises(ValueError):
            laplacian_leader_controllability(chain_graph(2), 0)
        with pytest.raises(ValueError):
            laplacian_leader_controllability(chain_graph(2), 3)

    def test_trials_must_be_positive(self):
        with pytest.raises(ValueError):
            laplacian_leader_controllability(chain_graph(2), 1, trials=0)


class TestAuxiliaryCondition:
    def test_chain_passes_and_matches_reachability(self):
        ok, detail = aux_condition_check(
            double_integrator(), chain_graph(3), first_driven()
        )
        assert ok
        assert detail.edge_pattern_holds and detail.vertex_pattern_holds
        assert detail.graph_reachable
        assert detail.num_edge_states == 2 * 2  # channels x edges
        assert detail.num_vertex_states == 2 * 3  # channels x vertices

    def test_hidden_cycle_fails_both_patterns(self):
        g = NetworkGraph(3, (Edge(2, 3),))
        ok, detail = aux_condition_check(double_integrator(), g, first_driven())
        assert not ok
        assert not detail.edge_pattern_holds and not detail.vertex_pattern_holds
        assert detail.edge_pattern_witness is not None
        assert not detail.graph_reachable

    def test_isolated_vertex_sits_outside_the_premise(self):
        # an unreachable vertex with no incoming influence forms no cycle, so
        # the cycle condition holds while reachability fails; the equivalence
        # only binds when every undriven vertex has incoming influence
        g = NetworkGraph(3, (Edge(1, 2),))
        ok, detail = aux_condition_check(double_integrator(), g, first_driven())
        assert ok
        assert not detail.graph_reachable

    def test_premise_violations_rejected(self):
        uncontrollable = SubsystemModel(np.eye(2), [1.0, 0.0], np.eye(2))
        with pytest.raises(PremiseError):
            aux_condition_check(uncontrollable, chain_graph(2), first_driven())
        multi = SubsystemModel(np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            aux_condition_check(multi, chain_graph(2), first_driven())

    def test_agreement_with_reachability_under_premise(self):
        gen = np.random.default_rng(99)
        model = double_integrator()
        for _ in range(20):
            n_vertices = int(gen.integers(2, 6))
            graph = random_graph(gen, n_vertices, edge_prob=0.5)
            driven = random_driven(gen, n_vertices)
            graph = ensure_incoming_influence(gen, graph, driven)
            ok, detail = aux_condition_check(model, graph, driven)
            assert ok == detail.graph_reachable


class TestRankCondition:
    def test_controllable_chain_reaches_full_rank(self):
        ok, details = rank_condition_check(
            double_integrator(), chain_graph(3), first_driven(), rng=RandomSource(2)
        )
        assert ok
        # the node matrix has one distinct eigenvalue (a double zero)
        assert len(details) == 1
        assert details[0].required == 6
        assert details[0].generic_rank == 6
        assert details[0].ok

    def test_unobservable_coupling_drops_rank(self):
        model = double_integrator(c=[[0.0, 1.0]])
        ok, details = rank_condition_check(
            model, chain_graph(4), first_driven(), rng=RandomSource(4)
        )
        assert not ok
        assert any(d.generic_rank < d.required for d in details)

    def test_single_vertex_reduces_to_the_node_pair(self):
        ok, details = rank_condition_check(
            double_integrator(), NetworkGraph(1), first_driven()
        )
        assert ok
        assert details[0].required == 2

    def test_multi_input_model_rejected(self):
        model = SubsystemModel(np.eye(2), np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            rank_condition_check(model, chain_graph(2), first_driven())
