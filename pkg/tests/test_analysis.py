import pytest
from src.schemas.schemas import ICStatus, Lemma1Violation, RunReport
from src.services.analysis_services import AnalysisService, _candidates
from src.services.harness_services import HarnessService
from tests.helpers import SHIPPED_SCENARIOS, make_config

MUTATION_STRATEGY = {
    "3": {"kind": "custom-table", "forward_table": {"0": {"1": "m2", "2": "m2", "4": "m2"}}}
}


def walk(node):
    yield node
    for child in (node.left, node.right):
        if child is not None:
            yield from walk(child)


class TestTree:
    def test_five_party_root(self):
        root = AnalysisService.build_tree(5, 2, True, 2, 2)
        assert (root.depth, root.honest_backups, root.dishonest_backups) == (1, 2, 2)
        assert root.left.honest and not root.right.honest
        assert (root.left.honest_backups, root.left.dishonest_backups) == (1, 2)
        assert (root.right.honest_backups, root.right.dishonest_backups) == (2, 1)
        assert root.left.left is None

    def test_single_round(self):
        root = AnalysisService.build_tree(3, 1, True, 2, 0)
        assert root.left is None and root.right is None

    @pytest.mark.parametrize("n, f, honest, dishonest", [(7, 3, 3, 3), (8, 4, 3, 4), (6, 3, 5, 0)])
    def test_children_counts(self, n, f, honest, dishonest):
        for node in walk(AnalysisService.build_tree(n, f, True, honest, dishonest)):
            assert node.honest_backups + node.dishonest_backups == n - node.depth
            assert node.depth <= f
            for child in (node.left, node.right):
                if child is not None:
                    assert child.honest_backups + child.dishonest_backups == n - node.depth - 1
                    assert child.depth == node.depth + 1

    def test_inconsistent_counts(self):
        with pytest.raises(ValueError):
            AnalysisService.build_tree(5, 2, True, 2, 1)

    def test_tree_from_config(self):
        config = make_config(n=5, f=2, dishonest=[0, 4])
        root = AnalysisService.tree_from_config(config)
        assert not root.honest
        assert (root.honest_backups, root.dishonest_backups) == (3, 1)


class TestSafePath:
    @pytest.mark.parametrize("f", [1, 2, 3])
    def test_honest_root_at_bound(self, f):
        tree = AnalysisService.build_tree(2 * f + 1, f, True, f, f)
        path = AnalysisService.find_safe_path(tree, f)
        assert path.safe_node is tree
        assert path.intermediate_node is tree
        assert path.ending_node.depth == max(f - 1, 1)

    @pytest.mark.parametrize("f", [3, 4])
    def test_dishonest_root_at_bound(self, f):
        tree = AnalysisService.build_tree(2 * f + 1, f, False, f + 1, f - 1)
        path = AnalysisService.find_safe_path(tree, f)
        assert path.safe_node is tree.left
        assert path.intermediate_node.path == "LL"
        assert path.ending_node.depth == 3

    def test_shallow_dishonest_root_uses_clean_leaf(self):
        tree = AnalysisService.build_tree(5, 2, False, 3, 1)
        path = AnalysisService.find_safe_path(tree, 2)
        assert path.safe_node is tree.right
        assert path.safe_node.dishonest_backups == 0

    def test_single_depth_dishonest_root(self):
        tree = AnalysisService.build_tree(3, 1, False, 2, 0)
        path = AnalysisService.find_safe_path(tree, 1)
        assert path is not None and path.safe_node is tree

    def test_alternation_after_intermediate(self):
        tree = AnalysisService.build_tree(9, 4, True, 4, 4)
        path = AnalysisService.find_safe_path(tree, 4)
        assert path.steps == ("R", "L")
        assert path.ending_node.depth == 3

    @pytest.mark.parametrize("f", [4, 5])
    def test_late_safe_node_without_extra_honest_node(self, f):
        tree = AnalysisService.build_tree(2 * f, f, True, f - 1, f)
        path = AnalysisService.find_safe_path(tree, f)
        assert path.safe_node.depth == 4
        assert path.safe_node.path == "RRL"

    def test_no_path_at_small_even_size(self):
        tree = AnalysisService.build_tree(4, 2, True, 1, 2)
        assert AnalysisService.find_safe_path(tree, 2) is None


class TestICVerdict:
    def test_honest_run(self, shipped_report, shipped_config):
        report = shipped_report("fig6a")
        verdict = AnalysisService.check_ic(report, shipped_config("fig6a"))
        assert (verdict.ic1, verdict.ic2) == (ICStatus.HOLDS, ICStatus.HOLDS)
        assert verdict.consensus and verdict.witnesses == []

    def test_dishonest_primary(self, shipped_report):
        verdict = AnalysisService.check_ic(shipped_report("fig6b"))
        assert (verdict.ic1, verdict.ic2) == (ICStatus.HOLDS, ICStatus.NOT_APPLICABLE)
        assert verdict.expected is None

    def test_attack_has_witness(self, shipped_report):
        verdict = AnalysisService.check_ic(shipped_report("attack-n4f2"))
        assert verdict.ic2 == ICStatus.VIOLATED
        assert [(w.node, w.output) for w in verdict.witnesses] == [(1, b"m2")]
        assert verdict.expected == b"m1"

    def test_aborted_run_is_indeterminate(self):
        config = make_config(
            n=4,
            f=2,
            dishonest=[1],
            retry_bound=0,
            strategies={"1": {"kind": "equivocate", "primary_table": {"0>1": {"2": "m2"}}}},
        )
        verdict = AnalysisService.check_ic(HarnessService.run(config), config)
        assert verdict.ic1 == verdict.ic2 == ICStatus.INDETERMINATE

    @pytest.mark.parametrize("name", SHIPPED_SCENARIOS)
    def test_soundness(self, shipped_report, name):
        report = shipped_report(name)
        verdict = AnalysisService.check_ic(report)
        honest = [o for o in report.outputs if o.honest and o.role == "lieutenant"]
        if report.initial_primary not in report.dishonest:
            all_match = all(o.message == report.honest_message for o in honest)
            assert (verdict.ic1 == ICStatus.HOLDS and verdict.ic2 == ICStatus.HOLDS) == all_match


class TestLemmaAudit:
    @pytest.mark.parametrize("name", SHIPPED_SCENARIOS)
    def test_shipped_runs_are_clean(self, shipped_report, name):
        assert AnalysisService.audit_lemma1(shipped_report(name)) == []

    def test_deep_run_with_forger_is_clean(self):
        config = make_config(n=5, f=3, dishonest=[3], strategies=MUTATION_STRATEGY)
        report = HarnessService.run(config)
        assert (report.forgery_attempts, report.retries, report.qds_invocations) == (3, 3, 63)
        assert AnalysisService.audit_lemma1(report) == []

    def test_hand_built_report(self):
        report = RunReport.model_validate(
            {
                "n": 4,
                "f": 3,
                "initial_primary": 0,
                "dishonest": [2],
                "honest_message": "m1",
                "verdict": "completed",
                "qds_invocations": 0,
                "retries": 0,
                "forgery_attempts": 0,
                "rounds": [
                    {"route": "0", "depth": 1, "primary": 0, "backups": [1, 2, 3],
                     "delivered": {"1": "m1", "2": "m1", "3": "m1"}},
                    {"route": "0>2", "depth": 2, "primary": 2, "backups": [1, 3],
                     "delivered": {"1": "m2", "3": "m1"}},
                    {"route": "0>2>1", "depth": 3, "primary": 1, "backups": [3],
                     "delivered": {"3": "m2"}},
                    {"route": "0>2>3", "depth": 3, "primary": 3, "backups": [1],
                     "delivered": {"1": "m1"}},
                ],
            }
        )
        assert AnalysisService.audit_lemma1(report) == [
            Lemma1Violation(
                round_a="0", dishonest_b=2, honest_c=1, expected=b"m1", observed=b"m2"
            )
        ]
        # Con el primario de la ronda A deshonesto no hay nada que auditar
        dishonest_root = report.model_copy(update={"dishonest": [0, 2]})
        assert AnalysisService.audit_lemma1(dishonest_root) == []

    def test_disabled_verification_is_detected(self):
        config = make_config(n=5, f=3, dishonest=[3], strategies=MUTATION_STRATEGY)
        report = HarnessService.run(config, verify_signatures=False)
        violations = AnalysisService.audit_lemma1(report)
        assert violations
        assert all(v.round_a == "0" and v.dishonest_b == 3 for v in violations)
        assert {v.honest_c for v in violations} == {1, 2, 4}
        assert all((v.expected, v.observed) == (b"m1", b"m2") for v in violations)


class TestStrategySearch:
    def test_three_party_exhaustive(self):
        report = AnalysisService.strategy_search(3, 1, budget=1000)
        assert report.exhaustive and not report.budget_exhausted
        assert report.evaluated == 14
        assert report.violations == 0 and report.aborted == 0
        assert report.witness is None

    def test_scripted_family_finds_a_witness(self):
        report = AnalysisService.strategy_search(4, 2, families=("scripted",), budget=10)
        assert report.evaluated == 2
        assert report.violations == 2
        assert report.worst.violated
        replay = HarnessService.run(report.witness)
        assert AnalysisService.check_ic(replay, report.witness) == report.worst

    @pytest.mark.parametrize("n, budget, exhaustive", [(3, 1000, True), (4, 20, False)])
    def test_honest_message_varies(self, n, budget, exhaustive):
        candidates, complete, space = _candidates(
            n, 1, (b"m1", b"m2"), ("equivocation",), budget, seed=2, p=8
        )
        assert complete == exhaustive
        assert space == {3: 14, 4: 24}[n]
        assert {config.honest_message for config in candidates} == {b"m1", b"m2"}

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            AnalysisService.strategy_search(3, 1, families=("bribery",))

    def test_sampling_when_space_exceeds_budget(self):
        report = AnalysisService.strategy_search(4, 1, budget=5, seed=3)
        assert not report.exhaustive and report.budget_exhausted
        assert report.evaluated == 5

    @pytest.mark.slow
    def test_five_party_sampled(self):
        report = AnalysisService.strategy_search(5, 2, budget=10_000, seed=0)
        assert report.evaluated == 10_000
        assert report.violations == 0
        assert report.aborted == 0
