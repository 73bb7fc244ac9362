"""Backward-induction optimal values and their enumeration cross-check."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tarpath.errors import InvalidInstanceError
from tarpath.instance import NoiseModel, PathDistribution, PLInstance, YieldTable
from tarpath.oracle import (
    check_decomposition,
    compute_optimal,
    enumeration_advantage,
    enumeration_value,
    greedy_policy,
    max_bellman_violation,
    oracle_to_json,
    save_oracle,
    transition_operator,
)
from tarpath.pathspace import EMPTY, ActionAlphabet, random_improper
from tarpath.reduction import ReducedMDP, rollout_greedy
from tarpath.serialize import load_json

from .strategies import instances


class TestHandValues:
    def test_e1(self, e1):
        ov = compute_optimal(e1)
        assert ov.j_star == 0.8
        assert ov.value_at(("b",)) == 0.3
        assert ov.advantage_at(EMPTY, "a") == 0.0
        assert ov.advantage_at(EMPTY, "b") == -0.5

    def test_e2(self, e2):
        ov = compute_optimal(e2)
        assert ov.j_star == 0.9
        assert ov.value_at(("a",)) == 0.9
        assert ov.value_at(("a", "b")) == 0.2
        assert ov.value_at(("b",)) == 0.5
        assert ov.advantage_at(("a",), "b") == pytest.approx(-0.7)
        assert ov.advantage_at(EMPTY, "END") == pytest.approx(-0.9)
        assert ov.advantage_at(EMPTY, "b") == pytest.approx(-0.4)

    def test_off_trie_lookups_are_zero(self, e2):
        ov = compute_optimal(e2)
        assert ov.value_at(("b", "b")) == 0.0
        assert ov.advantage_at(("b", "b"), "a") == 0.0

    def test_empty_support_raises(self):
        alphabet = ActionAlphabet(tokens=("a", "END"))
        inst = PLInstance(
            alphabet=alphabet,
            yields=YieldTable({}),
            path_dist=PathDistribution(paths=(), weights=()),
            noise=NoiseModel.noiseless(),
        )
        with pytest.raises(InvalidInstanceError):
            compute_optimal(inst)


class TestInvariants:
    @given(instances())
    def test_advantages_nonpositive(self, inst):
        ov = compute_optimal(inst)
        assert all(a <= 0.0 for a in ov.a_star.values())

    @given(instances())
    def test_terminal_advantage_zero_on_support(self, inst):
        # committing to the terminal at a support path costs nothing
        ov = compute_optimal(inst)
        for path in inst.psi:
            assert ov.advantage_at(path, inst.alphabet.terminal) == 0.0

    @given(instances())
    def test_bellman_feasibility_exact(self, inst):
        assert max_bellman_violation(compute_optimal(inst)) == 0.0

    @given(instances())
    def test_decomposition_residual_zero(self, inst):
        ov = compute_optimal(inst)
        for node in inst.trie.nodes:
            assert abs(check_decomposition(ov, node)) <= 1e-12

    @given(instances(), st.integers(min_value=0, max_value=2**32 - 1))
    def test_decomposition_on_improper(self, inst, seed):
        ov = compute_optimal(inst)
        rng = np.random.default_rng(seed)
        for _ in range(10):
            seq = random_improper(inst.alphabet, rng)
            assert check_decomposition(ov, seq) == 0.0

    @given(instances())
    def test_j_star_is_max_yield(self, inst):
        ov = compute_optimal(inst)
        assert ov.j_star == max(inst.yields[p] for p in inst.psi)


class TestEnumerationAgreement:
    @given(instances())
    def test_values_equal_exactly(self, inst):
        ov = compute_optimal(inst)
        for node in inst.trie.nodes:
            assert ov.v_star[node] == enumeration_value(inst, node)

    @given(instances())
    def test_advantages_equal_exactly_off_support(self, inst):
        ov = compute_optimal(inst)
        for node in inst.trie.nodes:
            if node in inst.yields:
                continue
            for a in inst.alphabet.tokens:
                assert ov.a_star[(node, a)] == enumeration_advantage(inst, node, a)

    def test_enumeration_off_trie(self, e2):
        assert enumeration_value(e2, ("b", "a")) == 0.0
        assert enumeration_value(e2, EMPTY) == 0.9


class TestTransitionOperator:
    def test_backup_with_mapping(self, e2):
        ov = compute_optimal(e2)
        # at a support path the reward fires and the successor is off-trie
        assert transition_operator(ov.v_star, e2, ("b", "END"), "a") == 0.5
        # at an interior node the reward is zero and the child value carries
        assert transition_operator(ov.v_star, e2, ("a",), "a") == 0.9

    def test_backup_with_callable(self, e2):
        assert transition_operator(lambda s: 1.0, e2, ("a",), "b") == 1.0


class TestGreedyPolicy:
    @given(instances())
    def test_rollout_attains_j_star(self, inst):
        ov = compute_optimal(inst)
        mdp = ReducedMDP(inst)
        result = rollout_greedy(greedy_policy(ov), mdp, max_steps=inst.trie.depth + 1)
        assert not result.truncated
        assert inst.yield_of(result.path) == ov.j_star

    def test_ties_resolve_by_declaration_order(self):
        alphabet = ActionAlphabet(tokens=("a", "b", "END"))
        inst = PLInstance(
            alphabet=alphabet,
            yields=YieldTable({("a", "END"): 0.5, ("b", "END"): 0.5}),
            path_dist=PathDistribution.uniform([("a", "END"), ("b", "END")]),
            noise=NoiseModel.noiseless(),
        )
        policy = greedy_policy(compute_optimal(inst))
        assert policy[EMPTY] == "a"


class TestSerialization:
    def test_dump_structure(self, tmp_path, e2):
        ov = compute_optimal(e2)
        out = tmp_path / "oracle.json"
        save_oracle(ov, str(out))
        obj = load_json(str(out))
        assert obj["j_star"] == 0.9
        assert len(obj["nodes"]) == len(e2.trie)
        root = next(n for n in obj["nodes"] if n["state"] == [])
        assert root["v"] == 0.9
        assert root["adv"]["b"] == pytest.approx(-0.4)
        assert set(root["q"]) == set(e2.alphabet.tokens)

    def test_json_matches_maps(self, e2):
        ov = compute_optimal(e2)
        obj = oracle_to_json(ov)
        for entry in obj["nodes"]:
            node = tuple(entry["state"])
            assert entry["v"] == ov.v_star[node]
            for a, q in entry["q"].items():
                assert q == ov.q_star[(node, a)]
