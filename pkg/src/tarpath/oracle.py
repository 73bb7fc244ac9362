"""Exact ground-truth values on small instances.

Backward induction over the prefix trie computes, for every trie state s:

* ``v_star``: the best yield reachable from s (over all completions,
  including s itself when it is a support path), zero one step off the trie;
* ``q_star``: expected immediate reward plus the optimal value of the
  successor, for every action;
* ``a_star = q_star - v_star``: the drawdown of committing to an action,
  nonpositive everywhere.

A second, deliberately independent implementation recomputes the same
quantities by enumerating support-path extensions directly (no trie, no
recursion); both take maxima over the same finite set of stored yields, so
agreement is exact in floating point, not merely approximate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from . import serialize
from .errors import InvalidInstanceError
from .instance import PLInstance
from .pathspace import EMPTY, PathSeq, PrefixTrie

ValueMap = Mapping[PathSeq, float] | Callable[[PathSeq], float]


@dataclass(frozen=True, eq=False)
class OptimalValues:
    """Exact optimal values over a trie; off-trie states implicitly carry 0."""

    trie: PrefixTrie
    v_star: Mapping[PathSeq, float]
    q_star: Mapping[tuple[PathSeq, str], float]
    a_star: Mapping[tuple[PathSeq, str], float]
    j_star: float

    def value_at(self, seq: PathSeq) -> float:
        return self.v_star.get(tuple(seq), 0.0)

    def advantage_at(self, seq: PathSeq, token: str) -> float:
        return self.a_star.get((tuple(seq), token), 0.0)


def _lookup(values: ValueMap, seq: PathSeq) -> float:
    if callable(values):
        return values(seq)
    return values.get(seq, 0.0)


def transition_operator(
    values: ValueMap, instance: PLInstance, s: PathSeq, a: str
) -> float:
    """Exact one-step backup: expected reward at s plus the value of s + a."""
    instance.alphabet.require_token(a)
    s = instance.alphabet.require_seq(s)
    return instance.yields.get(s, 0.0) + _lookup(values, s + (a,))


def compute_optimal(instance: PLInstance) -> OptimalValues:
    if not len(instance.yields):
        raise InvalidInstanceError("optimal values need a nonempty path support")
    trie = instance.trie
    tokens = instance.alphabet.tokens

    v_star: dict[PathSeq, float] = {}
    for node in trie.nodes_deepest_first():
        best = instance.yields.get(node, 0.0)
        for a in trie.children(node):
            child = v_star[node + (a,)]
            if child > best:
                best = child
        v_star[node] = best

    q_star: dict[tuple[PathSeq, str], float] = {}
    a_star: dict[tuple[PathSeq, str], float] = {}
    for node in trie.nodes:
        reward = instance.yields.get(node, 0.0)
        for a in tokens:
            q = reward + v_star.get(node + (a,), 0.0)
            q_star[(node, a)] = q
            a_star[(node, a)] = q - v_star[node]

    return OptimalValues(
        trie=trie,
        v_star=v_star,
        q_star=q_star,
        a_star=a_star,
        j_star=v_star[EMPTY],
    )


def check_decomposition(ov: OptimalValues, seq: Iterable[str]) -> float:
    """Residual of the additive value identity at one sequence.

    Proper sequences should satisfy v(seq) = j_star + sum of the per-step
    drawdowns along seq; improper sequences should carry value 0. Returns
    the signed difference (0 up to float rounding when the identity holds).
    """
    alphabet = ov.trie.alphabet
    seq = alphabet.require_seq(seq)
    if not alphabet.is_proper(seq):
        return ov.value_at(seq) - 0.0
    total = ov.j_star
    for k in range(len(seq)):
        total += ov.advantage_at(seq[:k], seq[k])
    return ov.value_at(seq) - total


def greedy_policy(ov: OptimalValues) -> dict[PathSeq, str]:
    """First declaration-order maximizer of q_star at every trie node."""
    policy: dict[PathSeq, str] = {}
    for node in ov.trie.nodes:
        best_a = None
        best_q = -float("inf")
        for a in ov.trie.alphabet.tokens:
            q = ov.q_star[(node, a)]
            if q > best_q:
                best_q = q
                best_a = a
        policy[node] = best_a
    return policy


def max_bellman_violation(ov: OptimalValues) -> float:
    """Largest positive part of (backup minus value) over trie states/actions.

    Feasibility of the optimal values means this is exactly 0: the backup
    never exceeds the value it backs up to.
    """
    worst = 0.0
    for (node, _a), q in ov.q_star.items():
        excess = q - ov.v_star[node]
        if excess > worst:
            worst = excess
    return worst


def enumeration_value(instance: PLInstance, seq: Iterable[str]) -> float:
    """Trie-free cross-check: scan every support path for a prefix match."""
    seq = instance.alphabet.require_seq(seq)
    best = 0.0
    for path, value in instance.yields.items():
        if path[: len(seq)] == seq and value > best:
            best = value
    return best


def enumeration_advantage(instance: PLInstance, seq: Iterable[str], token: str) -> float:
    """Drawdown via direct enumeration: value after committing minus before."""
    instance.alphabet.require_token(token)
    seq = instance.alphabet.require_seq(seq)
    return enumeration_value(instance, seq + (token,)) - enumeration_value(instance, seq)


def oracle_to_json(ov: OptimalValues) -> dict:
    tokens = ov.trie.alphabet.tokens
    nodes = []
    for node in ov.trie.nodes:
        nodes.append(
            {
                "state": list(node),
                "v": ov.v_star[node],
                "q": {a: ov.q_star[(node, a)] for a in tokens},
                "adv": {a: ov.a_star[(node, a)] for a in tokens},
            }
        )
    return {"j_star": ov.j_star, "nodes": nodes}


def save_oracle(ov: OptimalValues, path: str) -> None:
    serialize.dump_json(oracle_to_json(ov), path)
