"""Value models built from a free constant plus nonpositive per-step drawdowns.

A model predicts, for a proper sequence, c plus the sum of per-step advantage
terms A(prefix, action); improper sequences get exactly 0. Nonpositivity is
structural: every advantage is -log(1 + exp(z)) of an unconstrained raw score
z, so no projection or clipping is ever needed and the value difference
between a proper sequence and its extension is always <= 0.

Two families produce the raw score:

* tabular — one z per edge of a fixed prefix trie; queries at pairs that are
  not trie edges return the constant fallback advantage -B (a drawdown large
  enough that planners never prefer unobserved continuations);
* linear — z is a weight vector dotted with sparse indicator features of the
  (previous token, action) pair, optionally crossed with a bucketed prefix
  depth, plus a bias.

Parameters pack into one flat vector [c, z_0, z_1, ...]; ``value_gradient``
returns the exact analytic gradient in that layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping

import numpy as np

from . import serialize
from .errors import InvalidInputError
from .pathspace import ActionAlphabet, PathSeq, PrefixTrie, SeqClass

if TYPE_CHECKING:
    from .oracle import OptimalValues

TABULAR = "tabular"
LINEAR = "linear"

EDGE_PAIR = "edge_pair"
DEPTH_EDGE_PAIR = "depth_edge_pair"

# Prefix lengths 0, 1, 2 get their own feature bucket; everything deeper
# shares the last one.
DEPTH_BUCKETS = 4

# Raw score encoding an advantage of exactly 0 (a limit point of the
# transform): -log(1 + exp(-40)) ~ -4.2e-18.
Z_CLAMP = -40.0

DEFAULT_FALLBACK_B = 10.0


def advantage_transform(z: float) -> float:
    """-log(1 + exp(z)), computed without overflow for any float z."""
    return float(-np.logaddexp(0.0, z))


def sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def raw_from_advantage(a: float, clamp: float = Z_CLAMP) -> float:
    """Invert the transform: the z whose advantage is a (clamped near 0)."""
    if not math.isfinite(a) or a > 0.0:
        raise InvalidInputError(f"advantage must be a finite value <= 0, got {a!r}")
    if a == 0.0:
        return clamp
    z = math.log(math.expm1(-a))
    return max(z, clamp)


# Raw score whose advantage is -0.1: the default tabular initialization.
DEFAULT_RAW = raw_from_advantage(-0.1)


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Sparse indicator features on (previous token, action) pairs.

    Every (state, action) query activates exactly two coordinates: the pair
    indicator (with the no-previous-token case getting its own row, and the
    depth-crossed kind selecting the row block by bucketed prefix length)
    and the trailing bias coordinate.
    """

    kind: str
    alphabet: ActionAlphabet

    def __post_init__(self) -> None:
        if self.kind not in (EDGE_PAIR, DEPTH_EDGE_PAIR):
            raise InvalidInputError(f"unknown feature kind {self.kind!r}")

    @property
    def n_pairs(self) -> int:
        n = len(self.alphabet.tokens)
        return (n + 1) * n

    @property
    def dim(self) -> int:
        blocks = DEPTH_BUCKETS if self.kind == DEPTH_EDGE_PAIR else 1
        return blocks * self.n_pairs + 1

    def indices(self, s: PathSeq, a: str) -> tuple[int, int]:
        n = len(self.alphabet.tokens)
        prev = self.alphabet.index(s[-1]) if s else n
        pair = prev * n + self.alphabet.index(a)
        if self.kind == DEPTH_EDGE_PAIR:
            pair += min(len(s), DEPTH_BUCKETS - 1) * self.n_pairs
        return pair, self.dim - 1

    def vector(self, s: PathSeq, a: str) -> np.ndarray:
        phi = np.zeros(self.dim)
        for i in self.indices(s, a):
            phi[i] += 1.0
        return phi


@dataclass(frozen=True, eq=False)
class AdvantageModel:
    """Shared surface of both families; see module docstring for semantics."""

    alphabet: ActionAlphabet
    c: float

    family = ""

    # -- family hooks ------------------------------------------------------

    def raw_z(self, s: PathSeq, a: str) -> float | None:
        """Raw score at (s, a), or None when the query falls back to -B."""
        raise NotImplementedError

    def step_param_indices(self, s: PathSeq, a: str) -> tuple[int, ...] | None:
        """Packed-vector slots whose sum is raw_z, or None on fallback."""
        raise NotImplementedError

    @property
    def fallback_advantage(self) -> float:
        raise NotImplementedError

    @property
    def n_params(self) -> int:
        raise NotImplementedError

    def params_vector(self) -> np.ndarray:
        raise NotImplementedError

    def with_params(self, vec: np.ndarray) -> "AdvantageModel":
        raise NotImplementedError

    # -- shared ------------------------------------------------------------

    def with_random_params(
        self,
        rng: np.random.Generator,
        c_range: tuple[float, float] = (0.0, 1.0),
        z_scale: float = 0.5,
    ) -> "AdvantageModel":
        """Random start near the default: c uniform, raw scores jittered."""
        vec = self.params_vector()
        vec[0] = rng.uniform(*c_range)
        vec[1:] = rng.normal(DEFAULT_RAW, z_scale, size=vec.size - 1)
        return self.with_params(vec)


@dataclass(frozen=True, eq=False)
class TabularAdvantage(AdvantageModel):
    """One raw score per trie edge; -B off the trie."""

    trie: PrefixTrie = None
    raw: np.ndarray = None
    fallback_B: float = DEFAULT_FALLBACK_B
    _slot: Mapping[tuple[PathSeq, str], int] = field(
        init=False, repr=False, compare=False, default=None
    )

    family = TABULAR

    def __post_init__(self) -> None:
        edges = [(s, a) for s, a, _ in self.trie.iter_edges()]
        raw = np.asarray(self.raw, dtype=float)
        if raw.shape != (len(edges),):
            raise InvalidInputError(
                f"raw must have one score per trie edge ({len(edges)}), got shape {raw.shape}"
            )
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "_slot", {edge: i for i, edge in enumerate(edges)})

    @classmethod
    def default(
        cls,
        trie: PrefixTrie,
        c: float = 0.0,
        fallback_B: float = DEFAULT_FALLBACK_B,
    ) -> "TabularAdvantage":
        n_edges = sum(len(trie.children(node)) for node in trie.nodes)
        return cls(
            alphabet=trie.alphabet,
            c=c,
            trie=trie,
            raw=np.full(n_edges, DEFAULT_RAW),
            fallback_B=fallback_B,
        )

    @classmethod
    def from_oracle(
        cls, ov: "OptimalValues", fallback_B: float = DEFAULT_FALLBACK_B
    ) -> "TabularAdvantage":
        """Clamped encoding of exact optimal values: c is the optimal yield
        and each edge's raw score inverts the exact drawdown (zeros clamp)."""
        raw = [
            raw_from_advantage(ov.a_star[(s, a)])
            for s, a, _ in ov.trie.iter_edges()
        ]
        return cls(
            alphabet=ov.trie.alphabet,
            c=ov.j_star,
            trie=ov.trie,
            raw=np.array(raw),
            fallback_B=fallback_B,
        )

    @property
    def edges(self) -> tuple[tuple[PathSeq, str], ...]:
        return tuple(self._slot)

    def raw_z(self, s: PathSeq, a: str) -> float | None:
        slot = self._slot.get((s, a))
        return None if slot is None else float(self.raw[slot])

    def step_param_indices(self, s: PathSeq, a: str) -> tuple[int, ...] | None:
        slot = self._slot.get((s, a))
        return None if slot is None else (1 + slot,)

    @property
    def fallback_advantage(self) -> float:
        return -self.fallback_B

    @property
    def n_params(self) -> int:
        return 1 + self.raw.size

    def params_vector(self) -> np.ndarray:
        return np.concatenate(([self.c], self.raw))

    def with_params(self, vec: np.ndarray) -> "TabularAdvantage":
        vec = np.asarray(vec, dtype=float)
        return replace(self, c=float(vec[0]), raw=vec[1:].copy())


@dataclass(frozen=True, eq=False)
class LinearAdvantage(AdvantageModel):
    """Raw score is weights dot sparse features; defined for every query."""

    feature_map: FeatureMap = None
    weights: np.ndarray = None

    family = LINEAR

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.shape != (self.feature_map.dim,):
            raise InvalidInputError(
                f"weights must match feature dim {self.feature_map.dim}, got shape {weights.shape}"
            )
        object.__setattr__(self, "weights", weights)

    @classmethod
    def default(
        cls, alphabet: ActionAlphabet, kind: str = EDGE_PAIR, c: float = 0.0
    ) -> "LinearAdvantage":
        fm = FeatureMap(kind=kind, alphabet=alphabet)
        return cls(alphabet=alphabet, c=c, feature_map=fm, weights=np.zeros(fm.dim))

    def raw_z(self, s: PathSeq, a: str) -> float | None:
        i, j = self.feature_map.indices(s, a)
        return float(self.weights[i] + self.weights[j])

    def step_param_indices(self, s: PathSeq, a: str) -> tuple[int, ...] | None:
        i, j = self.feature_map.indices(s, a)
        return (1 + i, 1 + j)

    @property
    def fallback_advantage(self) -> float:
        raise InvalidInputError("linear models never fall back")

    @property
    def n_params(self) -> int:
        return 1 + self.weights.size

    def params_vector(self) -> np.ndarray:
        return np.concatenate(([self.c], self.weights))

    def with_params(self, vec: np.ndarray) -> "LinearAdvantage":
        vec = np.asarray(vec, dtype=float)
        return replace(self, c=float(vec[0]), weights=vec[1:].copy())


def predict_advantage(model: AdvantageModel, s: PathSeq, a: str) -> float:
    model.alphabet.require_token(a)
    s = model.alphabet.require_seq(s)
    z = model.raw_z(s, a)
    if z is None:
        return model.fallback_advantage
    return advantage_transform(z)


def predict_value(model: AdvantageModel, seq: PathSeq) -> float:
    """c plus the left-to-right sum of step advantages; 0 if improper."""
    seq = model.alphabet.require_seq(seq)
    if not model.alphabet.is_proper(seq):
        return 0.0
    total = model.c
    for k in range(len(seq)):
        total += predict_advantage(model, seq[:k], seq[k])
    return total


def value_gradient(model: AdvantageModel, seq: PathSeq) -> np.ndarray:
    """d predict_value / d params in packed layout; zero for improper seq."""
    seq = model.alphabet.require_seq(seq)
    grad = np.zeros(model.n_params)
    if not model.alphabet.is_proper(seq):
        return grad
    grad[0] = 1.0
    for k in range(len(seq)):
        prefix, a = seq[:k], seq[k]
        idx = model.step_param_indices(prefix, a)
        if idx is None:
            continue
        coef = -sigmoid(model.raw_z(prefix, a))
        for i in idx:
            grad[i] += coef
    return grad


def model_to_json(model: AdvantageModel) -> dict:
    if isinstance(model, TabularAdvantage):
        entries = [
            {"state": list(s), "action": a, "z": float(model.raw[i])}
            for i, (s, a) in enumerate(model.edges)
        ]
        raw = {"entries": entries}
        fallback = model.fallback_B
    elif isinstance(model, LinearAdvantage):
        raw = {
            "feature_kind": model.feature_map.kind,
            "weights": [float(w) for w in model.weights],
        }
        fallback = DEFAULT_FALLBACK_B
    else:
        raise InvalidInputError(f"unknown model type {type(model).__name__}")
    return {
        "c": float(model.c),
        "family": model.family,
        "raw": raw,
        "alphabet": model.alphabet.to_json(),
        "fallback_B": fallback,
    }


def model_from_json(obj: dict) -> AdvantageModel:
    try:
        alphabet = ActionAlphabet.from_json(obj["alphabet"])
        family = obj["family"]
        c = float(obj["c"])
        raw = obj["raw"]
    except (KeyError, TypeError) as exc:
        raise InvalidInputError(f"malformed model object: {exc}") from exc
    if family == TABULAR:
        try:
            entries = [
                (tuple(e["state"]), e["action"], float(e["z"]))
                for e in raw["entries"]
            ]
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed tabular raw entries: {exc}") from exc
        scores = {(s, a): z for s, a, z in entries}
        nodes = {s for s, _, _ in entries} | {s + (a,) for s, a, _ in entries}
        members = [n for n in nodes if alphabet.classify(n) is SeqClass.COMPLETE]
        trie = PrefixTrie.build(alphabet, members)
        edges = [(s, a) for s, a, _ in trie.iter_edges()]
        if set(edges) != set(scores):
            raise InvalidInputError("tabular raw entries do not form a prefix trie")
        return TabularAdvantage(
            alphabet=alphabet,
            c=c,
            trie=trie,
            raw=np.array([scores[e] for e in edges]),
            fallback_B=float(obj.get("fallback_B", DEFAULT_FALLBACK_B)),
        )
    if family == LINEAR:
        try:
            kind = raw["feature_kind"]
            weights = np.array([float(w) for w in raw["weights"]])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed linear raw block: {exc}") from exc
        fm = FeatureMap(kind=kind, alphabet=alphabet)
        return LinearAdvantage(alphabet=alphabet, c=c, feature_map=fm, weights=weights)
    raise InvalidInputError(f"unknown model family {family!r}")


def save_model(model: AdvantageModel, path: str) -> None:
    serialize.dump_json(model_to_json(model), path)


def load_model(path: str) -> AdvantageModel:
    return model_from_json(serialize.load_json(path))
