"""Path-learning problem instances and dataset sampling.

An instance bundles an action alphabet, a finite table of complete paths with
their expected yields in [0, 1], a sampling distribution over those paths, and
a noise model for observed yields. Datasets are i.i.d. (path, noisy-yield)
pairs; the noise models all preserve the conditional mean except the
truncated-Gaussian variant, which is kept for robustness experiments only and
excluded from any identity checking that needs an analytic variance.
"""

from __future__ import annotations

import itertools
import math
import string
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping

import numpy as np

from . import serialize
from .errors import (
    GeneratorError,
    InvalidInputError,
    InvalidInstanceError,
    UnsupportedNoiseError,
)
from .pathspace import ActionAlphabet, PathSeq, PrefixTrie, SeqClass

WEIGHT_SUM_TOL = 1e-12

# Above this candidate count the generator switches from exact enumeration to
# rejection sampling over depth-weighted random paths.
ENUMERATION_LIMIT = 200_000


@dataclass(frozen=True, eq=False)
class YieldTable:
    """Finite map from complete paths to expected yields in [0, 1]."""

    entries: Mapping[PathSeq, float]

    def __post_init__(self) -> None:
        entries = {tuple(k): float(v) for k, v in dict(self.entries).items()}
        for path, value in entries.items():
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise InvalidInputError(f"yield for {path!r} must be in [0,1], got {value!r}")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, path: PathSeq) -> bool:
        return tuple(path) in self.entries

    def __getitem__(self, path: PathSeq) -> float:
        return self.entries[tuple(path)]

    def get(self, path: PathSeq, default: float = 0.0) -> float:
        return self.entries.get(tuple(path), default)

    @property
    def paths(self) -> tuple[PathSeq, ...]:
        return tuple(self.entries)

    def items(self):
        return self.entries.items()


@dataclass(frozen=True, eq=False)
class PathDistribution:
    """Probability weights over a finite set of complete paths."""

    paths: tuple[PathSeq, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        paths = tuple(tuple(p) for p in self.paths)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "paths", paths)
        object.__setattr__(self, "weights", weights)
        if len(paths) != len(weights):
            raise InvalidInputError("paths and weights must have equal length")
        if len(set(paths)) != len(paths):
            raise InvalidInputError("distribution paths must be distinct")
        for w in weights:
            if not math.isfinite(w) or w < 0.0:
                raise InvalidInputError(f"weights must be nonnegative, got {w!r}")
        if paths and abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
            raise InvalidInputError(
                f"weights must sum to 1 within {WEIGHT_SUM_TOL}, got {math.fsum(weights)!r}"
            )

    @classmethod
    def uniform(cls, paths: Iterable[PathSeq]) -> "PathDistribution":
        paths = tuple(tuple(p) for p in paths)
        n = len(paths)
        return cls(paths=paths, weights=tuple([1.0 / n] * n) if n else ())

    def weight_of(self, path: PathSeq) -> float:
        try:
            return self.weights[self.paths.index(tuple(path))]
        except ValueError:
            return 0.0

    @property
    def support(self) -> tuple[PathSeq, ...]:
        return tuple(p for p, w in zip(self.paths, self.weights) if w > 0.0)

    def is_full_support_on(self, paths: Iterable[PathSeq]) -> bool:
        return set(self.support) == {tuple(p) for p in paths}

    def items(self):
        return zip(self.paths, self.weights)


@dataclass(frozen=True)
class NoiseModel:
    """Conditional yield-observation law with mean J and support in [0, 1].

    ``noiseless`` returns the mean itself; ``bernoulli`` draws {0,1} with
    success probability equal to the mean (variance J(1-J), closed form);
    ``truncated_gaussian`` adds N(0, stddev^2) and rejects outside [0, 1] —
    this shifts the conditional mean slightly, so it has no analytic variance
    hook and is excluded from exact-expectation checks.
    """

    NOISELESS = "noiseless"
    BERNOULLI = "bernoulli"
    TRUNCATED_GAUSSIAN = "truncated_gaussian"

    kind: str
    stddev: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (self.NOISELESS, self.BERNOULLI, self.TRUNCATED_GAUSSIAN):
            raise InvalidInputError(f"unknown noise kind {self.kind!r}")
        if self.kind == self.TRUNCATED_GAUSSIAN:
            if self.stddev is None or not math.isfinite(self.stddev) or self.stddev <= 0:
                raise InvalidInputError("truncated_gaussian noise needs stddev > 0")
        elif self.stddev is not None:
            raise InvalidInputError(f"{self.kind} noise takes no stddev")

    @classmethod
    def noiseless(cls) -> "NoiseModel":
        return cls(kind=cls.NOISELESS)

    @classmethod
    def bernoulli(cls) -> "NoiseModel":
        return cls(kind=cls.BERNOULLI)

    @classmethod
    def truncated_gaussian(cls, stddev: float) -> "NoiseModel":
        return cls(kind=cls.TRUNCATED_GAUSSIAN, stddev=stddev)

    @property
    def has_analytic_variance(self) -> bool:
        return self.kind in (self.NOISELESS, self.BERNOULLI)

    def sample(self, rng: np.random.Generator, mean: float) -> float:
        if self.kind == self.NOISELESS:
            return float(mean)
        if self.kind == self.BERNOULLI:
            return 1.0 if rng.random() < mean else 0.0
        while True:
            y = mean + self.stddev * rng.standard_normal()
            if 0.0 <= y <= 1.0:
                return float(y)

    def conditional_variance(self, mean: float) -> float:
        if self.kind == self.NOISELESS:
            return 0.0
        if self.kind == self.BERNOULLI:
            return mean * (1.0 - mean)
        raise UnsupportedNoiseError(
            "truncated_gaussian noise has no analytic conditional variance; "
            "estimate it numerically instead"
        )

    def to_json(self) -> dict:
        obj = {"kind": self.kind}
        if self.stddev is not None:
            obj["stddev"] = float(self.stddev)
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "NoiseModel":
        if not isinstance(obj, dict) or "kind" not in obj:
            raise InvalidInputError(f"malformed noise object: {obj!r}")
        return cls(kind=obj["kind"], stddev=obj.get("stddev"))


@dataclass(frozen=True, eq=False)
class PLInstance:
    """A complete problem statement: alphabet, yields, path law, noise."""

    alphabet: ActionAlphabet
    yields: YieldTable
    path_dist: PathDistribution
    noise: NoiseModel

    def __post_init__(self) -> None:
        for path in self.yields.paths:
            if self.alphabet.classify(path) is not SeqClass.COMPLETE:
                raise InvalidInstanceError(f"yield path {path!r} is not complete")
        for path in self.path_dist.paths:
            if path not in self.yields:
                raise InvalidInstanceError(
                    f"distribution path {path!r} has no yield entry"
                )

    @property
    def psi(self) -> tuple[PathSeq, ...]:
        """Support paths in canonical order."""
        return tuple(sorted(self.yields.paths, key=self.alphabet.sort_key))

    @cached_property
    def trie(self) -> PrefixTrie:
        return PrefixTrie.build(self.alphabet, self.psi)

    def yield_of(self, seq: Iterable[str]) -> float:
        seq = self.alphabet.require_seq(seq)
        return self.yields.get(seq, 0.0)

    def noise_variance(self) -> float:
        """Average conditional yield variance under the path distribution."""
        return math.fsum(
            w * self.noise.conditional_variance(self.yields[p])
            for p, w in self.path_dist.items()
        )

    def to_json(self) -> dict:
        paths = []
        for path in self.psi:
            paths.append(
                {
                    "path": list(path),
                    "yield": self.yields[path],
                    "weight": self.path_dist.weight_of(path),
                }
            )
        return {
            "alphabet": self.alphabet.to_json(),
            "paths": paths,
            "noise": self.noise.to_json(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PLInstance":
        try:
            alphabet = ActionAlphabet.from_json(obj["alphabet"])
            rows = obj["paths"]
            noise = NoiseModel.from_json(obj["noise"])
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed instance object: {exc}") from exc
        entries: dict[PathSeq, float] = {}
        weights: dict[PathSeq, float] = {}
        weighted = [("weight" in row) for row in rows]
        if any(weighted) and not all(weighted):
            raise InvalidInputError("either all path rows carry a weight or none do")
        for row in rows:
            try:
                path = tuple(row["path"])
                entries[path] = row["yield"]
                if "weight" in row:
                    weights[path] = row["weight"]
            except (KeyError, TypeError) as exc:
                raise InvalidInputError(f"malformed path row: {row!r}") from exc
        if weights:
            dist = PathDistribution(
                paths=tuple(weights), weights=tuple(weights.values())
            )
        else:
            dist = PathDistribution.uniform(entries)
        return cls(
            alphabet=alphabet,
            yields=YieldTable(entries),
            path_dist=dist,
            noise=noise,
        )


@dataclass(frozen=True, eq=False)
class PathYieldDataset:
    """Logged (complete path, observed yield) pairs."""

    pairs: tuple[tuple[PathSeq, float], ...]
    seed: int | None = None

    def __post_init__(self) -> None:
        pairs = tuple((tuple(p), float(y)) for p, y in self.pairs)
        object.__setattr__(self, "pairs", pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def paths(self) -> tuple[PathSeq, ...]:
        return tuple(p for p, _ in self.pairs)

    def covers(self, paths: Iterable[PathSeq]) -> bool:
        seen = {p for p, _ in self.pairs}
        return all(tuple(p) in seen for p in paths)


def sample_dataset(instance: PLInstance, n: int, seed: int) -> PathYieldDataset:
    """Draw n i.i.d. pairs: paths from the path law, yields from the noise."""
    if n < 0:
        raise InvalidInputError(f"sample count must be nonnegative, got {n}")
    if not len(instance.yields):
        raise InvalidInstanceError("cannot sample from an instance with empty support")
    rng = np.random.default_rng(seed)
    paths = instance.psi
    weights = np.array([instance.path_dist.weight_of(p) for p in paths])
    idx = rng.choice(len(paths), size=n, p=weights)
    pairs = []
    for i in idx:
        path = paths[int(i)]
        pairs.append((path, instance.noise.sample(rng, instance.yields[path])))
    return PathYieldDataset(pairs=tuple(pairs), seed=seed)


@dataclass(frozen=True)
class InstanceSpec:
    """Knobs for the synthetic-instance generator.

    ``n_actions`` counts the terminal; paths have at most ``max_depth``
    nonterminal steps, so sequence length is at most ``max_depth + 1``.
    """

    n_actions: int
    max_depth: int
    n_paths: int
    yield_range: tuple[float, float] = (0.0, 1.0)
    noise: NoiseModel = field(default_factory=NoiseModel.bernoulli)

    def __post_init__(self) -> None:
        if self.n_actions < 2:
            raise InvalidInputError("need at least 2 actions (terminal included)")
        if self.max_depth < 1:
            raise InvalidInputError("max_depth must be at least 1")
        if self.n_paths < 1:
            raise InvalidInputError("n_paths must be at least 1")
        lo, hi = self.yield_range
        if not 0.0 <= lo <= hi <= 1.0:
            raise InvalidInputError(f"yield_range must satisfy 0 <= lo <= hi <= 1, got {self.yield_range!r}")


def _token_names(count: int) -> tuple[str, ...]:
    letters = string.ascii_lowercase
    return tuple(letters[i] if i < len(letters) else f"t{i}" for i in range(count))


def random_instance(spec: InstanceSpec, seed: int) -> PLInstance:
    """Deterministically generate an instance: distinct complete paths with
    uniform path law and yields drawn uniformly from the configured range."""
    m = spec.n_actions - 1
    alphabet = ActionAlphabet(tokens=_token_names(m) + ("END",))
    inner = alphabet.nonterminal

    per_depth = [m**d for d in range(spec.max_depth + 1)]
    total = sum(per_depth)
    if spec.n_paths > total:
        raise GeneratorError(
            f"cannot generate {spec.n_paths} distinct paths: only {total} exist "
            f"for {m} tokens at depth {spec.max_depth}"
        )

    rng = np.random.default_rng(seed)
    if total <= ENUMERATION_LIMIT:
        candidates = [
            body + (alphabet.terminal,)
            for d in range(spec.max_depth + 1)
            for body in itertools.product(inner, repeat=d)
        ]
        chosen_idx = rng.choice(total, size=spec.n_paths, replace=False)
        chosen = [candidates[int(i)] for i in chosen_idx]
    else:
        depth_p = np.array(per_depth, dtype=float) / total
        seen: set[PathSeq] = set()
        chosen = []
        while len(chosen) < spec.n_paths:
            d = int(rng.choice(len(per_depth), p=depth_p))
            body = tuple(inner[int(i)] for i in rng.integers(0, m, size=d))
            path = body + (alphabet.terminal,)
            if path not in seen:
                seen.add(path)
                chosen.append(path)

    chosen.sort(key=alphabet.sort_key)
    lo, hi = spec.yield_range
    values = rng.uniform(lo, hi, size=spec.n_paths)
    entries = {p: float(v) for p, v in zip(chosen, values)}
    return PLInstance(
        alphabet=alphabet,
        yields=YieldTable(entries),
        path_dist=PathDistribution.uniform(chosen),
        noise=spec.noise,
    )


def fixture_e1(noise: NoiseModel | None = None) -> PLInstance:
    """Two single-step paths: yields 0.8 (a) and 0.3 (b), uniform path law."""
    alphabet = ActionAlphabet(tokens=("a", "b", "END"))
    entries = {("a", "END"): 0.8, ("b", "END"): 0.3}
    return PLInstance(
        alphabet=alphabet,
        yields=YieldTable(entries),
        path_dist=PathDistribution.uniform(entries),
        noise=noise or NoiseModel.noiseless(),
    )


def fixture_e2(noise: NoiseModel | None = None) -> PLInstance:
    """Three paths of mixed depth: 0.9 (a,a), 0.2 (a,b), 0.5 (b)."""
    alphabet = ActionAlphabet(tokens=("a", "b", "END"))
    entries = {
        ("a", "a", "END"): 0.9,
        ("a", "b", "END"): 0.2,
        ("b", "END"): 0.5,
    }
    return PLInstance(
        alphabet=alphabet,
        yields=YieldTable(entries),
        path_dist=PathDistribution.uniform(entries),
        noise=noise or NoiseModel.noiseless(),
    )


def save_instance(instance: PLInstance, path: str) -> None:
    serialize.dump_json(instance.to_json(), path)


def load_instance(path: str) -> PLInstance:
    return PLInstance.from_json(serialize.load_json(path))


def save_dataset(dataset: PathYieldDataset, path: str) -> None:
    serialize.dump_jsonl(
        ({"path": list(p), "y": y} for p, y in dataset.pairs), path
    )


def load_dataset(path: str) -> PathYieldDataset:
    pairs = []
    for row in serialize.load_jsonl(path):
        try:
            pairs.append((tuple(row["path"]), float(row["y"])))
        except (KeyError, TypeError) as exc:
            raise InvalidInputError(f"malformed dataset row: {row!r}") from exc
    return PathYieldDataset(pairs=tuple(pairs))
