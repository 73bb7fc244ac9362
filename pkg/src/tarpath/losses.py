"""Training losses, the surrogate identity checker, and the trainer.

Two objectives over the same model family:

* regression loss — expected predicted value under a covering state
  distribution, plus (lam/2) times the squared misfit against observed
  yields (empirical over a dataset, or in closed form under the instance's
  path law and noise), plus a kappa-weighted hinge keeping values
  nonnegative;
* penalized feasibility loss — the same expected-value and nonnegativity
  terms, plus lam times the expected squared positive part of the one-step
  backup residual under an equal mixture of (i) the path law crossed with
  uniform actions and (ii) a free distribution over off-support
  state-action pairs.

For models whose per-step advantages are structurally nonpositive the two
differ by exactly lam/2 times the average conditional yield variance plus
lam/2 times the squared positive overshoot of the prediction above the
optimal value on support paths; ``surrogate_gap`` evaluates every term of
that identity independently and reports the discrepancy.

The trainer is deterministic full-batch gradient descent with backtracking
line search; objectives are compiled once per call into flat index arrays so
each iteration is a handful of vectorized operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import InvalidInputError, TrainingDivergedError
from .instance import PathYieldDataset, PLInstance
from .model import AdvantageModel, predict_value
from .oracle import compute_optimal
from .pathspace import ActionAlphabet, PathSeq, PrefixTrie, SeqClass

ARMIJO_C = 1e-4
MAX_HALVINGS = 60
BB_STEP_CAP = 1e9
WEIGHT_SUM_TOL = 1e-12

Objective = Callable[[np.ndarray], tuple[float, np.ndarray]]


def _check_weights(weights: tuple[float, ...], what: str) -> None:
    for w in weights:
        if not math.isfinite(w) or w < 0.0:
            raise InvalidInputError(f"{what} weights must be nonnegative, got {w!r}")
    if weights and abs(math.fsum(weights) - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidInputError(f"{what} weights must sum to 1")


@dataclass(frozen=True, eq=False)
class StateWeighting:
    """A finite distribution over proper states (the covering law P_0)."""

    states: tuple[PathSeq, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        states = tuple(tuple(s) for s in self.states)
        weights = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)
        if len(states) != len(weights):
            raise InvalidInputError("states and weights must have equal length")
        if not states:
            raise InvalidInputError("state weighting must be nonempty")
        if len(set(states)) != len(states):
            raise InvalidInputError("weighted states must be distinct")
        _check_weights(weights, "state")

    @classmethod
    def trie_uniform(cls, trie: PrefixTrie) -> "StateWeighting":
        n = len(trie.nodes)
        return cls(states=trie.nodes, weights=tuple([1.0 / n] * n))

    def items(self):
        return zip(self.states, self.weights)


@dataclass(frozen=True, eq=False)
class PenaltyMix:
    """The backup-residual penalty distribution: an equal mixture of the
    support-path marginal and a free off-support component.

    The off-support pairs must avoid support paths entirely. The default
    places uniform weight on (fringe state, action) pairs whose state is
    *not* complete: at a complete state the residual is the negated value
    (the successor is improper and predicts 0), which is not structurally
    nonpositive, so including such states would make the penalty — and the
    surrogate identity — depend on the free component. Incomplete and
    improper fringe states keep it exactly zero for every model in the
    family.
    """

    tilde_pairs: tuple[tuple[PathSeq, str], ...]
    tilde_weights: tuple[float, ...]
    lam: float
    mu_weight: float = 0.5

    def __post_init__(self) -> None:
        pairs = tuple((tuple(s), a) for s, a in self.tilde_pairs)
        weights = tuple(float(w) for w in self.tilde_weights)
        object.__setattr__(self, "tilde_pairs", pairs)
        object.__setattr__(self, "tilde_weights", weights)
        if len(pairs) != len(weights):
            raise InvalidInputError("tilde pairs and weights must have equal length")
        if len(set(pairs)) != len(pairs):
            raise InvalidInputError("tilde pairs must be distinct")
        _check_weights(weights, "tilde")
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidInputError(f"lam must be positive, got {self.lam!r}")
        if not 0.0 <= self.mu_weight <= 1.0:
            raise InvalidInputError("mu_weight must lie in [0, 1]")

    @classmethod
    def default(cls, instance: PLInstance, lam: float) -> "PenaltyMix":
        alphabet = instance.alphabet
        states = [
            s
            for s in instance.trie.fringe_states()
            if alphabet.classify(s) is not SeqClass.COMPLETE
        ]
        pairs = tuple((s, a) for s in states for a in alphabet.tokens)
        n = len(pairs)
        return cls(
            tilde_pairs=pairs,
            tilde_weights=tuple([1.0 / n] * n) if n else (),
            lam=lam,
        )


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 100.0
    kappa: float = 1000.0
    step_size: float = 0.1
    max_iters: int = 50_000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lam) and self.lam > 0.0):
            raise InvalidInputError("lam must be positive")
        if not (math.isfinite(self.kappa) and self.kappa >= 0.0):
            raise InvalidInputError("kappa must be nonnegative")
        if not (math.isfinite(self.step_size) and self.step_size > 0.0):
            raise InvalidInputError("step_size must be positive")
        if self.max_iters < 0:
            raise InvalidInputError("max_iters must be nonnegative")
        if not (math.isfinite(self.tol) and self.tol > 0.0):
            raise InvalidInputError("tol must be positive")


@dataclass(frozen=True, eq=False)
class TrainResult:
    model: AdvantageModel
    trace: np.ndarray
    final_loss: float
    grad_norm: float
    iterations: int
    converged: bool

    def report_json(self, config: TrainConfig) -> dict:
        return {
            "final_loss": self.final_loss,
            "iterations": self.iterations,
            "grad_norm": self.grad_norm,
            "lambda": config.lam,
            "kappa": config.kappa,
            "seed": config.seed,
        }


def _sigmoid_vec(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _require_proper(alphabet: ActionAlphabet, states: Iterable[PathSeq], what: str) -> None:
    for s in states:
        if not alphabet.is_proper(s):
            raise InvalidInputError(f"{what} state {s!r} is improper")


def _require_same_alphabet(model: AdvantageModel, instance: PLInstance) -> None:
    a, b = model.alphabet, instance.alphabet
    if a.tokens != b.tokens or a.terminal != b.terminal:
        raise InvalidInputError("model and instance alphabets differ")


class _ValueBatch:
    """Predicted values over a fixed list of proper states, vectorized.

    Each state's value is c plus a state constant (fallback steps) plus the
    sum of transformed raw scores over its parametrized steps; steps are
    flattened across states into index arrays once, so evaluation for a new
    parameter vector is a gather, a transform, and a segmented sum.
    """

    def __init__(self, model: AdvantageModel, states: tuple[PathSeq, ...]):
        self.n_states = len(states)
        self.const = np.zeros(self.n_states)
        step_state: list[int] = []
        step_slots: list[tuple[int, ...]] = []
        for j, s in enumerate(states):
            for k in range(len(s)):
                idx = model.step_param_indices(s[:k], s[k])
                if idx is None:
                    self.const[j] += model.fallback_advantage
                else:
                    step_state.append(j)
                    step_slots.append(idx)
        self.step_state = np.array(step_state, dtype=np.intp)
        width = len(step_slots[0]) if step_slots else 1
        self.step_slots = np.array(step_slots, dtype=np.intp).reshape(-1, width)

    def values(self, params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Returns (value per state, raw score per step)."""
        z = params[self.step_slots].sum(axis=1)
        summed = np.bincount(
            self.step_state, weights=-np.logaddexp(0.0, z), minlength=self.n_states
        )
        return params[0] + self.const + summed, z

    def add_value_grad(
        self, grad: np.ndarray, state_coef: np.ndarray, z: np.ndarray
    ) -> None:
        """grad += sum_j state_coef[j] * d(value_j)/d(params)."""
        grad[0] += state_coef.sum()
        if self.step_state.size:
            step_coef = -state_coef[self.step_state] * _sigmoid_vec(z)
            for col in range(self.step_slots.shape[1]):
                grad += np.bincount(
                    self.step_slots[:, col], weights=step_coef, minlength=grad.size
                )


def _data_arrays(
    model: AdvantageModel, data: PathYieldDataset | PLInstance
) -> tuple[tuple[PathSeq, ...], np.ndarray, np.ndarray, float]:
    """(paths, weights, targets, variance floor) for the misfit term."""
    if isinstance(data, PLInstance):
        _require_same_alphabet(model, data)
        paths = data.psi
        weights = np.array([data.path_dist.weight_of(p) for p in paths])
        targets = np.array([data.yields[p] for p in paths])
        return paths, weights, targets, data.noise_variance()
    if isinstance(data, PathYieldDataset):
        if not len(data):
            raise InvalidInputError("empirical mode needs a nonempty dataset")
        paths = data.paths
        weights = np.full(len(paths), 1.0 / len(paths))
        targets = np.array([y for _, y in data.pairs])
        return paths, weights, targets, 0.0
    raise InvalidInputError(
        f"data must be a dataset or an instance, got {type(data).__name__}"
    )


def tar_objective(
    model: AdvantageModel,
    p0: StateWeighting,
    data: PathYieldDataset | PLInstance,
    lam: float,
    kappa: float,
) -> Objective:
    """Compile the regression loss at fixed evaluation points."""
    _require_proper(model.alphabet, p0.states, "p0")
    paths, d_weights, targets, var_floor = _data_arrays(model, data)
    _require_proper(model.alphabet, paths, "data")
    p0_batch = _ValueBatch(model, p0.states)
    data_batch = _ValueBatch(model, paths)
    p0_w = np.array(p0.weights)

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        v0, z0 = p0_batch.values(params)
        vd, zd = data_batch.values(params)
        resid = vd - targets
        neg = np.maximum(-v0, 0.0)
        loss = (
            p0_w @ v0
            + 0.5 * lam * (d_weights @ (resid * resid) + var_floor)
            + kappa * (p0_w @ (neg * neg))
        )
        grad = np.zeros(params.size)
        p0_batch.add_value_grad(grad, p0_w - 2.0 * kappa * p0_w * neg, z0)
        data_batch.add_value_grad(grad, lam * d_weights * resid, zd)
        return float(loss), grad

    return objective


def tar_loss(
    model: AdvantageModel,
    p0: StateWeighting,
    data: PathYieldDataset | PLInstance,
    lam: float,
    kappa: float = 0.0,
) -> tuple[float, np.ndarray]:
    return tar_objective(model, p0, data, lam, kappa)(model.params_vector())


def vlp_objective(
    model: AdvantageModel,
    p0: StateWeighting,
    mix: PenaltyMix,
    instance: PLInstance,
    kappa: float = 0.0,
) -> Objective:
    """Compile the penalized feasibility loss.

    Residuals are evaluated exactly, split by state class:

    * support path (mu half): successor is improper and predicts 0, so the
      residual is yield minus value;
    * off-support complete state: same structural zero successor, residual
      is the negated value;
    * incomplete state: the residual telescopes to the single step
      advantage, nonpositive by construction;
    * improper state: value and successor value are both 0.
    """
    alphabet = model.alphabet
    _require_same_alphabet(model, instance)
    _require_proper(alphabet, p0.states, "p0")
    lam, mu_w = mix.lam, mix.mu_weight

    p0_batch = _ValueBatch(model, p0.states)
    p0_w = np.array(p0.weights)

    paths = instance.psi
    mu_batch = _ValueBatch(model, paths)
    mu_weights = np.array([instance.path_dist.weight_of(p) for p in paths])
    mu_targets = np.array([instance.yields[p] for p in paths])

    comp_weight: dict[PathSeq, float] = {}
    inc_slots: list[tuple[int, ...]] = []
    inc_const: list[float] = []
    inc_weights: list[float] = []
    for (s, a), w in zip(mix.tilde_pairs, mix.tilde_weights):
        alphabet.require_token(a)
        s = alphabet.require_seq(s)
        if s in instance.yields:
            raise InvalidInputError(f"tilde state {s!r} lies on the support")
        cls = alphabet.classify(s)
        if cls is SeqClass.IMPROPER:
            continue
        if cls is SeqClass.COMPLETE:
            comp_weight[s] = comp_weight.get(s, 0.0) + w
            continue
        idx = model.step_param_indices(s, a)
        if idx is None:
            inc_slots.append(())
            inc_const.append(model.fallback_advantage)
        else:
            inc_slots.append(idx)
            inc_const.append(0.0)
        inc_weights.append(w)

    comp_states = tuple(comp_weight)
    comp_batch = _ValueBatch(model, comp_states)
    comp_w = np.array([comp_weight[s] for s in comp_states])
    inc_w = np.array(inc_weights)
    inc_const_arr = np.array(inc_const)
    width = max((len(t) for t in inc_slots), default=1) or 1
    # pad fallback rows with slot 0 at coefficient 0 so the gather stays square
    inc_pad = np.array(
        [t + (0,) * (width - len(t)) for t in inc_slots], dtype=np.intp
    ).reshape(-1, width)
    inc_mask = np.array(
        [[1.0] * len(t) + [0.0] * (width - len(t)) for t in inc_slots]
    ).reshape(-1, width)

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        v0, z0 = p0_batch.values(params)
        neg0 = np.maximum(-v0, 0.0)
        vmu, zmu = mu_batch.values(params)
        mu_pos = np.maximum(mu_targets - vmu, 0.0)
        vc, zc = comp_batch.values(params)
        comp_pos = np.maximum(-vc, 0.0)
        z_inc = (params[inc_pad] * inc_mask).sum(axis=1) + inc_const_arr
        a_inc = -np.logaddexp(0.0, z_inc)
        inc_pos = np.maximum(a_inc, 0.0)

        loss = (
            p0_w @ v0
            + lam * mu_w * (mu_weights @ (mu_pos * mu_pos))
            + lam * (1.0 - mu_w) * (comp_w @ (comp_pos * comp_pos))
            + lam * (1.0 - mu_w) * (inc_w @ (inc_pos * inc_pos))
            + kappa * (p0_w @ (neg0 * neg0))
        )
        grad = np.zeros(params.size)
        p0_batch.add_value_grad(grad, p0_w - 2.0 * kappa * p0_w * neg0, z0)
        mu_batch.add_value_grad(grad, -2.0 * lam * mu_w * mu_weights * mu_pos, zmu)
        comp_batch.add_value_grad(grad, -2.0 * lam * (1.0 - mu_w) * comp_w * comp_pos, zc)
        if inc_w.size:
            step_coef = (
                -2.0 * lam * (1.0 - mu_w) * inc_w * inc_pos * _sigmoid_vec(z_inc)
            )
            for col in range(width):
                grad += np.bincount(
                    inc_pad[:, col],
                    weights=step_coef * inc_mask[:, col],
                    minlength=grad.size,
                )
        return float(loss), grad

    return objective


def vlp_loss(
    model: AdvantageModel,
    p0: StateWeighting,
    mix: PenaltyMix,
    instance: PLInstance,
    kappa: float = 0.0,
) -> tuple[float, np.ndarray]:
    return vlp_objective(model, p0, mix, instance, kappa)(model.params_vector())


def surrogate_gap(
    model: AdvantageModel,
    instance: PLInstance,
    p0: StateWeighting | None = None,
    mix: PenaltyMix | None = None,
    lam: float = 100.0,
    kappa: float = 0.0,
) -> dict:
    """Evaluate both sides of the loss identity independently.

    Returns lhs (regression loss in exact mode), rhs (variance floor plus
    feasibility loss plus overshoot term), the two rhs components, and the
    absolute gap. All four quantities are computed from scratch — the
    overshoot term uses oracle values, not the losses' internals.
    """
    if p0 is None:
        p0 = StateWeighting.trie_uniform(instance.trie)
    if mix is None:
        mix = PenaltyMix.default(instance, lam)
    elif mix.lam != lam:
        raise InvalidInputError("mix.lam must match the lam argument")

    lhs, _ = tar_loss(model, p0, instance, lam, kappa)
    vlp, _ = vlp_loss(model, p0, mix, instance, kappa)
    sigma2_term = 0.5 * lam * instance.noise_variance()
    ov = compute_optimal(instance)
    excess = 0.5 * lam * math.fsum(
        w * max(predict_value(model, p) - ov.v_star[p], 0.0) ** 2
        for p, w in instance.path_dist.items()
    )
    rhs = sigma2_term + vlp + excess
    return {
        "lhs": lhs,
        "rhs": rhs,
        "sigma2_term": sigma2_term,
        "hinge_excess_term": excess,
        "gap": abs(lhs - rhs),
    }


def train(model: AdvantageModel, objective: Objective, config: TrainConfig) -> TrainResult:
    """Full-batch descent with backtracking (halving) line search.

    Each iteration steps along the negative gradient; sufficient decrease
    uses the Armijo rule with halving backtracking. The trial step is the
    spectral (Barzilai-Borwein, short form) quotient (dx . dg) / |dg|^2
    from the last accepted move, which adapts to curvature along the
    active direction — the raw scores of near-zero advantages sit on an
    exponentially flat tail where fixed steps crawl. When the quotient is
    unusable (first iteration, non-positive curvature) the trial falls
    back to twice the previously accepted step. Stops at the gradient
    tolerance (max-norm), the iteration cap, or when no decrease is
    representable.
    """
    x = model.params_vector()
    f, g = objective(x)
    if not (math.isfinite(f) and np.all(np.isfinite(g))):
        raise TrainingDivergedError(0)
    trace = [f]
    step = config.step_size
    iterations = 0
    for it in range(1, config.max_iters + 1):
        if np.max(np.abs(g)) <= config.tol:
            break
        gg = float(g @ g)
        s = step
        accepted = False
        for _ in range(MAX_HALVINGS):
            x_new = x - s * g
            f_new, g_new = objective(x_new)
            # strict inequality: an equal loss means the Armijo margin
            # underflowed, so the move is no representable progress
            if f_new < f and f_new <= f - ARMIJO_C * s * gg:
                accepted = True
                break
            s *= 0.5
        if not accepted:
            break
        if not np.all(np.isfinite(g_new)):
            raise TrainingDivergedError(it)
        dx = x_new - x
        dg = g_new - g
        curv = float(dx @ dg)
        if curv > 0.0:
            step = min(max(curv / float(dg @ dg), 1e-16), BB_STEP_CAP)
        else:
            step = 2.0 * s
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        iterations = it
    grad_norm = float(np.max(np.abs(g)))
    return TrainResult(
        model=model.with_params(x),
        trace=np.array(trace),
        final_loss=float(f),
        grad_norm=grad_norm,
        iterations=iterations,
        converged=grad_norm <= config.tol,
    )
