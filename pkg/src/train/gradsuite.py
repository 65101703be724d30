"""Finite-difference gradient suite over every differentiable op and the batch objective."""

import logging
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import numpy as np

from src.data import GenConfig, generate
from src.gradcore import (
    GraphBuilder,
    Node,
    Tape,
    Tensor,
    add,
    backward,
    concat_rows,
    cosine,
    exp,
    grad_check,
    grad_reverse,
    log,
    log_softmax_row,
    matmul,
    mean,
    mul,
    numeric_gradient,
    scale,
    selu,
    sigmoid,
    softmax_row,
    stop_grad,
    sum_all,
    take,
    tanh,
    transpose,
)
from src.models import DOMAIN_HEAD, POOL_PARAMS, ArchitectureConfig, ModelConfig, init_params
from src.train.config import Variant
from src.train.objective import Phase, build_batch_objective

logger = logging.getLogger(__name__)

RELATIVE_ERROR_FLOOR = 1e-2

# Parameters that sit behind the gradient reversal (only L_d reaches them unreversed).
BEHIND_REVERSAL = DOMAIN_HEAD

Case = tuple[GraphBuilder, dict[str, Tensor]]
CaseFactory = Callable[[np.random.Generator], Case]


@dataclass(frozen=True)
class GradientSuiteResult:
    """Worst relative error of every case over all seeds.

    Attributes:
        cases: Case name to worst relative error.
        tolerance: Largest accepted error.
        seeds: Seeds run per op case.
    """

    cases: dict[str, float]
    tolerance: float
    seeds: int

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.cases, key=lambda key: self.cases[key])
        return name, self.cases[name]

    @property
    def passed(self) -> bool:
        return all(err <= self.tolerance for err in self.cases.values())

    @property
    def failing(self) -> list[str]:
        return [name for name, err in self.cases.items() if err > self.tolerance]


def relative_error(analytic: Tensor, numeric: Tensor, floor: float = RELATIVE_ERROR_FLOOR) -> float:
    """Largest entrywise ``|a - n| / max(|a|, |n|, floor)``."""
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


# =============================================================================
# Per-op cases
# =============================================================================


def _weighted(out: Node, weights: Tensor) -> Node:
    """Reduce ``out`` to a scalar with fixed weights so every entry gets a distinct gradient."""
    return sum_all(mul(out, out.tape.leaf(weights)))


def _unary(
    op: Callable[[Node], Node],
    shape: tuple[int, int] = (3, 4),
    out_shape: tuple[int, int] | None = None,
) -> CaseFactory:
    def factory(rng: np.random.Generator) -> Case:
        x = rng.standard_normal(shape)
        c = rng.standard_normal(out_shape or shape)
        return (lambda _tape, leaves: _weighted(op(leaves["x"]), c)), {"x": x}

    return factory


def _binary(
    op: Callable[[Node, Node], Node],
    shape_a: tuple[int, int],
    shape_b: tuple[int, int],
    out_shape: tuple[int, int],
) -> CaseFactory:
    def factory(rng: np.random.Generator) -> Case:
        values = {"a": rng.standard_normal(shape_a), "b": rng.standard_normal(shape_b)}
        c = rng.standard_normal(out_shape)
        return (lambda _tape, leaves: _weighted(op(leaves["a"], leaves["b"]), c)), values

    return factory


def _scale_case(rng: np.random.Generator) -> Case:
    factor = float(rng.uniform(-2.0, 2.0))
    c = rng.standard_normal((3, 4))
    return (lambda _tape, leaves: _weighted(scale(leaves["x"], factor), c)), {
        "x": rng.standard_normal((3, 4))
    }


def _selu_case(rng: np.random.Generator) -> Case:
    # keep clear of the kink at 0
    raw = rng.standard_normal((3, 4))
    x = np.sign(raw) * (0.1 + np.abs(raw))
    c = rng.standard_normal((3, 4))
    return (lambda _tape, leaves: _weighted(selu(leaves["x"]), c)), {"x": x}


def _log_case(rng: np.random.Generator) -> Case:
    x = 0.5 + np.abs(rng.standard_normal((3, 4)))
    c = rng.standard_normal((3, 4))
    return (lambda _tape, leaves: _weighted(log(leaves["x"]), c)), {"x": x}


def _reduction_case(op: Callable[[Node], Node]) -> CaseFactory:
    def factory(rng: np.random.Generator) -> Case:
        c = rng.standard_normal((1, 1))
        return (lambda _tape, leaves: _weighted(op(leaves["x"]), c)), {
            "x": rng.standard_normal((3, 4))
        }

    return factory


def _concat_case(rng: np.random.Generator) -> Case:
    values = {"a": rng.standard_normal((2, 3)), "b": rng.standard_normal((3, 3))}
    c = rng.standard_normal((5, 3))
    return (lambda _tape, leaves: _weighted(concat_rows([leaves["a"], leaves["b"]]), c)), values


def _take_case(rng: np.random.Generator) -> Case:
    rows = rng.integers(0, 3, size=5).tolist()
    cols = rng.integers(0, 4, size=5).tolist()
    c = rng.standard_normal((5, 1))
    return (lambda _tape, leaves: _weighted(take(leaves["x"], rows, cols), c)), {
        "x": rng.standard_normal((3, 4))
    }


def _tanh_chain_case(rng: np.random.Generator) -> Case:
    values = {"w": rng.standard_normal((1, 4)), "x": rng.standard_normal((4, 3))}
    return (lambda _tape, leaves: sum_all(tanh(matmul(leaves["w"], leaves["x"])))), values


OP_CASES: dict[str, CaseFactory] = {
    "matmul": _binary(matmul, (3, 4), (4, 2), (3, 2)),
    "add": _binary(add, (3, 4), (3, 4), (3, 4)),
    "add-row-broadcast": _binary(add, (3, 4), (1, 4), (3, 4)),
    "mul": _binary(mul, (3, 4), (3, 4), (3, 4)),
    "scale": _scale_case,
    "tanh": _unary(tanh),
    "sigmoid": _unary(sigmoid),
    "selu": _selu_case,
    "softmax-row": _unary(softmax_row),
    "log-softmax-row": _unary(log_softmax_row),
    "log": _log_case,
    "exp": _unary(exp),
    "mean": _reduction_case(mean),
    "sum": _reduction_case(sum_all),
    "concat-rows": _concat_case,
    "transpose": _unary(transpose, (3, 4), (4, 3)),
    "take": _take_case,
    "cosine": _binary(cosine, (1, 5), (1, 5), (1, 1)),
    "tanh-chain": _tanh_chain_case,
}


def check_reversal(rng: np.random.Generator) -> float:
    """Analytic gradient through grad_reverse equals ``-weight`` times the numeric one."""
    weight = float(rng.uniform(0.0, 1.0))
    x = rng.standard_normal((3, 4))
    c = rng.standard_normal((3, 4))

    def build(tape: Tape, leaves: Mapping[str, Node]) -> Node:
        return _weighted(grad_reverse(leaves["x"], weight), c)

    tape = Tape()
    node = tape.leaf(x, name="x")
    backward(tape, build(tape, {"x": node}))
    numeric = numeric_gradient(build, {"x": x}, "x")
    return relative_error(node.grad, -weight * numeric)


def check_stop_grad(rng: np.random.Generator) -> float:
    """No gradient reaches the stopped input; the other input is exact."""
    a = rng.standard_normal((3, 4))
    b = rng.standard_normal((3, 4))
    c = rng.standard_normal((3, 4))
    tape = Tape()
    a_node = tape.leaf(a, name="a")
    b_node = tape.leaf(b, name="b")
    backward(tape, _weighted(mul(a_node, stop_grad(b_node)), c))
    if b_node.reached or np.any(b_node.grad != 0.0):
        return float("inf")

    def build(tape: Tape, leaves: Mapping[str, Node]) -> Node:
        return _weighted(mul(leaves["a"], stop_grad(tape.leaf(b))), c)

    return relative_error(a_node.grad, numeric_gradient(build, {"a": a}, "a"))


# =============================================================================
# Full one-stage objective
# =============================================================================


def check_objective(seed: int) -> dict[str, float]:
    """Check every main-branch parameter of the full one-stage objective on 3 bags.

    The numeric reference is assembled from finite differences of ``L_S``, ``L_y``
    and ``L_D`` so that the reversal in front of the domain classifier is accounted
    for: F_c receives ``-lambda_p`` times the ``L_d`` gradient and the pool none of it.
    Gene parameters enter as constants.

    Returns:
        Worst relative error per parameter.
    """
    rng = np.random.default_rng(seed)
    dataset = generate(
        GenConfig(num_samples=3, num_domains=3, d=8, G=6, bag_size_range=(2, 4), seed=seed)
    )
    architecture = ArchitectureConfig(n_prompts=2, emb=6, hidden_att=4)
    config = ModelConfig.for_dataset(dataset, architecture)
    main, gene = init_params(config, seed)
    lambda_p = float(rng.uniform(0.2, 0.8))
    bags = dataset.bags

    def objective(variant: Variant, phase: Phase) -> GraphBuilder:
        def build(tape: Tape, leaves: Mapping[str, Node]) -> Node:
            bundle = build_batch_objective(
                tape, leaves, gene.bind(tape), bags, config, variant, lambda_p, phase=phase
            )
            return bundle.total

        return build

    tape = Tape()
    leaves = main.bind(tape)
    backward(tape, objective(Variant.FULL, Phase.JOINT)(tape, leaves))

    values = dict(main.items())
    siamese = objective(Variant.FULL, Phase.SIAMESE)
    subtype = objective(Variant.PROMPTS, Phase.JOINT)
    adversarial = objective(Variant.FULL, Phase.ADVERSARIAL)
    errors = {}
    for name in main.names:
        n_s = numeric_gradient(siamese, values, name)
        n_y = numeric_gradient(subtype, values, name)
        n_d = numeric_gradient(adversarial, values, name) - n_y
        if name in BEHIND_REVERSAL:
            reversal = 1.0
        elif name in POOL_PARAMS:
            reversal = 0.0
        else:
            reversal = -lambda_p
        expected = (1.0 - lambda_p) * n_s + lambda_p * (n_y + reversal * n_d)
        errors[name] = relative_error(leaves[name].grad, expected)
    return errors


def run_gradient_suite(
    seeds: int = 100, tolerance: float = 1e-4, *, objective_seeds: int = 3
) -> GradientSuiteResult:
    """Run every op case over ``seeds`` seeds plus the objective over ``objective_seeds``."""
    cases: dict[str, float] = {}
    for name, factory in OP_CASES.items():
        worst = 0.0
        for seed in range(seeds):
            builder, values = factory(np.random.default_rng(seed))
            worst = max(worst, grad_check(builder, values, tolerance).max_error)
        cases[name] = worst
    cases["grad-reverse"] = max(check_reversal(np.random.default_rng(s)) for s in range(seeds))
    cases["stop-grad"] = max(check_stop_grad(np.random.default_rng(s)) for s in range(seeds))
    objective_worst = 0.0
    for seed in range(objective_seeds):
        errors = check_objective(seed)
        worst_param = max(errors, key=lambda key: errors[key])
        logger.debug(f"objective seed {seed}: worst {worst_param} {errors[worst_param]:.3e}")
        objective_worst = max(objective_worst, errors[worst_param])
    if objective_seeds:
        cases["one-stage-objective"] = objective_worst

    result = GradientSuiteResult(cases=cases, tolerance=tolerance, seeds=seeds)
    name, err = result.worst
    logger.info(f"Gradient suite: {len(cases)} cases, worst {name} at {err:.3e}")
    return result
