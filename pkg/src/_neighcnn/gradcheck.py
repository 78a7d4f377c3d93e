"""Compare analytic gradients with central finite differences.

Checks are collected with the hook
:func:`~_neighcnn.hookspecs.neighcnn_gradcheck_add_checks`. Every module which provides
differentiable computations registers its own checks, this module registers the checks
of the tensor operations.

"""
from __future__ import annotations

from typing import Any
from typing import Callable
from typing import Sequence
from typing import Tuple

import attr
import numpy as np
from _neighcnn import tensor as T
from _neighcnn.config import hookimpl
from _neighcnn.tensor import Parameter
from _neighcnn.tensor import Tensor


__all__ = [
    "GradCheckProblem",
    "GradCheckReport",
    "GradientCheck",
    "grad_check",
    "relative_error",
    "run_gradient_checks",
]


@attr.s(frozen=True)
class GradCheckReport:
    """The result of a gradient check."""

    name = attr.ib(type=str)
    max_relative_error = attr.ib(type=float)
    tolerance = attr.ib(type=float)
    n_elements = attr.ib(type=int)

    @property
    def passed(self) -> bool:
        return self.max_relative_error < self.tolerance


@attr.s(frozen=True)
class GradCheckProblem:
    """A scalar function together with the inputs and parameters to differentiate."""

    function = attr.ib(type=Callable[..., Tensor])
    inputs = attr.ib(factory=tuple, converter=tuple, type=Tuple[Tensor, ...])
    parameters = attr.ib(factory=tuple, converter=tuple, type=Tuple[Parameter, ...])


@attr.s(frozen=True)
class GradientCheck:
    """A registered check which builds its problem from a random generator.

    Attributes
    ----------
    name : str
        The name shown in the report.
    build : Callable[[numpy.random.Generator], GradCheckProblem]
        Builds the function and random inputs.
    tolerance_factor : float
        Multiplies the tolerance of the run. Deep compositions use a larger factor.

    """

    name = attr.ib(type=str)
    build = attr.ib(type=Callable[[np.random.Generator], GradCheckProblem])
    tolerance_factor = attr.ib(default=1.0, type=float)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Compute the maximum elementwise relative error between two gradients.

    The denominator of each element is bounded from below by a thousandth of the
    largest gradient magnitude. If both gradients vanish, the absolute error is
    returned.

    Examples
    --------
    >>> relative_error(np.array([1.0, 2.0]), np.array([1.0, 2.0]))
    0.0
    >>> relative_error(np.array([1.0, 0.0]), np.array([1.25, 0.0]))
    0.2
    >>> relative_error(np.zeros(2), np.full(2, 1e-12))
    1e-12

    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.size == 0:
        return 0.0
    difference = np.abs(analytic - numeric)
    scale = max(np.abs(analytic).max(), np.abs(numeric).max())
    if scale < 1e-10:
        return float(difference.max())
    magnitude = np.maximum(np.abs(analytic), np.abs(numeric))
    denominator = np.maximum(magnitude, 1e-3 * scale)
    return float((difference / denominator).max())


def grad_check(
    function: Callable[..., Tensor],
    inputs: Tensor | Sequence[Tensor] = (),
    step: float = 1e-5,
    tolerance: float = 1e-4,
    *,
    parameters: Sequence[Parameter] = (),
    name: str = "",
    corrupt: bool = False,
) -> GradCheckReport:
    """Check the gradient of a scalar function with central finite differences.

    Parameters
    ----------
    function : Callable[..., Tensor]
        A pure function which receives one tensor per input and returns a scalar.
    inputs : Tensor | Sequence[Tensor]
        The points at which the gradient is checked.
    step : float
        The relative step. Every element ``x`` is perturbed by ``step * max(1, |x|)``.
    tolerance : float
        The check passes if the maximum relative error is below the tolerance.
    parameters : Sequence[Parameter]
        Parameters which are read by the function and are differentiated as well.
    name : str
        The name of the check in the report.
    corrupt : bool
        Distort the analytic gradient. Used to verify that the check detects errors.

    """
    inputs = [inputs] if isinstance(inputs, Tensor) else list(inputs)

    analytic = _analytic_gradients(function, inputs, parameters)
    numeric = [
        _numeric_input_gradient(function, inputs, position, step)
        for position in range(len(inputs))
    ] + [
        _numeric_parameter_gradient(function, inputs, parameter, step)
        for parameter in parameters
    ]
    if corrupt:
        analytic = [grad * 1.01 + 1e-2 for grad in analytic]

    max_error = max(
        (relative_error(a, n) for a, n in zip(analytic, numeric)), default=0.0
    )
    n_elements = sum(grad.size for grad in numeric)
    return GradCheckReport(name, max_error, tolerance, n_elements)


def _analytic_gradients(
    function: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    parameters: Sequence[Parameter],
) -> list[np.ndarray]:
    leaves = [T.tensor(x.data, requires_grad=True) for x in inputs]
    for parameter in parameters:
        parameter.grad = None
    function(*leaves).backward()

    input_grads = [
        np.zeros(leaf.shape) if leaf.grad is None else leaf.grad for leaf in leaves
    ]
    parameter_grads = [
        np.zeros_like(p.value) if p.grad is None else p.grad for p in parameters
    ]
    return input_grads + parameter_grads


def _evaluate(function: Callable[..., Tensor], arrays: Sequence[np.ndarray]) -> float:
    with T.no_grad():
        return function(*[Tensor(array) for array in arrays]).item()


def _numeric_input_gradient(
    function: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    position: int,
    step: float,
) -> np.ndarray:
    arrays = [np.array(x.data) for x in inputs]
    point = arrays[position]
    grad = np.zeros(point.shape, dtype=np.float64)
    for index in np.ndindex(*point.shape):
        original = point[index]
        h = step * max(1.0, abs(original))
        point[index] = original + h
        upper = _evaluate(function, [a.copy() for a in arrays])
        point[index] = original - h
        lower = _evaluate(function, [a.copy() for a in arrays])
        point[index] = original
        grad[index] = (upper - lower) / (2 * h)
    return grad


def _numeric_parameter_gradient(
    function: Callable[..., Tensor],
    inputs: Sequence[Tensor],
    parameter: Parameter,
    step: float,
) -> np.ndarray:
    arrays = [x.data for x in inputs]
    original_value = parameter.value
    grad = np.zeros(original_value.shape, dtype=np.float64)
    for index in np.ndindex(*original_value.shape):
        original = original_value[index]
        h = step * max(1.0, abs(original))
        perturbed = np.array(original_value)
        perturbed[index] = original + h
        parameter.assign(perturbed)
        upper = _evaluate(function, arrays)
        perturbed[index] = original - h
        parameter.assign(perturbed)
        lower = _evaluate(function, arrays)
        grad[index] = (upper - lower) / (2 * h)
    parameter.assign(original_value)
    return grad


def run_gradient_checks(
    checks: Sequence[GradientCheck],
    seed: int = 0,
    step: float = 1e-5,
    tolerance: float = 1e-4,
    corrupt: bool = False,
) -> list[GradCheckReport]:
    """Run every check with its own generator derived from the seed."""
    reports = []
    for check in checks:
        rng = np.random.default_rng(
            np.random.SeedSequence([seed, *map(ord, check.name)])
        )
        problem = check.build(rng)
        reports.append(
            grad_check(
                problem.function,
                problem.inputs,
                step=step,
                tolerance=tolerance * check.tolerance_factor,
                parameters=problem.parameters,
                name=check.name,
                corrupt=corrupt,
            )
        )
    return reports


def _random_tensor(
    rng: np.random.Generator,
    shape: tuple[int, ...],
    low: float = -1.0,
    high: float = 1.0,
) -> Tensor:
    return T.tensor(rng.uniform(low, high, size=shape))


def _bounded_away_from_zero(
    rng: np.random.Generator, shape: tuple[int, ...], margin: float = 0.1
) -> Tensor:
    magnitude = rng.uniform(margin, 1.0, size=shape)
    return T.tensor(np.where(rng.random(shape) < 0.5, -magnitude, magnitude))


def _projection(rng: np.random.Generator, shape: tuple[int, ...]) -> Any:
    """Return a function which maps a tensor to a scalar with random weights."""
    weights = _random_tensor(rng, shape)
    return lambda x: T.sum(x * weights)


def _conv2d_problem(
    rng: np.random.Generator, padding: int = 1, stride: int = 1
) -> GradCheckProblem:
    x = _random_tensor(rng, (2, 2, 5, 5))
    kernel = _random_tensor(rng, (3, 2, 3, 3))
    bias = _random_tensor(rng, (3,))
    out_extent = (5 + 2 * padding - 3) // stride + 1
    project = _projection(rng, (2, 3, out_extent, out_extent))
    return GradCheckProblem(
        lambda x, k, b: project(T.conv2d(x, k, b, padding=padding, stride=stride)),
        [x, kernel, bias],
    )


def _batch_norm_problem(rng: np.random.Generator, mode: T.Mode) -> GradCheckProblem:
    x = _random_tensor(rng, (2, 3, 4, 4))
    gamma = _random_tensor(rng, (3,), 0.5, 1.5)
    beta = _random_tensor(rng, (3,))
    running_mean = Parameter("running_mean", rng.uniform(-0.5, 0.5, 3), False)
    running_var = Parameter("running_var", rng.uniform(0.5, 1.5, 3), False)
    project = _projection(rng, (2, 3, 4, 4))

    def _function(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
        return project(T.batch_norm(x, gamma, beta, running_mean, running_var, mode))

    return GradCheckProblem(_function, [x, gamma, beta])


def _composite_problem(rng: np.random.Generator) -> GradCheckProblem:
    a = _random_tensor(rng, (2, 1, 4, 4))
    b = _random_tensor(rng, (2, 1, 4, 4))
    return GradCheckProblem(lambda a, b: T.sqrt(T.sum(T.square(a - b))), [a, b])


def _elementwise_problem(rng: np.random.Generator) -> GradCheckProblem:
    a = _random_tensor(rng, (2, 2, 3, 3))
    b = _random_tensor(rng, (2, 2, 3, 3))
    positive = _random_tensor(rng, (2, 2, 3, 3), 0.5, 2.0)
    project = _projection(rng, (2, 2, 3, 3))

    def _function(a: Tensor, b: Tensor, c: Tensor) -> Tensor:
        combined = T.multiply(a, b) + T.scalar_mul(a, 3.0) - T.square(b) + 0.5
        return project(combined + T.sqrt(c))

    return GradCheckProblem(_function, [a, b, positive])


def _relu_problem(rng: np.random.Generator) -> GradCheckProblem:
    x = _bounded_away_from_zero(rng, (2, 3, 4, 4))
    project = _projection(rng, (2, 3, 4, 4))
    return GradCheckProblem(lambda x: project(T.relu(x)), [x])


def _reduction_problem(rng: np.random.Generator) -> GradCheckProblem:
    x = _random_tensor(rng, (2, 3, 4, 4))
    project = _projection(rng, (3, 4))

    def _function(x: Tensor) -> Tensor:
        return project(T.mean(T.sum(x, axes=0), axes=-1)) + T.mean(T.square(x))

    return GradCheckProblem(_function, [x])


def _pooling_problem(rng: np.random.Generator) -> GradCheckProblem:
    x = _random_tensor(rng, (2, 2, 8, 8))
    project = _projection(rng, (2, 2, 4, 4))
    return GradCheckProblem(lambda x: project(T.avg_pool2d(x)), [x])


def _crop_problem(rng: np.random.Generator) -> GradCheckProblem:
    x = _random_tensor(rng, (2, 1, 5, 6))
    return GradCheckProblem(lambda x: T.sum(T.square(T.crop(x, 1, 2, 3, 3))), [x])


@hookimpl
def neighcnn_gradcheck_add_checks(checks: list[GradientCheck]) -> None:
    """Register the checks of the tensor operations."""
    checks.extend(
        [
            GradientCheck("conv2d", _conv2d_problem),
            GradientCheck(
                "conv2d (stride 2)",
                lambda rng: _conv2d_problem(rng, padding=1, stride=2),
            ),
            GradientCheck(
                "batch_norm (train)",
                lambda rng: _batch_norm_problem(rng, T.Mode.TRAIN),
            ),
            GradientCheck(
                "batch_norm (infer)",
                lambda rng: _batch_norm_problem(rng, T.Mode.INFER),
            ),
            GradientCheck("relu", _relu_problem),
            GradientCheck("elementwise", _elementwise_problem),
            GradientCheck("sqrt(sum(square(a - b)))", _composite_problem),
            GradientCheck("sum and mean", _reduction_problem),
            GradientCheck("avg_pool2d", _pooling_problem),
            GradientCheck("crop", _crop_problem),
        ]
    )
