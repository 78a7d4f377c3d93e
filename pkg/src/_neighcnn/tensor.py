"""Dense tensors with reverse-mode automatic differentiation.

A :class:`Tensor` is an immutable wrapper around a read-only :class:`numpy.ndarray`.
Operations on tensors which require gradients record a :class:`TapeNode` holding the
references to the inputs and a closure which maps the gradient of the output to the
gradients of the inputs. Calling :meth:`Tensor.backward` on a scalar walks the recorded
graph in reverse topological order, see :mod:`_neighcnn.dag`.

"""
from __future__ import annotations

import contextlib
import contextvars
import itertools
from enum import Enum
from typing import Any
from typing import Callable
from typing import Generator
from typing import Iterable
from typing import Optional
from typing import Sequence
from typing import Tuple
from typing import Union

import attr
import numpy as np
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import NumericalError
from _neighcnn.exceptions import ShapeError


__all__ = [
    "Mode",
    "Parameter",
    "TapeNode",
    "Tensor",
    "add",
    "avg_pool2d",
    "batch_norm",
    "conv2d",
    "crop",
    "frozen_statistics",
    "is_grad_enabled",
    "mean",
    "multiply",
    "no_grad",
    "relu",
    "scalar_mul",
    "sqrt",
    "square",
    "subtract",
    "sum",
    "tensor",
]


SQRT_GRADIENT_GUARD = 1e-12
"""float: Added to ``2 * sqrt(x)`` in the backward pass of :func:`sqrt`."""

BackwardFunction = Callable[
    [np.ndarray, Tuple[bool, ...]], Tuple[Optional[np.ndarray], ...]
]
Scalar = Union[int, float]

_node_counter = itertools.count()
_grad_enabled: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "grad_enabled", default=True
)
_statistics_frozen: contextvars.ContextVar[bool] = contextvars.ContextVar(
    "statistics_frozen", default=False
)


class Mode(Enum):
    """Mode of layers which behave differently during training and inference."""

    TRAIN = "train"
    INFER = "infer"


@attr.s(eq=False, repr=False)
class TapeNode:
    """A node of the recorded computation graph.

    Leaf nodes belong to tensors created with ``requires_grad=True`` or to trainable
    parameters. Their gradient slot receives the gradient after a backward pass.

    """

    op = attr.ib(type=str)
    inputs = attr.ib(factory=tuple, type=Tuple[Optional["TapeNode"], ...])
    """Tuple[Optional[TapeNode], ...]: Nodes of the inputs. ``None`` marks inputs
    without gradients."""
    backward = attr.ib(default=None, type=Optional[BackwardFunction])
    """Optional[BackwardFunction]: Closure over the saved intermediates."""
    parameter = attr.ib(default=None, type=Optional["Parameter"])
    grad = attr.ib(default=None, type=Optional[np.ndarray])
    consumed = attr.ib(default=False, type=bool)
    index = attr.ib(factory=lambda: next(_node_counter), type=int)

    @property
    def is_leaf(self) -> bool:
        return not self.inputs

    def __repr__(self) -> str:
        return f"TapeNode(op={self.op!r}, index={self.index})"


def _to_read_only(array: Any) -> np.ndarray:
    array = np.asarray(array)
    array.flags.writeable = False
    return array


@attr.s(frozen=True, eq=False, repr=False)
class Tensor:
    """An immutable dense array which optionally takes part in differentiation."""

    data = attr.ib(type=np.ndarray, converter=_to_read_only)
    node = attr.ib(default=None, type=Optional[TapeNode])

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def requires_grad(self) -> bool:
        return self.node is not None

    @property
    def grad(self) -> np.ndarray | None:
        """Optional[numpy.ndarray]: The gradient of a leaf after a backward pass."""
        return None if self.node is None else self.node.grad

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.item())

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def backward(self, accumulate: bool = False) -> None:
        """Compute the gradients of this scalar with respect to all leaves.

        Parameters
        ----------
        accumulate : bool
            Add the gradients to the gradients of a previous pass instead of replacing
            them.

        """
        from _neighcnn.dag import backward

        backward(self, accumulate=accumulate)

    def __add__(self, other: Tensor | Scalar) -> Tensor:
        return add(self, other)

    def __radd__(self, other: Scalar) -> Tensor:
        return add(self, other)

    def __sub__(self, other: Tensor | Scalar) -> Tensor:
        return subtract(self, other)

    def __rsub__(self, other: Scalar) -> Tensor:
        return add(scalar_mul(self, -1.0), other)

    def __mul__(self, other: Tensor | Scalar) -> Tensor:
        return multiply(self, other)

    def __rmul__(self, other: Scalar) -> Tensor:
        return multiply(self, other)

    def __neg__(self) -> Tensor:
        return scalar_mul(self, -1.0)

    def __repr__(self) -> str:
        grad = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad})"


def tensor(
    data: Any, requires_grad: bool = False, dtype: str | np.dtype | None = None
) -> Tensor:
    """Create a tensor from array-like data.

    The data is copied. Integer and boolean data is converted to 64-bit floats.

    Examples
    --------
    >>> x = tensor([[1, 2], [3, 4]])
    >>> x.shape, str(x.dtype)
    ((2, 2), 'float64')
    >>> tensor([1.0, float("nan")])
    Traceback (most recent call last):
    ...
    _neighcnn.exceptions.NumericalError: Operation 'tensor' produced non-finite values.

    """
    if isinstance(data, Tensor):
        data = data.data
    array = np.array(data, dtype=dtype, copy=True)
    if dtype is None and not np.issubdtype(array.dtype, np.floating):
        array = array.astype(np.float64)
    if array.ndim > 4:
        raise ShapeError(f"Tensors have at most 4 axes, got shape {array.shape}.")
    _check_finite("tensor", array)

    node = TapeNode(op="leaf") if requires_grad else None
    return Tensor(array, node)


@contextlib.contextmanager
def no_grad() -> Generator[None, None, None]:
    """Disable the recording of operations inside the context."""
    token = _grad_enabled.set(False)
    try:
        yield
    finally:
        _grad_enabled.reset(token)


def is_grad_enabled() -> bool:
    return _grad_enabled.get()


@contextlib.contextmanager
def frozen_statistics() -> Generator[None, None, None]:
    """Keep the running statistics of batch normalization unchanged in train mode."""
    token = _statistics_frozen.set(True)
    try:
        yield
    finally:
        _statistics_frozen.reset(token)


@attr.s(eq=False)
class Parameter:
    """A named value which is updated by an optimizer or by a layer.

    Trainable parameters hand out leaf tensors with :meth:`tensor`. After a backward
    pass, ``grad`` holds the gradient accumulated over all leaves of the parameter.
    Non-trainable parameters, like the running statistics of batch normalization, are
    never differentiated and never touched by an optimizer.

    """

    name = attr.ib(type=str)
    value = attr.ib(type=np.ndarray, converter=_to_read_only)
    trainable = attr.ib(default=True, type=bool)
    grad = attr.ib(default=None, type=Optional[np.ndarray])

    @grad.validator
    def _check_grad_shape(self, attribute: Any, value: np.ndarray | None) -> None:
        if value is not None and value.shape != self.value.shape:
            raise ShapeError(
                f"The gradient of {self.name!r} has shape {value.shape}, but the "
                f"value has shape {self.value.shape}."
            )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def size(self) -> int:
        return self.value.size

    def tensor(self) -> Tensor:
        """Return the value as a tensor which is a leaf of the next recorded graph."""
        if self.trainable and is_grad_enabled():
            return Tensor(self.value, TapeNode(op="leaf", parameter=self))
        return Tensor(self.value)

    def assign(self, value: np.ndarray) -> None:
        """Replace the value with an array of the same shape."""
        value = np.array(value, dtype=self.value.dtype, copy=True)
        if value.shape != self.value.shape:
            raise ShapeError(
                f"Cannot assign shape {value.shape} to parameter {self.name!r} with "
                f"shape {self.value.shape}."
            )
        self.value = _to_read_only(value)


def _check_finite(op: str, array: np.ndarray) -> None:
    if not np.all(np.isfinite(array)):
        raise NumericalError(f"Operation {op!r} produced non-finite values.")


def _record(
    op: str, data: np.ndarray, inputs: Sequence[Tensor], backward: BackwardFunction
) -> Tensor:
    """Wrap the result of an operation and record it if any input needs gradients."""
    _check_finite(op, data)
    if not is_grad_enabled() or all(x.node is None for x in inputs):
        return Tensor(data)
    node = TapeNode(op=op, inputs=tuple(x.node for x in inputs), backward=backward)
    return Tensor(data, node)


def _check_same_shape(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeError(
            f"Operation {op!r} requires equal shapes, got {a.shape} and {b.shape}."
        )


def _check_rank(op: str, x: Tensor, ndim: int) -> None:
    if x.ndim != ndim:
        raise ShapeError(
            f"Operation {op!r} requires a tensor with {ndim} axes, got shape "
            f"{x.shape}."
        )


def _normalize_axes(op: str, axes: int | Iterable[int] | None, ndim: int) -> tuple:
    """Validate axes and convert them to a sorted tuple of non-negative integers.

    Examples
    --------
    >>> _normalize_axes("sum", None, 3)
    (0, 1, 2)
    >>> _normalize_axes("sum", -1, 4)
    (3,)
    >>> _normalize_axes("sum", [0, 4], 4)
    Traceback (most recent call last):
    ...
    _neighcnn.exceptions.ShapeError: Invalid axis 4 for operation 'sum' on 4 axes.

    """
    if axes is None:
        return tuple(range(ndim))
    axes = [axes] if isinstance(axes, int) else list(axes)
    normalized = []
    for axis in axes:
        if not -ndim <= axis < ndim:
            raise ShapeError(
                f"Invalid axis {axis} for operation {op!r} on {ndim} axes."
            )
        normalized.append(axis % ndim)
    if len(set(normalized)) != len(normalized):
        raise ShapeError(f"Repeated axes {axes} for operation {op!r}.")
    return tuple(sorted(normalized))


# Elementwise operations.


def add(a: Tensor, b: Tensor | Scalar) -> Tensor:
    """Add a tensor or a scalar elementwise."""
    if not isinstance(b, Tensor):
        return _record("add", a.data + b, [a], lambda g, needs: (g,))
    _check_same_shape("add", a, b)
    return _record("add", a.data + b.data, [a, b], lambda g, needs: (g, g))


def subtract(a: Tensor, b: Tensor | Scalar) -> Tensor:
    """Subtract a tensor or a scalar elementwise.

    Examples
    --------
    >>> x = tensor([1.0, 2.0])
    >>> subtract(x, x).data
    array([0., 0.])

    """
    if not isinstance(b, Tensor):
        return _record("subtract", a.data - b, [a], lambda g, needs: (g,))
    _check_same_shape("subtract", a, b)
    return _record("subtract", a.data - b.data, [a, b], lambda g, needs: (g, -g))


def multiply(a: Tensor, b: Tensor | Scalar) -> Tensor:
    """Multiply with a tensor or a scalar elementwise."""
    if not isinstance(b, Tensor):
        return scalar_mul(a, b)
    _check_same_shape("multiply", a, b)
    a_data, b_data = a.data, b.data

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        return (g * b_data if needs[0] else None, g * a_data if needs[1] else None)

    return _record("multiply", a_data * b_data, [a, b], _backward)


def scalar_mul(a: Tensor, c: Scalar) -> Tensor:
    """Multiply a tensor with a scalar."""
    c = float(c)
    return _record("scalar_mul", a.data * c, [a], lambda g, needs: (g * c,))


def square(a: Tensor) -> Tensor:
    a_data = a.data
    return _record("square", a_data * a_data, [a], lambda g, needs: (2.0 * g * a_data,))


def sqrt(a: Tensor) -> Tensor:
    """Compute the square root elementwise.

    The backward pass divides by ``2 * sqrt(x) + 1e-12`` so that the gradient stays
    finite where ``x`` is exactly zero.

    Examples
    --------
    >>> sqrt(tensor([4.0, 9.0])).data
    array([2., 3.])

    """
    if np.any(a.data < 0):
        raise NumericalError("Operation 'sqrt' received negative values.")
    out = np.sqrt(a.data)

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        return (g / (2.0 * out + SQRT_GRADIENT_GUARD),)

    return _record("sqrt", out, [a], _backward)


def relu(a: Tensor) -> Tensor:
    """Apply the rectified linear unit.

    The subgradient at zero is zero.

    Examples
    --------
    >>> relu(tensor([-1.0, 0.0, 2.0])).data
    array([0., 0., 2.])

    """
    mask = a.data > 0
    out = np.where(mask, a.data, 0.0).astype(a.dtype, copy=False)
    return _record("relu", out, [a], lambda g, needs: (g * mask,))


# Reductions.


def sum(a: Tensor, axes: int | Iterable[int] | None = None) -> Tensor:  # noqa: A001
    """Sum over the given axes or over all axes.

    numpy's pairwise summation visits the elements in a fixed order, so repeated calls
    on identical input return bit-identical results.

    Examples
    --------
    >>> sum(tensor([[1.0, 1.0], [1.0, 1.0]])).data
    array(4.)

    """
    normalized = _normalize_axes("sum", axes, a.ndim)
    shape = a.shape

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        expanded = np.expand_dims(g, normalized)
        return (np.broadcast_to(expanded, shape).copy(),)

    return _record("sum", np.sum(a.data, axis=normalized), [a], _backward)


def mean(a: Tensor, axes: int | Iterable[int] | None = None) -> Tensor:
    """Average over the given axes or over all axes.

    Examples
    --------
    >>> mean(tensor([1.0, 2.0, 3.0, 4.0])).data
    array(2.5)

    """
    normalized = _normalize_axes("mean", axes, a.ndim)
    count = int(np.prod([a.shape[axis] for axis in normalized]))
    return scalar_mul(sum(a, normalized), 1.0 / count)


# Operations on images.


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Tensor | None = None,
    padding: int = 0,
    stride: int = 1,
) -> Tensor:
    """Cross-correlate a batch of images with a stack of square kernels.

    The input is zero-padded. The convolution is accumulated over the kernel offsets,
    each offset contributing one matrix product between a strided view of the padded
    input and a slice of the kernel.

    Parameters
    ----------
    x : Tensor
        Input with shape ``(batch, in_channels, height, width)``.
    kernel : Tensor
        Kernel with shape ``(out_channels, in_channels, k, k)``.
    bias : Tensor, optional
        Bias with shape ``(out_channels,)``.
    padding : int
        Number of zeros added on each side of both spatial axes.
    stride : int
        Step between two applications of the kernel.

    Examples
    --------
    >>> x = tensor([[[[1.0, 2.0], [3.0, 4.0]]]])
    >>> conv2d(x, tensor(np.ones((1, 1, 2, 2)))).data
    array([[[[10.]]]])

    """
    _check_rank("conv2d", x, 4)
    _check_rank("conv2d", kernel, 4)
    n_batch, in_channels, height, width = x.shape
    out_channels, kernel_in_channels, k, k_width = kernel.shape
    if k != k_width:
        raise ShapeError(f"Kernels must be square, got shape {kernel.shape}.")
    if kernel_in_channels != in_channels:
        raise ShapeError(
            f"The kernel expects {kernel_in_channels} input channels, but the input "
            f"has {in_channels}."
        )
    if bias is not None and bias.shape != (out_channels,):
        raise ShapeError(
            f"The bias must have shape ({out_channels},), got {bias.shape}."
        )
    if stride < 1 or padding < 0:
        raise ConfigurationError(
            f"Stride must be >= 1 and padding >= 0, got {stride} and {padding}."
        )
    out_height = _conv_output_extent(height, k, padding, stride)
    out_width = _conv_output_extent(width, k, padding, stride)

    padded = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    kernel_data = kernel.data

    def _window(i: int, j: int) -> tuple[slice, slice, slice, slice]:
        return (
            slice(None),
            slice(None),
            slice(i, i + stride * (out_height - 1) + 1, stride),
            slice(j, j + stride * (out_width - 1) + 1, stride),
        )

    # Accumulated as (batch, height, width, channels) and transposed at the end.
    out = np.zeros((n_batch, out_height, out_width, out_channels), dtype=x.dtype)
    for i, j in itertools.product(range(k), range(k)):
        out += np.tensordot(padded[_window(i, j)], kernel_data[:, :, i, j], ([1], [1]))
    out = np.ascontiguousarray(out.transpose(0, 3, 1, 2))
    if bias is not None:
        out += bias.data[None, :, None, None]

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        g_last = g.transpose(0, 2, 3, 1)
        grad_x = grad_kernel = grad_bias = None
        if needs[0]:
            grad_padded = np.zeros_like(padded)
            for i, j in itertools.product(range(k), range(k)):
                contribution = np.tensordot(g_last, kernel_data[:, :, i, j], ([3], [0]))
                grad_padded[_window(i, j)] += contribution.transpose(0, 3, 1, 2)
            grad_x = np.ascontiguousarray(
                grad_padded[:, :, padding : padding + height, padding : padding + width]
            )
        if needs[1]:
            grad_kernel = np.zeros_like(kernel_data)
            for i, j in itertools.product(range(k), range(k)):
                grad_kernel[:, :, i, j] = np.tensordot(
                    g_last, padded[_window(i, j)], ([0, 1, 2], [0, 2, 3])
                )
        if len(needs) > 2 and needs[2]:
            grad_bias = g.sum(axis=(0, 2, 3))
        return (grad_x, grad_kernel, grad_bias)

    inputs = [x, kernel] if bias is None else [x, kernel, bias]
    return _record("conv2d", out, inputs, _backward)


def _conv_output_extent(extent: int, k: int, padding: int, stride: int) -> int:
    """Compute the output extent of a convolution along one axis.

    Examples
    --------
    >>> _conv_output_extent(5, 3, 1, 1)
    5
    >>> _conv_output_extent(6, 3, 0, 2)
    Traceback (most recent call last):
    ...
    _neighcnn.exceptions.ShapeError: The extent 6 with padding 0 does not fit a kernel \
of size 3 with stride 2.

    """
    span = extent + 2 * padding - k
    if span < 0 or span % stride != 0:
        raise ShapeError(
            f"The extent {extent} with padding {padding} does not fit a kernel of size "
            f"{k} with stride {stride}."
        )
    return span // stride + 1


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Parameter,
    running_var: Parameter,
    mode: Mode = Mode.TRAIN,
    momentum: float = 0.1,
    epsilon: float = 1e-5,
) -> Tensor:
    """Normalize every channel and apply a learned affine transformation.

    In train mode the channel statistics are taken over the batch and spatial axes
    and the running statistics are updated with an exponential moving average, unless
    they are frozen with :func:`frozen_statistics`. The normalization uses the biased
    variance while the running variance is updated with the unbiased one. In infer mode
    the running statistics are used.

    """
    _check_rank("batch_norm", x, 4)
    n_batch, channels, height, width = x.shape
    for name, value in (
        ("gamma", gamma.shape),
        ("beta", beta.shape),
        ("running_mean", running_mean.shape),
        ("running_var", running_var.shape),
    ):
        if value != (channels,):
            raise ShapeError(f"{name} must have shape ({channels},), got {value}.")
    if epsilon <= 0:
        raise ConfigurationError(f"epsilon must be positive, got {epsilon}.")
    mode = Mode(mode)

    axes = (0, 2, 3)
    count = n_batch * height * width
    if mode == Mode.TRAIN:
        if count < 2:
            raise ShapeError(
                "Batch normalization in train mode needs at least two elements per "
                f"channel, got input shape {x.shape}."
            )
        batch_mean = x.data.mean(axis=axes)
        batch_var = x.data.var(axis=axes)
        if not _statistics_frozen.get():
            running_mean.assign(
                (1 - momentum) * running_mean.value + momentum * batch_mean
            )
            running_var.assign(
                (1 - momentum) * running_var.value
                + momentum * batch_var * count / (count - 1)
            )
    else:
        batch_mean = running_mean.value
        batch_var = running_var.value

    inv_std = 1.0 / np.sqrt(batch_var + epsilon)
    x_hat = (x.data - batch_mean[None, :, None, None]) * inv_std[None, :, None, None]
    gamma_data = gamma.data
    out = gamma_data[None, :, None, None] * x_hat + beta.data[None, :, None, None]

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        grad_x = None
        if needs[0]:
            grad_x_hat = g * gamma_data[None, :, None, None]
            if mode == Mode.TRAIN:
                grad_sum = grad_x_hat.sum(axis=axes)[None, :, None, None]
                grad_dot = (grad_x_hat * x_hat).sum(axis=axes)[None, :, None, None]
                grad_x = (
                    inv_std[None, :, None, None]
                    / count
                    * (count * grad_x_hat - grad_sum - x_hat * grad_dot)
                )
            else:
                grad_x = grad_x_hat * inv_std[None, :, None, None]
        grad_gamma = (g * x_hat).sum(axis=axes) if needs[1] else None
        grad_beta = g.sum(axis=axes) if needs[2] else None
        return (grad_x, grad_gamma, grad_beta)

    return _record("batch_norm", out, [x, gamma, beta], _backward)


def avg_pool2d(x: Tensor, size: int = 2) -> Tensor:
    """Average non-overlapping ``size x size`` blocks.

    Examples
    --------
    >>> x = tensor(np.arange(16.0).reshape(1, 1, 4, 4))
    >>> avg_pool2d(x).data
    array([[[[ 2.5,  4.5],
             [10.5, 12.5]]]])

    """
    _check_rank("avg_pool2d", x, 4)
    n_batch, channels, height, width = x.shape
    if height % size or width % size:
        raise ShapeError(
            f"Spatial extents {height}x{width} are not divisible by the pooling size "
            f"{size}."
        )
    blocks = x.data.reshape(
        n_batch, channels, height // size, size, width // size, size
    )
    out = blocks.mean(axis=(3, 5))

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        spread = np.repeat(np.repeat(g, size, axis=2), size, axis=3)
        return (spread / (size * size),)

    return _record("avg_pool2d", out, [x], _backward)


def crop(x: Tensor, top: int, left: int, height: int, width: int) -> Tensor:
    """Cut a rectangle out of both spatial axes of a 4-dimensional tensor."""
    _check_rank("crop", x, 4)
    _, _, full_height, full_width = x.shape
    if (
        min(top, left) < 0
        or min(height, width) < 1
        or top + height > full_height
        or left + width > full_width
    ):
        raise ShapeError(
            f"Crop at ({top}, {left}) of size {height}x{width} exceeds the extent "
            f"{full_height}x{full_width}."
        )
    window = (
        slice(None),
        slice(None),
        slice(top, top + height),
        slice(left, left + width),
    )
    shape = x.shape
    dtype = x.dtype

    def _backward(g: np.ndarray, needs: tuple[bool, ...]) -> tuple:
        grad = np.zeros(shape, dtype=dtype)
        grad[window] = g
        return (grad,)

    return _record("crop", np.ascontiguousarray(x.data[window]), [x], _backward)
