"""The Adam optimizer as a pure function over trees of arrays."""
from __future__ import annotations

from typing import Any
from typing import Dict

import attr
import numpy as np
from _neighcnn.exceptions import ConfigurationError
from _neighcnn.exceptions import ShapeError
from pybaum.tree_util import leaf_names
from pybaum.tree_util import tree_flatten
from pybaum.tree_util import tree_just_flatten
from pybaum.tree_util import tree_map
from pybaum.tree_util import tree_unflatten


__all__ = ["AdamConfig", "AdamState", "adam_step", "init_adam_state"]


@attr.s(frozen=True)
class AdamConfig:
    learning_rate = attr.ib(default=1e-4, type=float, converter=float)
    beta1 = attr.ib(default=0.9, type=float, converter=float)
    beta2 = attr.ib(default=0.999, type=float, converter=float)
    epsilon = attr.ib(default=1e-8, type=float, converter=float)

    @learning_rate.validator
    def _check_learning_rate(self, attribute: attr.Attribute, value: float) -> None:
        if value < 0:
            raise ConfigurationError(
                f"The learning rate must be non-negative, got {value}."
            )

    @beta1.validator
    @beta2.validator
    def _check_beta(self, attribute: attr.Attribute, value: float) -> None:
        if not 0 <= value < 1:
            raise ConfigurationError(
                f"{attribute.name} must be in [0, 1), got {value}."
            )


@attr.s(frozen=True, eq=False)
class AdamState:
    """The step counter and the first and second moment estimates."""

    step = attr.ib(default=0, type=int)
    m = attr.ib(factory=dict, type=Dict[str, Any])
    v = attr.ib(factory=dict, type=Dict[str, Any])


def init_adam_state(parameters: Any) -> AdamState:
    """Create a state with zero moments for a tree of parameter arrays."""
    return AdamState(
        0, tree_map(np.zeros_like, parameters), tree_map(np.zeros_like, parameters)
    )


def _check_structure(name: str, reference: Any, other: Any) -> list[np.ndarray]:
    if leaf_names(reference) != leaf_names(other):
        raise ShapeError(
            f"The {name} do not match the parameters. Expected "
            f"{leaf_names(reference)}, got {leaf_names(other)}."
        )
    leaves = tree_just_flatten(other)
    for label, expected, actual in zip(
        leaf_names(reference), tree_just_flatten(reference), leaves
    ):
        if np.shape(expected) != np.shape(actual):
            raise ShapeError(
                f"The {name} of {label!r} have shape {np.shape(actual)}, but the "
                f"parameter has shape {np.shape(expected)}."
            )
    return leaves


def adam_step(
    parameters: Any, gradients: Any, state: AdamState, config: AdamConfig | None = None
) -> tuple[Any, AdamState]:
    """Perform one Adam update with bias correction.

    Parameters and gradients are trees of arrays with identical structure, for example
    dictionaries mapping parameter names to arrays. Nothing is modified in place.

    Examples
    --------
    >>> theta = {"w": np.array([1.0])}
    >>> theta, state = adam_step(theta, {"w": np.array([2.0])}, init_adam_state(theta))
    >>> theta["w"], state.step
    (array([0.9999]), 1)

    """
    config = AdamConfig() if config is None else config
    flat_parameters, treedef = tree_flatten(parameters)
    flat_gradients = _check_structure("gradients", parameters, gradients)
    flat_m = _check_structure("first moments", parameters, state.m)
    flat_v = _check_structure("second moments", parameters, state.v)

    step = state.step + 1
    correction1 = 1 - config.beta1**step
    correction2 = 1 - config.beta2**step

    new_parameters, new_m, new_v = [], [], []
    for theta, g, m, v in zip(flat_parameters, flat_gradients, flat_m, flat_v):
        m = config.beta1 * m + (1 - config.beta1) * g
        v = config.beta2 * v + (1 - config.beta2) * g * g
        m_hat = m / correction1
        v_hat = v / correction2
        update = config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)
        new_parameters.append((theta - update).astype(np.asarray(theta).dtype))
        new_m.append(m)
        new_v.append(v)

    return (
        tree_unflatten(treedef, new_parameters),
        AdamState(
            step, tree_unflatten(treedef, new_m), tree_unflatten(treedef, new_v)
        ),
    )
