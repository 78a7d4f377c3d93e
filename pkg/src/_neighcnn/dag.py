"""Implement the backward pass over the recorded computation graph."""
from __future__ import annotations

from typing import Dict
from typing import List

import networkx as nx
import numpy as np
from _neighcnn.exceptions import AutogradError
from _neighcnn.exceptions import NumericalError
from _neighcnn.tensor import Parameter
from _neighcnn.tensor import TapeNode
from _neighcnn.tensor import Tensor


def build_graph(root: TapeNode) -> nx.DiGraph:
    """Build the graph of all nodes from which the root is reachable.

    Edges point from inputs to outputs.

    """
    dag = nx.DiGraph()
    dag.add_node(root)
    stack = [root]
    while stack:
        node = stack.pop()
        for parent in node.inputs:
            if parent is None:
                continue
            if parent not in dag:
                stack.append(parent)
            dag.add_edge(parent, node)

    _check_if_dag_has_cycles(dag)

    return dag


def _check_if_dag_has_cycles(dag: nx.DiGraph) -> None:
    """Check if DAG has cycles."""
    try:
        cycles = nx.algorithms.cycles.find_cycle(dag)
    except nx.NetworkXNoCycle:
        pass
    else:
        raise AutogradError(
            "The recorded graph contains a cycle which is not allowed:\n"
            + "\n".join(f"    {u!r} -> {v!r}" for u, v, *_ in cycles)
        )


def reverse_topological_order(dag: nx.DiGraph) -> List[TapeNode]:
    """Order nodes such that every node comes before its inputs.

    Ties are broken by creation index so that the order does not depend on the
    insertion order of the graph.

    """
    order = nx.lexicographical_topological_sort(dag, key=lambda node: node.index)
    return list(reversed(list(order)))


def backward(root: Tensor, accumulate: bool = False) -> None:
    """Propagate the gradient of a scalar tensor to all reachable leaves.

    Gradients of leaf tensors are stored in the gradient slot of their nodes, gradients
    of parameters in :attr:`~_neighcnn.tensor.Parameter.grad`. Without ``accumulate``
    the gradients of previous passes are replaced.

    Raises
    ------
    AutogradError
        If the tensor is not a scalar, was not recorded, or if the graph has already
        been consumed by a previous backward pass.

    """
    if root.size != 1:
        raise AutogradError(
            f"backward requires a scalar tensor, got shape {root.shape}."
        )
    if root.node is None:
        raise AutogradError(
            "backward requires a tensor which was recorded from inputs requiring "
            "gradients."
        )

    dag = build_graph(root.node)
    order = reverse_topological_order(dag)
    # Leaves belong to many graphs and only count as consumed when they are the root.
    if any(node.consumed for node in order if not node.is_leaf or node is root.node):
        raise AutogradError(
            "The recorded graph was already consumed by a backward pass. Record the "
            "operations again."
        )

    grads: Dict[TapeNode, np.ndarray] = {
        root.node: np.ones(root.shape, dtype=root.dtype)
    }
    for node in order:
        if node.is_leaf or node not in grads:
            continue
        grad = grads.pop(node)
        needs = tuple(parent is not None for parent in node.inputs)
        input_grads = node.backward(grad, needs)
        for parent, input_grad in zip(node.inputs, input_grads):
            if parent is None or input_grad is None:
                continue
            input_grad = np.asarray(input_grad)
            if not np.all(np.isfinite(input_grad)):
                raise NumericalError(
                    f"The backward pass of {node.op!r} produced non-finite values."
                )
            grads[parent] = (
                input_grad if parent not in grads else grads[parent] + input_grad
            )
        node.backward = None
        node.consumed = True
    root.node.consumed = True

    _store_leaf_gradients(dag, grads, accumulate)


def _store_leaf_gradients(
    dag: nx.DiGraph, grads: Dict[TapeNode, np.ndarray], accumulate: bool
) -> None:
    """Write the gradients of a pass into leaf nodes and parameters."""
    parameters: Dict[int, Parameter] = {}
    for node in sorted(dag.nodes, key=lambda node: node.index):
        grad = grads.get(node)
        if not node.is_leaf or grad is None:
            continue
        node.grad = grad if not accumulate or node.grad is None else node.grad + grad

        if node.parameter is not None:
            parameter = node.parameter
            if id(parameter) not in parameters:
                parameters[id(parameter)] = parameter
                if not accumulate or parameter.grad is None:
                    parameter.grad = np.zeros_like(parameter.value)
            parameter.grad = parameter.grad + grad

