"""Dense 2-D reverse-mode automatic differentiation."""

from src.gradcore.check import GradCheckReport, GraphBuilder, grad_check, numeric_gradient
from src.gradcore.ops import (
    SELU_ALPHA,
    SELU_SCALE,
    add,
    concat_rows,
    cosine,
    exp,
    grad_reverse,
    log,
    log_softmax_row,
    matmul,
    mean,
    mul,
    scale,
    selu,
    selu_values,
    sigmoid,
    softmax_row,
    stop_grad,
    sum_all,
    take,
    tanh,
    transpose,
)
from src.gradcore.tape import Node, OpKind, Tape, Tensor, as_tensor, backward

__all__ = [
    "SELU_ALPHA",
    "SELU_SCALE",
    "GradCheckReport",
    "GraphBuilder",
    "Node",
    "OpKind",
    "Tape",
    "Tensor",
    "add",
    "as_tensor",
    "backward",
    "concat_rows",
    "cosine",
    "exp",
    "grad_check",
    "grad_reverse",
    "log",
    "log_softmax_row",
    "matmul",
    "mean",
    "mul",
    "numeric_gradient",
    "scale",
    "selu",
    "selu_values",
    "sigmoid",
    "softmax_row",
    "stop_grad",
    "sum_all",
    "take",
    "tanh",
    "transpose",
]
