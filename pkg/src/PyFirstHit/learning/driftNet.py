# -*- coding: UTF-8 -*-
"""
@Project    : PyFirstHit
@File       : driftNet.py
@Description: 可训练漂移网络：numpy 实现的多层感知机（解析反向传播）、Adam 优化器与模型文件读写。
@Version    : v0.1.0
@Dependencies:
    - numpy
@Changelog  :
    - v0.1.0: ReLU MLP with optional tanh output bound, Adam, text model files.
"""
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..core.hitSchemes import Scheme, parse_scheme
from ..core.sdeCore import DriftEvaluator
from ..utils.constants import FLOAT_FORMAT, MODEL_MAGIC
from ..utils.exceptions import FormatError, ParseError, PreconditionError, SimulationError
from ..utils.filePathHelper import AtomicWrite


def time_scale_of(scheme: Scheme) -> float:
    """Scale of the time feature: the terminal time for fixed-time and accelerated half-space hitting."""
    if scheme.kind == "fixedtime":
        return scheme.T
    if scheme.kind == "halfspace" and scheme.accel is not None:
        return scheme.accel
    return 1.0


class Mlp:
    """
    Fully connected network (z, t / time_scale) -> drift with ReLU hidden layers and a linear output,
    optionally squashed to B·tanh(· / B).

    Attributes:
        layer_dims (List[int]): [D + 1, hidden..., D].
        weights (List[np.ndarray]): weights[l] has shape (layer_dims[l+1], layer_dims[l]).
        biases (List[np.ndarray]): biases[l] has shape (layer_dims[l+1],).
        output_bound (Optional[float]): B, or None for an unbounded output.
        scheme_descriptor (str): descriptor of the scheme the model was trained for.
    """

    def __init__(self, layer_dims: Sequence[int], weights: List[np.ndarray], biases: List[np.ndarray],
                 output_bound: Optional[float] = None, scheme_descriptor: str = "",
                 time_scale: float = 1.0) -> None:
        self.layer_dims = [int(v) for v in layer_dims]
        if len(self.layer_dims) < 2 or min(self.layer_dims) < 1:
            raise PreconditionError(f"invalid layer dims {self.layer_dims}")
        if output_bound is not None and output_bound <= 0.0:
            raise PreconditionError("output_bound must be positive")
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.layer_dims[l + 1], self.layer_dims[l]) or b.shape != (self.layer_dims[l + 1],):
                raise PreconditionError(f"layer {l} parameters do not match dims {self.layer_dims}")
        self.output_bound = output_bound
        self.scheme_descriptor = scheme_descriptor
        self.time_scale = time_scale

    @classmethod
    def initialize(cls, layer_dims: Sequence[int], rng: np.random.Generator, output_bound: Optional[float] = None,
                   scheme_descriptor: str = "", time_scale: float = 1.0) -> "Mlp":
        """He-scaled hidden layers, zero output layer: a fresh model has zero drift."""
        dims = [int(v) for v in layer_dims]
        weights, biases = [], []
        for l in range(len(dims) - 1):
            if l == len(dims) - 2:
                weights.append(np.zeros((dims[l + 1], dims[l])))
            else:
                weights.append(rng.standard_normal((dims[l + 1], dims[l])) * math.sqrt(2.0 / dims[l]))
            biases.append(np.zeros(dims[l + 1]))
        return cls(dims, weights, biases, output_bound, scheme_descriptor, time_scale)

    @classmethod
    def for_scheme(cls, scheme: Scheme, rng: np.random.Generator, hidden: int = 100, hidden_layers: int = 2,
                   output_bound: Optional[float] = None) -> "Mlp":
        dims = [scheme.state_dim + 1] + [hidden] * hidden_layers + [scheme.state_dim]
        if scheme.kind == "categorical" and output_bound is None:
            raise PreconditionError("categorical models need an output bound")
        return cls.initialize(dims, rng, output_bound, scheme.descriptor(), time_scale_of(scheme))

    # ---------------------------------------------------------------- compute
    @property
    def parameters(self) -> List[np.ndarray]:
        """Parameters in file order: W0, b0, W1, b1, ..."""
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def _inputs(self, z: np.ndarray, t) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        if z.shape[1] + 1 != self.layer_dims[0]:
            raise PreconditionError(f"state dimension {z.shape[1]} does not match input {self.layer_dims[0]}")
        feature = np.broadcast_to(np.asarray(t, dtype=float).reshape(-1, 1) / self.time_scale, (z.shape[0], 1))
        return np.hstack([z, feature])

    def _forward_layers(self, inputs: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray, np.ndarray]:
        activations = [inputs]
        last = len(self.weights) - 1
        raw = inputs
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            raw = activations[-1] @ w.T + b
            if l < last:
                activations.append(np.maximum(raw, 0.0))
        out = raw if self.output_bound is None else self.output_bound * np.tanh(raw / self.output_bound)
        return activations, raw, out

    def forward(self, z, t) -> np.ndarray:
        """
        Evaluate the network on one state (returns a vector) or a batch (returns rows).

        Raises:
            SimulationError: the output is not finite because of non-finite parameters.
        """
        single = np.asarray(z).ndim == 1
        _, _, out = self._forward_layers(self._inputs(z, t))
        if not np.all(np.isfinite(out)):
            bad = [i for i, p in enumerate(self.parameters) if not np.all(np.isfinite(p))]
            raise SimulationError(f"non-finite network output (non-finite parameter arrays: {bad})",
                                  state=np.asarray(z))
        return out[0] if single else out

    def backward(self, z, t, target, mask=None) -> Tuple[float, List[np.ndarray]]:
        """
        Loss ½·mean_n ‖mask ∘ (f(z, t) − target)‖² and its gradients in `parameters` order.

        Raises:
            PreconditionError: empty batch or shape mismatch.
        """
        inputs = self._inputs(z, t)
        n = inputs.shape[0]
        if n == 0:
            raise PreconditionError("backward needs a non-empty batch")
        target = np.asarray(target, dtype=float).reshape(n, -1)
        mask = np.ones_like(target) if mask is None else np.asarray(mask, dtype=float).reshape(target.shape)
        activations, raw, out = self._forward_layers(inputs)
        if out.shape != target.shape:
            raise PreconditionError(f"target shape {target.shape} does not match output {out.shape}")
        residual = mask * (out - target)
        loss = 0.5 * float(np.sum(residual ** 2)) / n
        delta = mask * residual / n
        if self.output_bound is not None:
            delta = delta * (1.0 - (out / self.output_bound) ** 2)
        grads_w: List[np.ndarray] = [np.empty(0)] * len(self.weights)
        grads_b: List[np.ndarray] = [np.empty(0)] * len(self.weights)
        for l in range(len(self.weights) - 1, -1, -1):
            grads_w[l] = delta.T @ activations[l]
            grads_b[l] = delta.sum(axis=0)
            if l > 0:
                delta = (delta @ self.weights[l]) * (activations[l] > 0.0)
        return loss, [g for pair in zip(grads_w, grads_b) for g in pair]

    def copy(self) -> "Mlp":
        return Mlp(self.layer_dims, [w.copy() for w in self.weights], [b.copy() for b in self.biases],
                   self.output_bound, self.scheme_descriptor, self.time_scale)


@dataclass
class AdamState:
    """First/second moment estimates matching the network parameters."""
    learning_rate: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    first: List[np.ndarray] = field(default_factory=list)
    second: List[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_net(cls, net: Mlp, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999,
                eps: float = 1e-8) -> "AdamState":
        return cls(learning_rate, beta1, beta2, eps, 0, [np.zeros_like(p) for p in net.parameters],
                   [np.zeros_like(p) for p in net.parameters])


def adam_step(net: Mlp, state: AdamState, grads: List[np.ndarray]) -> Tuple[Mlp, AdamState]:
    """
    One bias-corrected Adam update, applied to the network's parameter arrays in place.

    Raises:
        PreconditionError: gradient shapes do not match the parameters.
    """
    params = net.parameters
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise PreconditionError("gradient shapes do not match the network parameters")
    if not state.first:
        state.first = [np.zeros_like(p) for p in params]
        state.second = [np.zeros_like(p) for p in params]
    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    for p, g, m, v in zip(params, grads, state.first, state.second):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    return net, state


class ModelDrift(DriftEvaluator):
    """Drift of the model process: network output plus the scheme's baseline drift."""

    def __init__(self, net: Mlp, scheme: Scheme) -> None:
        if net.layer_dims[0] != scheme.state_dim + 1 or net.layer_dims[-1] != scheme.state_dim:
            raise PreconditionError(f"model dims {net.layer_dims} do not fit {scheme.descriptor()}")
        self.net = net
        self.scheme = scheme

    def evaluate(self, z, t, k, rows):
        return self.net.forward(z, np.full(z.shape[0], t)) + self.scheme.baseline_drift(z, t)


# ---------------------------------------------------------------------------
# Model files
# ---------------------------------------------------------------------------

def save(net: Mlp, path: str) -> None:
    """Write magic, scheme descriptor, layer dims, bound, then one parameter per line."""
    with AtomicWrite(path, newline="\n") as fp:
        fp.write(f"{MODEL_MAGIC}\n{net.scheme_descriptor}\n")
        fp.write(" ".join(str(v) for v in net.layer_dims) + "\n")
        fp.write(("none" if net.output_bound is None else format(net.output_bound, FLOAT_FORMAT)) + "\n")
        for param in net.parameters:
            for value in param.ravel():
                fp.write(format(float(value), FLOAT_FORMAT) + "\n")


def load(path: str) -> Mlp:
    """
    Read a model file written by save().

    Raises:
        FormatError: wrong magic line.
        ParseError: malformed header, parameter or truncated file, with the line number.
    """
    with open(path, "r", encoding="utf-8") as fp:
        lines = fp.read().splitlines()
    if not lines or lines[0].strip() != MODEL_MAGIC:
        raise FormatError(f"expected magic '{MODEL_MAGIC}'", 1)
    if len(lines) < 4:
        raise ParseError("truncated header", len(lines) + 1)
    descriptor = lines[1].strip()
    try:
        dims = [int(v) for v in lines[2].split()]
    except ValueError as err:
        raise ParseError(f"bad layer dims: {err}", 3) from err
    if len(dims) < 2 or min(dims) < 1:
        raise ParseError("layer dims need at least two positive sizes", 3)
    bound_text = lines[3].strip().lower()
    try:
        bound = None if bound_text == "none" else float(bound_text)
    except ValueError as err:
        raise ParseError(f"bad output bound '{bound_text}'", 4) from err
    counts = [(dims[l + 1], dims[l]) for l in range(len(dims) - 1)]
    total = sum(o * i + o for o, i in counts)
    body = lines[4:]
    if len(body) < total:
        raise ParseError(f"expected {total} parameters, file ends early", len(lines) + 1)
    values = np.empty(total)
    for offset, text in enumerate(body[:total]):
        try:
            values[offset] = float(text)
        except ValueError as err:
            raise ParseError(f"bad parameter '{text}'", offset + 5) from err
    if any(text.strip() for text in body[total:]):
        raise ParseError("trailing data after the parameters", 5 + total)
    weights, biases = [], []
    cursor = 0
    for out_dim, in_dim in counts:
        weights.append(values[cursor:cursor + out_dim * in_dim].reshape(out_dim, in_dim))
        cursor += out_dim * in_dim
        biases.append(values[cursor:cursor + out_dim].copy())
        cursor += out_dim
    time_scale = 1.0
    if descriptor:
        time_scale = time_scale_of(parse_scheme(descriptor))
    return Mlp(dims, weights, biases, bound, descriptor, time_scale)
