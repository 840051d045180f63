"""Small fully connected networks on top of the autodiff tape.

Parameters live in a flat dict of named tensors (`w0`, `b0`, `w1`, ...),
initialized with scaled-Gaussian fan-in weights. Hidden layers use a leaky
rectifier; the output head is linear or a row softmax. A numpy-only forward
path mirrors `mlp_forward` exactly for tape-free rollouts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError

HIDDEN_SLOPE = 0.01


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture of one MLP: layer sizes plus the output head."""

    in_dim: int
    hidden: tuple[int, ...]
    out_dim: int
    output: str = "linear"  # "linear" or "softmax"

    def __post_init__(self):
        if self.in_dim <= 0 or self.out_dim <= 0:
            raise ConfigurationError("network dims must be positive")
        if any(h <= 0 for h in self.hidden):
            raise ConfigurationError("hidden sizes must be positive")
        if self.output not in ("linear", "softmax"):
            raise ConfigurationError(f"unknown output head {self.output!r}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.in_dim, *self.hidden, self.out_dim)


def init_mlp_params(spec: NetworkSpec, rng: np.random.Generator,
                    scale: float = 1.0) -> dict[str, Tensor]:
    """Fan-in scaled Gaussian weights, zero biases."""
    params: dict[str, Tensor] = {}
    dims = spec.layer_dims
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        w = rng.standard_normal((dims[i], dims[i + 1])) * (scale / np.sqrt(fan_in))
        params[f"w{i}"] = Tensor(w, requires_grad=True)
        params[f"b{i}"] = Tensor(np.zeros(dims[i + 1]), requires_grad=True)
    return params


def _check_input(spec: NetworkSpec, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.in_dim:
        raise ConfigurationError(
            f"expected input of shape (batch, {spec.in_dim}), got {x.shape}")
    return x


def mlp_preactivation(spec: NetworkSpec, params: dict[str, Tensor], x) -> Tensor:
    """Forward pass up to (and excluding) the output head."""
    h: Tensor = x if isinstance(x, Tensor) else Tensor(_check_input(spec, x))
    n_layers = len(spec.layer_dims) - 1
    for i in range(n_layers):
        h = ad.matmul(h, params[f"w{i}"]) + params[f"b{i}"]
        if i < n_layers - 1:
            h = ad.leaky_relu(h, HIDDEN_SLOPE)
    return h


def mlp_forward(spec: NetworkSpec, params: dict[str, Tensor], x) -> Tensor:
    z = mlp_preactivation(spec, params, x)
    if spec.output == "softmax":
        return ad.softmax(z, axis=-1)
    return z


def mlp_log_probs(spec: NetworkSpec, params: dict[str, Tensor], x) -> Tensor:
    """Row log-softmax of the preactivation (softmax head only)."""
    if spec.output != "softmax":
        raise ConfigurationError("log-probs need a softmax head")
    return ad.log_softmax(mlp_preactivation(spec, params, x), axis=-1)


def mlp_forward_np(spec: NetworkSpec, params: dict[str, Tensor],
                   x: np.ndarray) -> np.ndarray:
    """Tape-free forward identical to `mlp_forward` (logits for softmax head
    are returned as probabilities, matching the tensor path)."""
    h = _check_input(spec, x)
    n_layers = len(spec.layer_dims) - 1
    for i in range(n_layers):
        h = h @ params[f"w{i}"].data + params[f"b{i}"].data
        if i < n_layers - 1:
            h = np.where(h > 0.0, h, HIDDEN_SLOPE * h)
    if spec.output == "softmax":
        return ad.np_softmax(h, axis=-1)
    return h


def mlp_preactivation_np(spec: NetworkSpec, params: dict[str, Tensor],
                         x: np.ndarray) -> np.ndarray:
    h = _check_input(spec, x)
    n_layers = len(spec.layer_dims) - 1
    for i in range(n_layers):
        h = h @ params[f"w{i}"].data + params[f"b{i}"].data
        if i < n_layers - 1:
            h = np.where(h > 0.0, h, HIDDEN_SLOPE * h)
    return h


@dataclass
class FlatParams:
    """Pack/unpack between a params dict and one flat vector (for
    finite-difference probes and binary checkpoints)."""

    names: list[str] = field(default_factory=list)
    shapes: list[tuple[int, ...]] = field(default_factory=list)

    @classmethod
    def of(cls, params: dict[str, Tensor]) -> "FlatParams":
        names = sorted(params)
        return cls(names=names, shapes=[params[n].data.shape for n in names])

    def pack(self, params: dict[str, Tensor]) -> np.ndarray:
        return np.concatenate([params[n].data.reshape(-1) for n in self.names])

    def unpack_into(self, params: dict[str, Tensor], flat: np.ndarray) -> None:
        ofs = 0
        for name, shape in zip(self.names, self.shapes):
            size = int(np.prod(shape)) if shape else 1
            params[name].data = flat[ofs:ofs + size].reshape(shape).copy()
            ofs += size
        if ofs != flat.size:
            raise ConfigurationError("flat vector size mismatch")
