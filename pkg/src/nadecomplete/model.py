"""Mask-conditioned autoregressive network for binary data.

One shared network parameterizes every one-dimensional conditional: it maps
the concatenation of the masked input (x * mask) and the mask indicator to
D Bernoulli logits in a single pass, so all conditionals under one mask
come out of one inference. Two ReLU hidden layers; logits for observed
positions are computed but must never enter a loss.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import numerics
from .combinatorics import ObservedSet
from .validation import as_rng, check_bit_vector

PARAM_NAMES = ("W1", "b1", "W2", "b2", "W3", "b3")

CHECKPOINT_MAGIC = "nadecomplete-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class NadeModel:
    """Weights of the shared network. Input width is exactly 2*D."""

    D: int
    H1: int
    H2: int
    seed: int
    W1: np.ndarray  # (H1, 2D)
    b1: np.ndarray  # (H1, 1)
    W2: np.ndarray  # (H2, H1)
    b2: np.ndarray  # (H2, 1)
    W3: np.ndarray  # (D, H2)
    b3: np.ndarray  # (D, 1)

    def parameters(self) -> dict[str, np.ndarray]:
        """Parameter arrays keyed by name, in declared order."""
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for name in PARAM_NAMES:
            current = getattr(self, name)
            new = np.asarray(params[name], dtype=np.float64)
            if new.shape != current.shape:
                raise ValueError(f"{name}: expected shape {current.shape}, got {new.shape}")
            setattr(self, name, new)

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())

    def copy(self) -> "NadeModel":
        return NadeModel(
            self.D, self.H1, self.H2, self.seed,
            *(getattr(self, name).copy() for name in PARAM_NAMES),
        )

    def forward(self, x, observed: ObservedSet) -> "ForwardTrace":
        x = check_bit_vector(x, self.D)
        mask = observed.indicator()
        return forward_batch(self, x[None, :], mask[None, :])

    def backward(self, trace: "ForwardTrace", logit_grads: np.ndarray) -> dict[str, np.ndarray]:
        return backward(self, trace, logit_grads)


@dataclass
class ForwardTrace:
    """Activations cached by one forward pass (columns are batch members)."""

    inputs: np.ndarray  # (2D, B)
    z1: np.ndarray      # (H1, B) pre-activation
    a1: np.ndarray      # (H1, B)
    z2: np.ndarray      # (H2, B)
    a2: np.ndarray      # (H2, B)
    logits: np.ndarray  # (D, B)

    @property
    def batch_size(self) -> int:
        return self.logits.shape[1]

    def logits_vector(self, column: int = 0) -> np.ndarray:
        return self.logits[:, column]


def init_model(D: int, H1: int, H2: int, seed: int) -> NadeModel:
    """Uniform[-s, s] weights with s = sqrt(6/(fan_in+fan_out)); zero biases."""
    if D < 1 or H1 < 1 or H2 < 1:
        raise ValueError(f"dimensions must be >= 1, got D={D}, H1={H1}, H2={H2}")
    rng = as_rng(seed)

    def glorot(rows, cols):
        s = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-s, s, size=(rows, cols))

    return NadeModel(
        D=D, H1=H1, H2=H2, seed=seed,
        W1=glorot(H1, 2 * D),
        b1=np.zeros((H1, 1)),
        W2=glorot(H2, H1),
        b2=np.zeros((H2, 1)),
        W3=glorot(D, H2),
        b3=np.zeros((D, 1)),
    )


def forward_batch(model: NadeModel, X: np.ndarray, masks: np.ndarray) -> ForwardTrace:
    """Forward pass over a batch of (x, mask) rows.

    X and masks are (B, D); each row's input is concat(x * mask, mask), so
    unobserved values are zeroed out before the network ever sees them.
    """
    X = np.asarray(X, dtype=np.float64)
    masks = np.asarray(masks, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.D:
        raise ValueError(f"X must be (B, {model.D}), got {X.shape}")
    if masks.shape != X.shape:
        raise ValueError(f"masks must match X: {masks.shape} vs {X.shape}")

    inputs = np.concatenate([(X * masks).T, masks.T], axis=0)  # (2D, B)
    z1 = numerics.matmul(model.W1, inputs) + model.b1
    a1 = np.maximum(z1, 0.0)
    z2 = numerics.matmul(model.W2, a1) + model.b2
    a2 = np.maximum(z2, 0.0)
    logits = numerics.matmul(model.W3, a2) + model.b3
    return ForwardTrace(inputs=inputs, z1=z1, a1=a1, z2=z2, a2=a2, logits=logits)


def backward(model: NadeModel, trace: ForwardTrace, logit_grads: np.ndarray) -> dict[str, np.ndarray]:
    """Gradients of sum(logits * logit_grads) with respect to all parameters.

    Reverse-mode through the cached trace; ReLU subgradient at 0 is 0.
    Batch members are reduced left-to-right (column order), so the result
    is bit-identical to accumulating per-example backward passes.
    """
    dlogits = np.asarray(logit_grads, dtype=np.float64)
    if dlogits.ndim == 1:
        dlogits = dlogits[:, None]
    if dlogits.shape != trace.logits.shape:
        raise ValueError(f"logit_grads must be {trace.logits.shape}, got {dlogits.shape}")

    B = trace.batch_size
    ones = np.ones((B, 1))

    dW3 = numerics.matmul(dlogits, trace.a2.T)
    db3 = numerics.matmul(dlogits, ones)
    da2 = numerics.matmul(model.W3.T, dlogits)
    dz2 = da2 * (trace.z2 > 0.0)
    dW2 = numerics.matmul(dz2, trace.a1.T)
    db2 = numerics.matmul(dz2, ones)
    da1 = numerics.matmul(model.W2.T, dz2)
    dz1 = da1 * (trace.z1 > 0.0)
    dW1 = numerics.matmul(dz1, trace.inputs.T)
    db1 = numerics.matmul(dz1, ones)

    return {"W1": dW1, "b1": db1, "W2": dW2, "b2": db2, "W3": dW3, "b3": db3}


def zero_gradients(model: NadeModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in model.parameters().items()}


# --- checkpoint format ----------------------------------------------------
#
# Plain text, one value per token, reproducible byte-for-byte:
#
#   nadecomplete-checkpoint 1
#   D <int> H1 <int> H2 <int> seed <int>
#   param W1 <rows> <cols>
#   <cols floats per line, repr round-trip, rows lines>
#   ... remaining params in declared order: W1 b1 W2 b2 W3 b3
#
# repr() of a Python float round-trips exactly, so save/load is lossless.


def save_checkpoint(model: NadeModel, path) -> None:
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}"]
    lines.append(f"D {model.D} H1 {model.H1} H2 {model.H2} seed {model.seed}")
    for name, p in model.parameters().items():
        lines.append(f"param {name} {p.shape[0]} {p.shape[1]}")
        for row in p:
            lines.append(" ".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path) -> NadeModel:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"not a checkpoint file: {path}")
    version = int(lines[0].split()[1])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    header = lines[1].split()
    meta = {header[i]: int(header[i + 1]) for i in range(0, len(header), 2)}

    params: dict[str, np.ndarray] = {}
    i = 2
    while i < len(lines):
        if not lines[i]:
            i += 1
            continue
        tag, name, rows, cols = lines[i].split()
        if tag != "param":
            raise ValueError(f"malformed checkpoint line: {lines[i]!r}")
        rows, cols = int(rows), int(cols)
        block = np.empty((rows, cols))
        for r in range(rows):
            block[r] = [float(t) for t in lines[i + 1 + r].split()]
        params[name] = block
        i += 1 + rows

    missing = [n for n in PARAM_NAMES if n not in params]
    if missing:
        raise ValueError(f"checkpoint missing parameters: {missing}")
    return NadeModel(
        D=meta["D"], H1=meta["H1"], H2=meta["H2"], seed=meta["seed"],
        **{name: params[name] for name in PARAM_NAMES},
    )
