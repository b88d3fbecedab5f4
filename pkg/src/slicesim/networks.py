"""Actor and critic networks: GCN substrate encoder plus FC heads.

Both networks share one architecture, owned twice with independent
parameters. The substrate branch runs K=3 graph-convolution layers
producing 60 features per node over the fixed propagation matrix
D^{-1/2}(A+I)D^{-1/2}; the request branch is a 4-unit FC layer; the
optional load branch is a 100-unit FC layer over the 300 forecast
values. The concatenation (60|N| + 4, or 60|N| + 104 with the load
branch) feeds one output layer: |S| action scores for the actor, a
single value neuron for the critic.

The actor applies tanh on every non-output layer and leaves the output
linear; the critic applies relu on every layer, output included.

Checkpoints are a versioned binary: a JSON manifest (names, shapes,
architecture fields) followed by the raw little-endian float64 arrays in
manifest order. Round-trips are bit-exact.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .autodiff import Tensor, concat
from .errors import CheckpointError, ConfigurationError

GCN_LAYERS = 3
GCN_WIDTH = 60
NSPR_FC_WIDTH = 4
LOAD_FC_WIDTH = 100
NSPR_INPUT_WIDTH = 4
PSN_FEATURES = 4
LOAD_INPUT_WIDTH = 300


def normalized_propagation(adjacency: np.ndarray) -> np.ndarray:
    """Symmetric-normalized adjacency with self-loops."""
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigurationError("adjacency must be square")
    a_hat = a + np.eye(a.shape[0])
    d = a_hat.sum(axis=1)
    d_inv_sqrt = 1.0 / np.sqrt(d)
    return a_hat * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]


def glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


class ParameterSet:
    """Named parameter tensors with gradient buffers."""

    def __init__(self):
        self.params: dict[str, Tensor] = {}

    def add(self, name: str, values: np.ndarray) -> Tensor:
        if name in self.params:
            raise ConfigurationError(f"duplicate parameter {name!r}")
        t = Tensor(np.array(values, dtype=np.float64), requires_grad=True)
        self.params[name] = t
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self.params[name]

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def sgd_step(self, lr: float) -> None:
        for p in self.params.values():
            if p.grad is not None:
                p.data -= lr * p.grad

    def count(self) -> int:
        return sum(p.data.size for p in self.params.values())

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data for name, p in self.params.items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        if set(arrays) != set(self.params):
            missing = set(self.params) - set(arrays)
            extra = set(arrays) - set(self.params)
            raise CheckpointError(
                f"parameter name mismatch (missing {sorted(missing)}, "
                f"unexpected {sorted(extra)})")
        for name, values in arrays.items():
            p = self.params[name]
            if p.data.shape != values.shape:
                raise CheckpointError(
                    f"shape mismatch for {name!r}: "
                    f"{values.shape} vs {p.data.shape}")
            p.data = np.array(values, dtype=np.float64)


class SliceNet:
    """One network instance (actor or critic flavor).

    activation: "tanh" applies to non-output layers only, output linear
    (actor); "relu" applies to every layer including the output (critic).
    """

    def __init__(self, propagation: np.ndarray, n_actions: int,
                 use_load: bool, activation: str,
                 rng: np.random.Generator,
                 gcn_layers: int = GCN_LAYERS, gcn_width: int = GCN_WIDTH):
        if activation not in ("tanh", "relu"):
            raise ConfigurationError(f"unknown activation {activation!r}")
        self.propagation = np.asarray(propagation, dtype=np.float64)
        self.n_nodes = self.propagation.shape[0]
        self.n_actions = n_actions
        self.use_load = use_load
        self.activation = activation
        self.gcn_layers = gcn_layers
        self.gcn_width = gcn_width
        self.params = ParameterSet()

        width_in = PSN_FEATURES
        for layer in range(gcn_layers):
            self.params.add(f"gcn.{layer}.w", glorot(rng, width_in, gcn_width))
            self.params.add(f"gcn.{layer}.b", np.zeros(gcn_width))
            width_in = gcn_width
        self.params.add("nspr.w", glorot(rng, NSPR_INPUT_WIDTH, NSPR_FC_WIDTH))
        self.params.add("nspr.b", np.zeros(NSPR_FC_WIDTH))
        combined = gcn_width * self.n_nodes + NSPR_FC_WIDTH
        if use_load:
            self.params.add("load.w", glorot(rng, LOAD_INPUT_WIDTH, LOAD_FC_WIDTH))
            self.params.add("load.b", np.zeros(LOAD_FC_WIDTH))
            combined += LOAD_FC_WIDTH
        self.combined_width = combined
        self.params.add("out.w", glorot(rng, combined, n_actions))
        self.params.add("out.b", np.zeros(n_actions))

    def _act(self, t: Tensor) -> Tensor:
        return t.tanh() if self.activation == "tanh" else t.relu()

    def gcn_forward(self, node_features: np.ndarray) -> Tensor:
        """K propagation layers over the fixed graph; (|N|, 60) output."""
        x_arr = np.asarray(node_features, dtype=np.float64)
        if x_arr.shape != (self.n_nodes, PSN_FEATURES):
            raise ConfigurationError(
                f"node features must be {(self.n_nodes, PSN_FEATURES)}, "
                f"got {x_arr.shape}")
        a_hat = Tensor(self.propagation)
        x = Tensor(x_arr)
        for layer in range(self.gcn_layers):
            w = self.params[f"gcn.{layer}.w"]
            b = self.params[f"gcn.{layer}.b"]
            x = self._act(a_hat @ x @ w + b)
        return x

    def forward(self, psn: np.ndarray, nspr: np.ndarray,
                load: np.ndarray | None = None) -> Tensor:
        """Score vector over actions (actor) or 1-vector (critic)."""
        nspr_arr = np.asarray(nspr, dtype=np.float64)
        if nspr_arr.shape != (NSPR_INPUT_WIDTH,):
            raise ConfigurationError(
                f"request features must be ({NSPR_INPUT_WIDTH},)")
        parts = [self.gcn_forward(psn).reshape(-1)]
        parts.append(self._act(Tensor(nspr_arr) @ self.params["nspr.w"]
                               + self.params["nspr.b"]))
        if self.use_load:
            if load is None:
                raise ConfigurationError("this network requires load features")
            load_arr = np.asarray(load, dtype=np.float64)
            if load_arr.shape != (LOAD_INPUT_WIDTH,):
                raise ConfigurationError(
                    f"load features must be ({LOAD_INPUT_WIDTH},)")
            parts.append(self._act(Tensor(load_arr) @ self.params["load.w"]
                                   + self.params["load.b"]))
        elif load is not None:
            raise ConfigurationError("this network takes no load features")
        combined = concat(parts)
        z = combined @ self.params["out.w"] + self.params["out.b"]
        if self.activation == "relu":
            z = z.relu()
        return z

    def manifest(self) -> dict:
        return {
            "n_nodes": self.n_nodes,
            "n_actions": self.n_actions,
            "use_load": self.use_load,
            "activation": self.activation,
            "gcn_layers": self.gcn_layers,
            "gcn_width": self.gcn_width,
        }


# -- checkpoint file format -------------------------------------------------

_MAGIC = b"SLNC"
_VERSION = 1


def save_checkpoint(path, manifest: dict, arrays: dict[str, np.ndarray]) -> None:
    """Write manifest + arrays; arrays are recorded in sorted-name order."""
    names = sorted(arrays)
    full = dict(manifest)
    full["tensors"] = [{"name": n, "shape": list(arrays[n].shape)} for n in names]
    blob = json.dumps(full, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(blob)))
        fh.write(blob)
        for n in names:
            fh.write(np.ascontiguousarray(arrays[n], dtype="<f8").tobytes())


def load_checkpoint(path):
    """Read a checkpoint; returns (manifest, arrays by name)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != _MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, blob_len = struct.unpack("<II", raw[4:12])
    if version != _VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        manifest = json.loads(raw[12:12 + blob_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint manifest: {exc}") from exc
    offset = 12 + blob_len
    arrays: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        end = offset + size * 8
        if end > len(raw):
            raise CheckpointError("truncated checkpoint payload")
        arrays[entry["name"]] = np.frombuffer(
            raw[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(raw):
        raise CheckpointError("trailing bytes after checkpoint payload")
    return manifest, arrays
