"""
Multigraph model assembly, prediction and parameter persistence.

Parameters are plain float64 arrays keyed by name; every forward pass
registers them as leaves on a fresh tape.
"""

import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from autodiff.tape import DiffNode, Tape
from constants import (
    DEFAULT_ATTENTION_WIDTH,
    DEFAULT_CHEB_ORDER,
    DEFAULT_HIDDEN_UNITS,
    DEFAULT_UNROLL_STEPS,
    MODEL_FORMAT_VERSION,
    MODEL_MAGIC,
)
from errors import ContractError, DataError
from graphs.population import PopulationGraph
from model.fusion import FusionHead, fuse
from model.recurrent import Branch, GcnInputHook, branch_forward
from utils.log import get_logger

logger = get_logger("model.mgmc")


@dataclass(frozen=True)
class ModelSpec:
    """Architecture hyperparameters."""

    n_features: int
    n_classes: int
    n_graphs: int
    K: int = DEFAULT_CHEB_ORDER
    T: int = DEFAULT_UNROLL_STEPS
    hidden: int = DEFAULT_HIDDEN_UNITS
    attention_width: int = DEFAULT_ATTENTION_WIDTH
    fusion_mode: str = "additive"
    fusion_scope: str = "row"
    autoregressive: bool = False
    use_bias: bool = True

    @property
    def width(self) -> int:
        return self.n_features + self.n_classes


@dataclass
class ForwardPass:
    params: dict[str, DiffNode]
    branch_outputs: list[DiffNode]
    fused: DiffNode
    alpha: DiffNode


@dataclass
class Prediction:
    """Completed matrix split into its feature and label blocks."""

    completed: np.ndarray
    features: np.ndarray
    probabilities: np.ndarray
    classes: np.ndarray
    alpha: np.ndarray


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


class MgmcModel:
    """One recurrent branch per graph plus a shared fusion head."""

    def __init__(self, spec: ModelSpec, params: Optional[Mapping[str, np.ndarray]] = None, seed: int = 0):
        self.spec = spec
        self.branches = [
            Branch.create(i, spec.width, spec.hidden, spec.K, spec.use_bias) for i in range(spec.n_graphs)
        ]
        self.head = FusionHead(
            in_dim=spec.width, a_dim=spec.attention_width, mode=spec.fusion_mode, scope=spec.fusion_scope
        )
        initial = self._init_values(np.random.default_rng(seed))
        if params is None:
            self.params = initial
            return

        missing = set(initial) - set(params)
        if missing:
            raise ContractError(f"missing parameters: {', '.join(sorted(missing))}")
        self.params = {name: np.array(params[name], dtype=np.float64) for name in initial}
        for name, value in initial.items():
            if self.params[name].shape != value.shape:
                raise ContractError(
                    f"parameter '{name}' has shape {self.params[name].shape}, expected {value.shape}"
                )

    def _init_values(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        values = {}
        for branch in self.branches:
            values.update(branch.init_params(rng))
        values.update(self.head.init_params(rng))
        return values

    @classmethod
    def create(cls, spec: ModelSpec, seed: int) -> "MgmcModel":
        return cls(spec, seed=seed)

    @property
    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.params.values()))

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: value.copy() for name, value in self.params.items()}

    def load_params(self, params: Mapping[str, np.ndarray]) -> None:
        for name in self.params:
            self.params[name] = np.array(params[name], dtype=np.float64)

    def bind(self, tape: Tape) -> dict[str, DiffNode]:
        return {name: tape.parameter(value, name) for name, value in self.params.items()}

    def forward(
        self,
        tape: Tape,
        z: np.ndarray,
        graphs: Sequence[PopulationGraph],
        on_step: Optional[GcnInputHook] = None,
    ) -> ForwardPass:
        if len(graphs) != self.spec.n_graphs:
            raise ContractError(f"model has {self.spec.n_graphs} branches but {len(graphs)} graphs were given")
        nodes = self.bind(tape)
        z_node = tape.constant(z, "z")
        outputs = [
            branch_forward(branch, nodes, graph.rescaled, z_node, self.spec.T,
                           autoregressive=self.spec.autoregressive, on_step=on_step)
            for branch, graph in zip(self.branches, graphs)
        ]
        fused, alpha = fuse(self.head, nodes, outputs)
        return ForwardPass(params=nodes, branch_outputs=outputs, fused=fused, alpha=alpha)

    def predict(self, z: np.ndarray, graphs: Sequence[PopulationGraph]) -> Prediction:
        result = self.forward(Tape(), z, graphs)
        completed = result.fused.value
        m = self.spec.n_features
        probabilities = softmax_rows(completed[:, m:])
        return Prediction(
            completed=completed,
            features=completed[:, :m],
            probabilities=probabilities,
            classes=probabilities.argmax(axis=1),
            alpha=result.alpha.value,
        )

    # =========================================================================
    # PERSISTENCE
    # =========================================================================

    def save(self, path: Union[str, Path]) -> Path:
        """
        Write the parameter container.

        Layout: magic, uint16 version, uint32 header length, JSON header
        (spec + parameter order), then per parameter: uint32 name length,
        name, uint32 rows, uint32 cols, float64 little-endian data.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = json.dumps({"spec": asdict(self.spec), "params": list(self.params)}, sort_keys=True).encode()
        with open(path, "wb") as f:
            f.write(MODEL_MAGIC)
            f.write(struct.pack("<HI", MODEL_FORMAT_VERSION, len(header)))
            f.write(header)
            for name, value in self.params.items():
                encoded = name.encode()
                f.write(struct.pack("<I", len(encoded)))
                f.write(encoded)
                f.write(struct.pack("<II", *value.shape))
                f.write(value.astype("<f8").tobytes())
        logger.info(f"Saved {self.parameter_count} parameters to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "MgmcModel":
        with open(path, "rb") as f:
            blob = f.read()

        if not blob.startswith(MODEL_MAGIC):
            raise DataError(f"{path} is not an {MODEL_MAGIC.decode()} container")
        offset = len(MODEL_MAGIC)
        version, header_len = struct.unpack_from("<HI", blob, offset)
        if version != MODEL_FORMAT_VERSION:
            raise DataError(f"unsupported container version {version}")
        offset += struct.calcsize("<HI")
        header = json.loads(blob[offset:offset + header_len].decode())
        offset += header_len

        params = {}
        for _ in header["params"]:
            (name_len,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset:offset + name_len].decode()
            offset += name_len
            rows, cols = struct.unpack_from("<II", blob, offset)
            offset += 8
            count = rows * cols
            params[name] = np.frombuffer(blob, dtype="<f8", count=count, offset=offset).reshape(rows, cols).copy()
            offset += 8 * count

        return cls(ModelSpec(**header["spec"]), params)
