from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Dict, Iterator, Tuple

import numpy as np

from rltc.model.config import ModelConfig
from rltc.utils.files import write_bytes_atomic

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"RLTM"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _block_shapes(prefix: str, cfg: ModelConfig, cross: bool) -> Dict[str, Tuple[int, ...]]:
    d, f = cfg.d_model, cfg.d_ff
    shapes: Dict[str, Tuple[int, ...]] = {}
    attn_blocks = [("ln1", "self_attn")] + ([("ln2", "cross_attn")] if cross else [])
    for norm, attn in attn_blocks:
        shapes[f"{prefix}.{norm}.g"] = (d,)
        shapes[f"{prefix}.{norm}.b"] = (d,)
        for proj in ("wq", "wk", "wv", "wo"):
            shapes[f"{prefix}.{attn}.{proj}"] = (d, d)
    norm = "ln3" if cross else "ln2"
    shapes[f"{prefix}.{norm}.g"] = (d,)
    shapes[f"{prefix}.{norm}.b"] = (d,)
    shapes[f"{prefix}.ffn.w1"] = (d, f)
    shapes[f"{prefix}.ffn.b1"] = (f,)
    shapes[f"{prefix}.ffn.w2"] = (f, d)
    shapes[f"{prefix}.ffn.b2"] = (d,)
    return shapes


def parameter_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Every named tensor of the network, in canonical (checkpoint) order."""
    d = cfg.d_model
    shapes: Dict[str, Tuple[int, ...]] = {
        "tok_emb": (cfg.vocab, d),
        "pos_emb": (cfg.max_pos, d),
    }
    for i in range(cfg.n_layers_enc):
        shapes.update(_block_shapes(f"enc.{i}", cfg, cross=False))
    shapes["enc.ln_f.g"] = (d,)
    shapes["enc.ln_f.b"] = (d,)
    for i in range(cfg.n_layers_dec):
        shapes.update(_block_shapes(f"dec.{i}", cfg, cross=True))
    shapes["dec.ln_f.g"] = (d,)
    shapes["dec.ln_f.b"] = (d,)
    shapes["lm_head"] = (d, cfg.vocab)
    shapes["value_head"] = (d, 1)
    shapes["value_head.b"] = (1,)
    return shapes


class _TensorStore:
    """Ordered mapping of tensor name to float64 array."""

    def __init__(self, config: ModelConfig, tensors: Dict[str, np.ndarray]):
        self.config = config
        self.tensors = tensors

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        self.tensors[name] = value

    def __contains__(self, name: object) -> bool:
        return name in self.tensors

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    def names(self) -> list[str]:
        return list(self.tensors)

    @property
    def n_parameters(self) -> int:
        return int(sum(t.size for t in self.tensors.values()))

    def all_finite(self) -> bool:
        return all(bool(np.isfinite(t).all()) for t in self.tensors.values())


class ModelParams(_TensorStore):
    """Weights of one encoder-decoder network with policy and value heads."""

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "ModelParams":
        rng = np.random.default_rng(seed)
        tensors: Dict[str, np.ndarray] = {}
        for name, shape in parameter_shapes(config).items():
            if name.endswith(".g"):
                tensors[name] = np.ones(shape, dtype=np.float64)
            elif name.endswith((".b", ".b1", ".b2")):
                tensors[name] = np.zeros(shape, dtype=np.float64)
            else:
                tensors[name] = rng.normal(0.0, config.init_std, size=shape)
        logger.debug("Initialized %d parameters (seed %d)", sum(t.size for t in tensors.values()), seed)
        return cls(config, tensors)

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, {name: t.copy() for name, t in self.tensors.items()})

    def flat(self) -> np.ndarray:
        return np.concatenate([t.ravel() for t in self.tensors.values()])

    def save(self, path: str | Path) -> None:
        write_bytes_atomic(path, serialize_params(self))
        logger.info("Saved checkpoint %s (%d parameters)", path, self.n_parameters)

    @classmethod
    def load(cls, path: str | Path) -> "ModelParams":
        try:
            payload = Path(path).read_bytes()
        except OSError as exc:
            logger.error("Cannot read checkpoint %s: %s", path, exc)
            raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
        return deserialize_params(payload)


class GradientStore(_TensorStore):
    """One gradient tensor per parameter tensor, same shapes."""

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "GradientStore":
        return cls(params.config, {name: np.zeros_like(t) for name, t in params.items()})

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        self.tensors[name] += grad

    def scaled(self, factor: float) -> "GradientStore":
        return GradientStore(self.config, {name: t * factor for name, t in self.tensors.items()})

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(t * t)) for t in self.tensors.values())))


def serialize_params(params: ModelParams) -> bytes:
    config_json = params.config.model_dump_json().encode("utf-8")
    parts = [
        CHECKPOINT_MAGIC,
        struct.pack("<B", CHECKPOINT_VERSION),
        struct.pack("<I", len(config_json)),
        config_json,
    ]
    for name, tensor in params.items():
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<Q", tensor.size))
        parts.append(np.ascontiguousarray(tensor, dtype="<f8").tobytes())
    return b"".join(parts)


def deserialize_params(payload: bytes) -> ModelParams:
    view = memoryview(payload)
    if bytes(view[:4]) != CHECKPOINT_MAGIC:
        raise CheckpointError("not a model checkpoint (bad magic)")
    try:
        (version,) = struct.unpack_from("<B", view, 4)
        if version != CHECKPOINT_VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        (config_len,) = struct.unpack_from("<I", view, 5)
        cursor = 9
        config = ModelConfig.model_validate_json(bytes(view[cursor : cursor + config_len]))
        cursor += config_len

        expected = parameter_shapes(config)
        tensors: Dict[str, np.ndarray] = {}
        while cursor < len(view):
            (name_len,) = struct.unpack_from("<H", view, cursor)
            cursor += 2
            name = bytes(view[cursor : cursor + name_len]).decode("utf-8")
            cursor += name_len
            (count,) = struct.unpack_from("<Q", view, cursor)
            cursor += 8
            shape = expected.get(name)
            if shape is None or int(np.prod(shape)) != count:
                raise CheckpointError(f"unexpected tensor {name!r} with {count} elements")
            end = cursor + 8 * count
            if end > len(view):
                raise CheckpointError(f"checkpoint truncated inside tensor {name!r}")
            tensors[name] = np.frombuffer(view[cursor:end], dtype="<f8").astype(np.float64).reshape(shape)
            cursor = end
    except (struct.error, UnicodeDecodeError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint: {exc}") from exc

    missing = [name for name in expected if name not in tensors]
    if missing:
        raise CheckpointError(f"checkpoint is missing tensors: {', '.join(missing[:5])}")
    ordered = {name: tensors[name] for name in expected}
    return ModelParams(config, ordered)
