from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelConfig(BaseModel):
    """Shape and activation settings for one encoder-decoder network."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    d_model: int = Field(64, ge=1)
    n_heads: int = Field(4, ge=1)
    n_layers_enc: int = Field(2, ge=0)
    n_layers_dec: int = Field(2, ge=0)
    d_ff: int = Field(256, ge=1)
    vocab: int = Field(260, ge=2)
    max_pos: int = Field(130, ge=1)
    activation: Literal["gelu", "relu"] = "gelu"
    init_std: float = Field(0.02, gt=0)

    @model_validator(mode="after")
    def _heads_divide_width(self) -> "ModelConfig":
        if self.d_model % self.n_heads != 0:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        return self

    @property
    def head_dim(self) -> int:
        return self.d_model // self.n_heads

    def supports_chunk(self, chunk_len: int) -> bool:
        return self.max_pos >= chunk_len + 2
