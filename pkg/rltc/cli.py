"""
Command-line entry point: ``python -m rltc {train,compress,decompress,bench,sweep}``.

Every subcommand validates its flags into a :class:`CliConfig` before doing any
work and writes its outputs atomically, so a failed run leaves no file behind.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Sequence

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from rltc.bench.sweep import sweep_chunk_sizes, write_sweep_csv
from rltc.bench.table import baseline_table, format_table, write_table_csv
from rltc.codec.container import BadMagic, CorruptContainer, MalformedRecord, VersionUnsupported, VocabMismatch
from rltc.codec.packing import PayloadTruncated
from rltc.codec.pipeline import compress_bytes, decompress_stream
from rltc.config import get_settings
from rltc.ingestion.corpus import FileUnreadable, ingest_corpus
from rltc.ingestion.tokenizer import MAX_CHUNK_LEN, chunk_stream, encode_bytes
from rltc.model.config import ModelConfig
from rltc.model.params import CheckpointError, ModelParams
from rltc.training.run_dir import COMPRESSOR_FILE, DECOMPRESSOR_FILE
from rltc.training.trainer import TrainerConfig, run_training
from rltc.utils.files import write_bytes_atomic
from rltc.utils.logging import configure_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_BAD_MAGIC = 3
EXIT_VOCAB_MISMATCH = 4
EXIT_CORRUPT = 5
EXIT_IO = 6
EXIT_VERSION = 7

# first match wins, so subclasses go before their bases
EXIT_CODES: List[tuple] = [
    (ValidationError, EXIT_USAGE),
    (BadMagic, EXIT_BAD_MAGIC),
    (VocabMismatch, EXIT_VOCAB_MISMATCH),
    (VersionUnsupported, EXIT_VERSION),
    ((CorruptContainer, MalformedRecord, PayloadTruncated), EXIT_CORRUPT),
    ((FileUnreadable, CheckpointError, OSError), EXIT_IO),
]

Subcommand = Literal["train", "compress", "decompress", "bench", "sweep"]


def exit_code_for(exc: BaseException) -> int:
    for kinds, code in EXIT_CODES:
        if isinstance(exc, kinds):
            return code
    return EXIT_FAILURE


class CliConfig(BaseModel):
    """Validated flags of one CLI invocation."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand
    corpus: Optional[Path] = None
    limit_bytes: int = Field(1024 * 1024, ge=1)
    input: Optional[Path] = None
    out: Optional[Path] = None
    compressor: Optional[Path] = None
    decompressor: Optional[Path] = None
    chunk_len: int = Field(64, ge=1, le=MAX_CHUNK_LEN)
    seed: int = 0
    steps: int = Field(0, ge=0)
    pretrain_steps: int = Field(0, ge=0)
    batch_size: int = Field(16, ge=1)
    learning_rate: float = Field(3e-4, ge=0.0)
    gamma: float = Field(0.99, gt=0.0, le=1.0)
    warmup: int = Field(500, ge=0)
    jobs: int = Field(1, ge=1)
    max_compress_len: Optional[int] = Field(None, ge=1)
    sizes: List[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    table: Optional[Path] = None
    external: bool = True
    progress: bool = True
    d_model: int = Field(64, ge=1)
    n_heads: int = Field(4, ge=1)
    n_layers: int = Field(2, ge=0)
    d_ff: int = Field(256, ge=1)

    @field_validator("sizes")
    @classmethod
    def _sizes_in_range(cls, sizes: List[int]) -> List[int]:
        if not sizes:
            raise ValueError("--sizes needs at least one chunk size")
        for size in sizes:
            if not 1 <= size <= MAX_CHUNK_LEN:
                raise ValueError(f"chunk size {size} outside 1..{MAX_CHUNK_LEN}")
        return sizes

    @model_validator(mode="after")
    def _required_flags(self) -> "CliConfig":
        needs = {
            "train": ("corpus", "out"),
            "compress": ("input", "out", "compressor", "decompressor"),
            "decompress": ("input", "out", "decompressor"),
            "bench": ("corpus",),
            "sweep": ("corpus", "out", "compressor", "decompressor"),
        }[self.subcommand]
        missing = [name for name in needs if getattr(self, name) is None]
        if missing:
            flags = ", ".join(f"--{name.replace('_', '-')}" for name in missing)
            raise ValueError(f"{self.subcommand} requires {flags}")
        if self.subcommand == "bench" and (self.compressor is None) != (self.decompressor is None):
            raise ValueError("bench needs both --compressor and --decompressor, or neither")
        return self

    def network_config(self) -> ModelConfig:
        return ModelConfig(
            d_model=self.d_model,
            n_heads=self.n_heads,
            n_layers_enc=self.n_layers,
            n_layers_dec=self.n_layers,
            d_ff=self.d_ff,
        )

    def trainer_config(self) -> TrainerConfig:
        return TrainerConfig(
            chunk_len=self.chunk_len,
            batch_size=self.batch_size,
            gamma=self.gamma,
            learning_rate=self.learning_rate,
            pretrain_steps=self.pretrain_steps,
            steps=self.steps,
            warmup_steps=self.warmup,
            max_compress_len=self.max_compress_len,
            seed=self.seed,
        )


def _parse_sizes(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"--sizes expects comma-separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    settings = get_settings()
    parser = argparse.ArgumentParser(prog="rltc", description="RL-trained token compressor laboratory")
    parser.add_argument("--log-level", default=settings.log_level, help="logging level (default: %(default)s)")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def models(p: argparse.ArgumentParser) -> None:
        p.add_argument("--model-dir", type=Path, help="run directory holding both checkpoints")
        p.add_argument("--compressor", type=Path, help="compressor checkpoint")
        p.add_argument("--decompressor", type=Path, help="decompressor checkpoint")

    def corpus(p: argparse.ArgumentParser) -> None:
        p.add_argument("--corpus", type=Path, default=settings.corpus, help="corpus file (env RLTC_CORPUS)")
        p.add_argument("--limit-bytes", type=int, default=settings.limit_bytes)

    def chunking(p: argparse.ArgumentParser) -> None:
        p.add_argument("--chunk-len", type=int, default=settings.chunk_len)
        p.add_argument("--max-compress-len", type=int, help="cap on compressed tokens per chunk (default: chunk length)")

    def jobs(p: argparse.ArgumentParser) -> None:
        p.add_argument("--jobs", type=int, default=settings.jobs, help="worker threads for chunk groups")

    train = sub.add_parser("train", help="identity pre-training followed by actor-critic training")
    corpus(train)
    chunking(train)
    train.add_argument("--seed", type=int, default=settings.seed)
    train.add_argument("--steps", type=int, default=0)
    train.add_argument("--pretrain-steps", type=int, default=0)
    train.add_argument("--batch", type=int, default=16)
    train.add_argument("--lr", type=float, default=3e-4)
    train.add_argument("--gamma", type=float, default=0.99)
    train.add_argument("--warmup", type=int, default=500)
    train.add_argument("--d-model", type=int, default=64)
    train.add_argument("--n-heads", type=int, default=4)
    train.add_argument("--n-layers", type=int, default=2)
    train.add_argument("--d-ff", type=int, default=256)
    train.add_argument("--out", type=Path, default=settings.run_dir, help="run directory")
    train.add_argument("--no-progress", action="store_true")

    compress = sub.add_parser("compress", help="compress a file into an RLTC container")
    compress.add_argument("input", type=Path)
    compress.add_argument("--out", type=Path)
    models(compress)
    chunking(compress)
    jobs(compress)

    decompress = sub.add_parser("decompress", help="restore a file from an RLTC container")
    decompress.add_argument("input", type=Path)
    decompress.add_argument("--out", type=Path)
    models(decompress)
    jobs(decompress)

    bench = sub.add_parser("bench", help="verified size table for baselines and the learned codec")
    corpus(bench)
    chunking(bench)
    jobs(bench)
    models(bench)
    bench.add_argument("--table", type=Path, help="write the table as CSV")
    bench.add_argument("--no-external", action="store_true", help="skip system gzip/xz")

    sweep = sub.add_parser("sweep", help="ratio, latency and throughput per chunk size")
    corpus(sweep)
    models(sweep)
    sweep.add_argument("--sizes", type=_parse_sizes, default=[16, 32, 64, 128])
    sweep.add_argument("--batch", type=int, default=16, help="chunks per timed batch (1 = single-chunk latency)")
    sweep.add_argument("--max-compress-len", type=int, help="cap on compressed tokens per chunk")
    jobs(sweep)
    sweep.add_argument("--out", type=Path, help="CSV output path")
    return parser


def _model_paths(args: argparse.Namespace) -> Dict[str, Optional[Path]]:
    if getattr(args, "model_dir", None) is not None:
        return {
            "compressor": args.model_dir / COMPRESSOR_FILE,
            "decompressor": args.model_dir / DECOMPRESSOR_FILE,
        }
    paths = {"compressor": getattr(args, "compressor", None), "decompressor": getattr(args, "decompressor", None)}
    if args.subcommand in ("compress", "decompress", "sweep"):
        settings = get_settings()
        paths["compressor"] = paths["compressor"] or settings.compressor_path
        paths["decompressor"] = paths["decompressor"] or settings.decompressor_path
    return paths


def config_from_args(args: argparse.Namespace) -> CliConfig:
    values = {
        "subcommand": args.subcommand,
        **_model_paths(args),
    }
    renames = {"batch": "batch_size", "lr": "learning_rate"}
    for key in (
        "corpus", "limit_bytes", "input", "out", "chunk_len", "seed", "steps", "pretrain_steps", "batch", "lr",
        "gamma", "warmup", "jobs", "max_compress_len", "sizes", "table", "d_model", "n_heads", "n_layers", "d_ff",
    ):
        if hasattr(args, key):
            values[renames.get(key, key)] = getattr(args, key)
    if hasattr(args, "no_external"):
        values["external"] = not args.no_external
    if hasattr(args, "no_progress"):
        values["progress"] = not args.no_progress
    return CliConfig(**{k: v for k, v in values.items() if v is not None})


# -------------------------- subcommands --------------------------


def cmd_train(cfg: CliConfig) -> int:
    trainer_cfg = cfg.trainer_config()
    model_cfg = cfg.network_config()
    corpus = ingest_corpus(cfg.corpus, cfg.limit_bytes)
    chunks = chunk_stream(encode_bytes(corpus.data), cfg.chunk_len)

    compressor = ModelParams.initialize(model_cfg, seed=cfg.seed)
    decompressor = ModelParams.initialize(model_cfg, seed=cfg.seed + 1)
    extra = {"corpus.path": corpus.source, "corpus.length": corpus.length, "corpus.sha256": corpus.sha256}
    result = run_training(
        compressor, decompressor, chunks, trainer_cfg, cfg.out, extra_config=extra, progress=cfg.progress
    )
    if result.history:
        last = result.history[-1]
        logger.info("Finished %d steps: L_D=%.4f mean|c|=%.2f", len(result.history), last.L_D, last.mean_c_len)
    logger.info("Checkpoints written to %s", cfg.out)
    return EXIT_OK


def cmd_compress(cfg: CliConfig) -> int:
    compressor = ModelParams.load(cfg.compressor)
    decompressor = ModelParams.load(cfg.decompressor)
    try:
        data = cfg.input.read_bytes()
    except OSError as exc:
        raise FileUnreadable(f"cannot read {cfg.input}: {exc}") from exc
    blob = compress_bytes(
        compressor, decompressor, data, cfg.chunk_len, jobs=cfg.jobs, max_compress_len=cfg.max_compress_len
    )
    write_bytes_atomic(cfg.out, blob)
    logger.info("Compressed %s (%d bytes) to %s (%d bytes)", cfg.input, len(data), cfg.out, len(blob))
    return EXIT_OK


def cmd_decompress(cfg: CliConfig) -> int:
    decompressor = ModelParams.load(cfg.decompressor)
    try:
        blob = cfg.input.read_bytes()
    except OSError as exc:
        raise FileUnreadable(f"cannot read {cfg.input}: {exc}") from exc
    data = decompress_stream(decompressor, blob, jobs=cfg.jobs)
    write_bytes_atomic(cfg.out, data)
    logger.info("Decompressed %s to %s (%d bytes)", cfg.input, cfg.out, len(data))
    return EXIT_OK


def cmd_bench(cfg: CliConfig) -> int:
    corpus = ingest_corpus(cfg.corpus, cfg.limit_bytes)
    compressor = ModelParams.load(cfg.compressor) if cfg.compressor else None
    decompressor = ModelParams.load(cfg.decompressor) if cfg.decompressor else None
    table = baseline_table(
        corpus,
        compressor=compressor,
        decompressor=decompressor,
        chunk_len=cfg.chunk_len,
        jobs=cfg.jobs,
        max_compress_len=cfg.max_compress_len,
        external=() if not cfg.external else ("gzip", "xz"),
    )
    if cfg.table is not None:
        write_table_csv(table, cfg.table)
    print(format_table(table))
    return EXIT_OK


def cmd_sweep(cfg: CliConfig) -> int:
    corpus = ingest_corpus(cfg.corpus, cfg.limit_bytes)
    compressor = ModelParams.load(cfg.compressor)
    decompressor = ModelParams.load(cfg.decompressor)
    rows = sweep_chunk_sizes(
        compressor, decompressor, corpus, cfg.sizes, cfg.batch_size, jobs=cfg.jobs, max_compress_len=cfg.max_compress_len
    )
    write_sweep_csv(rows, cfg.out)
    return EXIT_OK


COMMANDS: Dict[str, Callable[[CliConfig], int]] = {
    "train": cmd_train,
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.subcommand](cfg)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_FAILURE:
            logger.exception("%s failed", args.subcommand)
        else:
            logger.error("%s failed: %s", args.subcommand, exc)
        print(f"rltc {args.subcommand}: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
