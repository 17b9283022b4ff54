from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path

logger = logging.getLogger(__name__)

READ_BLOCK = 1024 * 1024


class FileUnreadable(OSError):
    pass


@dataclass(frozen=True)
class CorpusSlice:
    """A prefix of a corpus file held in memory together with its SHA-256."""

    source: Path
    offset: int
    length: int
    sha256: str
    data: bytes

    def verify(self) -> bool:
        return hashlib.sha256(self.data).hexdigest() == self.sha256 and len(self.data) == self.length


def ingest_corpus(path: str | Path, limit_bytes: int, *, offset: int = 0) -> CorpusSlice:
    """
    Load ``min(limit_bytes, file size - offset)`` bytes from ``path``.

    Args:
        path: Corpus file, e.g. an enwik8 copy.
        limit_bytes: Upper bound on the slice length (>= 1).
        offset: Byte offset to start reading from.

    Returns:
        A verified CorpusSlice.
    """
    if limit_bytes < 1:
        raise ValueError("limit_bytes must be >= 1")

    source = Path(path)
    logger.info("Ingesting up to %d bytes from %s", limit_bytes, source)
    digest = hashlib.sha256()
    blocks = []
    remaining = limit_bytes
    try:
        with source.open("rb") as handle:
            handle.seek(offset)
            while remaining > 0:
                block = handle.read(min(READ_BLOCK, remaining))
                if not block:
                    break
                digest.update(block)
                blocks.append(block)
                remaining -= len(block)
    except OSError as exc:
        logger.error("Cannot read corpus %s: %s", source, exc)
        raise FileUnreadable(f"cannot read corpus {source}: {exc}") from exc

    data = b"".join(blocks)
    if not data:
        raise FileUnreadable(f"corpus {source} has no bytes at offset {offset}")

    corpus = CorpusSlice(source=source, offset=offset, length=len(data), sha256=digest.hexdigest(), data=data)
    logger.info("Loaded %d bytes (sha256 %s)", corpus.length, corpus.sha256[:12])
    return corpus
