from __future__ import annotations

import logging
import shutil
import subprocess
from dataclasses import dataclass
from typing import Dict, Tuple

logger = logging.getLogger(__name__)


class ExternalToolMissing(RuntimeError):
    pass


@dataclass(frozen=True)
class ExternalTool:
    name: str
    binary: str
    compress_args: Tuple[str, ...]
    decompress_args: Tuple[str, ...]


EXTERNAL_TOOLS: Dict[str, ExternalTool] = {
    "gzip": ExternalTool("gzip", "gzip", ("-c", "-9"), ("-d", "-c")),
    "xz": ExternalTool("xz", "xz", ("-c", "-9"), ("-d", "-c")),
}


def tool_path(name: str) -> str:
    tool = EXTERNAL_TOOLS[name]
    path = shutil.which(tool.binary)
    if path is None:
        raise ExternalToolMissing(f"{tool.binary} is not installed")
    return path


def _run(argv: list[str], data: bytes, timeout: float) -> bytes:
    result = subprocess.run(argv, input=data, capture_output=True, timeout=timeout, check=False)
    if result.returncode != 0:
        message = result.stderr.decode("utf-8", "replace").strip()
        raise RuntimeError(f"{argv[0]} exited with {result.returncode}: {message}")
    return result.stdout


def external_roundtrip(name: str, data: bytes, timeout: float = 300.0) -> Tuple[bytes, bytes]:
    """
    Compress ``data`` with a system tool and decompress the result again.

    Returns:
        ``(compressed, restored)``.

    Raises:
        ExternalToolMissing: the binary is not on PATH.
    """
    path = tool_path(name)
    tool = EXTERNAL_TOOLS[name]
    compressed = _run([path, *tool.compress_args], data, timeout)
    restored = _run([path, *tool.decompress_args], compressed, timeout)
    logger.debug("%s: %d -> %d bytes", name, len(data), len(compressed))
    return compressed, restored
