import sys
import tempfile
from pathlib import Path

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from rltc.cli import main as rltc_main

SAMPLE = b"<page><title>Smoke</title><text>The quick brown fox jumps over the lazy dog.</text></page>\n" * 40
TINY = ["--d-model", "16", "--n-heads", "2", "--n-layers", "1", "--d-ff", "32"]


def main():
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        corpus = root / "sample.xml"
        corpus.write_bytes(SAMPLE)
        run = root / "run"

        code = rltc_main([
            "train", "--corpus", str(corpus), "--chunk-len", "32", "--steps", "5",
            "--pretrain-steps", "20", "--batch", "4", "--warmup", "2", "--out", str(run), "--no-progress", *TINY,
        ])
        print("TRAIN", code)

        packed = root / "sample.rltc"
        code = rltc_main(["compress", str(corpus), "--out", str(packed), "--model-dir", str(run), "--chunk-len", "32"])
        print("COMPRESS", code, f"{len(SAMPLE)} -> {packed.stat().st_size} bytes")

        restored = root / "restored.xml"
        code = rltc_main(["decompress", str(packed), "--out", str(restored), "--model-dir", str(run)])
        print("DECOMPRESS", code)
        print("ROUND TRIP", "ok" if restored.read_bytes() == SAMPLE else "MISMATCH")

        code = rltc_main(["bench", "--corpus", str(corpus), "--model-dir", str(run), "--chunk-len", "32", "--no-external"])
        print("BENCH", code)


if __name__ == "__main__":
    main()
