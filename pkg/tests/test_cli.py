import csv

import pytest

from rltc.cli import (
    EXIT_BAD_MAGIC,
    EXIT_CORRUPT,
    EXIT_IO,
    EXIT_OK,
    EXIT_USAGE,
    EXIT_VERSION,
    EXIT_VOCAB_MISMATCH,
    main,
)
from rltc.codec.container import parse_container
from rltc.config import get_settings
from rltc.model.config import ModelConfig
from rltc.model.params import ModelParams
from rltc.training.run_dir import RunDirectory

TINY = ["--d-model", "8", "--n-heads", "2", "--n-layers", "1", "--d-ff", "16"]
TEXT = b"A small corpus for the command line. It repeats, it repeats. " * 6


@pytest.fixture(autouse=True)
def isolated_settings(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("RLTC_CORPUS", raising=False)
    monkeypatch.delenv("RLTC_RUN_DIR", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_bytes(TEXT)
    return path


@pytest.fixture
def model_dir(tmp_path, corpus):
    out = tmp_path / "model"
    code = main(["train", "--corpus", str(corpus), "--chunk-len", "8", "--out", str(out), "--no-progress", *TINY])
    assert code == EXIT_OK
    return out


@pytest.fixture
def container(tmp_path, corpus, model_dir):
    out = tmp_path / "corpus.rltc"
    assert main(["compress", str(corpus), "--out", str(out), "--model-dir", str(model_dir), "--chunk-len", "8"]) == EXIT_OK
    return out


def test_train_writes_checkpoints_and_config(model_dir):
    assert (model_dir / "compressor.rltm").exists()
    assert (model_dir / "decompressor.rltm").exists()
    assert (model_dir / "config.txt").exists()
    assert ModelParams.load(model_dir / "compressor.rltm").config.d_model == 8


def test_train_is_reproducible(tmp_path, corpus, model_dir):
    again = tmp_path / "again"
    main(["train", "--corpus", str(corpus), "--chunk-len", "8", "--out", str(again), "--no-progress", *TINY])
    for name in ("compressor.rltm", "decompressor.rltm"):
        assert (again / name).read_bytes() == (model_dir / name).read_bytes()


def test_compress_decompress_round_trip(tmp_path, corpus, model_dir, container):
    restored = tmp_path / "restored.txt"
    code = main(["decompress", str(container), "--out", str(restored), "--model-dir", str(model_dir), "--jobs", "2"])
    assert code == EXIT_OK
    assert restored.read_bytes() == corpus.read_bytes()


def test_decompress_garbage_is_bad_magic(tmp_path, model_dir):
    garbage = tmp_path / "garbage.bin"
    garbage.write_bytes(b"definitely not a container")
    out = tmp_path / "out.txt"
    code = main(["decompress", str(garbage), "--out", str(out), "--model-dir", str(model_dir)])
    assert code == EXIT_BAD_MAGIC
    assert not out.exists()


def test_decompress_with_other_vocabulary(tmp_path, container):
    other = tmp_path / "other.rltm"
    ModelParams.initialize(ModelConfig(d_model=8, n_heads=2, n_layers_enc=1, n_layers_dec=1, d_ff=16, vocab=300), seed=0).save(other)
    code = main(["decompress", str(container), "--out", str(tmp_path / "out"), "--decompressor", str(other)])
    assert code == EXIT_VOCAB_MISMATCH


def test_decompress_truncated_container(tmp_path, model_dir, container):
    container.write_bytes(container.read_bytes()[:-1])
    out = tmp_path / "out.txt"
    code = main(["decompress", str(container), "--out", str(out), "--model-dir", str(model_dir)])
    assert code == EXIT_CORRUPT
    assert not out.exists()


def test_decompress_unknown_version(tmp_path, model_dir, container):
    blob = bytearray(container.read_bytes())
    blob[4] = 2
    container.write_bytes(bytes(blob))
    code = main(["decompress", str(container), "--out", str(tmp_path / "out"), "--model-dir", str(model_dir)])
    assert code == EXIT_VERSION


def test_missing_corpus_file(tmp_path):
    code = main(["train", "--corpus", str(tmp_path / "nope.txt"), "--out", str(tmp_path / "run"), *TINY])
    assert code == EXIT_IO
    assert not (tmp_path / "run").exists()


def test_missing_corpus_flag_is_a_usage_error(tmp_path, capsys):
    code = main(["train", "--out", str(tmp_path / "run")])
    assert code == EXIT_USAGE
    assert "--corpus" in capsys.readouterr().err


def test_corpus_from_environment(tmp_path, corpus, monkeypatch):
    monkeypatch.setenv("RLTC_CORPUS", str(corpus))
    get_settings.cache_clear()
    out = tmp_path / "env-run"
    assert main(["train", "--chunk-len", "8", "--out", str(out), "--no-progress", *TINY]) == EXIT_OK
    assert (out / "compressor.rltm").exists()


def test_invalid_chunk_len_is_a_usage_error(tmp_path, corpus):
    code = main(["train", "--corpus", str(corpus), "--chunk-len", "129", "--out", str(tmp_path / "run"), *TINY])
    assert code == EXIT_USAGE


def test_train_has_no_jobs_flag(tmp_path, corpus):
    with pytest.raises(SystemExit) as exc:
        main(["train", "--corpus", str(corpus), "--out", str(tmp_path / "run"), "--jobs", "2", *TINY])
    assert exc.value.code == EXIT_USAGE


def test_length_cap_reaches_training_and_compression(tmp_path, corpus):
    run = tmp_path / "capped"
    args = ["train", "--corpus", str(corpus), "--chunk-len", "8", "--max-compress-len", "4", "--steps", "1", "--batch", "2"]
    assert main([*args, "--out", str(run), "--no-progress", *TINY]) == EXIT_OK
    assert RunDirectory(run).read_config()["trainer.max_compress_len"] == "4"

    packed = tmp_path / "capped.rltc"
    code = main(["compress", str(corpus), "--out", str(packed), "--model-dir", str(run), "--chunk-len", "8", "--max-compress-len", "2"])
    assert code == EXIT_OK
    assert all(record.n_tokens <= 2 for record in parse_container(packed.read_bytes()).records)

    restored = tmp_path / "capped.txt"
    assert main(["decompress", str(packed), "--out", str(restored), "--model-dir", str(run)]) == EXIT_OK
    assert restored.read_bytes() == TEXT


def test_length_cap_above_chunk_len_is_a_usage_error(tmp_path, corpus):
    code = main([
        "train", "--corpus", str(corpus), "--chunk-len", "8", "--max-compress-len", "9",
        "--out", str(tmp_path / "run"), *TINY,
    ])
    assert code == EXIT_USAGE


def test_sweep_writes_one_row_per_size(tmp_path, corpus, model_dir):
    out = tmp_path / "sweep.csv"
    code = main(["sweep", "--corpus", str(corpus), "--model-dir", str(model_dir), "--sizes", "4,8", "--batch", "2", "--out", str(out)])
    assert code == EXIT_OK
    with out.open(newline="") as handle:
        rows = list(csv.DictReader(handle))
    assert [row["chunk_size"] for row in rows] == ["4", "8"]


def test_sweep_rejects_oversized_chunks(tmp_path, corpus, model_dir):
    code = main(["sweep", "--corpus", str(corpus), "--model-dir", str(model_dir), "--sizes", "8,256", "--out", str(tmp_path / "s.csv")])
    assert code == EXIT_USAGE


def test_bench_without_external_tools(tmp_path, corpus, model_dir, capsys):
    table = tmp_path / "table.csv"
    code = main([
        "bench", "--corpus", str(corpus), "--model-dir", str(model_dir), "--chunk-len", "8",
        "--no-external", "--table", str(table),
    ])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "Range (order-0)" in printed
    assert "RL token compressor + range" in printed
    with table.open(newline="") as handle:
        programs = [row["program"] for row in csv.DictReader(handle)]
    assert "gzip" not in programs
    assert programs[-1] == "RL token compressor + range"


def test_bench_needs_both_checkpoints(tmp_path, corpus, model_dir):
    code = main(["bench", "--corpus", str(corpus), "--compressor", str(model_dir / "compressor.rltm"), "--no-external"])
    assert code == EXIT_USAGE
