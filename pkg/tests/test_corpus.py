import hashlib

import pytest

from rltc.ingestion.corpus import FileUnreadable, ingest_corpus


def test_ingest_corpus_caps_length(tmp_path):
    path = tmp_path / "corpus.bin"
    data = bytes(range(256)) * 10
    path.write_bytes(data)

    corpus = ingest_corpus(path, limit_bytes=1000)

    assert corpus.length == 1000
    assert corpus.data == data[:1000]
    assert corpus.sha256 == hashlib.sha256(data[:1000]).hexdigest()
    assert corpus.verify()


def test_ingest_corpus_smaller_file_than_limit(tmp_path):
    path = tmp_path / "small.txt"
    path.write_bytes(b"tiny corpus")
    corpus = ingest_corpus(path, limit_bytes=1 << 20)
    assert corpus.data == b"tiny corpus"


def test_ingest_corpus_offset(tmp_path):
    path = tmp_path / "corpus.bin"
    path.write_bytes(b"0123456789")
    corpus = ingest_corpus(path, limit_bytes=3, offset=4)
    assert corpus.data == b"456"
    assert corpus.offset == 4


def test_missing_corpus_is_unreadable(tmp_path):
    with pytest.raises(FileUnreadable):
        ingest_corpus(tmp_path / "nope.bin", limit_bytes=10)


def test_empty_corpus_is_unreadable(tmp_path):
    path = tmp_path / "empty.bin"
    path.write_bytes(b"")
    with pytest.raises(FileUnreadable):
        ingest_corpus(path, limit_bytes=10)


def test_limit_must_be_positive(tmp_path):
    with pytest.raises(ValueError):
        ingest_corpus(tmp_path / "x", limit_bytes=0)
