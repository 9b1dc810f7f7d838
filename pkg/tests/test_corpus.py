import json
import tracemalloc

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hir.corpus import (
    DocumentRecord,
    read_selection,
    stream_documents,
    write_documents,
    write_selection,
)
from hir.errors import CorpusError


def write_corpus(path, texts, metas=None):
    records = [
        DocumentRecord(index=i, text=t, meta=None if metas is None else metas[i])
        for i, t in enumerate(texts)
    ]
    return write_documents(records, path)


class TestStreamDocuments:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert list(stream_documents(path)) == []

    def test_limit_is_prefix_cap(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_corpus(path, ["a", "b", "c"])
        records = list(stream_documents(path, limit=2))
        assert [r.index for r in records] == [0, 1]
        assert [r.text for r in records] == ["a", "b"]

    def test_indices_are_line_numbers(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_corpus(path, ["x", "y", "z"])
        assert [r.index for r in stream_documents(path)] == [0, 1, 2]

    def test_index_stability_across_runs(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_corpus(path, ["alpha", "beta", "gamma"])
        first = [(r.index, r.text) for r in stream_documents(path)]
        second = [(r.index, r.text) for r in stream_documents(path)]
        assert first == second

    def test_malformed_line_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "ok"}\nnot json\n', encoding="utf-8")
        with pytest.raises(CorpusError) as err:
            list(stream_documents(path))
        assert err.value.line_no == 2

    def test_missing_text_field_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": "ok"}\n{"meta": {}}\n{"text": "ok"}\n', encoding="utf-8")
        with pytest.raises(CorpusError) as err:
            list(stream_documents(path))
        assert err.value.line_no == 2

    def test_non_string_text_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"text": 5}\n', encoding="utf-8")
        with pytest.raises(CorpusError):
            list(stream_documents(path))

    def test_invalid_utf8_is_an_error_not_replaced(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_bytes(b'{"text": "a\xff\xfeb"}\n')
        with pytest.raises(CorpusError) as err:
            list(stream_documents(path))
        assert "utf-8" in str(err.value).lower()

    def test_missing_file_carries_path(self, tmp_path):
        with pytest.raises(CorpusError) as err:
            list(stream_documents(tmp_path / "nope.jsonl"))
        assert "nope.jsonl" in str(err.value)

    def test_meta_round_trips(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_corpus(path, ["a", "b"], metas=[{"pile_set_name": "Wiki"}, None])
        records = list(stream_documents(path))
        assert records[0].meta == {"pile_set_name": "Wiki"}
        assert records[1].meta is None

    def test_concurrent_readers_are_independent(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_corpus(path, [f"doc {i}" for i in range(10)])
        first = stream_documents(path)
        second = stream_documents(path)
        interleaved = []
        for a, b in zip(first, second):
            interleaved.append((a.index, b.index))
        assert interleaved == [(i, i) for i in range(10)]

    def test_streaming_memory_is_bounded(self, tmp_path):
        path = tmp_path / "big.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for i in range(1_000_000):
                f.write('{"text": "document number %d"}\n' % i)
        tracemalloc.start()
        count = 0
        for record in stream_documents(path):
            count += 1
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        assert count == 1_000_000
        # One record plus read buffer; far below the ~30 MB file size.
        assert peak < 4 * 1024 * 1024


class TestWriteDocuments:
    def test_empty_sequence(self, tmp_path):
        manifest = write_documents([], tmp_path / "out.jsonl")
        assert manifest.record_count == 0

    def test_count_and_round_trip(self, tmp_path):
        path = tmp_path / "out.jsonl"
        manifest = write_corpus(path, ["one", "two", "three"])
        assert manifest.record_count == 3
        assert [r.text for r in stream_documents(path)] == ["one", "two", "three"]

    def test_embedded_newline_round_trips(self, tmp_path):
        path = tmp_path / "out.jsonl"
        text = "line one\nline two\r\nline three"
        write_corpus(path, [text])
        (record,) = stream_documents(path)
        assert record.text == text

    def test_non_utf8_text_rejected(self, tmp_path):
        bad = DocumentRecord(index=0, text="a\udc80b", meta=None)  # lone surrogate
        with pytest.raises(CorpusError):
            write_documents([bad], tmp_path / "out.jsonl")

    def test_byte_level_round_trip(self, tmp_path):
        first = tmp_path / "first.jsonl"
        second = tmp_path / "second.jsonl"
        texts = ["plain", "ünïcødé — 》text《", "tab\tand\nnewline"]
        write_corpus(first, texts)
        write_documents(list(stream_documents(first)), second)
        assert first.read_bytes() == second.read_bytes()

    @given(texts=st.lists(st.text(max_size=60), max_size=8))
    @settings(max_examples=60)
    def test_round_trip_any_text(self, tmp_path_factory, texts):
        path = tmp_path_factory.mktemp("corpus") / "c.jsonl"
        write_corpus(path, texts)
        back = [r.text for r in stream_documents(path)]
        assert back == texts


class TestSelectionManifest:
    def test_empty_manifest(self, tmp_path):
        path = tmp_path / "sel.jsonl"
        write_selection([], [], [], seed=7, config_fingerprint="abc", path=path, alpha=0.5)
        manifest = read_selection(path)
        assert manifest.indices == []
        assert manifest.k == 0
        assert manifest.seed == 7
        assert manifest.alpha == 0.5
        assert manifest.config_fingerprint == "abc"

    def test_order_round_trips(self, tmp_path):
        path = tmp_path / "sel.jsonl"
        write_selection(
            [4, 1, 9],
            [0.1, -0.5, 2.25],
            [1.5, 0.0, -3.0],
            seed=0,
            config_fingerprint="fp",
            path=path,
            alpha=1.0,
        )
        manifest = read_selection(path)
        assert manifest.indices == [4, 1, 9]
        assert manifest.log_weights_ng == [0.1, -0.5, 2.25]
        assert manifest.log_weights_nn == [1.5, 0.0, -3.0]

    def test_duplicate_index_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_selection(
                [1, 1],
                [0.0, 0.0],
                [0.0, 0.0],
                seed=0,
                config_fingerprint="fp",
                path=tmp_path / "sel.jsonl",
                alpha=0.0,
            )

    def test_length_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            write_selection(
                [1, 2],
                [0.0],
                [0.0, 0.0],
                seed=0,
                config_fingerprint="fp",
                path=tmp_path / "sel.jsonl",
                alpha=0.0,
            )

    def test_header_schema(self, tmp_path):
        path = tmp_path / "sel.jsonl"
        write_selection([3], [1.0], [2.0], seed=11, config_fingerprint="zz", path=path, alpha=0.25)
        lines = path.read_text(encoding="utf-8").splitlines()
        header = json.loads(lines[0])
        assert header == {"seed": 11, "k": 1, "alpha": 0.25, "config_fingerprint": "zz"}
        row = json.loads(lines[1])
        assert row == {"idx": 3, "log_w_ng": 1.0, "log_w_nn": 2.0}
