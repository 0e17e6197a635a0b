import json
import random

import pytest

from rankdiv.ingest import (
    DROP_CODES,
    ParseError,
    ValidationError,
    parse_raw,
    records_from_obj,
    run_to_blocks,
    summarize,
    validate,
)
from rankdiv.report import render_csv
from rankdiv.synth import SynthConfig, synth_records


def block(model, task, entries):
    return {
        "model": model,
        "task": task,
        "results": [
            {"rank": r, "api_name": name, **extra}
            for r, name, extra in entries
        ],
    }


def simple_block(model="m1", task="t1", names=("alpha", "beta", "gamma")):
    return block(model, task, [(i + 1, n, {}) for i, n in enumerate(names)])


class TestParseJson:
    def test_single_block(self):
        records = parse_raw(json.dumps(simple_block()), "json")
        assert len(records) == 3
        assert records[0].model == "m1"
        assert records[0].rank == 1
        assert records[0].api_name == "alpha"

    def test_array_of_blocks(self):
        doc = [simple_block("m1"), simple_block("m2")]
        assert len(parse_raw(json.dumps(doc), "json")) == 6

    def test_flat_rows(self):
        doc = [
            {"model": "m1", "task": "t", "rank": 1, "api_name": "a"},
            {"model": "m1", "task": "t", "rank": 2, "api_name": "b"},
        ]
        records = parse_raw(json.dumps(doc), "json")
        assert [r.api_name for r in records] == ["a", "b"]

    def test_empty_array(self):
        assert parse_raw("[]", "json") == []

    def test_extra_fields_preserved(self):
        doc = block("m", "t", [(1, "a", {"pricing": "free", "auth": "none"})])
        record = parse_raw(json.dumps(doc), "json")[0]
        assert record.extra == {"pricing": "free", "auth": "none"}

    def test_truncated_file_names_offset(self):
        with pytest.raises(ParseError, match=r"line \d+ column \d+"):
            parse_raw('{"model": "m", "task":', "json")

    def test_bad_structure(self):
        with pytest.raises(ParseError, match="not an object"):
            parse_raw("[1, 2]", "json")
        with pytest.raises(ParseError, match="results"):
            parse_raw('{"model": "m", "task": "t", "results": 7}', "json")

    def test_unknown_format(self):
        with pytest.raises(ValueError, match="unknown format"):
            parse_raw("{}", "yaml")

    def test_invalid_utf8(self):
        with pytest.raises(ParseError, match="UTF-8"):
            parse_raw(b"\xff\xfe{}", "json")


class TestParseCsv:
    CSV = "model,task,rank,api_name,relevance\nm1,t1,1,alpha,90\nm1,t1,2,beta,\n"

    def test_rows(self):
        records = parse_raw(self.CSV, "csv")
        assert len(records) == 2
        assert records[0].relevance == "90"
        assert records[1].relevance is None

    def test_missing_columns(self):
        with pytest.raises(ParseError, match="missing columns"):
            parse_raw("model,task\nm,t\n", "csv")

    def test_empty_file(self):
        with pytest.raises(ParseError, match="empty CSV"):
            parse_raw("", "csv")

    def test_extra_columns_preserved(self):
        text = "model,task,rank,api_name,relevance,pricing\nm,t,1,a,50,free\n"
        assert parse_raw(text, "csv")[0].extra == {"pricing": "free"}


class TestValidate:
    def test_clean_input(self):
        records = records_from_obj([simple_block("m1"), simple_block("m2")])
        run, report = validate(records, k=10)
        assert len(run.lists) == 2
        assert run.models == ("m1", "m2")
        assert not report.entries

    def test_duplicate_item_keeps_lowest_rank(self):
        doc = block("m", "t", [
            (1, "a", {}), (2, "b", {}), (3, "Twilio", {}),
            (4, "c", {}), (5, "d", {}), (6, "e", {}), (7, "twilio", {}),
        ])
        run, report = validate(records_from_obj(doc), k=10)
        items = run.lists[0].item_ids()
        assert items.count("twilio") == 1
        assert run.lists[0].rank_of("twilio") == 3
        assert report.counts() == {"DUP_ITEM": 1}
        assert report.entries[0].severity == "warn"

    def test_tied_ranks_error_by_default(self):
        doc = block("m", "t", [(1, "a", {}), (2, "b", {}), (2, "c", {}), (4, "d", {})])
        with pytest.raises(ValidationError) as excinfo:
            validate(records_from_obj(doc), k=10)
        assert "ambiguous ordering" in str(excinfo.value)
        assert excinfo.value.report.counts()["RANK_TIE"] == 1

    def test_tied_ranks_order_mode(self):
        doc = block("m", "t", [(1, "a", {}), (2, "b", {}), (2, "c", {}), (4, "d", {})])
        run, report = validate(records_from_obj(doc), k=10, ties="order")
        assert run.lists[0].item_ids() == ("a", "b", "c", "d")
        codes = report.counts()
        assert codes["RANK_TIE"] == 1
        assert codes["RANK_GAP"] == 1  # declared 1,2,2,4 has a gap too
        assert not report.has_errors()

    def test_rank_gap_reassigned(self):
        doc = block("m", "t", [(1, "a", {}), (3, "b", {}), (9, "c", {})])
        run, report = validate(records_from_obj(doc), k=10)
        assert run.lists[0].item_ids() == ("a", "b", "c")
        assert run.lists[0].rank_of("c") == 3
        assert report.counts() == {"RANK_GAP": 1}

    def test_out_of_order_input_sorted_by_declared_rank(self):
        doc = block("m", "t", [(3, "c", {}), (1, "a", {}), (2, "b", {})])
        run, report = validate(records_from_obj(doc), k=10)
        assert run.lists[0].item_ids() == ("a", "b", "c")
        assert not report.entries

    def test_relevance_clamped_and_converted(self):
        doc = block("m", "t", [
            (1, "a", {"relevance": 87}),
            (2, "b", {"relevance": 130}),
            (3, "c", {"relevance": -5}),
        ])
        run, report = validate(records_from_obj(doc), k=10)
        ranked = run.lists[0]
        assert ranked.relevance_of("a") == pytest.approx(0.87)
        assert ranked.relevance_of("b") == 1.0
        assert ranked.relevance_of("c") == 0.0
        assert report.counts() == {"RELEVANCE_CLAMP": 2}

    def test_relevance_non_numeric_warned(self):
        doc = block("m", "t", [(1, "a", {"relevance": "high"})])
        run, report = validate(records_from_obj(doc), k=10)
        assert run.lists[0].relevance_of("a") is None
        assert report.counts() == {"RELEVANCE_INVALID": 1}

    def test_truncation_beyond_k(self):
        doc = block("m", "t", [(i + 1, f"item{i}", {}) for i in range(12)])
        run, report = validate(records_from_obj(doc), k=10)
        assert len(run.lists[0].items) == 10
        assert report.counts() == {"TRUNCATED": 2}

    def test_invalid_records_dropped_with_errors(self):
        doc = [
            {"model": "m", "task": "t", "rank": 1, "api_name": "a"},
            {"model": "m", "task": "t", "rank": 2, "api_name": "   "},
            {"model": "m", "task": "t", "rank": "x", "api_name": "b"},
            {"model": "", "task": "t", "rank": 3, "api_name": "c"},
        ]
        run, report = validate(records_from_obj(doc), k=10)
        assert run.lists[0].item_ids() == ("a",)
        assert report.counts() == {
            "INVALID_ITEM": 1,
            "INVALID_RANK": 1,
            "MISSING_FIELD": 1,
        }
        assert report.has_errors()

    def test_zero_valid_records(self):
        doc = [{"model": "m", "task": "t", "rank": 1, "api_name": " "}]
        with pytest.raises(ValidationError, match="no valid records"):
            validate(records_from_obj(doc), k=10)
        with pytest.raises(ValidationError):
            validate([], k=10)

    def test_usage_errors(self):
        records = records_from_obj(simple_block())
        with pytest.raises(ValueError, match="k must be"):
            validate(records, k=0)
        with pytest.raises(ValueError, match="ties"):
            validate(records, ties="merge")

    def test_rank_accepts_numeric_strings_and_floats(self):
        doc = block("m", "t", [("1", "a", {}), (2.0, "b", {})])
        run, _ = validate(records_from_obj(doc), k=10)
        assert run.lists[0].item_ids() == ("a", "b")

    def test_conservation_with_audit(self):
        rng = random.Random(13)
        names = ["a", "b", "c", "twilio", "Twilio", "  ", "d", "e"]
        doc = []
        for model in ("m1", "m2"):
            entries = []
            for i in range(8):
                entries.append((rng.choice([i + 1, i + 1, i + 3]), names[i], {}))
            doc.append(block(model, "t", entries))
        records = records_from_obj(doc)
        try:
            run, report = validate(records, k=5, ties="order")
        except ValidationError:
            return
        items_out = sum(len(l.items) for l in run.lists)
        assert len(records) == items_out + report.dropped_records()
        assert DROP_CODES >= set(
            e.code for e in report.entries if e.code in DROP_CODES
        )


class TestSummarize:
    def test_row_count_and_sort(self):
        records = records_from_obj([
            simple_block("m2", "t1"),
            simple_block("m1", "t1"),
            simple_block("m1", "t0", names=("x", "y")),
        ])
        run, _ = validate(records, k=10)
        rows = summarize(run)
        assert len(rows) == 8
        assert rows[0]["task"] == "t0"
        assert [r["model"] for r in rows[2:5]] == ["m1", "m1", "m1"]
        assert [r["rank"] for r in rows[2:5]] == [1, 2, 3]

    def test_relevance_back_in_percent(self):
        doc = block("m", "t", [(1, "a", {"relevance": 87}), (2, "b", {})])
        run, _ = validate(records_from_obj(doc), k=10)
        rows = summarize(run)
        assert rows[0]["relevance"] == pytest.approx(87.0)
        assert rows[1]["relevance"] is None


class TestRoundTrip:
    def _messy_run(self):
        doc = [
            block("M One", "Search ", [
                (1, "  Alpha API ", {"relevance": 91.5}),
                (2, "beta", {"relevance": 33.333333}),
                (4, "Gamma", {}),
            ]),
            block("m-two", "Search", [
                (1, "beta", {"relevance": 120}),
                (2, "delta", {"relevance": 0.07}),
            ]),
        ]
        return validate(records_from_obj(doc), k=10)[0]

    def test_json_round_trip_is_fixed_point(self):
        run = self._messy_run()
        rows = summarize(run)
        reparsed = parse_raw(json.dumps(rows), "json")
        run2, report = validate(reparsed, k=10)
        assert run2 == run
        assert not report.entries
        assert summarize(run2) == rows

    def test_csv_round_trip_is_fixed_point(self):
        run = self._messy_run()
        text = render_csv(summarize(run))
        run2, report = validate(parse_raw(text, "csv"), k=10)
        assert run2 == run
        assert not report.entries

    def test_csv_round_trip_with_excess_relevance_precision(self):
        doc = block("m", "t", [(1, "a", {"relevance": 33.33333333333})])
        run, _ = validate(records_from_obj(doc), k=10)
        run2, _ = validate(parse_raw(render_csv(summarize(run)), "csv"), k=10)
        assert run2 == run

    def test_blocks_round_trip(self):
        run = self._messy_run()
        run2, report = validate(records_from_obj(run_to_blocks(run)), k=10)
        assert run2 == run
        assert not report.entries

    def test_synth_round_trip_through_csv(self):
        config = SynthConfig(
            models=3, tasks=3, k=7, universe_size=20,
            swap_noise=0.4, substitution_rate=0.2, seed=3,
        )
        records = records_from_obj(synth_records(config))
        run, _ = validate(records, k=7)
        text = render_csv(summarize(run))
        run2, _ = validate(parse_raw(text, "csv"), k=7)
        assert run2 == run
