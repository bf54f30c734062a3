import io
import json

import pytest
from hypothesis import given, strategies as st

from toxchains.errors import EmptyEpisodeError, ParseError
from toxchains.ingest import Episode, SpeakerTurn, load_manifest, normalize_overlaps, parse_transcript


def line(speaker, start, end, text):
    return json.dumps({"speaker": speaker, "start": start, "end": end, "text": text})


def test_single_record():
    ep = parse_transcript(line("A", 0.0, 5.0, "hello").encode(), episode_id="e", channel_id="c")
    assert ep.turns == (SpeakerTurn("A", 0.0, 5.0, "hello"),)
    assert (ep.episode_id, ep.channel_id) == ("e", "c")


def test_inverted_interval_names_line():
    data = "\n".join([line("A", 0, 1, "ok"), line("B", 5.0, 3.0, "bad")])
    with pytest.raises(ParseError) as exc:
        parse_transcript(data)
    assert exc.value.line == 2
    assert "line 2" in str(exc.value)


def test_out_of_order_records_are_sorted():
    data = "\n".join([line("B", 10, 12, "second"), line("A", 0, 5, "first")])
    ep = parse_transcript(io.StringIO(data))
    assert [t.text for t in ep.turns] == ["first", "second"]


@pytest.mark.parametrize("record, fragment", [
    ('{"speaker": "A", "start": 0, "text": "x"}', "missing field"),
    ('{"speaker": "A", "start": "soon", "end": 2, "text": "x"}', "not numeric"),
    ('{"speaker": "A", "start": 1, "end": 1, "text": "x"}', "not before"),
    ('{"speaker": "A", "start": 0, "end": 1, "text": "   "}', "empty text"),
    ('{"speaker": "A", "start": -1, "end": 1, "text": "x"}', "negative"),
    ('not json', "invalid JSON"),
    ('[1, 2]', "not an object"),
])
def test_malformed_records_rejected(record, fragment):
    with pytest.raises(ParseError, match=fragment):
        parse_transcript(line("A", 0, 1, "fine") + "\n" + record)


def test_numeric_strings_accepted():
    ep = parse_transcript('{"speaker": "A", "start": "1.5", "end": "2", "text": "x"}')
    assert ep.turns[0].start == 1.5


def test_empty_file():
    with pytest.raises(EmptyEpisodeError):
        parse_transcript(b"\n\n")


def test_blank_lines_skipped_but_counted():
    data = "\n" + line("A", 0, 1, "x") + "\n\n" + '{"speaker": "A"}'
    with pytest.raises(ParseError) as exc:
        parse_transcript(data)
    assert exc.value.line == 4


def _ep(*turns):
    return Episode("e", "c", tuple(SpeakerTurn(s, a, b, "t") for s, a, b in turns))


def test_overlap_trimmed():
    out, rep = normalize_overlaps(_ep(("A", 0, 10), ("B", 5, 15)))
    assert [(t.start, t.end) for t in out.turns] == [(0, 10), (10, 15)]
    assert rep == (1, 0)


def test_contained_turn_dropped():
    out, rep = normalize_overlaps(_ep(("A", 0, 10), ("B", 2, 8)))
    assert [(t.speaker_id, t.start, t.end) for t in out.turns] == [("A", 0, 10)]
    assert rep == (0, 1)


def test_touching_turns_unchanged():
    ep = _ep(("A", 0, 10), ("B", 10, 20))
    out, rep = normalize_overlaps(ep)
    assert out == ep and rep == (0, 0)


def test_trim_against_longest_previous_turn():
    # C overlaps A (which outlasts B); B is dropped, C trimmed to A's end
    out, rep = normalize_overlaps(_ep(("A", 0, 30), ("B", 5, 10), ("C", 20, 40)))
    assert [(t.speaker_id, t.start, t.end) for t in out.turns] == [("A", 0, 30), ("C", 30, 40)]
    assert rep == (1, 1)


intervals = st.lists(
    st.tuples(st.floats(0, 1000, allow_nan=False), st.floats(0.01, 200, allow_nan=False)),
    min_size=1, max_size=30,
)


@given(intervals)
def test_normalization_properties(raw):
    turns = sorted((SpeakerTurn(f"S{i % 3}", s, s + d, "x") for i, (s, d) in enumerate(raw)),
                   key=lambda t: t.start)
    ep = Episode("e", "c", tuple(turns))
    once, rep = normalize_overlaps(ep)
    for a, b in zip(once.turns, once.turns[1:]):
        assert a.end <= b.start
    twice, rep2 = normalize_overlaps(once)
    assert twice == once and rep2 == (0, 0)
    assert once.speech_duration <= ep.speech_duration + 1e-9
    assert len(once.turns) == len(ep.turns) - rep.dropped


def test_manifest_resolves_relative_paths(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"episodes": [{"episode_id": "x", "channel_id": "c", "path": "x.jsonl"}]}))
    (entry,) = load_manifest(tmp_path / "m.json")
    assert entry.path == tmp_path / "x.jsonl"
    assert entry.channel_id == "c"


def test_manifest_entry_without_path(tmp_path):
    (tmp_path / "m.json").write_text(json.dumps({"episodes": [{"episode_id": "x"}]}))
    with pytest.raises(ParseError):
        load_manifest(tmp_path / "m.json")
