import pytest
from hypothesis import given, strategies as st

from toxchains.errors import ConfigError, MissingScoreError
from toxchains.ingest import SpeakerTurn
from toxchains.segmentation import (
    Chunk,
    Segment,
    aggregate_segment_toxicity,
    build_segments,
    chunk_turn,
    normalized_text,
)


def words(n):
    return " ".join(f"w{i}" for i in range(n))


def test_short_turn_is_one_chunk():
    turn = SpeakerTurn("A", 3.0, 13.0, "a short  turn")
    (chunk,) = chunk_turn(turn, 17)
    assert (chunk.start, chunk.end, chunk.speaker_id) == (3.0, 13.0, "A")
    assert chunk.text == "a short turn"


def test_34s_turn_ten_tokens():
    chunks = chunk_turn(SpeakerTurn("A", 0.0, 34.0, words(10)), 17)
    assert [(c.start, c.end) for c in chunks] == [(0.0, 17.0), (17.0, 34.0)]
    assert [len(c.text.split()) for c in chunks] == [5, 5]


def test_40s_turn_seven_tokens():
    chunks = chunk_turn(SpeakerTurn("A", 0.0, 40.0, words(7)), 17)
    assert len(chunks) == 3
    for c in chunks:
        assert c.end - c.start == pytest.approx(40 / 3)
    assert [c.text for c in chunks] == ["w0 w1 w2", "w3 w4", "w5 w6"]


def test_fewer_tokens_than_chunks():
    chunks = chunk_turn(SpeakerTurn("A", 0.0, 68.0, "one two"), 17)
    assert [c.text for c in chunks] == ["one", "two", "", ""]


@pytest.mark.parametrize("bad", [0, -1.0, float("nan")])
def test_bad_chunk_duration(bad):
    with pytest.raises(ConfigError):
        chunk_turn(SpeakerTurn("A", 0, 1, "x"), bad)


def _chunks(speakers):
    return [Chunk(s, i, i + 1.0, f"t{i}") for i, s in enumerate(speakers)]


@pytest.mark.parametrize("speakers, sizes", [
    ("AAAAAA", [4, 2]),
    ("AABA", [2, 1, 1]),
    ("AAAAAAAAA", [4, 4, 1]),
    ("", []),
])
def test_build_segments_grouping(speakers, sizes):
    segs = build_segments(_chunks(speakers), 4)
    assert [len(s.chunks) for s in segs] == sizes
    assert [s.segment_index for s in segs] == list(range(len(sizes)))


def test_speaker_change_labels():
    segs = build_segments(_chunks("AABA"))
    assert [s.speaker_id for s in segs] == ["A", "B", "A"]
    assert segs[0].start == 0 and segs[0].end == 2.0


def _segment(scores):
    return Segment(0, "A", [Chunk("A", i, i + 1, "x", s) for i, s in enumerate(scores)])


@pytest.mark.parametrize("scores, expected", [([0.1, 0.9, 0.3], 0.9), ([0.42], 0.42), ([0.0, 0.0], 0.0)])
def test_max_aggregation(scores, expected):
    seg = _segment(scores)
    assert aggregate_segment_toxicity(seg) == expected
    assert seg.toxicity == expected


def test_unscored_chunk():
    with pytest.raises(MissingScoreError, match="chunk 1"):
        aggregate_segment_toxicity(_segment([0.5, None]))


def test_round_trip_dict():
    seg = build_segments(chunk_turn(SpeakerTurn("A", 0, 60, words(12))), episode_id="e", channel_id="c")[0]
    again = Segment.from_dict(seg.to_dict())
    assert again.to_dict() == seg.to_dict()


token = st.text(alphabet="abcxyz'!", min_size=1, max_size=6)
sep = st.sampled_from([" ", "  ", "\t", "\n", " \n "])


@st.composite
def turn_texts(draw):
    toks = draw(st.lists(token, min_size=1, max_size=40))
    return "".join(t + draw(sep) for t in toks)


@given(st.floats(0.1, 500), turn_texts(), st.floats(1.0, 30.0))
def test_chunk_properties(duration, text, chunk_duration):
    turn = SpeakerTurn("A", 12.5, 12.5 + duration, text)
    chunks = chunk_turn(turn, chunk_duration)
    assert all(c.end - c.start <= chunk_duration for c in chunks)
    assert chunks[0].start == turn.start and chunks[-1].end == turn.end
    assert all(a.end == b.start for a, b in zip(chunks, chunks[1:]))
    assert normalized_text(c.text for c in chunks) == normalized_text([text])
    counts = [len(c.text.split()) for c in chunks]
    assert max(counts) - min(counts) <= 1 and counts == sorted(counts, reverse=True)


@given(st.lists(st.tuples(st.sampled_from("AB"), st.floats(0.5, 120), turn_texts()), min_size=1, max_size=12))
def test_segment_properties(raw):
    t, chunks, texts = 0.0, [], []
    for speaker, dur, text in raw:
        chunks += chunk_turn(SpeakerTurn(speaker, t, t + dur, text))
        texts.append(text)
        t += dur
    segs = build_segments(chunks)
    assert all(1 <= len(s.chunks) <= 4 for s in segs)
    assert all(len({c.speaker_id for c in s.chunks}) == 1 for s in segs)
    assert all(s.end - s.start <= 4 * 17.0 + 1e-9 for s in segs)
    assert normalized_text(s.text for s in segs) == normalized_text(texts)
