import math

import pytest
from hypothesis import given, strategies as st

from toxchains.chains import (
    ConversationChain,
    corpus_stats,
    extract_chain,
    extract_chains,
    find_anchors,
)
from toxchains.errors import MissingScoreError
from toxchains.segmentation import Chunk, Segment


def make_segments(scores, episode_id="ep", channel_id="ch"):
    segs = []
    for i, s in enumerate(scores):
        chunk = Chunk("A" if i % 2 == 0 else "B", 60.0 * i, 60.0 * i + 50, f"word{i} text", s)
        segs.append(Segment(i, chunk.speaker_id, [chunk], episode_id, channel_id, s))
    return segs


@pytest.mark.parametrize("scores, anchors", [
    ([0.1, 0.7, 0.69], [1]),
    ([0.1, 0.2, 0.69], []),
    ([0.9, 0.95], [0, 1]),
])
def test_find_anchors(scores, anchors):
    assert find_anchors(make_segments(scores)) == anchors


def test_unscored_segment():
    segs = make_segments([0.1, None])
    with pytest.raises(MissingScoreError):
        find_anchors(segs)


@pytest.mark.parametrize("anchor, length, head, tail, offset", [
    (15, 21, 0, 0, 10),
    (3, 14, 7, 0, 3),
    (29, 11, 0, 10, 10),
])
def test_extract_chain_clipping(anchor, length, head, tail, offset):
    chain = extract_chain(make_segments([0.0] * 30), anchor, 10)
    assert len(chain.segments) == length
    assert (chain.truncated_head, chain.truncated_tail) == (head, tail)
    assert chain.anchor_index == offset
    assert chain.anchor.segment_index == anchor


@pytest.mark.parametrize("anchor", [-1, 30])
def test_extract_chain_out_of_bounds(anchor):
    with pytest.raises(IndexError):
        extract_chain(make_segments([0.0] * 30), anchor)


def test_overlapping_chains_allowed():
    scores = [0.0] * 30
    scores[10] = scores[12] = 0.8
    chains = extract_chains(make_segments(scores))
    assert [c.chain_id for c in chains] == ["ep#00010", "ep#00012"]
    assert set(s.segment_index for s in chains[0].segments) & set(s.segment_index for s in chains[1].segments)


def test_chain_round_trip():
    scores = [0.1] * 12
    scores[4] = 0.9
    (chain,) = extract_chains(make_segments(scores))
    again = ConversationChain.from_dict(chain.to_dict())
    assert again.to_dict() == chain.to_dict()
    assert again.toxicity_series() == chain.toxicity_series()


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.integers(0, 12))
def test_chain_properties(scores, window):
    segs = make_segments(scores)
    chains = extract_chains(segs, window=window)
    assert len(chains) == len(find_anchors(segs))
    for c in chains:
        assert c.anchor.toxicity >= 0.7
        assert len(c.segments) == 2 * window + 1 - c.truncated_head - c.truncated_tail
        assert list(c.positions)[c.anchor_index] == 0
        if c.is_interior:
            assert c.anchor_index == window


def _episode(i, channel, toxic):
    return (f"{channel}-{i}", channel, make_segments([0.8 if toxic else 0.1, 0.2]))


def test_corpus_stats_toxic_percentage():
    episodes = [_episode(i, "levin", i < 380) for i in range(440)]
    episodes += [_episode(i, "calm", False) for i in range(7)]
    stats = corpus_stats(episodes)
    rows = {r["channel"]: r for r in stats.rows()}
    assert rows["levin"]["toxic_episode_pct"] == 86
    assert rows["calm"]["toxic_episode_pct"] == 0
    assert rows["levin"]["chain_share_pct"] == 100.0
    assert stats.total_episodes == 447 and stats.total_chains == 380


def test_chain_shares_sum_to_100():
    episodes = [_episode(i, f"c{i % 3}", i % 2 == 0) for i in range(11)]
    stats = corpus_stats(episodes)
    assert math.fsum(c.chain_share for c in stats.channels.values()) == pytest.approx(100.0)


def test_empty_corpus():
    stats = corpus_stats([])
    assert stats.channels == {} and stats.rows() == [] and stats.total_chains == 0


def test_episode_without_segments():
    (row,) = corpus_stats([("e", "c", [])]).rows()
    assert row["episodes"] == 1 and row["toxic_episode_pct"] == 0
    assert math.isnan(row["avg_duration_min"])


def test_duplicate_episode():
    with pytest.raises(ValueError):
        corpus_stats([_episode(0, "c", True), _episode(0, "c", False)])
