"""Regenerate the bundled synthetic corpus in src/toxchains/data/fixture/.

Every regular turn lasts 51 s (three 17 s chunks, one segment) and speakers
alternate, so segment counts follow directly from turn counts:

    ep1  30 turns                              -> 30 segments
    ep2  25 turns + 1 trimmed + 1 dropped       -> 25 segments
    ep3  11 turns of 51 s + one 102 s turn       -> 11 + 2 = 13 segments
                                                  (6 chunks -> segments of 4 and 2)

Toxic turns (anchors with the bundled lexicon): ep1 turns 3 and 15, ep2 turns
12 and 24, each inside a run of heated (0.6) turns. ep3 has none.
"""

import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "toxchains" / "data" / "fixture"

WORDS = (
    "policy senate budget economy border election voters debate campaign governor "
    "interview podcast listeners question answer history reform congress taxes market "
    "country freedom speech media story people week plan report court state city"
).split()

# 15 tokens -> three chunks of five tokens each
ANCHOR_TEXT = "you are an absolute idiot and a stupid moron too that is what everyone thinks"
MILD_TEXT = "that was a dumb plan honestly but the senate budget still passed last week anyway"
HEATED_TEXT = "what a stupid idea and i hate it the congress plan is a disaster honestly"
LEXICON = {"idiot": 0.8, "moron": 0.75, "stupid": 0.6, "dumb": 0.4, "scum": 0.85, "hate": 0.35}


def benign(rng):
    words = [rng.choice(WORDS) for _ in range(15)]
    # low background toxicity: about a third of turns say "hate" once
    if rng.random() < 0.35:
        words[rng.randrange(15)] = "hate"
    return " ".join(words)


def turns(n, toxic=(), mild=(), heated=(), rng=None, long_turn=None):
    out, t = [], 0.0
    for i in range(n):
        dur = 102.0 if i == long_turn else 51.0
        text = (ANCHOR_TEXT if i in toxic else HEATED_TEXT if i in heated
                else MILD_TEXT if i in mild else benign(rng))
        if i == long_turn:
            text = benign(rng) + " " + benign(rng)
        out.append({"speaker": "HOST" if i % 2 == 0 else "GUEST", "start": t, "end": t + dur, "text": text})
        t += dur
    return out


def main():
    rng = random.Random(20240601)
    OUT.mkdir(parents=True, exist_ok=True)

    ep1 = turns(30, toxic={3, 15}, heated={13, 14, 16, 17}, mild={2, 4, 12}, rng=rng)
    ep2 = turns(25, toxic={12, 24}, heated={11, 13, 23}, mild={10, 14, 20}, rng=rng)
    # overlap handling: one turn contained in turn 5 (dropped), one that starts
    # 10 s before turn 8 ends and runs to its regular end (trimmed back to 51 s)
    t5, t8 = ep2[5], ep2[8]
    ep2.append({"speaker": "GUEST", "start": t5["start"] + 5.0, "end": t5["start"] + 20.0,
                "text": "crosstalk that overlaps completely"})
    ep2[9] = dict(ep2[9], start=t8["end"] - 10.0)
    ep2.sort(key=lambda r: r["start"])
    ep3 = turns(12, rng=rng, long_turn=6)
    # keep speakers alternating around the long turn
    for i, rec in enumerate(ep3):
        rec["speaker"] = "HOST" if i % 2 == 0 else "GUEST"

    episodes = [("ep1", "chan_a", ep1), ("ep2", "chan_a", ep2), ("ep3", "chan_b", ep3)]
    for ep_id, _, recs in episodes:
        with (OUT / f"{ep_id}.jsonl").open("w", encoding="utf-8") as fh:
            for rec in recs:
                fh.write(json.dumps(rec) + "\n")
    manifest = {"episodes": [{"episode_id": e, "channel_id": c, "path": f"{e}.jsonl"} for e, c, _ in episodes]}
    (OUT / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    (OUT / "lexicon.csv").write_text("# term,weight\n" + "".join(f"{t},{w}\n" for t, w in LEXICON.items()))

    # three annotators per chain; chain lengths 14, 21, 21, 11
    ann = [
        ("ep1#00003", 14, {"a1": [3, 4], "a2": [3, 5], "a3": [4, 9]}),
        ("ep1#00015", 21, {"a1": [8, 10, 11], "a2": [10, 11], "a3": [10, 15]}),
        ("ep2#00012", 21, {"a1": [10, 11], "a2": [9, 11], "a3": [11]}),
        ("ep2#00024", 11, {"a1": [10], "a2": [8], "a3": [5]}),
    ]
    with (OUT / "annotations.jsonl").open("w", encoding="utf-8") as fh:
        for chain_id, n, marks in ann:
            for annotator, idx in marks.items():
                fh.write(json.dumps({"chain_id": chain_id, "annotator_id": annotator, "indices": idx, "n": n}) + "\n")


if __name__ == "__main__":
    main()
