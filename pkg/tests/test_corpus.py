import json

import pytest

from conftest import make_corpus, make_utt
from slumix import (
    Corpus,
    CorpusFormatError,
    corpus_stats,
    filter_split,
    load_corpus,
    save_corpus,
    speech_items,
    text_items,
)


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row) + "\n")


def canonical_row(uid, split="train", text="wake me at seven am", speech=None,
                  lang="en", entities=None):
    row = {"id": uid, "lang": lang, "split": split, "text": text,
           "scenario": "alarm", "action": "set",
           "entities": entities if entities is not None
           else [{"type": "time", "filler": "seven am"}]}
    if speech:
        row["speech_ref"] = speech
    return row


class TestCanonicalProfile:
    def test_load_and_roundtrip(self, tmp_path, tiny_corpus):
        path = tmp_path / "c.jsonl"
        save_corpus(tiny_corpus, path)
        loaded = load_corpus(path, "canonical", name=tiny_corpus.name)
        assert loaded.records == tiny_corpus.records
        # reload of the re-export is identical too
        path2 = tmp_path / "c2.jsonl"
        save_corpus(loaded, path2)
        assert load_corpus(path2, "canonical", name=tiny_corpus.name).records \
            == tiny_corpus.records

    def test_load_is_deterministic(self, tmp_path, tiny_corpus):
        path = tmp_path / "c.jsonl"
        save_corpus(tiny_corpus, path)
        a = load_corpus(path, "canonical")
        b = load_corpus(path, "canonical")
        assert a.records == b.records

    def test_duplicate_id_rejected(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        write_jsonl(path, [canonical_row("u1"), canonical_row("u1")])
        with pytest.raises(CorpusFormatError, match="duplicate"):
            load_corpus(path, "canonical")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        with pytest.raises(CorpusFormatError, match="empty"):
            load_corpus(path, "canonical")

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(json.dumps(canonical_row("u1")) + "\n{not json\n")
        with pytest.raises(CorpusFormatError, match=r":2"):
            load_corpus(path, "canonical")

    def test_unknown_profile(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [canonical_row("u1")])
        with pytest.raises(CorpusFormatError, match="profile"):
            load_corpus(path, "nope")

    def test_bad_split_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [canonical_row("u1", split="holdout")])
        with pytest.raises(CorpusFormatError, match="split"):
            load_corpus(path, "canonical")

    def test_delimiter_in_filler_rejected(self, tmp_path):
        path = tmp_path / "c.jsonl"
        write_jsonl(path, [canonical_row(
            "u1", entities=[{"type": "time", "filler": "seven|am"}])])
        with pytest.raises(CorpusFormatError, match="delimiter"):
            load_corpus(path, "canonical")

    def test_speech_partition_is_exhaustive(self, tiny_corpus):
        with_speech = [r for r in tiny_corpus if r.has_speech]
        without = [r for r in tiny_corpus if not r.has_speech]
        assert len(with_speech) + len(without) == len(tiny_corpus)


class TestSlurpProfile:
    @staticmethod
    def slurp_row(sid, n_recordings, split="train"):
        return {
            "slurp_id": sid,
            "sentence": f"wake me at seven am number {sid}",
            "sentence_annotation": f"wake me at [time : seven am] number {sid}",
            "scenario": "alarm",
            "action": "set",
            "intent": "alarm_set",
            "partition": split,
            "entities": [{"type": "time", "span": [3, 4]}],
            "recordings": [{"file": f"audio-{sid}-{i}.flac"}
                           for i in range(n_recordings)],
        }

    def test_one_text_record_plus_one_per_recording(self, tmp_path):
        path = tmp_path / "slurp.jsonl"
        write_jsonl(path, [self.slurp_row(1, 3), self.slurp_row(2, 1)])
        corpus = load_corpus(path, "slurp")
        stats = corpus_stats(corpus)
        assert stats["train"] == {"text": 2, "speech": 4}
        assert len(corpus) == 6
        fillers = {e.filler for r in corpus for e in r.label.entities}
        assert fillers == {"seven am"}

    def test_pairing_one_keeps_first_recording(self, tmp_path):
        path = tmp_path / "slurp.jsonl"
        write_jsonl(path, [self.slurp_row(1, 3)])
        corpus = load_corpus(path, "slurp", pairing="one")
        assert corpus_stats(corpus)["train"] == {"text": 1, "speech": 1}
        assert speech_items(corpus)[0].speech_ref == "audio-1-0.flac"

    def test_realistic_slurp_train_counts(self, tmp_path):
        # 11,514 sentences carrying 50,628 recordings in total.
        n_sent, n_rec = 11514, 50628
        base, extra = divmod(n_rec, n_sent)
        path = tmp_path / "slurp_train.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            for i in range(n_sent):
                row = self.slurp_row(i, base + (1 if i < extra else 0))
                f.write(json.dumps(row) + "\n")
        corpus = load_corpus(path, "slurp")
        stats = corpus_stats(corpus)
        assert stats["train"] == {"text": 11514, "speech": 50628}
        assert len(text_items(filter_split(corpus, "train"))) == 11514


class TestMassiveProfile:
    @staticmethod
    def massive_row(rid, split="train", locale="fr-FR", audio=True):
        row = {
            "id": rid,
            "locale": locale,
            "partition": split,
            "utt": f"reveille moi a sept heures {rid}",
            "annot_utt": f"reveille moi a [time : sept heures] {rid}",
            "scenario": "alarm",
            "intent": "alarm_set",
        }
        if audio:
            row["path"] = f"audio/{rid}.wav"
        return row

    def test_paired_records(self, tmp_path):
        path = tmp_path / "massive.jsonl"
        write_jsonl(path, [self.massive_row(i) for i in range(3)])
        corpus = load_corpus(path, "massive")
        assert corpus.lang == "fr-FR"
        assert corpus_stats(corpus)["train"] == {"text": 3, "speech": 3}
        assert corpus.records[0].label.action == "set"
        assert corpus.records[0].label.entities[0].filler == "sept heures"

    def test_validation_partition_maps_to_dev(self, tmp_path):
        path = tmp_path / "massive.jsonl"
        write_jsonl(path, [self.massive_row(0, split="validation")])
        corpus = load_corpus(path, "massive")
        assert corpus.records[0].split == "dev"

    def test_realistic_speech_massive_fr_counts(self, tmp_path):
        sizes = {"train": 11514, "dev": 2033, "test": 2974}
        path = tmp_path / "smassive.jsonl"
        with open(path, "w", encoding="utf-8") as f:
            rid = 0
            for split, n in sizes.items():
                for _ in range(n):
                    f.write(json.dumps(self.massive_row(rid, split=split)) + "\n")
                    rid += 1
        stats = corpus_stats(load_corpus(path, "massive"))
        assert stats == {
            "train": {"text": 11514, "speech": 11514},
            "dev": {"text": 2033, "speech": 2033},
            "test": {"text": 2974, "speech": 2974},
        }


class TestStatsAndViews:
    def test_empty_corpus_all_zeros(self):
        stats = corpus_stats(Corpus(name="empty", lang="en", records=[]))
        assert all(v == {"text": 0, "speech": 0} for v in stats.values())

    def test_three_records_one_speech(self):
        corpus = make_corpus([
            make_utt("a", "one two"),
            make_utt("b", "three four"),
            make_utt("c", "five six", speech=True),
        ])
        assert corpus_stats(corpus)["train"] == {"text": 3, "speech": 1}

    def test_filter_split_preserves_order(self):
        corpus = make_corpus([
            make_utt("a", "t a", split="train"),
            make_utt("b", "t b", split="dev"),
            make_utt("c", "t c", split="train"),
            make_utt("d", "t d", split="dev"),
            make_utt("e", "t e", split="test"),
        ])
        dev = filter_split(corpus, "dev")
        assert [r.id for r in dev.records] == ["b", "d"]

    def test_filter_split_empty_corpus(self):
        corpus = Corpus(name="empty", lang="en", records=[])
        assert filter_split(corpus, "train").records == []

    def test_filter_split_rejects_unknown(self, tiny_corpus):
        with pytest.raises(CorpusFormatError):
            filter_split(tiny_corpus, "holdout")

    def test_text_items_prefers_text_only_representative(self):
        corpus = make_corpus([
            make_utt("s1", "shared transcript", speech=True),
            make_utt("t1", "shared transcript"),
            make_utt("s2", "other transcript", speech=True),
        ])
        items = {u.id for u in text_items(corpus)}
        assert items == {"t1", "s2"}
