import numpy as np
import pytest

from editlift import clickbait as cb
from editlift.embedding import EmbeddingTable
from editlift.textsim import EditProfile

from conftest import make_corpus, make_record


@pytest.fixture(scope="module")
def trained():
    data = cb.synthetic_headlines(400, seed=0)
    model, f1 = cb.train(data, split_seed=0, epochs=8)
    return model, f1


class TestTrain:
    def test_separable_corpus_f1(self, trained):
        _, f1 = trained
        assert f1 >= 0.99

    def test_too_few_examples(self):
        data = cb.synthetic_headlines(10, seed=0)
        with pytest.raises(ValueError, match="at least"):
            cb.train(data)

    def test_single_class_rejected(self):
        data = [cb.LabeledHeadline(f"text {i}", 1) for i in range(30)]
        with pytest.raises(ValueError, match="both classes"):
            cb.train(data)

    def test_same_seed_reproduces_model_and_f1(self):
        data = cb.synthetic_headlines(120, seed=3)
        model_a, f1_a = cb.train(data, split_seed=5, epochs=2)
        model_b, f1_b = cb.train(data, split_seed=5, epochs=2)
        assert f1_a == f1_b
        for name, value in model_a.network.params.items():
            assert np.array_equal(value, model_b.network.params[name])

    def test_pretrained_vectors_seed_token_rows(self):
        # epochs=0 keeps the network at initialization so the copied row is visible
        table = EmbeddingTable(dim=4, vocab={"unbelievable": np.array([9.0, 9.0, 9.0, 9.0])})
        data = cb.synthetic_headlines(60, seed=1)
        model, _ = cb.train(data, split_seed=0, epochs=0, embed_size=4, table=table)
        tid = model.token_ids.get("unbelievable")
        assert tid is not None
        assert np.array_equal(model.network.embed[tid], [9.0, 9.0, 9.0, 9.0])


class TestStratifiedSplit:
    def test_preserves_class_ratio_within_one(self):
        data = [cb.LabeledHeadline(f"t{i}", int(i < 70)) for i in range(100)]
        train_idx, test_idx = cb.stratified_split(data, 0.1, seed=0)
        test_pos = sum(data[i].label for i in test_idx)
        assert abs(test_pos - 7) <= 1
        assert len(test_idx) == 10
        assert sorted(train_idx + test_idx) == list(range(100))

    def test_deterministic(self):
        data = [cb.LabeledHeadline(f"t{i}", i % 2) for i in range(50)]
        assert cb.stratified_split(data, 0.1, seed=4) == cb.stratified_split(data, 0.1, seed=4)


class TestF1:
    def test_hand_counted_confusion_matrix(self):
        # 10 examples: tp=3, fp=1, fn=2, tn=4
        y_true = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0]
        y_pred = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0]
        precision = 3 / 4
        recall = 3 / 5
        expected = 2 * precision * recall / (precision + recall)
        assert cb.f1_score(y_true, y_pred) == pytest.approx(expected)

    def test_zero_when_no_positive_predictions(self):
        assert cb.f1_score([1, 0], [0, 0]) == 0.0


class TestScore:
    def test_range_and_determinism(self, trained):
        model, _ = trained
        for text in ("totally shocking secret", "committee approves treaty", "xyzzy"):
            s = cb.score(model, text)
            assert 0.0 <= s <= 1.0
            assert cb.score(model, text) == s

    def test_separable_scores_polarized(self, trained):
        model, _ = trained
        assert cb.score(model, "unbelievable insane viral tricks") > 0.9
        assert cb.score(model, "parliament approves quarterly budget report") < 0.1

    def test_unknown_tokens_fall_back_to_unk_vector(self, trained):
        model, _ = trained
        assert cb.score(model, "zzz qqq www") == cb.score(model, "mmm nnn ooo")

    def test_empty_text_rejected(self, trained):
        model, _ = trained
        with pytest.raises(ValueError):
            cb.score(model, "   ")


class TestClassify:
    def test_threshold_rule(self, trained):
        model, _ = trained
        model.threshold = 0.5
        # strict inequality at the boundary: a score of exactly 0.5 is NC
        assert ("C" if 0.51 > model.threshold else "NC") == "C"
        assert ("C" if 0.50 > model.threshold else "NC") == "NC"
        assert ("C" if 0.49 > model.threshold else "NC") == "NC"
        assert cb.classify(model, "shocking unbelievable") == "C"
        assert cb.classify(model, "quarterly earnings report") == "NC"


class TestShiftTable:
    def build_profiles(self, headline_classes, post_classes):
        profiles = []
        for i, (h, p) in enumerate(zip(headline_classes, post_classes)):
            profiles.append(EditProfile(
                record_id=f"r{i}", edit_distance=0.5, embedding_similarity=0.5,
                mirrored=False,
                headline_clickbait=0.9 if h == "C" else 0.1,
                post_clickbait=0.9 if p == "C" else 0.1,
            ))
        return profiles

    def corpus(self, n):
        return make_corpus([make_record(rid=f"r{i}", outlet="x") for i in range(n)])

    def test_counted_by_hand(self):
        profiles = self.build_profiles("C C NC NC".split(), "NC C C NC".split())
        table = cb.conditional_shift_table(profiles, self.corpus(4), "x")
        assert table.p_nc_given_c == pytest.approx(0.5)
        assert table.p_c_given_nc == pytest.approx(0.5)
        assert table.n_headline_c == 2
        assert table.n_headline_nc == 2

    def test_undefined_cell_flagged(self):
        profiles = self.build_profiles(["NC", "NC"], ["C", "NC"])
        table = cb.conditional_shift_table(profiles, self.corpus(2), "x")
        assert table.p_nc_given_c is None
        assert table.n_headline_c == 0

    def test_complement_identity(self):
        profiles = self.build_profiles("C C C NC".split(), "NC C C C".split())
        table = cb.conditional_shift_table(profiles, self.corpus(4), "x")
        p_c_given_c = 1.0 - table.p_nc_given_c
        assert table.p_nc_given_c + p_c_given_c == pytest.approx(1.0)

    def test_unknown_outlet(self):
        profiles = self.build_profiles(["C"], ["C"])
        from editlift.corpus import CorpusError
        with pytest.raises(CorpusError):
            cb.conditional_shift_table(profiles, self.corpus(1), "nosuch")


class TestScoreProfiles:
    def test_fills_both_columns(self, trained):
        model, _ = trained
        records = [
            make_record(rid="r0", headline="shocking secret trick",
                        post_text="senate passes budget"),
            make_record(rid="r1", headline="council verdict announced",
                        post_text="craziest viral quiz"),
        ]
        corpus = make_corpus(records)
        profiles = [
            EditProfile("r0", 0.5, 0.5, False),
            EditProfile("r1", 0.5, 0.5, False),
        ]
        scored = cb.score_profiles(model, corpus, profiles)
        assert scored[0].headline_clickbait > 0.5 > scored[0].post_clickbait
        assert scored[1].headline_clickbait < 0.5 < scored[1].post_clickbait


class TestPersistence:
    def test_save_load_round_trip(self, trained, tmp_path):
        model, _ = trained
        path = tmp_path / "model.bin"
        cb.save_model(model, path)
        again = cb.load_model(path)
        texts = ["insane viral secret", "regulator approves exports", "hello world"]
        for text in texts:
            assert cb.score(again, text) == pytest.approx(cb.score(model, text), abs=1e-15)
        assert again.token_ids == model.token_ids
        assert again.threshold == model.threshold

    def test_labeled_csv_loader(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("text,label\nhello there,0\nwow insane,1\n", encoding="utf-8")
        data = cb.load_labeled_csv(path)
        assert data == [cb.LabeledHeadline("hello there", 0),
                        cb.LabeledHeadline("wow insane", 1)]

    def test_labeled_csv_rejects_bad_label(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("text,label\nhello,2\n", encoding="utf-8")
        with pytest.raises(ValueError):
            cb.load_labeled_csv(path)


class TestSyntheticCorpus:
    def test_deterministic(self):
        assert cb.synthetic_headlines(50, seed=9) == cb.synthetic_headlines(50, seed=9)

    def test_balanced_and_disjoint(self):
        data = cb.synthetic_headlines(100, seed=2)
        assert sum(ex.label for ex in data) == 50
        bait_tokens = {t for ex in data if ex.label == 1 for t in ex.text.split()}
        news_tokens = {t for ex in data if ex.label == 0 for t in ex.text.split()}
        assert not bait_tokens & news_tokens
