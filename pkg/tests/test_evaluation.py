import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdetect.corpus import Corpus, Document, Label, PseudoLabeled
from hyperdetect.errors import DataError, LeakageError
from hyperdetect.evaluation import (
    ConfusionMatrix,
    confusion,
    evaluate,
    format_report_table,
    metrics,
    predict_corpus_proba,
    reported_metric_discrepancies,
)
from hyperdetect.features import fit_vocabulary, transform_corpus
from hyperdetect.models import LogisticRegressionParams, fit_logistic_regression, load_model, save_model

POS, NEG = Label.HYPERPARTISAN, Label.NOT_HYPERPARTISAN


class TestConfusion:
    def test_perfect_predictor(self):
        cm = confusion([POS, NEG, POS], [POS, NEG, POS])
        assert (cm.fp, cm.fn) == (0, 0)
        assert (cm.tp, cm.tn) == (2, 1)

    def test_hand_counted_example(self):
        cm = confusion([POS, POS, NEG], [POS, NEG, NEG])
        assert (cm.tp, cm.fn, cm.tn, cm.fp) == (1, 1, 1, 0)

    def test_joint_permutation_invariance(self):
        rng = np.random.default_rng(0)
        labels = rng.integers(0, 2, 50).tolist()
        preds = rng.integers(0, 2, 50).tolist()
        base = confusion(labels, preds)
        perm = rng.permutation(50)
        shuffled = confusion([labels[i] for i in perm], [preds[i] for i in perm])
        assert base == shuffled

    def test_length_mismatch(self):
        with pytest.raises(DataError):
            confusion([POS], [POS, NEG])


class TestMetrics:
    def test_reference_counts_recall(self):
        report = metrics(ConfusionMatrix(tp=220, fn=11, tn=242, fp=20))
        assert report.recall == pytest.approx(0.952381, abs=1e-6)
        assert report.accuracy == pytest.approx(462 / 493, abs=1e-12)
        assert report.precision == pytest.approx(220 / 240, abs=1e-12)

    def test_reference_counts_flag_mismatched_reported_metrics(self):
        cm = ConfusionMatrix(tp=220, fn=11, tn=242, fp=20)
        flags = reported_metric_discrepancies(
            cm, {"accuracy": 0.9565, "precision": 0.9565, "recall": 0.9524, "f1": 0.9544}
        )
        assert any(f.startswith("reported_accuracy_mismatch") for f in flags)
        assert any(f.startswith("reported_precision_mismatch") for f in flags)
        assert not any(f.startswith("reported_recall_mismatch") for f in flags)

    def test_all_ones_matrix(self):
        report = metrics(ConfusionMatrix(tp=1, fp=1, tn=1, fn=1))
        assert (report.accuracy, report.precision, report.recall, report.f1) == (0.5, 0.5, 0.5, 0.5)

    def test_perfect_matrix(self):
        report = metrics(ConfusionMatrix(tp=10, fp=0, tn=10, fn=0))
        assert (report.accuracy, report.precision, report.recall, report.f1) == (1.0, 1.0, 1.0, 1.0)

    def test_zero_denominators_flagged_not_raised(self):
        report = metrics(ConfusionMatrix(tp=0, fp=0, tn=5, fn=5))
        assert report.precision == 0.0 and report.f1 == 0.0
        assert "precision_denominator_zero" in report.flags
        assert "f1_denominator_zero" in report.flags

    @settings(max_examples=100)
    @given(tp=st.integers(0, 400), fp=st.integers(0, 400), tn=st.integers(0, 400),
           fn=st.integers(0, 400))
    def test_harmonic_mean_identity_and_integer_accuracy(self, tp, fp, tn, fn):
        if tp + fp + tn + fn == 0:
            return
        report = metrics(ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn))
        if report.precision + report.recall > 0:
            assert report.f1 * (report.precision + report.recall) == pytest.approx(
                2 * report.precision * report.recall, abs=1e-12
            )
        total = tp + fp + tn + fn
        assert report.accuracy * total == pytest.approx(tp + tn, abs=1e-9)

    def test_class_swap_keeps_accuracy_and_transforms_precision_recall(self):
        cm = ConfusionMatrix(tp=30, fp=10, tn=50, fn=5)
        swapped = ConfusionMatrix(tp=cm.tn, fp=cm.fn, tn=cm.tp, fn=cm.fp)
        a, b = metrics(cm), metrics(swapped)
        assert a.accuracy == pytest.approx(b.accuracy, abs=1e-15)
        assert b.precision == pytest.approx(cm.tn / (cm.tn + cm.fn), abs=1e-15)
        assert b.recall == pytest.approx(cm.tn / (cm.tn + cm.fp), abs=1e-15)


def build_fitted(n=40, seed=2):
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n):
        label = Label(i % 2)
        lean = ["শান্ত", "সভা"] if label == NEG else ["যুদ্ধ", "দখল"]
        tokens = tuple(rng.choice(lean + ["খবর"], size=6))
        docs.append(Document(id=f"tr{i}", title="t", content="c", label=label, tokens=tokens))
    train = Corpus(docs)
    vectorizer = fit_vocabulary(train)
    model = fit_logistic_regression(
        transform_corpus(vectorizer, train), [int(d.label) for d in train],
        LogisticRegressionParams(solver="full_batch"),
    )
    model.training_doc_ids = tuple(train.ids())
    return train, vectorizer, model


def fresh_test_corpus(n=20, seed=9, prefix="te"):
    rng = np.random.default_rng(seed)
    docs = []
    for i in range(n):
        label = Label(i % 2)
        lean = ["শান্ত", "সভা"] if label == NEG else ["যুদ্ধ", "দখল"]
        tokens = tuple(rng.choice(lean + ["খবর"], size=6))
        docs.append(Document(id=f"{prefix}{i}", title="t", content="c", label=label, tokens=tokens))
    return Corpus(docs)


class TestEvaluate:
    def test_majority_class_predictor_arithmetic(self):
        class MajorityModel:
            model_type = "stub"
            training_doc_ids = None

            def predict_proba(self, vectors):
                return np.tile([0.0, 1.0], (len(vectors), 1))

        docs = [Document(id=f"d{i}", title="t", content="c",
                         label=POS if i < 12 else NEG, tokens=("ক",))
                for i in range(20)]
        corpus = Corpus(docs)
        vectorizer = fit_vocabulary(corpus)
        report = evaluate(MajorityModel(), corpus, vectorizer)
        assert report.accuracy == pytest.approx(0.6, abs=1e-12)
        assert report.recall == 1.0

    def test_training_overlap_raises_without_override(self):
        train, vectorizer, model = build_fitted()
        with pytest.raises(LeakageError):
            evaluate(model, train, vectorizer)

    def test_override_watermarks_report(self):
        train, vectorizer, model = build_fitted()
        report = evaluate(model, train, vectorizer, allow_training_eval=True)
        assert "evaluated_on_training_data" in report.flags

    def test_pseudo_labeled_test_docs_refused(self):
        _, vectorizer, model = build_fitted()
        from dataclasses import replace
        test = fresh_test_corpus()
        poisoned = Corpus(
            [replace(test[0], provenance=PseudoLabeled(confidence=0.99))] + list(test[1:])
        )
        with pytest.raises(DataError, match="pseudo-labeled"):
            evaluate(model, poisoned, vectorizer)

    def test_unlabeled_test_refused(self):
        _, vectorizer, model = build_fitted()
        from dataclasses import replace
        test = Corpus(replace(d, label=None) for d in fresh_test_corpus())
        with pytest.raises(DataError):
            evaluate(model, test, vectorizer)

    def test_deserialized_model_reports_identically(self, tmp_path):
        _, vectorizer, model = build_fitted()
        test = fresh_test_corpus()
        direct = evaluate(model, test, vectorizer)
        path = tmp_path / "m.json"
        save_model(model, path, vectorizer=vectorizer)
        loaded, loaded_vec = load_model(path)
        reloaded = evaluate(loaded, test, loaded_vec)
        assert direct.to_dict()["confusion"] == reloaded.to_dict()["confusion"]
        assert direct.to_dict()["metrics"] == reloaded.to_dict()["metrics"]

    def test_report_table_layout(self):
        report = metrics(ConfusionMatrix(tp=220, fn=11, tn=242, fp=20), model="demo")
        text = format_report_table([report])
        lines = text.splitlines()
        assert lines[0].split() == ["Model", "Accuracy", "Precision", "Recall", "F1-Score"]
        assert "demo" in lines[1] and "0.9524" in lines[1]

    def test_remote_model_uses_texts(self):
        calls = {}

        class FakeRemote:
            model_type = "remote"
            training_doc_ids = None

            def predict_proba(self, texts):
                calls["texts"] = list(texts)
                return np.tile([0.2, 0.8], (len(texts), 1))

        test = fresh_test_corpus(n=4)
        report = evaluate(FakeRemote(), test, vectorizer=None)
        assert len(calls["texts"]) == 4
        assert report.confusion.total == 4
