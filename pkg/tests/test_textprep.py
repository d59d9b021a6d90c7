import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hyperdetect.corpus import Document, load_dataset, merge_title_content
from hyperdetect.errors import ConfigError
from hyperdetect.textprep import (
    PreprocessConfig,
    clean,
    preprocess_corpus,
    preprocess_document,
    remove_stopwords,
    stem,
    tokenize,
)

DATA = Path(__file__).parent / "data"

# Hand-derived expectations for two fixture documents: merge, strip
# non-Bangla characters, split, drop stopwords (সঙ্গে, হয়েছে, এবং, করে),
# strip one suffix each (ের, দের, গুলো, য়, রা, ে).
HAND_TOKENS = {
    "f00": ["নির্বাচন", "ফলাফল", "সরকার", "নেতা", "আলোচনা", "দল", "একমত"],
    "f01": ["ছাত্র", "আন্দোলন", "ঢাকা", "ছাত্র", "মিছিল", "রাস্তা", "নেমেছ"],
}

bangla_text = st.text(
    alphabet=st.sampled_from("করাতিনেসংবাদ নিরবাচন০১৯ab!,.?…্ঢ়"), max_size=60
)


@pytest.fixture(scope="module")
def cfg():
    return PreprocessConfig()


class TestClean:
    def test_digits_and_punctuation_removed(self, cfg):
        assert clean("রাজনীতি ১২৩ !!", cfg) == "রাজনীতি"

    def test_empty_input(self, cfg):
        assert clean("", cfg) == ""

    def test_latin_letters_and_ascii_digits_removed(self, cfg):
        assert clean("abc নির্বাচন 2024", cfg) == "নির্বাচন"

    def test_keep_digits_mode(self):
        cfg = PreprocessConfig(remove_digits=False)
        assert clean("ভোট ১২৩ 45!", cfg) == "ভোট ১২৩ 45"

    def test_whitespace_collapsed(self, cfg):
        assert clean("ক \t  খ\n\nগ", cfg) == "ক খ গ"

    @settings(max_examples=200)
    @given(text=bangla_text)
    def test_idempotent(self, text):
        cfg = PreprocessConfig()
        once = clean(text, cfg)
        assert clean(once, cfg) == once

    @settings(max_examples=200)
    @given(text=bangla_text)
    def test_introduces_no_new_characters(self, text):
        # whitespace may normalize to plain spaces, nothing else appears
        cleaned = clean(text, PreprocessConfig())
        assert set(cleaned) <= set(text) | {" "}


class TestTokenize:
    def test_whitespace_split(self):
        assert tokenize("ক খ গ") == ["ক", "খ", "গ"]

    def test_empty(self):
        assert tokenize("") == []

    def test_clean_then_tokenize_sample_title(self, cfg):
        title = "বর্গচোরা মুক্তিযোদ্ধাদের প্রতিহত করাই আজকের শপথ"
        tokens = tokenize(clean(title, cfg))
        assert len(tokens) >= 4
        assert all(" " not in t and t for t in tokens)


class TestStopwords:
    def test_membership_filter(self):
        cfg = PreprocessConfig(stopword_list=frozenset({"এবং"}))
        assert remove_stopwords(["এবং", "নির্বাচন"], cfg) == ["নির্বাচন"]

    def test_empty_list_is_identity(self):
        cfg = PreprocessConfig(stopword_list=frozenset())
        tokens = ["এবং", "নির্বাচন"]
        assert remove_stopwords(tokens, cfg) == tokens

    def test_idempotent(self, cfg):
        tokens = ["এবং", "নির্বাচন", "করে", "সরকার"]
        once = remove_stopwords(tokens, cfg)
        assert remove_stopwords(once, cfg) == once


class TestStem:
    def test_longest_suffix_strips(self):
        cfg = PreprocessConfig(stem_rules=("দের",))
        assert stem("ছাত্রদের", cfg) == "ছাত্র"

    def test_longest_match_wins_over_shorter(self, cfg):
        # টির must strip before টি or ের get a chance
        assert stem("ছেলেটির", cfg) == "ছেলে"

    def test_short_token_unchanged(self, cfg):
        assert stem("ক", cfg) == "ক"

    def test_minimum_stem_length_two(self):
        # stripping would leave a 1-character stem, so the token survives
        cfg = PreprocessConfig(stem_rules=("দের",))
        assert stem("কদের", cfg) == "কদের"

    def test_single_strip_only(self, cfg):
        # গুলোর strips once as a whole, not গুলো then র
        assert stem("দলগুলোর", cfg) == "দল"

    def test_conditional_idempotence_over_fixture_vocabulary(self, cfg):
        corpus, _ = load_dataset(DATA / "prep_fixture.jsonl")
        vocabulary = set()
        for doc in corpus:
            vocabulary.update(tokenize(clean(f"{doc.title} {doc.content}", cfg)))
        for word in sorted(vocabulary):
            once = stem(word, cfg)
            if any(once.endswith(s) and len(once) - len(s) >= 2 for s in cfg.stem_rules):
                continue  # a second strip is legitimately possible
            assert stem(once, cfg) == once, word


class TestPreprocessDocument:
    def test_truncation_bound(self, cfg):
        doc = Document(id="x", title="ক" , content=" ".join(["নির্বাচন"] * 900))
        out = preprocess_document(doc, cfg)
        assert len(out.tokens) <= 500

    def test_custom_max_tokens(self):
        cfg = PreprocessConfig(max_tokens=5)
        doc = Document(id="x", title="ক", content=" ".join(["নির্বাচন"] * 20))
        assert len(preprocess_document(doc, cfg).tokens) == 5

    def test_max_tokens_cannot_exceed_hard_limit(self):
        with pytest.raises(ConfigError):
            PreprocessConfig(max_tokens=513)

    def test_all_punctuation_document_flagged_empty(self, cfg):
        doc = Document(id="x", title="!!!", content="??? 123")
        out = preprocess_document(doc, cfg)
        assert out.tokens == ()

    def test_pipeline_equals_manual_composition(self, cfg):
        corpus, _ = load_dataset(DATA / "prep_fixture.jsonl")
        for doc in corpus:
            merged = merge_title_content(doc)
            tokens = tokenize(clean(merged.text, cfg))
            tokens = remove_stopwords(tokens, cfg)
            tokens = [stem(t, cfg) for t in tokens][: cfg.max_tokens]
            assert preprocess_document(doc, cfg).tokens == tuple(tokens), doc.id

    def test_hand_derived_fixture_tokens(self, cfg):
        corpus, _ = load_dataset(DATA / "prep_fixture.jsonl")
        by_id = {doc.id: doc for doc in corpus}
        for doc_id, expected in HAND_TOKENS.items():
            assert list(preprocess_document(by_id[doc_id], cfg).tokens) == expected

    def test_golden_corpus(self, cfg):
        corpus, _ = load_dataset(DATA / "prep_fixture.jsonl")
        golden = json.loads((DATA / "prep_golden.json").read_text(encoding="utf-8"))
        processed, empty_ids = preprocess_corpus(corpus, cfg)
        assert {doc.id: list(doc.tokens) for doc in processed} == golden
        assert empty_ids == ["f10"]
