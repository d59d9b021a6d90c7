import csv

import pytest

# Word pools for small labeled corpora that survive preprocessing.
CALM_WORDS = ["সভা", "আলোচনা", "বৈঠক", "চুক্তি", "উন্নয়ন", "শিক্ষা", "স্বাস্থ্য", "সেবা"]
HEATED_WORDS = ["দখল", "সংঘর্ষ", "বিক্ষোভ", "ধ্বংস", "ষড়যন্ত্র", "দমন", "উসকানি", "হামলা"]
COMMON_WORDS = ["সরকার", "নির্বাচন", "রাজনীতি", "খবর", "দেশ", "জনগণ"]


def fixture_rows(n=48, seed=0):
    import numpy as np

    rng = np.random.default_rng(seed)
    rows = []
    for i in range(n):
        label = i % 2
        pool = (HEATED_WORDS if label else CALM_WORDS) + COMMON_WORDS
        title = " ".join(rng.choice(pool, size=3))
        content = " ".join(rng.choice(pool, size=12)) + f" {i} !!"
        rows.append({"Title": title, "Content": content, "Source": "fixture", "Label": str(label)})
    return rows


@pytest.fixture
def small_csv(tmp_path):
    path = tmp_path / "news.csv"
    rows = fixture_rows()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["Title", "Content", "Source", "Label"])
        writer.writeheader()
        writer.writerows(rows)
    return path
