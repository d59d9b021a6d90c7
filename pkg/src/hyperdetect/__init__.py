"""Bangla hyperpartisan news detection toolkit.

Pipeline pieces: corpus ingestion and splitting, Bangla text
preprocessing, round-trip-translation augmentation, TF-IDF features,
four probabilistic classifiers plus a remote-classifier client, grid
search, confidence-filtered self-training, local explanations, and
confusion-matrix evaluation.
"""

__version__ = "0.1.0"
