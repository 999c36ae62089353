"""genregap: measure and mitigate topical domain-transfer gaps in
non-topical text classifiers.

The pipeline: ingest a genre-labeled corpus, train a topic model, build
on/off-topic transfer splits, extract topical keywords, generate
topically-controlled synthetic documents, train genre classifiers, and
report the resulting transfer gap and augmentation effects.
"""

__version__ = "0.1.0"
