"""Mine human-readable grammar descriptions from annotated corpora.

The pipeline ingests dependency treebanks (CoNLL-U), word-aligned parallel
sentences, and lexical-taxonomy exports, learns interpretable classifiers
for individual grammar questions (word order, agreement, suffix usage,
lexical selection), filters the learned patterns statistically, and renders
everything as a JSON bundle plus a static HTML learning-materials site.
"""

__version__ = "0.1.0"
