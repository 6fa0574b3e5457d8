"""Language-agnostic character-level multilabel tagger for source code."""

__version__ = "0.1.0"
