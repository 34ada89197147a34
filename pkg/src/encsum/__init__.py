"""encsum: clinical-encounter summarization datasets, pipeline plumbing, and evaluation."""

__version__ = "0.1.0"
