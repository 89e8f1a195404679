"""Supervised-attention BiLSTM for heterogeneous abusive language."""

__version__ = "0.1.0"
