"""Word embeddings built from cooccurrence read as a partition-function Hessian."""

__version__ = "0.1.0"
