"""Registry XML to an ontology-aligned, denominator-preserving relational dataset."""

__version__ = "0.1.0"
