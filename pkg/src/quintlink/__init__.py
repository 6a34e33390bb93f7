"""Quintuplet link prediction for supply-chain knowledge graphs.

Builds a typed knowledge graph of companies, products and certificates,
condenses connected triplets into quintuplets, renders them as text,
embeds the text, and trains small classifiers to predict whether a
quintuplet exists.  Includes a synthetic-data generator with a plantable
class signal for benchmarking.
"""

__version__ = "0.1.0"

__all__ = ["__version__"]
