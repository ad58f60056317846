"""Doubles-tennis annotation engine.

Core pieces: label taxonomy and legality rules, court geometry, COCO
detector-output ingestion, the rally store, pose-graph classifiers, the
label-generation workflow, evaluation metrics, and the HTTP service + CLI
around them.
"""

__version__ = "0.1.0"
