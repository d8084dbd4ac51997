"""Composed image retrieval laboratory.

A desk-scale system for composed image retrieval (CIR): a retrieval model
with adapter-augmented image encoding, text-guided query fusion and
multi-head matching; a two-stage contrastive trainer; an automatic
triplet-construction pipeline driven by pluggable caption/text services;
and a recall@k evaluation harness with a quality-audit protocol.
"""

__version__ = "0.1.0"
