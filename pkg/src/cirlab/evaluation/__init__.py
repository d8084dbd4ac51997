"""Retrieval evaluation: indexing, recall@k, reports, quality audits."""

from .index import RetrievalIndex, build_index, load_index, save_index
from .quality import (
    CRITERIA,
    CriterionSummary,
    QualitySheet,
    aggregate_quality,
    render_quality_table,
    sample_quality,
    stratified_allocation,
)
from .report import EvalReport, QualitativeEntry, evaluate, write_report
from .retrieval import recall_at_k, retrieve

__all__ = [
    "CRITERIA",
    "CriterionSummary",
    "EvalReport",
    "QualitativeEntry",
    "QualitySheet",
    "RetrievalIndex",
    "aggregate_quality",
    "build_index",
    "evaluate",
    "load_index",
    "recall_at_k",
    "render_quality_table",
    "retrieve",
    "sample_quality",
    "save_index",
    "stratified_allocation",
    "write_report",
]
