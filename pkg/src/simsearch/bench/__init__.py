"""Benchmarking harness: gold standards, metrics, reports, the experiment CLI."""
from .gold import (GoldCacheMismatchError, GoldStandard, QueryType,
                   SanityCheckError, compute_gold_standard, exact_ranking,
                   load_gold_cache, sanity_check, save_gold_cache)
from .metrics import (aggregate_fixed_effect, aggregate_geometric,
                      aggregate_mean_of_means, effectiveness)
from .reports import ResultRow, emit_reports
from .runner import ExperimentConfig, bootstrap_split, run_experiment

__all__ = [
    "QueryType", "GoldStandard", "compute_gold_standard", "exact_ranking",
    "sanity_check", "SanityCheckError", "GoldCacheMismatchError",
    "save_gold_cache", "load_gold_cache",
    "effectiveness", "aggregate_fixed_effect", "aggregate_mean_of_means",
    "aggregate_geometric",
    "ResultRow", "emit_reports",
    "ExperimentConfig", "bootstrap_split", "run_experiment",
]
