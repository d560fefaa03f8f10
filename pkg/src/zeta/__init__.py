"""Sparse top-k attention over Z-order (Morton) codes with Adaptive Cauchy-Softmax."""

from .cauchy_attention import AttentionParams, GradBundle, attend, backward, forward, prefix_means, select
from .morton import QuantizationConfig, ZCode, deinterleave, encode_batch, fit_config, interleave, quantize
from .oracle import SoftmaxVariant, dense_causal_attention, metric_demo
from .topk_index import SearchBudget, TopKSelection, build_index, exact_topk_oracle, query_topk, recall_at_k

__all__ = [
    "AttentionParams", "GradBundle", "attend", "backward", "forward", "prefix_means", "select",
    "QuantizationConfig", "ZCode", "deinterleave", "encode_batch", "fit_config", "interleave", "quantize",
    "SoftmaxVariant", "dense_causal_attention", "metric_demo",
    "SearchBudget", "TopKSelection", "build_index", "exact_topk_oracle", "query_topk", "recall_at_k",
]
