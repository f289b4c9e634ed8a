"""Toolkit for post-processing relit video sequences.

Provides temporal lighting stabilization (flow-compensated blending plus
edge-preserving filtering), detail-preserving LAB fusion of relit output
with the original footage, and metrics for scoring lighting stability.
"""

__version__ = "0.1.0"
