"""Desk-scale off-policy evaluation toolkit for top-n ranking.

Simulates position-biased logging policies, estimates ranking metrics for
target policies from logged data via inverse-propensity de-biasing with
optional clipping and normalization, and analyzes when per-sample and
aggregate metric orderings agree.
"""

__version__ = "0.1.0"
