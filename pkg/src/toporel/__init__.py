"""Topology-aware power-system reliability: MCS labelling and LOLP regression."""

__version__ = "0.1.0"
