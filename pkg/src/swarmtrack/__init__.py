"""Multi-robot multi-target tracking: simulation, submodular coordination
planners, and suboptimality-bound verification."""

__version__ = "0.1.0"
