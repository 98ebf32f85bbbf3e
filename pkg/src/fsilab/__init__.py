"""Desk-scale numerical laboratory for partitioned rigid-body FSI coupling:
exact added-mass solutions, the added-damping time stepper and its
amplification-factor stability map, added-damping tensors, composite-grid
quadrature weights, a repulsive-force collision model, and the piston
benchmark."""

__version__ = "0.1.0"
