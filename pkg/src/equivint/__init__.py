"""Equivariant integrators on homogeneous spaces."""
