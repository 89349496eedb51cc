"""Exact verification toolkit for filtered envelopes of Lie algebroids.

The package builds the degree-one homogenization of the universal envelope
of a Lie algebroid presented by structure constants and anchor, together
with its quadratic dual, the associated Koszul and diagonal complexes, the
section functors along the noncommutative projectivization, and the tilting
bundle with its induced K-theory maps.  All arithmetic is exact (rationals,
or polynomials over the rationals); every theorem-shaped claim is checked
on finite graded windows and reported with explicit certificates.
"""

__version__ = "0.1.0"
