"""Analytic decompositions of para-Hermitian matrix functions on the unit
circle: eigenvalue branches with fractional periods, analytic EVD/SVD, the
pseudo-circulant block form, and sign characteristics of *-palindromic
matrix polynomials."""

__version__ = "0.1.0"
