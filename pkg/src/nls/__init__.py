"""Numerical laboratory for weighted non-local quadratic forms.

The package discretizes quadratic forms

    E(f, f) = iint (f(x) - f(y))^2 W(x, y) J(x, dy) dx

on uniform grids, computes their low spectrum, and runs a set of
compactness / non-compactness diagnostics: a scaling functional, a
generator-ratio certificate, a Hardy-type lower bound, and a
constructive super Poincare profile.
"""

__version__ = "0.1.0"
