"""Numerical laboratory for local measurement protocols on orthogonal
product-state ensembles: state catalogs, exact protocol execution, strategy
optimization, information-deficit bounds, structural/thermodynamic
accounting, and weak-measurement simulation."""

__version__ = "0.1.0"
