"""Exception types shared across the package."""


class PwlPolicyError(Exception):
    """Base class for errors raised by this package."""


class DimensionMismatchError(PwlPolicyError, ValueError):
    """Array shapes are inconsistent with the declared n or k."""


class ValidationError(PwlPolicyError, ValueError):
    """Problem data violates a structural precondition (PSD, domain, kind)."""


class GenerationError(PwlPolicyError):
    """Random instance generator exhausted its attempts without a certificate."""


class SolverFailureError(PwlPolicyError):
    """A solve that was required to succeed reported infeasible/max-iterations."""


class DegenerateInputError(PwlPolicyError):
    """Point cloud remained degenerate after the allotted jitter retries."""


class UnsupportedDimensionError(PwlPolicyError, ValueError):
    """Triangulation requested for a parameter dimension outside {1, 2, 3}."""


class OutsideHullError(PwlPolicyError):
    """Query point lies outside the convex hull of the mesh vertices."""


class TrainingDivergedError(PwlPolicyError):
    """Network training produced a non-finite or exploding loss."""
