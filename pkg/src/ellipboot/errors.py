"""Exception hierarchy shared by every module."""

from __future__ import annotations


class EllipbootError(Exception):
    """Base class for all package errors."""


class DomainError(EllipbootError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericFailureError(EllipbootError, ArithmeticError):
    """A numerical routine failed to produce a usable result."""


class SingularMatrixError(NumericFailureError):
    """A matrix is singular (or numerically so) where positive definiteness is required."""


class BootstrapInstabilityError(NumericFailureError):
    """Too many degenerate resamples were rejected while bootstrapping."""


class CatalogError(EllipbootError, KeyError):
    """Unknown distribution name."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class ConfigError(EllipbootError, ValueError):
    """Invalid study configuration."""
