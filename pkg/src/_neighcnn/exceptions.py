"""This module contains custom exceptions."""
from __future__ import annotations


class NeighCNNError(Exception):
    """Base exception for neighcnn which should be inherited by all other exceptions."""


class ConfigurationError(NeighCNNError):
    """Exception for invalid flags, configuration files or configuration objects."""


class ShapeError(NeighCNNError, ValueError):
    """Exception for shape mismatches and invalid axes or extents."""


class AutogradError(NeighCNNError):
    """Exception for misuse of the recorded computation graph."""


class NumericalError(NeighCNNError, FloatingPointError):
    """Exception for non-finite values produced by an operation."""


class DataError(NeighCNNError):
    """Exception for missing, unreadable or inconsistent data on disk."""


class CheckpointError(DataError):
    """Exception for malformed checkpoints or checkpoints of another format version."""
