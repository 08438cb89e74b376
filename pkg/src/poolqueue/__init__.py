"""Transient analysis of a single-server queue fed by a finite customer pool."""

from . import errors, geometric, inversion, kernels, service, simulate, transient, waiting

__all__ = [
    "errors",
    "geometric",
    "inversion",
    "kernels",
    "service",
    "simulate",
    "transient",
    "waiting",
]

__version__ = "0.1.0"
