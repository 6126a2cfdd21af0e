"""Decentralized stochastic gradient methods: simulation and closed-form analysis."""

from __future__ import annotations

from .kernels import BACKEND, use_backend

__all__ = ["BACKEND", "use_backend"]
__version__ = "0.1.0"
