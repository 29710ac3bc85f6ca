"""Sampled spectra and correlation functions tagged with the model that produced them."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MODELS = ("analytic", "reduced", "full")


@dataclass
class SpectrumSeries:
    """Incoherent spectral density on a frequency grid.

    The coherent part is a delta peak, kept as ``(coherent_weight,
    coherent_frequency)`` instead of being sampled.
    """

    omega: np.ndarray
    values: np.ndarray
    port: str
    model: str
    coherent_weight: float = 0.0
    coherent_frequency: float = 0.0
    meta: dict = field(default_factory=dict)

    def integral(self) -> float:
        return float(np.trapezoid(self.values, self.omega))


@dataclass
class CorrelationSeries:
    """A correlation function sampled on a delay grid; ``kind`` is ``"g1"`` or ``"g2"``."""

    tau: np.ndarray
    values: np.ndarray
    port: str
    model: str
    kind: str = "g2"
    meta: dict = field(default_factory=dict)
