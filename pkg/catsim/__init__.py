"""catsim - Schrödinger cat-state entanglement simulator."""

__version__ = "1.0.0"
