"""Deterministic simulator for a dense-urban mmWave micro-RAN with mesh backhaul."""

__version__ = "0.1.0"
