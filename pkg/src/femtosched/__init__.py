"""Interference-graph based transmission scheduling for dense femtocell uplinks."""

from __future__ import annotations

__version__ = "0.1.0"
