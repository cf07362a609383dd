"""Wayfinding experiment engine.

Deterministic headless simulator of route/exit-choice experiments in a
multi-story building, with a live session service, telemetry replay,
trajectory analysis and questionnaire scoring.
"""

__version__ = "0.1.0"
