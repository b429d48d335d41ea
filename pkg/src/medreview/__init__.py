"""Medication-review decision support engine.

Executes formalized stop/start prescription rules over a structured patient
record, computes contextualized drug-knowledge views (posology checks,
aggregated adverse effects, interaction graphs) for the current and the
proposed post-review treatment, and serves them to collaborating users.
"""

__version__ = "0.1.0"
