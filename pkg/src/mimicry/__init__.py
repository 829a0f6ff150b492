"""Simulation toolkit for black-box attacks on a rate-limited text classifier:
extraction of a substitute model under a query budget, active-learning
refinement, and follow-on evasion and poisoning attacks, all against a locally
simulated target so every run is reproducible."""

__version__ = "0.1.0"
