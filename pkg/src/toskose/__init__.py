"""Component-aware orchestration toolchain.

Parses TOSCA/CSAR application specifications, generates Compose
deployment artifacts embedding per-container process supervisors
("units") and a containerised orchestration service ("manager"),
and lets an administrator manage each software component's lifecycle
independently of its hosting container.
"""

__version__ = "0.1.0"
