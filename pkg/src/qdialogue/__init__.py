"""
Simulator for two-way quantum dialogue over entangled channels.

Modules
-------
qstate
    Dense state vectors of at most four qubits, unitaries and measurements.
ghz_codec
    Pauli code algebra, the Bell and GHZ measurement families.
protocol
    Round state machines for the GHZ dialogue and its EPR-pair baseline.
adversary
    Intercept-resend and entangle-measure eavesdroppers.
harness
    Seeded Monte-Carlo runner, transcript statistics and the exact oracle.
cli
    Command-line front end.
"""

from .adversary import EveStrategy
from .ghz_codec import ADMISSIBLE_QUADS, QuadCode, TwoBitCode
from .harness import ExperimentConfig, Stats, exact_oracle, run_experiment, summarize
from .protocol import BASELINE, REVISED, Mode, RoundRecord

__version__ = "0.1.0"

__all__ = [
    "ADMISSIBLE_QUADS",
    "BASELINE",
    "REVISED",
    "EveStrategy",
    "ExperimentConfig",
    "Mode",
    "QuadCode",
    "RoundRecord",
    "Stats",
    "TwoBitCode",
    "exact_oracle",
    "run_experiment",
    "summarize",
]
