"""
Exception hierarchy for T-Array Sim.

Every error carries the process exit code the CLI reports for it:
0 success, 2 design, 3 geometry, 4 solver, 5 analysis.
"""


class TArrayError(Exception):
    """Base class for every expected failure in the toolkit"""

    exit_code = 1


# Design chain ---------------------------------------------------------------

class DesignError(TArrayError):
    exit_code = 2


class DesignDomainError(DesignError, ValueError):
    """Input outside the domain of a design equation"""


class SingularityError(DesignError, ValueError):
    """Denominator of the fringing-extension formula is not positive"""


class InfeasibleDesignError(DesignError):
    """The equations produce a non-physical patch"""


class OracleDomainError(DesignError, ValueError):
    """Invalid input to an analytic reference model"""


# Geometry -------------------------------------------------------------------

class GeometryError(TArrayError):
    exit_code = 3


class GeometryPreconditionError(GeometryError, ValueError):
    """Degenerate or negative dimensions"""


class GeometryBoundsError(GeometryError):
    """A feature falls outside the conductor it is cut from"""


class GeometryOverlapError(GeometryError):
    """Two features that must stay disjoint intersect"""


# Solver ---------------------------------------------------------------------

class SolverError(TArrayError):
    exit_code = 4


class DivergenceError(SolverError):
    def __init__(self, step, detail="non-finite field value"):
        self.step = step
        super().__init__(f"Simulation diverged at step {step}: {detail}")


class PortConfigurationError(SolverError):
    """Port placed on a PEC edge or outside the grid"""


class ResourceError(SolverError):
    """Grid would exceed the configured cell budget"""


# Analysis -------------------------------------------------------------------

class AnalysisError(TArrayError):
    exit_code = 5


class FrequencyLookupError(AnalysisError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "frequency not recorded"


class EnergyAccountingError(AnalysisError):
    """Radiated power exceeds accepted power beyond numerical headroom"""


class MissingRunFilesError(AnalysisError):
    """Run directory lacks port.csv, huygens.bin or run.json"""
