"""Exception types shared across the package."""


class GridsecError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(GridsecError, ValueError):
    """Matrix or sequence dimensions are inconsistent with the operation."""


class RankDeficient(GridsecError):
    """A matrix that must have full column rank does not."""


class Unobservable(GridsecError):
    """The stacked observability matrix does not determine the initial state."""


class Infeasible(GridsecError):
    """The equality constraints of an optimization problem admit no solution."""


class SolverFailure(GridsecError):
    """The optimizer exceeded its iteration budget or lost feasibility."""


class TooLarge(GridsecError):
    """A combinatorial enumeration would exceed the allowed budget."""


class SingularLoadBlock(GridsecError):
    """The load-bus admittance sub-block is numerically singular."""


class Disconnected(GridsecError):
    """A network graph that must be connected is not."""


class MissingNeighborMeasurement(GridsecError, KeyError):
    """A generator is missing a measurement from one of its neighbors."""


class MissingMeasurement(GridsecError, KeyError):
    """The monitoring system is missing a required channel measurement."""


class ConfigError(GridsecError, ValueError):
    """A simulation configuration file is invalid."""


class NetworkParseError(GridsecError, ValueError):
    """A network description file is malformed."""


class ParamFileMissing(GridsecError):
    """A required parameter file is absent or its values are unsourced."""


class IOFailure(GridsecError, OSError):
    """Writing simulation outputs failed."""
