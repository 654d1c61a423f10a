"""Exception taxonomy shared by all modules."""


class MirrorAtomError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MirrorAtomError):
    """Invalid or incomplete configuration input."""


class DataError(MirrorAtomError):
    """Invalid or missing data files."""


class SchemaError(DataError):
    """A data file violates its schema; carries the offending row number."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row


class FluxOutOfTransmonRegime(MirrorAtomError):
    """|cos(pi*Phi/Phi0)| fell below the validity bound of the two-level
    closed form (or the resulting frequency would be non-positive)."""


class DegenerateRates(MirrorAtomError):
    """No stationary Bloch solution exists (zero decoherence with finite drive)."""


class StepUnderflow(MirrorAtomError):
    """Required integrator step is below the representable floor."""


class GridOutsideBand(MirrorAtomError):
    """Requested probe grid extends outside the device's tunable band."""


class MissingTrueCoupling(ConfigError):
    """Power-sweep synthesis needs a true coupling constant in the config."""


class FitDiverged(MirrorAtomError):
    """Least-squares fit hit its iteration budget without converging."""


class Unresolvable(MirrorAtomError):
    """Trace carries no usable atomic response; not even a flagged partial
    fit could be produced."""


class NoZeroCrossing(MirrorAtomError):
    """Power sweep does not bracket the coherent-reflection zero."""


class RequiresGamma1GreaterThanGamma(MirrorAtomError):
    """The resonant power curve only crosses zero when the decay rate
    exceeds the decoherence rate."""
