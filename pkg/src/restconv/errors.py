"""Exception hierarchy. The CLI maps these onto exit codes."""


class RestconvError(Exception):
    """Base class for all package errors."""


class GridError(RestconvError, ValueError):
    """Malformed grid, incompatible specs, or non-finite samples."""


class DimensionBudgetError(RestconvError, ValueError):
    """Requested an ambient dimension above the memory guard (md > 6)."""


class ExponentError(RestconvError, ValueError):
    """Exponent outside its admissible range or violating a Hoelder relation."""


class SubspaceError(RestconvError, ValueError):
    """Unsupported subspace kind/dimension or lattice-incompatible restriction."""


class BandLimitError(RestconvError, ValueError):
    """Spectrum carries energy beyond the wrap-free band cap."""


class ResolutionGuardError(RestconvError, ValueError):
    """Quadrature lattice too coarse for the oscillation being integrated."""

    def __init__(self, message, required_N=None):
        super().__init__(message)
        self.required_N = required_N


class DivergenceError(RestconvError, ValueError):
    """Requested a constant in a regime where it is infinite."""


class KernelError(RestconvError, ValueError):
    """Kernel representation unsuitable for the requested operation."""


class ConfigError(RestconvError, ValueError):
    """Configuration file or flag violates the parameter schema."""
