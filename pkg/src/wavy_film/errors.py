"""Exception types shared across the package."""


class WavyFilmError(Exception):
    """Base class for configuration and solver failures."""


class ConfigError(WavyFilmError):
    """Invalid or inconsistent run configuration."""


class SolverError(WavyFilmError):
    """A nonlinear solve or time step failed to converge."""


class FilmRuptureError(SolverError):
    """Film thickness reached zero or below.

    Raised by the right-hand-side evaluators when fed a nonpositive F and by
    the time integrator when step-size control cannot keep F positive.
    """

    def __init__(self, message, t=None, index=None):
        super().__init__(message)
        self.t = t
        self.index = index


class RegularizationPoleError(SolverError):
    """The regularization factor hit its pole.

    The factor 1/(1 - delta*R*Q*dX(F)/70) diverges when the argument reaches
    one; evaluation refuses to continue rather than clamp.
    """

    def __init__(self, message, indices=None, x_locations=None):
        super().__init__(message)
        self.indices = indices
        self.x_locations = x_locations
