"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A distribution or process parameter is outside its domain."""


class InputError(ValueError):
    """Data, grids, or arguments passed by the caller are invalid."""


class SliceInvariantError(RuntimeError):
    """Internal slice-sampler invariant violated; carries the iteration index."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"{message} (iteration {iteration})"
        super().__init__(message)
        self.iteration = iteration
