"""Exception hierarchy shared across the package."""


class SketchRecError(Exception):
    """Base class for every error raised deliberately by sketchrec."""


class FormatError(SketchRecError, ValueError):
    """A file or byte buffer does not follow the expected binary/text layout."""


class ContractError(SketchRecError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class LoadError(SketchRecError):
    """A corpus or artifact on disk could not be loaded."""


class TrainingDiverged(SketchRecError):
    def __init__(self, iteration, loss):
        super().__init__(f"training diverged at iteration {iteration} (loss={loss})")
        self.iteration = iteration
        self.loss = loss
