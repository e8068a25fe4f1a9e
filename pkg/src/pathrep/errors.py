"""Exception types shared across the package."""


class PathrepError(Exception):
    """Base class for all pathrep errors."""


class DataError(PathrepError):
    """Invalid or unusable input data (bad files, bad graph definitions, ...)."""


class NoRouteError(DataError):
    """Destination not reachable from origin."""


class TrainingError(PathrepError):
    """Model training failed (e.g. diverged to non-finite loss)."""
