"""Exception hierarchy shared by the geosim modules."""


class GeosimError(Exception):
    """Base class for all library errors."""


class DegenerateLine(GeosimError, ValueError):
    """Two points are too close to define a line."""


class DegenerateSector(GeosimError, ValueError):
    """Source, local minimum and landmark do not span a proper sector."""


class GenerationFailed(GeosimError):
    """No connected field was found within the configured number of attempts."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class UnknownNode(GeosimError, KeyError):
    """A node id does not exist in the topology."""

    def __str__(self):
        return str(self.args[0]) if self.args else "unknown node"


class PerimeterLoop(GeosimError):
    """Face traversal revisited its first edge; the target is unreachable."""


class ConfigError(GeosimError, ValueError):
    """A configuration document failed validation.

    ``field`` names the offending key so the CLI can report it.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
