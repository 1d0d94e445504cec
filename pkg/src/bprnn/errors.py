"""Exception hierarchy shared by the whole toolkit.

Every error raised by the public API is a subclass of :class:`BprnnError`,
so callers can catch one type. The CLI maps subtrees to exit codes:
usage/parameter problems exit 1, divergence exits 2, I/O and format
problems exit 3.
"""


class BprnnError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(BprnnError):
    """Operands have incompatible shapes."""


class ParameterError(BprnnError):
    """An argument value is outside its allowed range."""


class ConfigError(ParameterError):
    """A configuration document is malformed (unknown key, bad value)."""


class NumericError(BprnnError):
    """Non-finite values were fed into a numeric operation."""


class DivergenceError(NumericError):
    """Activations or gradients left the finite range during a run.

    ``layer`` and ``timestep`` identify where the blow-up was detected
    (either may be None when the site has no such coordinate).
    """

    def __init__(self, message, layer=None, timestep=None):
        super().__init__(message)
        self.layer = layer
        self.timestep = timestep


class InitializationError(BprnnError):
    """Variance-targeting initialization failed to converge."""


class DegenerateLayerError(InitializationError):
    """A layer produced zero output variance during initialization."""


class IngestionError(BprnnError):
    """A corpus file could not be ingested."""


class VocabularyError(BprnnError):
    """A symbol outside the model vocabulary was encountered."""


class FormatError(BprnnError):
    """A persisted artifact does not match its on-disk format."""


class BadMagicError(FormatError):
    """Checkpoint file does not start with the expected magic bytes."""


class UnsupportedVersionError(FormatError):
    """Checkpoint version is not supported by this build."""


class PayloadLengthError(FormatError):
    """Checkpoint tensor payload is shorter or longer than its manifest."""
