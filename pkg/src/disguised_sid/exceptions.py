"""Exception types raised across the toolkit."""


class SidError(Exception):
    """Base class for toolkit errors."""


class ParameterError(SidError, ValueError):
    """An argument is outside its allowed domain."""


class AudioFormatError(SidError, ValueError):
    """The file is not a well-formed RIFF/WAVE stream."""


class UnsupportedAudioError(AudioFormatError):
    """The WAVE encoding is valid but not PCM 16-bit."""


class EmptyAudioError(AudioFormatError):
    """The data chunk holds no samples."""


class ManifestError(SidError, ValueError):
    """A manifest line failed validation."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TooShortError(ParameterError):
    """Signal shorter than the analysis window requires."""


class UnvoicedError(SidError):
    """No periodic content was found."""


class TrainingError(SidError, ValueError):
    """Training data cannot produce a model."""


class ModelStateError(SidError, RuntimeError):
    """Model is not in a state that allows the requested call."""
