"""
Error types raised by the spi-kit services
Each error carries a short title and the CLI exit code of its class
"""


class SpiError(Exception):
    """Base class for all spi-kit errors"""

    title = 'Error'
    exit_code = 4


class InvalidParameter(SpiError, ValueError):
    """A caller-supplied parameter violates a precondition"""

    title = 'Invalid parameter'
    exit_code = 2


class StorageError(SpiError, OSError):
    """A file could not be read or written"""

    title = 'I/O error'
    exit_code = 3


class NumericalFailure(SpiError, ArithmeticError):
    """A computation could not produce a valid result"""

    title = 'Numerical failure'
    exit_code = 4


class ZeroSeed(InvalidParameter):
    title = 'Zero seed'


class UnsupportedDegree(InvalidParameter):
    title = 'Unsupported degree'


class IndexOutOfRange(InvalidParameter, IndexError):
    title = 'Index out of range'


class BadFactorization(InvalidParameter):
    title = 'Bad factorization'


class ShapeMismatch(InvalidParameter):
    title = 'Shape mismatch'


class LengthMismatch(InvalidParameter):
    title = 'Length mismatch'


class BadCrop(InvalidParameter):
    title = 'Bad crop'


class CutoffOutOfRange(InvalidParameter):
    title = 'Cutoff out of range'


class GridMismatch(InvalidParameter):
    title = 'Grid mismatch'


class BadGamma(InvalidParameter):
    title = 'Bad gamma'


class TooSmall(InvalidParameter):
    title = 'Image too small'


class ConfigInvalid(InvalidParameter):
    """Configuration rejected; `problems` lists one diagnostic per field"""

    title = 'Invalid configuration'

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__('; '.join(self.problems))


class NonPrimitive(NumericalFailure):
    title = 'Polynomial not primitive'


class NonFiniteInput(NumericalFailure):
    title = 'Non-finite input'


class TooFewSamples(NumericalFailure):
    title = 'Too few samples'


class IncompleteTrace(NumericalFailure):
    title = 'Incomplete trace'


class KernelZero(NumericalFailure):
    title = 'Kernel spectrum vanishes'


class UnsupportedFormat(StorageError):
    title = 'Unsupported format'


class CorruptFile(StorageError):
    title = 'Corrupt file'


class IoError(StorageError):
    title = 'I/O error'
