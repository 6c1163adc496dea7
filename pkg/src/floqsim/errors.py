"""Exception hierarchy shared by all floqsim modules.

The CLI maps these onto process exit codes (parameter -> 2, resource -> 3,
data format -> 4), so library code should raise the most specific class.
"""


class FloqsimError(Exception):
    """Base class for all package errors."""


class ParameterError(FloqsimError):
    """An argument is outside its documented domain."""


class ResourceError(FloqsimError):
    """A requested computation exceeds a configured size cap."""


class DataFormatError(FloqsimError):
    """An input file or record is malformed."""


class CalibrationError(FloqsimError):
    """A mitigation calibration is rejected (e.g. non-positive anchor)."""
