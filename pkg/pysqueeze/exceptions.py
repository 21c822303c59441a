"""
This module contains the exceptions raised by pysqueeze.

Every exception derives from :class:`PySqueezeError`, which carries the exit code the command line interface uses
when the error terminates a command. The three main branches correspond to the three ways a run can fail: a broken
configuration, broken input data or a numerical procedure which did not converge / is not well posed.
"""


class PySqueezeError(Exception):
    """
    Base class for all the errors of this package.

    The "exit_code" class attribute is used by the CLI to terminate with a meaningful status code.
    """
    exit_code = 1


class ConfigError(PySqueezeError):
    exit_code = 2

    def __init__(self, message: str, field: str = '', line: int = 0):
        self.field = field
        self.line = line
        details = []
        if field:
            details.append('field "{}"'.format(field))
        if line:
            details.append('line {}'.format(line))
        if details:
            message = '{} ({})'.format(message, ', '.join(details))
        super(ConfigError, self).__init__(message)


class DataError(PySqueezeError):
    exit_code = 3


class EmptyBinError(DataError):
    pass


class MissingPredecessorError(DataError):
    pass


class MalformedRowError(DataError):

    def __init__(self, message: str, row: int):
        self.row = row
        super(MalformedRowError, self).__init__('row {}: {}'.format(row, message))


class NumericalError(PySqueezeError):
    exit_code = 4


class BracketError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass
