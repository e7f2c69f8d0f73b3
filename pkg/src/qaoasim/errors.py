"""Exception hierarchy shared by every module of the package."""


class QAOAError(Exception):
    """Base class for all package errors."""


class DomainError(QAOAError, ValueError):
    """An argument lies outside the domain an operation accepts."""


class CapacityError(QAOAError, MemoryError):
    """A requested object would exceed the supported size."""


class DataError(QAOAError, ValueError):
    """Input data is malformed or non-finite."""


class FormatError(QAOAError, ValueError):
    """A persisted file is corrupt or has an unexpected layout."""


class CompatibilityError(QAOAError, ValueError):
    """A persisted object does not match the context requesting it."""


class OptimizerError(QAOAError, RuntimeError):
    """The classical optimizer had to abort."""
