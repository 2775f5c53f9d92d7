"""Exception taxonomy shared by the library and the command line."""


class ContractViolation(ValueError):
    """A caller broke an operation's precondition (bad shape, label, range)."""


class DataError(Exception):
    """Base class for problems with files read from disk."""


class MalformedFileError(DataError):
    pass


class MissingColumnsError(MalformedFileError):
    pass


class ChecksumError(DataError):
    pass


class BadMagicError(DataError):
    pass


class VersionError(DataError):
    pass
