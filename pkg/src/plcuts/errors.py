"""Exception types raised across the package."""


class PlcutsError(Exception):
    pass


class InvalidInput(PlcutsError, ValueError):
    pass


class ParseError(PlcutsError, ValueError):
    pass


class DomainError(PlcutsError, ValueError):
    pass


class DegenerateCluster(PlcutsError, ValueError):
    pass


class MonotonicityViolation(PlcutsError):
    pass
