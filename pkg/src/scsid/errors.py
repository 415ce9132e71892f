"""Exception hierarchy shared by all scsid modules."""


class ScsError(Exception):
    """Base class for domain errors (CLI exit code 1)."""


class ModelSpecError(ScsError, ValueError):
    pass


class InsufficientSamplesError(ScsError, ValueError):
    pass


class UnidentifiableBlockError(ScsError):
    """The input block of a TLS subspace basis is (numerically) singular."""

    def __init__(self, cluster, cond):
        self.cluster = cluster
        self.cond = cond
        super().__init__(
            f"unidentifiable submodel block in cluster {cluster + 1} "
            f"(condition number {cond:.3g})"
        )


class EmptyClusterError(ScsError):
    pass


class DegenerateDesignError(ScsError, ValueError):
    pass


class OutOfScopeError(ScsError, NotImplementedError):
    pass


class DataFormatError(ScsError, ValueError):
    """Malformed input file; carries the file, line and field at fault."""

    def __init__(self, path, line, field, message):
        self.path = path
        self.line = line
        self.field = field
        super().__init__(f"{path}:{line}: field '{field}': {message}")
