"""Exception hierarchy shared by all secbeam modules."""


class SecBeamError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SecBeamError, ValueError):
    """An argument lies outside the mathematical domain of a function."""


class GeometryError(SecBeamError, ValueError):
    """A point or shape is invalid for the environment (e.g. outside the room)."""


class SecretTooShortError(SecBeamError, KeyError):
    """The shared secret is too short to derive keys from."""


class DecryptError(SecBeamError):
    """A sealed frame could not be opened (wrong key, tampering, truncation)."""


class NoLinkError(SecBeamError):
    """No transmit sector is decodable at the receiver."""


class AbortError(SecBeamError):
    """A protocol run aborted; carries the full outcome."""

    def __init__(self, outcome):
        self.outcome = outcome
        super().__init__(f"protocol aborted: {outcome.verdict}")


class EmptyProfileError(SecBeamError, ValueError):
    """A collective power delay profile has no peaks."""


class ParseError(SecBeamError):
    """A scenario file is not well-formed."""

    def __init__(self, message, *, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class ValidationError(SecBeamError):
    """A scenario violates one or more invariants; lists all of them."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  - " + "\n  - ".join(self.problems))
