"""Exception hierarchy shared by all hyperrec modules."""


class HyperrecError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(HyperrecError, ValueError):
    pass


class DomainError(HyperrecError, ValueError):
    """A point lies on or outside the unit ball."""


class EmptyInput(HyperrecError, ValueError):
    pass


class ParseError(HyperrecError, ValueError):
    pass


class DuplicateCode(HyperrecError, ValueError):
    pass


class IntegrityError(HyperrecError, ValueError):
    """A record references an entity that does not exist."""


class DateError(HyperrecError, ValueError):
    pass


class ConfigError(HyperrecError, ValueError):
    pass


class UnknownEntity(HyperrecError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class EmptyExpertise(HyperrecError, ValueError):
    """A doctor has no retained visiting patients, so no feature exists."""


class TooFewEntities(HyperrecError, ValueError):
    pass


class NotEnoughDoctors(HyperrecError, ValueError):
    pass


class DegenerateSplit(HyperrecError, ValueError):
    pass
