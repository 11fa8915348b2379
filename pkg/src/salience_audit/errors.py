"""Exception hierarchy.

Two families matter to the command line: ``InputError`` (bad files, bad
configuration; exit code 2) and ``StatsError`` (the statistical engine could
not produce a result; exit code 3).
"""


class SalienceAuditError(Exception):
    """Base class for every error raised by this package."""


class InputError(SalienceAuditError):
    pass


class StatsError(SalienceAuditError):
    pass


# -- configuration -----------------------------------------------------------

class ConfigError(InputError):
    """Raised by ``validate_config``; carries every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{code}: {msg}" for code, msg in self.errors))

    @property
    def codes(self):
        return [code for code, _ in self.errors]


# -- ingestion ----------------------------------------------------------------

class ParseError(InputError):
    def __init__(self, line, msg):
        self.line = line
        super().__init__(f"line {line}: {msg}")


class SchemaViolation(InputError):
    def __init__(self, field, msg, line=None):
        self.field = field
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{field}: {msg}")


class NegativeValue(InputError):
    pass


class MissingCategory(InputError):
    pass


class ZeroTotal(InputError):
    pass


class MissingStratum(InputError):
    pass


class DuplicateSurface(InputError):
    pass


class UnmappedParty(InputError):
    pass


class SelectionExceedsTotal(InputError):
    pass


# -- extraction ---------------------------------------------------------------

class MixedRecordIds(SalienceAuditError):
    pass


class RemoteUnavailable(SalienceAuditError):
    pass


class RateLimited(RemoteUnavailable):
    pass


class RemoteFormatError(SalienceAuditError):
    def __init__(self, record_id, msg):
        self.record_id = record_id
        super().__init__(f"{record_id}: {msg}")


# -- leaning ------------------------------------------------------------------

class BadThresholds(InputError):
    pass


class TopicAbsentEverywhere(InputError):
    pass


# -- stats --------------------------------------------------------------------

class EmptyCounts(StatsError):
    pass


class EmptyMentions(StatsError):
    pass


class SchemeMismatch(StatsError):
    pass


class DegenerateP0(StatsError):
    pass


class TooFewQueries(StatsError):
    pass


class OptimizerNoConverge(StatsError):
    pass


class NoTestableStrata(StatsError):
    pass


class MixedSchemes(StatsError):
    pass


# -- simulation ---------------------------------------------------------------

class MissingSpec(InputError):
    pass


class BadDistribution(InputError):
    pass
