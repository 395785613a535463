"""Exception types shared across the package."""


class CrbError(Exception):
    """Base class for all package errors."""


# parsing
class MissingSection(CrbError):
    pass


class AmbiguousSection(CrbError):
    pass


# metrics
class EmptyHypothesis(CrbError):
    pass


class ZeroBaseline(CrbError):
    pass


class ProviderUnavailable(CrbError):
    pass


# scoring / aggregation
class EmptyCorpus(CrbError):
    pass


class ScaleMismatch(CrbError):
    pass


class EmptyGroup(CrbError):
    pass


class KeyMismatch(CrbError):
    pass


class UnknownCase(CrbError):
    pass


# stats
class DegenerateInput(CrbError):
    pass


# kernels
class DimensionMismatch(CrbError):
    pass


class NonFiniteInput(CrbError):
    pass


# study service
class Conflict(CrbError):
    pass


class UnknownStudy(CrbError):
    pass


class UnknownRater(CrbError):
    pass


class DuplicateSubmission(CrbError):
    pass


class RankNotPermutation(CrbError):
    pass


class ScoreOutOfRange(CrbError):
    pass
