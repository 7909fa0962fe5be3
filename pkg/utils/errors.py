"""Exception hierarchy shared by every module.

``exit_code`` is what ``main.py`` returns when the error escapes a command:
2 for configuration problems, 3 for data problems.
"""


class PosePoisonError(Exception):
    exit_code = 3


class ConfigError(PosePoisonError):
    exit_code = 2


# --- geometry / meshes -------------------------------------------------------

class NonPositiveDepth(PosePoisonError):
    pass


class ParseError(PosePoisonError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class IndexOutOfRange(PosePoisonError):
    pass


class DegenerateMesh(PosePoisonError):
    pass


# --- rendering ---------------------------------------------------------------

class EmptyRender(PosePoisonError):
    pass


class DimensionMismatch(PosePoisonError):
    pass


# --- datasets ----------------------------------------------------------------

class PlacementFailed(PosePoisonError):
    pass


class TooFewRecords(PosePoisonError):
    pass


class SchemaError(PosePoisonError):
    def __init__(self, field, reason):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")


class MissingFile(PosePoisonError):
    pass


# --- poisoning ---------------------------------------------------------------

class AlreadyPoisoned(PosePoisonError):
    pass


class InconsistentAnnotation(PosePoisonError):
    pass


# --- pnp ---------------------------------------------------------------------

class EmptyMask(PosePoisonError):
    pass


class TooFewPixels(PosePoisonError):
    pass


class NoConsensus(PosePoisonError):
    pass


class DegenerateConfiguration(PosePoisonError):
    pass


class NonConvergent(PosePoisonError):
    pass


# --- evaluation --------------------------------------------------------------

class EmptyPointSet(PosePoisonError):
    pass


class UnknownRecordId(PosePoisonError):
    pass


class MissingTargetPose(PosePoisonError):
    pass


class MissingPrediction(PosePoisonError):
    pass


class DuplicateRatio(ConfigError):
    pass
