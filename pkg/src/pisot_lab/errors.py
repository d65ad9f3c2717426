"""Exception hierarchy; each class carries the CLI exit code it maps to."""


class ArtifactError(Exception):
    exit_code = 1


class ParseError(ArtifactError):
    exit_code = 1


class HypothesisFailure(ArtifactError):
    """Input violates a standing assumption (not primitive, not Pisot, ...)."""

    exit_code = 2


class UnsupportedField(ArtifactError):
    exit_code = 3


class CapExceeded(ArtifactError):
    exit_code = 4
