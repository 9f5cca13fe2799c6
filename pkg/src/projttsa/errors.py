"""Exception hierarchy shared by every module."""


class TTSAError(Exception):
    """Base class; ``code`` is the machine-readable tag used by the CLI."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class DimensionMismatch(TTSAError, ValueError):
    code = "dimension_mismatch"


class RankDeficient(TTSAError, ValueError):
    code = "rank_deficient"


class Singular(TTSAError, ValueError):
    code = "singular"


class ProjectedSingular(Singular):
    """A subspace-reduced matrix ``U^T A U`` is numerically singular."""

    code = "projected_singular"

    def __init__(self, message, matrix_name=None):
        super().__init__(message)
        self.matrix_name = matrix_name

    def to_dict(self):
        d = super().to_dict()
        d["matrix"] = self.matrix_name
        return d


class NonConvergence(TTSAError, RuntimeError):
    code = "non_convergence"


class NonFinite(TTSAError, FloatingPointError):
    """An iterate left the finite floats; ``t`` is the first offending step."""

    code = "non_finite"

    def __init__(self, message, t, trial=None):
        super().__init__(message)
        self.t = t
        self.trial = trial

    def to_dict(self):
        d = super().to_dict()
        d["t"] = self.t
        d["trial"] = self.trial
        return d


class AssumptionViolated(TTSAError, ValueError):
    code = "assumption_violated"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report

    def to_dict(self):
        d = super().to_dict()
        if self.report is not None:
            d["failures"] = self.report.failures()
        return d


class InsufficientData(TTSAError, ValueError):
    code = "insufficient_data"


class ConfigError(TTSAError, ValueError):
    """Invalid run configuration; ``key`` names the offending field."""

    code = "config_error"

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key

    def to_dict(self):
        d = super().to_dict()
        d["key"] = self.key
        return d
