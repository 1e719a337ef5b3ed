"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class SRMError(Exception):
    code = "srm"


class SchemaError(SRMError):
    code = "schema"


class ParseError(SRMError):
    code = "parse"


class EmptyDatasetError(SRMError):
    code = "empty-dataset"


class ValidationError(SRMError):
    code = "validation"


class ConfigurationError(SRMError):
    code = "configuration"


class UnknownCovariateError(ConfigurationError):
    code = "unknown-covariate"


class DegenerateResponseError(SRMError):
    code = "degenerate-response"


class DegenerateVarianceError(SRMError):
    code = "degenerate-variance"


class DimensionError(SRMError):
    code = "internal-consistency"


class ChainFailureError(SRMError):
    code = "chain-failure"

    def __init__(self, message, iteration=None, block=None):
        super().__init__(message)
        self.iteration = iteration
        self.block = block


class EmptySamplesError(SRMError):
    code = "empty-samples"


class AlignmentError(SRMError):
    code = "alignment"


class ScenarioError(SRMError):
    code = "scenario"


class ParameterError(SRMError):
    code = "parameter"
