"""Exception hierarchy shared by all modules."""


class BailStudyError(Exception):
    """Base class for every error raised by this package."""


class MissingColumnError(BailStudyError):
    """A required CSV column is absent."""


class UnknownBailStatusError(BailStudyError):
    """A bail-status string has no entry in the status lookup."""


class UnparseableValueError(BailStudyError):
    """A raw cell value could not be parsed for its declared kind."""


class ValueOutOfSchemaError(BailStudyError):
    """A raw feature value does not belong to the declared domain."""


class InsufficientCasesError(BailStudyError):
    """Too few cases to perform a stratified split."""


class InsufficientMajorityError(BailStudyError):
    """Not enough majority-class cases for the requested number of subsets."""

    def __init__(self, required: int, available: int):
        self.required = required
        self.available = available
        super().__init__(
            f"need {required} majority cases for disjoint subsets, have {available}"
        )


class EmptyPoolError(BailStudyError):
    """An imputation left no trainable cases."""


class SingleClassError(BailStudyError):
    """A classifier target contains only one class."""


class InsufficientNeighborsError(BailStudyError):
    """Fewer determinate cases than the requested neighbor count."""


class NonFiniteError(BailStudyError):
    """A loss or gradient evaluated to NaN or infinity."""


class SchemaMismatchError(BailStudyError):
    """Feature columns do not match between two aligned objects."""


class LengthMismatchError(BailStudyError):
    """Two paired sequences differ in length."""


class EmptySampleError(BailStudyError):
    """A distribution statistic received an empty sample."""


class IncompleteGridError(BailStudyError):
    """The method x model x subset prediction grid has holes."""


class UnknownCaseError(BailStudyError):
    """A requested case id is not present in the prediction artifacts."""


class InvalidConfigError(BailStudyError):
    """A configuration value is out of range or inconsistent."""


class CaseMismatchError(BailStudyError):
    """A training pool refers to cases outside the generated population."""
