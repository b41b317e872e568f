"""
Exception hierarchy shared by every analysis package.
"""
from typing import Optional


class AnalysisError(Exception):
	"""Base class for all errors raised by the analysis packages."""


class DataFormatError(AnalysisError, ValueError):
	def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
		self.line = line
		self.column = column
		where = []
		if line is not None:
			where.append(f"line {line}")
		if column is not None:
			where.append(f"column '{column}'")
		prefix = f"{', '.join(where)}: " if where else ""
		super().__init__(f"{prefix}{message}")


class EmptySelectionError(AnalysisError):
	def __init__(self, what: str = "records"):
		super().__init__(f"empty selection: no {what} match the requested filters")


class InsufficientClustersError(AnalysisError):
	def __init__(self, found: int):
		self.found = found
		super().__init__(f"insufficient clusters: {found} athlete(s) appear in both groups, need at least 2")


class InvalidSampleError(AnalysisError, ValueError):
	pass


class DegenerateNullError(AnalysisError):
	pass


class DomainError(AnalysisError, ValueError):
	pass


class MeanUndefinedError(DomainError):
	pass


class ModelDataMismatchError(AnalysisError):
	pass


class InsufficientDrawsError(AnalysisError, ValueError):
	pass


class ModelFileError(AnalysisError):
	pass


class UnknownComparisonError(AnalysisError, ValueError):
	pass
