"""Figure generation for lq-explore experiment CSV logs."""

from .errors import DegenerateFit, EmptyWindow, PlotsError, SchemaMismatch
from .figures import AGGREGATE_COLUMNS, KINDS, FigureSpec, RenderResult, read_aggregate_csv, render
from .slopes import DEFAULT_FIT_WINDOW, loglog_slope

__version__ = "0.1.0"
