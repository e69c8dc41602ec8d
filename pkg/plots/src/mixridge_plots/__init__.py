"""Figure renderer for mixridge sweep CSVs; coupled to the producer only
through the documented column contract."""

from .figures import FIGURE_KINDS, plot_demo, plot_lambda, plot_phase, plot_regimes
from .schema import SchemaMismatch, columns_for, read_rows

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "plot_regimes",
    "plot_lambda",
    "plot_phase",
    "plot_demo",
    "SchemaMismatch",
    "columns_for",
    "read_rows",
    "__version__",
]
