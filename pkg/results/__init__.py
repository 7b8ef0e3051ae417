"""
Results package - report tables, long-format plot data and the CSV/JSON
writer for experiment runs
"""

from .report import PLOT_COLUMNS, ExperimentReport, Table
from .writer import ResultWriter, format_cell

__all__ = ['Table', 'ExperimentReport', 'ResultWriter', 'PLOT_COLUMNS', 'format_cell']
