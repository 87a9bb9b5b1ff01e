"""fairdesk: a human-in-the-loop fairness investigation workbench for
tabular decision data."""

from .config import EngineConfig, load_config
from .data import DataTable, load_csv, synth_loans
from .session import Session
from .store import SessionStore

__version__ = "0.1.0"

__all__ = ["DataTable", "EngineConfig", "Session", "SessionStore",
           "load_config", "load_csv", "synth_loans", "__version__"]
