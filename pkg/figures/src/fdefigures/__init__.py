"""Figure scripts for fdelab CSV/JSON outputs."""

from .io import SchemaMismatch, read_csv, read_params_json
from .plots import RENDERERS, render

__version__ = "0.1.0"
