"""Read-only figure rendering for pnflow CSV and manifest outputs."""

__version__ = "0.1.0"
