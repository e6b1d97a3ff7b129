"""pnflow: numerical laboratory for fractional Peierls-Nabarro dynamics."""

__version__ = "0.1.0"
