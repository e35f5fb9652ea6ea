"""Cross-sample cell developmental trajectory prediction and exploration."""

__version__ = "0.1.0"
