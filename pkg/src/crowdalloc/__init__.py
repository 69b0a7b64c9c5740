"""Worker allocation policies for crowdsourced binary classification."""

__version__ = "0.1.0"
