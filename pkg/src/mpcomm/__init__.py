"""Classical and quantum bounds for two-sender, one-receiver communication games."""

__version__ = "0.1.0"
