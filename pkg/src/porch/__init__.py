"""Self-hosted edge/cloud video analytics at desk scale."""

__version__ = "0.1.0"
