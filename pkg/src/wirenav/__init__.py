"""Real-time guidewire navigation simulator and learning harness."""

__version__ = "0.1.0"
