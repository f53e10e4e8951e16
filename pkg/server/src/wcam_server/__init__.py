"""Out-of-process scoring service for the attribution toolkit."""

__version__ = "0.1.0"

from .app import create_app
from .models import load_model

__all__ = ["__version__", "create_app", "load_model"]
