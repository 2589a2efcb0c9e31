from abc import ABC, abstractmethod
from typing import Any


class BaseLoader(ABC):
    """Abstract base class for profile ingestion implementations."""

    @abstractmethod
    def load(self, source: Any, **options) -> Any:
        """Reads a source and returns a validated, immutable profile model."""
        pass
