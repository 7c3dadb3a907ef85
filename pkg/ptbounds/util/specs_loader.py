from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from ptbounds.errors import PreconditionError

DEFAULT_CLAIMS = Path(__file__).with_name("claims.yaml")


class ClaimSpecs:
    """Verification claims and their default campaign parameters."""

    def __init__(self, path: Optional[str] = None):
        self.path = Path(path) if path else DEFAULT_CLAIMS
        self._data = self._load()

    def _load(self) -> Dict[str, Any]:
        with self.path.open("r", encoding="utf-8") as f:
            return yaml.safe_load(f) or {}

    @property
    def claims(self) -> List[Dict[str, Any]]:
        return self._data.get("claims", [])

    def names(self) -> List[str]:
        return [c["name"] for c in self.claims]

    def claim(self, name: str) -> Dict[str, Any]:
        for c in self.claims:
            if c["name"] == name:
                return c
        raise PreconditionError(f"unknown claim id {name!r}; known: {', '.join(self.names())}")

    def default_shapes(self, name: str) -> List[str]:
        return list(self.claim(name).get("shapes", []))

    def default_trials(self, name: str) -> int:
        return int(self.claim(name).get("trials", 100))
