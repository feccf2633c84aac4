"""Comma-separated parameter maps shared by spaces, methods, and the CLI.

Parameters travel as ``name=value`` pairs (no whitespace), e.g.
``bucketSize=10,chunkBucket=1``.  Every consumer claims the entries it
understands; leftover entries are reported as errors so that misspelled
parameter names never pass silently.
"""
from __future__ import annotations

from typing import Iterable, Mapping


class ParamError(ValueError):
    """Malformed, missing, or unclaimed parameter."""


_BOOL_VALUES = {"0": False, "1": True}


class ParamMap:
    """Mutable view over ``name=value`` parameters with claim tracking."""

    def __init__(self, entries: Mapping[str, str] | None = None):
        self._entries: dict[str, str] = {}
        self._claimed: set[str] = set()
        if entries:
            for name, value in entries.items():
                self._set(name, str(value))

    @classmethod
    def parse(cls, text: str) -> "ParamMap":
        """Parse a comma-separated ``name=value`` list (no spaces)."""
        pm = cls()
        text = text.strip()
        if not text:
            return pm
        for chunk in text.split(","):
            if not chunk:
                raise ParamError(f"empty parameter entry in {text!r}")
            name, sep, value = chunk.partition("=")
            if not sep or not name:
                raise ParamError(f"expected name=value, got {chunk!r}")
            pm._set(name, value)
        return pm

    def _set(self, name: str, value: str) -> None:
        if any(c.isspace() for c in name):
            raise ParamError(f"parameter name {name!r} contains whitespace")
        if name in self._entries:
            raise ParamError(f"duplicate parameter {name!r}")
        self._entries[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> Iterable[str]:
        return self._entries.keys()

    def copy(self) -> "ParamMap":
        pm = ParamMap(self._entries)
        return pm

    def get(self, name: str, kind: str = "text", required: bool = False, default=None):
        """Fetch and claim one parameter, converting to ``kind``.

        ``kind`` is one of ``int``, ``real``, ``bool``, ``text``.  A required
        parameter must be present; an optional one falls back to ``default``.
        Booleans accept only "0" or "1".
        """
        if required and default is not None:
            raise ParamError(f"required parameter {name!r} cannot carry a default")
        if name not in self._entries:
            if required:
                raise ParamError(f"missing required parameter {name!r}")
            return default
        self._claimed.add(name)
        raw = self._entries[name]
        try:
            if kind == "int":
                return int(raw)
            if kind == "real":
                return float(raw)
            if kind == "bool":
                if raw not in _BOOL_VALUES:
                    raise ValueError(raw)
                return _BOOL_VALUES[raw]
            if kind == "text":
                return raw
        except ValueError:
            raise ParamError(
                f"parameter {name!r}: cannot convert {raw!r} to {kind}"
            ) from None
        raise ParamError(f"unknown parameter kind {kind!r}")

    def unclaimed(self) -> list[str]:
        return sorted(set(self._entries) - self._claimed)

    def remaining_dict(self) -> dict[str, str]:
        """Unclaimed entries as a plain dict (for forwarding to a consumer)."""
        return {k: v for k, v in self._entries.items() if k not in self._claimed}

    def claim_all(self) -> None:
        """Mark every entry claimed (the map was forwarded wholesale)."""
        self._claimed.update(self._entries)

    def check_unused(self) -> None:
        """Raise if any entry was never claimed by a consumer."""
        left = self.unclaimed()
        if left:
            raise ParamError(f"unclaimed parameters: {', '.join(left)}")

    def __repr__(self) -> str:
        body = ",".join(f"{k}={v}" for k, v in self._entries.items())
        return f"ParamMap({body!r})"
