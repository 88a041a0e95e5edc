"""Canonical identity strings: the system's only public-key form."""

from __future__ import annotations

import datetime
from dataclasses import dataclass

from .errors import MalformedIdentity


def _epoch_ok(epoch: str) -> bool:
    # Epoch must parse as an unsigned integer ("20250101", "7") or an
    # ISO-8601 date ("2025-01-01").
    if epoch.isdigit():
        return True
    try:
        datetime.date.fromisoformat(epoch)
        return True
    except ValueError:
        return False


@dataclass(frozen=True)
class IdentityString:
    """Dot-separated identity whose final segment is a validity epoch.

    Colons are ordinary characters inside a segment, which is how role
    qualifiers such as ``kubelet:node-01`` are carried.
    """

    segments: tuple[str, ...]
    separator: str = "."

    def __post_init__(self) -> None:
        if len(self.separator) != 1:
            raise MalformedIdentity("separator must be a single character")
        if len(self.segments) < 2:
            raise MalformedIdentity("identity needs at least one name segment and an epoch")
        for seg in self.segments:
            if not seg:
                raise MalformedIdentity("empty identity segment")
            if self.separator in seg:
                raise MalformedIdentity(f"segment {seg!r} contains the separator")
        if not _epoch_ok(self.segments[-1]):
            raise MalformedIdentity(
                f"epoch {self.segments[-1]!r} is neither an unsigned integer nor an ISO date"
            )

    @classmethod
    def parse(cls, text: str, separator: str = ".") -> "IdentityString":
        return cls(tuple(text.split(separator)), separator)

    @property
    def canonical(self) -> str:
        return self.separator.join(self.segments)

    @property
    def epoch(self) -> str:
        return self.segments[-1]

    @property
    def base(self) -> str:
        """Identity without its epoch; the unit of revocation."""
        return self.separator.join(self.segments[:-1])

    def with_epoch(self, epoch: str) -> "IdentityString":
        return IdentityString(self.segments[:-1] + (epoch,), self.separator)

    def __str__(self) -> str:
        return self.canonical
