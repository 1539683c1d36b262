"""Event spaces, exact distributions and sample sets shared by both samplers."""

from __future__ import annotations

import io
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError, DomainError, SizeError

NORM_TOL = 1e-9
CLAMP_TOL = 1e-15
ENUMERATION_CAP = 1_000_000


class OccupationSpace(Sequence):
    """All m-tuples of non-negative integers summing to n, in lexicographic order."""

    def __init__(self, m: int, n: int, cap: int = ENUMERATION_CAP):
        if m < 1 or n < 0:
            raise DomainError(f"need m >= 1 and n >= 0, got m={m}, n={n}")
        self.m, self.n = int(m), int(n)
        size = math.comb(m + n - 1, n)
        if size > cap:
            raise SizeError(
                f"event space for m={m}, n={n} has {size} events, above the enumeration cap {cap}; "
                "raise the cap or use sampling-free checks"
            )
        self.size = size
        self._occ = None
        self._events = None
        self._index = None

    @property
    def key(self) -> tuple:
        return ("occupation", self.m, self.n)

    @property
    def occupations(self) -> np.ndarray:
        """``(len, m)`` integer array of all events."""
        if self._occ is None:
            occ = np.zeros((self.size, self.m), dtype=np.int64)
            if self.n:
                modes = np.array(list(itertools.combinations_with_replacement(range(self.m), self.n)))
                np.add.at(occ, (np.repeat(np.arange(self.size), self.n), modes.ravel()), 1)
                occ = occ[np.lexsort(occ.T[::-1])]
            occ.setflags(write=False)
            self._occ = occ
        return self._occ

    @property
    def events(self) -> list[tuple[int, ...]]:
        if self._events is None:
            self._events = [tuple(row) for row in self.occupations.tolist()]
        return self._events

    def __len__(self) -> int:
        return self.size

    def __getitem__(self, i):
        return self.events[i]

    def index(self, event, *args) -> int:
        if self._index is None:
            self._index = {e: i for i, e in enumerate(self.events)}
        try:
            return self._index[tuple(int(x) for x in event)]
        except (KeyError, TypeError, ValueError):
            raise DataError(f"event {event!r} is not in the space m={self.m}, n={self.n}") from None

    def __contains__(self, event) -> bool:
        try:
            self.index(event)
        except DataError:
            return False
        return True

    @staticmethod
    def format(event) -> str:
        return "-".join(str(int(x)) for x in event)

    @staticmethod
    def parse(text: str) -> tuple[int, ...]:
        return tuple(int(x) for x in text.split("-"))


class BitStringSpace(Sequence):
    """All n-bit strings, qubit 0 first; index = big-endian integer value."""

    def __init__(self, n: int):
        if n < 1:
            raise DomainError(f"need n >= 1 qubits, got {n}")
        self.n = int(n)

    @property
    def key(self) -> tuple:
        return ("bits", self.n)

    def __len__(self) -> int:
        return 1 << self.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if not -len(self) <= i < len(self):
            raise IndexError(i)
        return format(i % len(self), f"0{self.n}b")

    def index(self, event, *args) -> int:
        if isinstance(event, str):
            bits = event
        else:
            bits = "".join(str(int(b)) for b in event)
        if len(bits) != self.n or set(bits) - {"0", "1"}:
            raise DataError(f"{event!r} is not a {self.n}-bit string")
        return int(bits, 2)

    def __contains__(self, event) -> bool:
        try:
            self.index(event)
        except DataError:
            return False
        return True

    @staticmethod
    def format(event) -> str:
        return event if isinstance(event, str) else "".join(str(int(b)) for b in event)

    @staticmethod
    def parse(text: str) -> str:
        return text


@dataclass(frozen=True, eq=False)
class Distribution:
    """Exact probability table over an event space."""

    space: Any
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.array(self.probabilities, dtype=float)
        if p.shape != (len(self.space),):
            raise DomainError(f"{p.size} probabilities for a space of {len(self.space)} events")
        low = float(p.min()) if p.size else 0.0
        if low < -CLAMP_TOL:
            raise DomainError(f"negative probability {low:.3e} below clamp tolerance")
        p[p < 0] = 0.0
        total = float(p.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1 within {NORM_TOL:g}")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)

    def __len__(self) -> int:
        return len(self.space)

    def __getitem__(self, event) -> float:
        return float(self.probabilities[self.space.index(event)])

    def items(self) -> Iterator[tuple[Any, float]]:
        for i, p in enumerate(self.probabilities):
            yield self.space[i], float(p)

    def as_dict(self) -> dict:
        return dict(self.items())

    def to_csv(self, header_lines: Iterable[str] = ()) -> str:
        buf = io.StringIO()
        for line in header_lines:
            buf.write(f"# {line}\n")
        buf.write("event,probability\n")
        fmt = self.space.format
        for i, p in enumerate(self.probabilities.tolist()):
            buf.write(f"{fmt(self.space[i])},{p!r}\n")
        return buf.getvalue()


@dataclass(eq=False)
class SampleSet:
    """A seeded stream of drawn events, stored as indices into ``space``."""

    space: Any
    indices: np.ndarray
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)

    @classmethod
    def from_events(cls, space, events: Iterable, seed: int | None = None, **meta) -> "SampleSet":
        idx = []
        for k, e in enumerate(events):
            try:
                idx.append(space.index(e))
            except DataError as exc:
                raise DataError(f"sample record {k}: {exc}") from None
        return cls(space, np.array(idx, dtype=np.int64), seed, dict(meta))

    def __len__(self) -> int:
        return int(self.indices.size)

    def __iter__(self):
        for i in self.indices.tolist():
            yield self.space[i]

    def events(self) -> list:
        return list(self)

    def counts(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=len(self.space))

    def to_jsonl(self, header: dict | None = None, as_string: bool = False) -> str:
        lines = []
        if header is not None:
            lines.append(json.dumps(header, sort_keys=True))
        for e in self:
            lines.append(json.dumps(self.space.format(e) if as_string else list(e)))
        return "\n".join(lines) + "\n"
