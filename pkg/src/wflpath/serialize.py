"""File formats used by the command line front end.

Instance files are JSON objects ``{"y": [...], "alpha": [...]}`` whose
entries are either JSON numbers or strings like ``"25/27"``.  Any
fraction string switches the default backend to rational (an explicit
``--backend`` wins).  Event logs are CSV with header
``gamma,index,kind,sign``, comma separated, LF line endings.  Rational
scalars serialize as ``p/q`` strings and floats with shortest
round-trip formatting, so every emitted file parses back losslessly.
"""

from __future__ import annotations

import csv
import json
from typing import Optional, TextIO

from .backends import Backend, F64, RATIONAL
from .core import EventKind, Instance, InvalidInstanceError, PathEvent

__all__ = ["load_instance", "dump_instance", "read_events_csv",
           "write_events_csv"]

EVENT_FIELDS = ("gamma", "index", "kind", "sign")


class _DecimalLiteral(str):
    """Marks a JSON number literal kept as text by the parse hook, as
    opposed to a quoted rational string."""


def _raw_values(data, key):
    if key not in data or not isinstance(data[key], list):
        raise InvalidInstanceError(f"instance file needs a {key!r} array")
    return data[key]


def load_instance(source, backend: Optional[Backend] = None) -> Instance:
    """Read an instance from a path or open file.

    Without an explicit backend: rational when any value is a quoted
    string (the rational wire format), float otherwise.  Decimal literals
    are kept as text until the backend is known, so ``0.1`` means one
    tenth on the rational backend rather than the nearest double.
    """
    if hasattr(source, "read"):
        data = json.load(source, parse_float=_DecimalLiteral)
    else:
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh, parse_float=_DecimalLiteral)
    if not isinstance(data, dict):
        raise InvalidInstanceError("instance file must hold a JSON object")
    y_raw = _raw_values(data, "y")
    alpha_raw = _raw_values(data, "alpha")
    if backend is None:
        rational = any(
            isinstance(v, str) and not isinstance(v, _DecimalLiteral)
            for v in (*y_raw, *alpha_raw))
        backend = RATIONAL if rational else F64
    return Instance.make(y_raw, alpha_raw, backend)


def dump_instance(inst: Instance, sink) -> None:
    """Write an instance as JSON (rational scalars become strings)."""
    if inst.backend.exact:
        payload = {"y": [inst.backend.format(v) for v in inst.y],
                   "alpha": [inst.backend.format(v) for v in inst.alpha]}
    else:
        payload = {"y": [float(v) for v in inst.y],
                   "alpha": [float(v) for v in inst.alpha]}
    text = json.dumps(payload, indent=2) + "\n"
    if hasattr(sink, "write"):
        sink.write(text)
    else:
        with open(sink, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def write_events_csv(events, backend: Backend, sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(EVENT_FIELDS)
    for ev in events:
        writer.writerow([backend.format(ev.gamma), ev.index,
                         ev.kind.value, ev.sign])


def read_events_csv(source: TextIO, backend: Backend) -> tuple:
    reader = csv.reader(source)
    header = next(reader, None)
    if header is None or tuple(header) != EVENT_FIELDS:
        raise ValueError(f"expected event CSV header {','.join(EVENT_FIELDS)}")
    events = []
    for row in reader:
        if not row:
            continue
        gamma, index, kind, sign = row
        events.append(PathEvent(backend.parse(gamma), int(index),
                                EventKind(kind), int(sign)))
    return tuple(events)
