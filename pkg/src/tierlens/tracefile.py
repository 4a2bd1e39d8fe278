"""Portable line-oriented trace format.

Canonical layout, one event per line, tab-separated:

    event_id  rank  node  function  category  interface  file  start  end  bytes  offset

The first line must be ``#tierlens-trace v1``. Later lines starting with
``#`` are comments. Absent fields are written as ``-``; ``start``/``end``
are decimal seconds with exactly nine fractional digits. Encoding is
UTF-8 with LF line terminators. When the category or interface field is
``-`` it is derived from the function name via the classification table.
"""

from __future__ import annotations

import io
from pathlib import Path
from typing import IO, Iterable

from .events import Category, Interface, TraceEvent
from .iofunctions import classify_function

TRACE_HEADER = "#tierlens-trace v1"
_NUM_FIELDS = 11


class TraceFormatError(ValueError):
    """A trace document violates the format contract."""


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise TraceFormatError(f"line {lineno}: {what} is not an integer: {text!r}")
    if value < 0:
        raise TraceFormatError(f"line {lineno}: {what} is negative: {value}")
    return value


def _parse_opt_int(text: str, what: str, lineno: int) -> int | None:
    return None if text == "-" else _parse_int(text, what, lineno)


def _parse_time(text: str, what: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise TraceFormatError(f"line {lineno}: {what} is not a number: {text!r}")
    if value < 0:
        raise TraceFormatError(f"line {lineno}: {what} is negative: {value}")
    return value


def parse_trace(source: str | IO[str] | Iterable[str]) -> list[TraceEvent]:
    """Parse a trace document into events, in file order.

    ``source`` may be a string, an open text stream, or an iterable of
    lines. Raises TraceFormatError with the offending line number for
    malformed records, duplicated event ids, and negative durations.
    """
    if isinstance(source, str):
        lines: Iterable[str] = io.StringIO(source)
    else:
        lines = source

    events: list[TraceEvent] = []
    seen_ids: set[int] = set()
    header_seen = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            continue
        if not header_seen:
            if line != TRACE_HEADER:
                raise TraceFormatError(
                    f"line {lineno}: missing header {TRACE_HEADER!r}"
                )
            header_seen = True
            continue
        if line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != _NUM_FIELDS:
            raise TraceFormatError(
                f"line {lineno}: expected {_NUM_FIELDS} tab-separated fields, "
                f"got {len(fields)}"
            )
        (f_id, f_rank, f_node, f_fn, f_cat, f_iface, f_file, f_start, f_end,
         f_bytes, f_offset) = fields

        event_id = _parse_int(f_id, "event_id", lineno)
        if event_id in seen_ids:
            raise TraceFormatError(f"line {lineno}: duplicate event_id {event_id}")
        seen_ids.add(event_id)
        rank = _parse_int(f_rank, "rank", lineno)
        node = _parse_int(f_node, "node", lineno)
        if not f_fn or f_fn == "-":
            raise TraceFormatError(f"line {lineno}: empty function name")

        if f_cat == "-" or f_iface == "-":
            derived_cat, derived_iface = classify_function(f_fn)
        if f_cat == "-":
            category = derived_cat
        else:
            try:
                category = Category(f_cat)
            except ValueError:
                raise TraceFormatError(f"line {lineno}: unknown category {f_cat!r}")
        if f_iface == "-":
            interface = derived_iface
        else:
            try:
                interface = Interface(f_iface)
            except ValueError:
                raise TraceFormatError(f"line {lineno}: unknown interface {f_iface!r}")

        start = _parse_time(f_start, "start", lineno)
        end = _parse_time(f_end, "end", lineno)
        if end < start:
            raise TraceFormatError(f"negative duration at line {lineno}")

        events.append(
            TraceEvent(
                event_id=event_id,
                rank=rank,
                node=node,
                function=f_fn,
                category=category,
                interface=interface,
                file=None if f_file == "-" else f_file,
                start=start,
                end=end,
                bytes=_parse_opt_int(f_bytes, "bytes", lineno),
                offset=_parse_opt_int(f_offset, "offset", lineno),
            )
        )
    return events


def format_event(ev: TraceEvent) -> str:
    """One canonical trace line for an event (no terminator)."""
    return "\t".join(
        (
            str(ev.event_id),
            str(ev.rank),
            str(ev.node),
            ev.function,
            ev.category.value,
            ev.interface.value,
            "-" if ev.file is None else ev.file,
            f"{ev.start:.9f}",
            f"{ev.end:.9f}",
            "-" if ev.bytes is None else str(ev.bytes),
            "-" if ev.offset is None else str(ev.offset),
        )
    )


def write_trace(events: Iterable[TraceEvent]) -> str:
    """Render events as a canonical trace document."""
    out = [TRACE_HEADER]
    out.extend(format_event(ev) for ev in events)
    return "\n".join(out) + "\n"


def load_trace(path: str | Path) -> list[TraceEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_trace(fh)


def save_trace(events: Iterable[TraceEvent], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_trace(events))
