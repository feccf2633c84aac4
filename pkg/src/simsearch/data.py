"""Object model and text file formats for dense/sparse vectors and strings.

Data files are plain UTF-8/ASCII text, one object per line.  A line may start
with a class-label prefix ``label:<non-negative int>`` followed by whitespace;
the rest of the line is interpreted by the space that owns the data set.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Iterator

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .spaces.base import Space

NO_LABEL = -1

_LABEL_RE = re.compile(r"^label:(\d+)\s+")
_SEP_RE = re.compile(r"[,\s]+")


class DataFormatError(ValueError):
    """Malformed data file line."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


@dataclass(frozen=True)
class ObjectRecord:
    """One data point: an ordinal id, optional label, and an opaque payload.

    The payload is produced and interpreted only by the owning space (a dense
    vector, a sparse vector, a string, ...).  Records are immutable; numpy
    payloads are created with the writeable flag cleared.
    """

    id: int
    payload: object
    label: int = NO_LABEL
    extern_id: str = ""


class DataSet:
    """Ordered, immutable collection of records parsed under one space."""

    def __init__(self, records: list[ObjectRecord], space_name: str = "",
                 space_params: str = ""):
        self.records = records
        self.space_name = space_name
        self.space_params = space_params

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[ObjectRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> ObjectRecord:
        return self.records[i]

    def subset(self, ids: Iterable[int]) -> "DataSet":
        """New data set re-numbered 0..n-1 from the given record ids."""
        recs = [self.records[i] for i in ids]
        renum = [
            ObjectRecord(new_id, r.payload, r.label, r.extern_id)
            for new_id, r in enumerate(recs)
        ]
        return DataSet(renum, self.space_name, self.space_params)


def split_label(line: str) -> tuple[int, str]:
    """Strip an optional ``label:<int>`` prefix, returning (label, rest)."""
    m = _LABEL_RE.match(line)
    if m:
        return int(m.group(1)), line[m.end():]
    return NO_LABEL, line


def parse_dense_line(line: str, line_no: int | None = None) -> tuple[int, list[float]]:
    """Parse one dense-vector row: optional label prefix, then real values
    separated by spaces or commas."""
    label, rest = split_label(line.strip())
    tokens = [t for t in _SEP_RE.split(rest.strip()) if t]
    if not tokens:
        raise DataFormatError("empty value list", line_no)
    try:
        values = [float(t) for t in tokens]
    except ValueError as exc:
        raise DataFormatError(f"malformed number: {exc}", line_no) from None
    return label, values


def parse_sparse_line(line: str, line_no: int | None = None
                      ) -> tuple[int, list[tuple[int, float]]]:
    """Parse one sparse-vector row of (element id, value) pairs.

    Ids are zero-based, may arrive unsorted, and must not repeat; the result
    is sorted by id ascending.  Unspecified elements default to zero.
    """
    label, rest = split_label(line.strip())
    tokens = [t for t in _SEP_RE.split(rest.strip()) if t]
    if not tokens:
        raise DataFormatError("empty value list", line_no)
    if len(tokens) % 2 != 0:
        raise DataFormatError(
            f"odd token count {len(tokens)}: sparse rows are id/value pairs", line_no)
    pairs = []
    seen = set()
    for i in range(0, len(tokens), 2):
        try:
            elem_id = int(tokens[i])
            value = float(tokens[i + 1])
        except ValueError as exc:
            raise DataFormatError(f"malformed number: {exc}", line_no) from None
        if elem_id < 0:
            raise DataFormatError(f"negative element id {elem_id}", line_no)
        if elem_id in seen:
            raise DataFormatError(f"repeated element id {elem_id}", line_no)
        seen.add(elem_id)
        pairs.append((elem_id, value))
    pairs.sort(key=lambda p: p[0])
    return label, pairs


def read_dataset(path, space: "Space", max_num_data: int = 0) -> DataSet:
    """Read at most ``max_num_data`` objects (all when 0) under ``space``.

    Any line-level parse failure aborts with the offending line number.
    """
    records: list[ObjectRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n").rstrip()
            if not line:
                continue
            if max_num_data and len(records) >= max_num_data:
                break
            try:
                label, payload = space.parse_line(line)
            except DataFormatError as exc:
                if exc.line_no is None:
                    raise DataFormatError(str(exc), line_no) from None
                raise
            records.append(ObjectRecord(len(records), payload, label))
    return DataSet(records, space.name, space.param_text)


def write_dataset(path, dataset: DataSet, space: "Space") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in dataset:
            text = space.format_payload(rec.payload)
            if rec.label != NO_LABEL:
                fh.write(f"label:{rec.label} ")
            fh.write(text)
            fh.write("\n")
