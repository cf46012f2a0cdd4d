"""CSV formats for predictions and label marginals, JSON for reports.

Prediction files have a header ``s_0,...,s_{k-1}`` optionally followed by
``label``; marginal files have the header ``class,mass`` with classes
``0..k-1`` in order. Floats are written with ``repr`` so files round-trip
exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

import numpy as np

from .core import MARGINAL_ATOL, PROB_ATOL, Kind, LabelMarginal, PredictionSet

PathLike = Union[str, Path]


class ParseError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line: Optional[int], msg: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {msg}")
        self.path = str(path)
        self.line = line


def _float(text: str, path, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"non-finite value {text!r}")
    return value


def _read_rows(path: PathLike):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh))]
    except UnicodeDecodeError as exc:
        raise ParseError(path, None, f"not UTF-8 text ({exc.reason})") from None
    rows = [(line, row) for line, row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise ParseError(path, None, "file is empty")
    return rows


def parse_predictions(path: PathLike, kind: Kind) -> PredictionSet:
    """Read a prediction CSV; ``kind`` comes from the caller, never from the data."""
    kind = Kind(kind)
    rows = _read_rows(path)
    header_line, header = rows[0]
    header = [h.strip() for h in header]
    has_label = header[-1] == "label"
    score_cols = header[:-1] if has_label else header
    expected = [f"s_{j}" for j in range(len(score_cols))]
    if score_cols != expected or len(score_cols) < 2:
        raise ParseError(
            path, header_line, "missing or malformed header; expected s_0,...,s_{k-1}[,label]"
        )
    k = len(score_cols)
    width = len(header)
    if len(rows) < 2:
        raise ParseError(path, None, "no data rows")

    scores = np.empty((len(rows) - 1, k))
    labels = np.empty(len(rows) - 1, dtype=np.int64) if has_label else None
    for r, (line, row) in enumerate(rows[1:]):
        if len(row) != width:
            raise ParseError(path, line, f"expected {width} fields, found {len(row)}")
        for j in range(k):
            scores[r, j] = _float(row[j], path, line)
        if kind is Kind.PROBABILITIES:
            if scores[r].min() < 0.0 or scores[r].max() > 1.0:
                raise ParseError(path, line, "probability outside [0, 1]")
            total = math.fsum(scores[r])
            if abs(total - 1.0) > PROB_ATOL:
                raise ParseError(path, line, f"probabilities sum to {total!r}, not 1")
        if has_label:
            text = row[k].strip()
            try:
                label = int(text)
            except ValueError:
                raise ParseError(path, line, f"label {text!r} is not an integer") from None
            if not 0 <= label < k:
                raise ParseError(path, line, f"label {label} outside [0, {k})")
            labels[r] = label
    return PredictionSet(scores, kind, labels)


def format_predictions(p: PredictionSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = [f"s_{j}" for j in range(p.k)]
    if p.labels is not None:
        header.append("label")
    writer.writerow(header)
    for i in range(p.n):
        row = [repr(float(v)) for v in p.scores[i]]
        if p.labels is not None:
            row.append(str(int(p.labels[i])))
        writer.writerow(row)
    return buf.getvalue()


def parse_marginal(path: PathLike) -> LabelMarginal:
    rows = _read_rows(path)
    header_line, header = rows[0]
    if [h.strip() for h in header] != ["class", "mass"]:
        raise ParseError(path, header_line, "missing or malformed header; expected class,mass")
    mass = []
    for line, row in rows[1:]:
        if len(row) != 2:
            raise ParseError(path, line, f"expected 2 fields, found {len(row)}")
        try:
            cls = int(row[0].strip())
        except ValueError:
            raise ParseError(path, line, f"class {row[0]!r} is not an integer") from None
        if cls != len(mass):
            raise ParseError(path, line, f"expected class {len(mass)}, found {cls}")
        value = _float(row[1], path, line)
        if value < 0:
            raise ParseError(path, line, "mass must be non-negative")
        mass.append(value)
    if not mass:
        raise ParseError(path, None, "no data rows")
    total = math.fsum(mass)
    if abs(total - 1.0) > MARGINAL_ATOL:
        raise ParseError(path, None, f"masses sum to {total!r}, not 1")
    return LabelMarginal(np.array(mass))


def format_marginal(m: LabelMarginal) -> str:
    lines = ["class,mass"]
    lines += [f"{c},{float(v)!r}" for c, v in enumerate(m.mass)]
    return "\n".join(lines) + "\n"


def format_rows_csv(header: Iterable[str], rows: Iterable[dict]) -> str:
    header = list(header)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(row[h]) if isinstance(row[h], float) else row[h] for h in header])
    return buf.getvalue()


def to_json(obj: dict) -> str:
    return json.dumps(obj, allow_nan=False) + "\n"


def write_text(text: str, dest: Optional[PathLike], stdout: TextIO) -> None:
    if dest is None or str(dest) == "-":
        stdout.write(text)
    else:
        Path(dest).write_text(text, encoding="utf-8")
