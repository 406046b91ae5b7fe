"""Case-level survey data with an outcome missingness mask.

CSV schema (header required, column order free)::

    x1,x2,y,source,p_s

``source`` is ``prob`` or ``conv``; an empty ``y`` field marks a missing
outcome.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, MaskError

PROB = 0
CONV = 1
SOURCE_LABELS = {"prob": PROB, "conv": CONV}
_LABEL_OF = {PROB: "prob", CONV: "conv"}
CSV_COLUMNS = ("x1", "x2", "y", "source", "p_s")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class DataMatrix:
    """Immutable column store.

    ``case_id`` and ``dup`` give every row a stable identity: the source row
    it came from and, for bootstrap duplicates, which copy it is.  Random
    draws are consumed in ``(case_id, dup)`` order so results do not depend
    on storage order.
    """

    x1: np.ndarray
    x2: np.ndarray
    y: np.ndarray
    y_observed: np.ndarray
    source: np.ndarray
    p_s: np.ndarray
    case_id: np.ndarray = field(default=None)
    dup: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.x1)
        set_ = object.__setattr__
        set_(self, "x1", _frozen(self.x1, np.float64))
        set_(self, "x2", _frozen(self.x2, np.float64))
        y_observed = _frozen(self.y_observed, bool)
        set_(self, "y", _frozen(self.y, np.int8))
        set_(self, "y_observed", y_observed)
        set_(self, "source", _frozen(self.source, np.int8))
        set_(self, "p_s", _frozen(self.p_s, np.float64))
        set_(self, "case_id", _frozen(np.arange(n) if self.case_id is None else self.case_id, np.int64))
        set_(self, "dup", _frozen(np.zeros(n) if self.dup is None else self.dup, np.int64))
        for name in ("x2", "y", "y_observed", "source", "p_s", "case_id", "dup"):
            if len(getattr(self, name)) != n:
                raise InputError(f"column {name} has length {len(getattr(self, name))}, expected {n}")
        if not np.isin(self.source, (PROB, CONV)).all():
            raise InputError("source codes must be PROB (0) or CONV (1)")
        if not np.isin(self.y, (0, 1)).all():
            raise InputError("y must be binary")

    @property
    def n(self) -> int:
        return len(self.x1)

    @property
    def n_missing(self) -> int:
        return int(self.n - np.count_nonzero(self.y_observed))

    @property
    def is_conv(self) -> np.ndarray:
        return self.source == CONV

    def observed_y(self) -> np.ndarray:
        """The outcome vector; refuses to hand out masked entries."""
        if not self.y_observed.all():
            raise MaskError(f"{self.n_missing} outcome values are missing; impute before estimating")
        return self.y

    def take(self, idx) -> DataMatrix:
        """Rows ``idx`` in order; repeated rows become distinct cases.

        Each repeat of a case gets the next free ``dup`` counter so that
        copies keep distinct identities.
        """
        idx = np.asarray(idx, dtype=np.int64)
        case_id = self.case_id[idx]
        dup = self.dup[idx].copy()
        if len(idx):
            order = np.lexsort((np.arange(len(idx)), dup, case_id))
            cid_s, dup_s = case_id[order], dup[order]
            new_block = np.ones(len(idx), dtype=bool)
            new_block[1:] = (cid_s[1:] != cid_s[:-1]) | (dup_s[1:] != dup_s[:-1])
            starts = np.flatnonzero(new_block)
            run = np.arange(len(idx)) - np.repeat(starts, np.diff(np.append(starts, len(idx))))
            # a base dup counter d repeated r times becomes d*K, ..., d*K + r - 1
            stride = max(int(run.max()) + 1, 1)
            dup[order] = dup_s * stride + run
        return DataMatrix(
            x1=self.x1[idx], x2=self.x2[idx], y=self.y[idx], y_observed=self.y_observed[idx],
            source=self.source[idx], p_s=self.p_s[idx], case_id=case_id, dup=dup,
        )

    def with_mask(self, y_observed) -> DataMatrix:
        return DataMatrix(
            x1=self.x1, x2=self.x2, y=self.y, y_observed=np.asarray(y_observed, bool) & self.y_observed,
            source=self.source, p_s=self.p_s, case_id=self.case_id, dup=self.dup,
        )

    def identity_order(self) -> np.ndarray:
        """Row indices sorted by stable case identity."""
        return np.lexsort((self.dup, self.case_id))

    def same_as(self, other: DataMatrix) -> bool:
        """Equality of the public columns; masked outcomes are not compared."""
        if self.n != other.n:
            return False
        same = all(
            np.array_equal(getattr(self, c), getattr(other, c))
            for c in ("x1", "x2", "y_observed", "source", "p_s")
        )
        return same and np.array_equal(self.y[self.y_observed], other.y[other.y_observed])


@dataclass(frozen=True, eq=False)
class CompletedDataset:
    """A DataMatrix together with one filled-in outcome vector."""

    base: DataMatrix
    y_filled: np.ndarray

    def __post_init__(self):
        y_filled = _frozen(self.y_filled, np.int8)
        if len(y_filled) != self.base.n:
            raise InputError("y_filled length does not match the base data")
        obs = self.base.y_observed
        if not np.array_equal(y_filled[obs], self.base.y[obs]):
            raise InputError("completed outcome disagrees with an observed value")
        object.__setattr__(self, "y_filled", y_filled)


def empty_data() -> DataMatrix:
    return DataMatrix(x1=[], x2=[], y=[], y_observed=[], source=[], p_s=[])


def _parse_float(text, name, row):
    try:
        value = float(text)
    except ValueError:
        raise InputError(f"{name}={text!r} is not a number", row=row) from None
    if not math.isfinite(value):
        raise InputError(f"{name}={text!r} is not finite", row=row)
    return value


def read_csv(path) -> DataMatrix:
    """Parse a ``x1,x2,y,source,p_s`` file.  Errors name the 1-based data row."""
    x1, x2, y, obs, source, p_s = [], [], [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise InputError(f"missing column(s) {', '.join(missing)} in header")
        for row_no, rec in enumerate(reader, start=1):
            if None in rec or any(rec[c] is None for c in CSV_COLUMNS):
                raise InputError("wrong number of fields", row=row_no)
            x1.append(_parse_float(rec["x1"], "x1", row_no))
            x2.append(_parse_float(rec["x2"], "x2", row_no))
            y_text = rec["y"].strip()
            if y_text == "":
                y.append(0)
                obs.append(False)
            elif y_text in ("0", "1"):
                y.append(int(y_text))
                obs.append(True)
            else:
                raise InputError(f"y={y_text!r} must be 0, 1 or empty", row=row_no)
            label = rec["source"].strip()
            if label not in SOURCE_LABELS:
                raise InputError(f"unknown source label {label!r} (expected prob or conv)", row=row_no)
            source.append(SOURCE_LABELS[label])
            p = _parse_float(rec["p_s"], "p_s", row_no)
            if not 0.0 < p <= 1.0:
                raise InputError(f"p_s={p} outside (0, 1]", row=row_no)
            p_s.append(p)
    return DataMatrix(x1=x1, x2=x2, y=y, y_observed=obs, source=source, p_s=p_s)


def write_csv(data: DataMatrix, path) -> None:
    """Write the schema accepted by :func:`read_csv`; masked y as an empty field."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for i in range(data.n):
            writer.writerow((
                repr(float(data.x1[i])),
                repr(float(data.x2[i])),
                str(int(data.y[i])) if data.y_observed[i] else "",
                _LABEL_OF[int(data.source[i])],
                repr(float(data.p_s[i])),
            ))
