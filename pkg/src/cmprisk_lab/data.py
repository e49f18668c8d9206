"""Core data structures for right-censored competing-risk samples.

A subject is a (time, status) pair plus a covariate vector.  Status uses the
usual coding: 0 = censored, k in 1..K = failure from cause k.  Estimators in
the rest of the package consume the immutable :class:`Dataset` container and
return :class:`StepFunction` objects (right-continuous step functions).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class SchemaError(ValueError):
    """Raised when a CSV file does not match the declared column schema."""


class ValidationError(ValueError):
    """Raised when rows violate the (time > 0, status in 0..K) contract."""


@dataclass(frozen=True)
class SubjectRecord:
    """One observation: observed time, status code, covariate vector."""

    time: float
    status: int
    covariates: np.ndarray


def _readonly(a):
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Immutable sample of n subjects with p covariates and K event types.

    Parameters
    ----------
    times : array of observed times, all > 0
    status : integer array, 0 = censored, 1..K = event type
    X : (n, p) covariate matrix (p may be 0)
    covariate_names : tuple of p column names
    K : number of event types; inferred from max(status) when omitted
    """

    times: np.ndarray
    status: np.ndarray
    X: np.ndarray
    covariate_names: tuple = ()
    K: int = 0

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        status = np.asarray(self.status, dtype=int)
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(len(times), -1)
        if len(times) != len(status) or len(times) != X.shape[0]:
            raise ValidationError("times, status and X must have equal length")
        bad = np.flatnonzero(~(times > 0) | ~np.isfinite(times))
        if bad.size:
            raise ValidationError(
                "nonpositive or non-finite time in rows %s" % [int(i) + 1 for i in bad]
            )
        k = self.K if self.K else max(1, int(status.max(initial=0)))
        bad = np.flatnonzero((status < 0) | (status > k))
        if bad.size:
            raise ValidationError(
                "status outside 0..%d in rows %s" % (k, [int(i) + 1 for i in bad])
            )
        names = tuple(self.covariate_names) or tuple(
            "X%d" % (j + 1) for j in range(X.shape[1])
        )
        if len(names) != X.shape[1]:
            raise SchemaError("covariate_names length does not match X")
        object.__setattr__(self, "times", _readonly(times))
        object.__setattr__(self, "status", _readonly(status))
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "covariate_names", names)
        object.__setattr__(self, "K", k)

    @property
    def n(self):
        return len(self.times)

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def records(self):
        return [
            SubjectRecord(float(t), int(s), x)
            for t, s, x in zip(self.times, self.status, self.X)
        ]

    def subset(self, idx):
        """Row subset (indices may repeat, e.g. bootstrap bags).  K is kept."""
        idx = np.asarray(idx, dtype=int)
        return Dataset(
            self.times[idx], self.status[idx], self.X[idx],
            self.covariate_names, self.K,
        )


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function with jumps at strictly increasing times.

    ``f(t)`` returns the value attached to the largest jump time <= t, or
    ``value_before_first`` when t precedes every jump.  ``eval_left`` gives
    the left limit f(t-), i.e. uses strict inequality.
    """

    times: np.ndarray
    values: np.ndarray
    value_before_first: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0):
            raise ValueError("jump times must be strictly increasing and positive")
        if not np.all(np.isfinite(v)):
            raise ValueError("step values must be finite")
        object.__setattr__(self, "times", _readonly(t))
        object.__setattr__(self, "values", _readonly(v))

    def _eval(self, t, side):
        t = np.asarray(t, dtype=float)
        if not self.times.size:
            out = np.full(t.shape, self.value_before_first)
        else:
            idx = np.searchsorted(self.times, t, side=side) - 1
            out = np.where(idx >= 0, self.values[np.maximum(idx, 0)],
                           self.value_before_first)
        return float(out) if out.ndim == 0 else out

    def __call__(self, t):
        return self._eval(t, "right")

    def eval_left(self, t):
        """Left limit f(t-): value of the largest jump time strictly < t."""
        return self._eval(t, "left")

    def to_csv(self, path):
        """Serialize as a two-column (time, value) CSV."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "value"])
            for t, v in zip(self.times, self.values):
                w.writerow([repr(float(t)), repr(float(v))])


def _parse_time(raw, row):
    try:
        return float(raw)
    except (TypeError, ValueError):
        raise ValidationError("row %d: cannot parse time %r" % (row, raw)) from None


def _parse_status(raw, row):
    try:
        f = float(raw)
    except (TypeError, ValueError):
        raise ValidationError("row %d: cannot parse status %r" % (row, raw)) from None
    if f != int(f):
        raise ValidationError("row %d: status %r is not an integer code" % (row, raw))
    return int(f)


def load_csv(path, schema=None):
    """Read a competing-risk sample from CSV.

    ``schema`` is an optional mapping with keys ``time`` and ``status``
    (column names, default "time"/"status"), ``covariates`` (explicit column
    list; default: every remaining column in file order) and ``k`` (declared
    number of event types; default: inferred from the data).

    Malformed rows raise :class:`ValidationError` naming the 1-based data row;
    missing columns raise :class:`SchemaError`.
    """
    schema = dict(schema or {})
    time_col = schema.get("time", "time")
    status_col = schema.get("status", "status")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("%s: empty file" % path) from None
        header = [h.strip() for h in header]
        for col in (time_col, status_col):
            if col not in header:
                raise SchemaError("%s: missing required column %r" % (path, col))
        cov_cols = schema.get("covariates")
        if cov_cols is None:
            cov_cols = [h for h in header if h not in (time_col, status_col)]
        missing = [c for c in cov_cols if c not in header]
        if missing:
            raise SchemaError("%s: missing covariate columns %s" % (path, missing))
        ti, si = header.index(time_col), header.index(status_col)
        ci = [header.index(c) for c in cov_cols]
        times, status, rows = [], [], []
        for rownum, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ValidationError(
                    "row %d: expected %d fields, got %d" % (rownum, len(header), len(rec))
                )
            t = _parse_time(rec[ti], rownum)
            if not t > 0:
                raise ValidationError("row %d: time must be > 0, got %r" % (rownum, t))
            s = _parse_status(rec[si], rownum)
            if s < 0:
                raise ValidationError("row %d: negative status %d" % (rownum, s))
            times.append(t)
            status.append(s)
            try:
                rows.append([float(rec[j]) for j in ci])
            except ValueError:
                raise ValidationError("row %d: non-numeric covariate value" % rownum) from None
    status = np.asarray(status, dtype=int)
    k = schema.get("k")
    if k is not None:
        bad = np.flatnonzero(status > int(k))
        if bad.size:
            raise ValidationError(
                "status exceeds declared K=%d in rows %s" % (k, [int(i) + 1 for i in bad])
            )
    X = np.asarray(rows, dtype=float).reshape(len(times), len(cov_cols))
    return Dataset(np.asarray(times), status, X, tuple(cov_cols), int(k or 0))


def write_csv(dataset, path):
    """Inverse of :func:`load_csv` (round-trips exactly via repr floats)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "status", *dataset.covariate_names])
        for t, s, x in zip(dataset.times, dataset.status, dataset.X):
            w.writerow([repr(float(t)), int(s), *[repr(float(v)) for v in x]])


def risk_set(dataset, t):
    """0-based indices of subjects with observed time >= t."""
    return np.flatnonzero(dataset.times >= t)


def event_counts(dataset, t, k):
    """(d_k, d, Y) at time t: cause-k events, all events, number at risk."""
    at_t = dataset.times == t
    d_k = int(np.count_nonzero(at_t & (dataset.status == k)))
    d = int(np.count_nonzero(at_t & (dataset.status >= 1)))
    y = int(np.count_nonzero(dataset.times >= t))
    return d_k, d, y
