"""Feature datasets: I/O, synthetic generation and per-episode transformation."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"FSFT"
VERSION = 1
DEGENERATE_NORM = 1e-12

_HEADER = struct.Struct("<4sHIIQ")


class FeatureFormatError(ValueError):
    """Raised for malformed feature files (bad header, wrong row width)."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class FeatureDataError(ValueError):
    """Raised for invalid values (non-finite entries, empty classes)."""


class DegenerateFeatureError(ValueError):
    """Raised when a centered feature vector has (numerically) zero norm."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class FeatureDataset:
    """Labeled feature vectors.

    ``features`` is an ``(R, D)`` float64 array and ``labels`` an ``(R,)``
    integer array indexing into ``classes``.
    """

    classes: tuple[str, ...]
    labels: np.ndarray
    features: np.ndarray
    _by_class: tuple[np.ndarray, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        features = np.asarray(self.features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] < 1:
            raise FeatureDataError("features must be a 2-D array with at least one column")
        if labels.shape != (features.shape[0],):
            raise FeatureDataError("labels and features disagree on the record count")
        if not np.all(np.isfinite(features)):
            row = int(np.argwhere(~np.isfinite(features))[0, 0])
            raise FeatureDataError(f"non-finite feature value in record {row}")
        n_classes = len(self.classes)
        if n_classes == 0:
            raise FeatureDataError("dataset declares no classes")
        if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
            raise FeatureDataError("class index out of range")
        counts = np.bincount(labels, minlength=n_classes)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise FeatureDataError(f"class {self.classes[empty[0]]!r} has no records")
        labels.flags.writeable = False
        features.flags.writeable = False
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "features", features)
        by_class = tuple(np.flatnonzero(labels == c) for c in range(n_classes))
        object.__setattr__(self, "_by_class", by_class)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def __len__(self) -> int:
        return self.features.shape[0]

    def indices_of(self, class_index: int) -> np.ndarray:
        """Record indices belonging to ``class_index``, in file order."""
        return self._by_class[class_index]

    def __eq__(self, other):
        if not isinstance(other, FeatureDataset):
            return NotImplemented
        return (
            self.classes == other.classes
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )

    __hash__ = None


@dataclass(frozen=True)
class Episode:
    """One N-way K-shot task.

    Labels are remapped to ``0..N-1``; ``class_map[c]`` is the original
    dataset class index of remapped class ``c``.  Support rows are grouped
    by class (K per class), query rows likewise (Q per class).
    """

    n_way: int
    k_shot: int
    q_query: int
    support_x: np.ndarray
    support_y: np.ndarray
    query_x: np.ndarray
    query_y: np.ndarray
    class_map: tuple[int, ...]
    support_ids: np.ndarray | None = None
    query_ids: np.ndarray | None = None

    @property
    def nk(self) -> int:
        return self.support_x.shape[0]

    @property
    def nq(self) -> int:
        return self.query_x.shape[0]

    def points(self) -> np.ndarray:
        """All M = NK + NQ vectors, support first."""
        return np.vstack([self.support_x, self.query_x])


def _check_format(fmt: str) -> str:
    if fmt not in ("binary", "csv"):
        raise ValueError(f"unknown feature format {fmt!r}; expected 'binary' or 'csv'")
    return fmt


def load_dataset(path, format: str = "binary") -> FeatureDataset:
    """Read a feature file written in the binary or CSV layout."""
    _check_format(format)
    path = Path(path)
    if format == "binary":
        return _load_binary(path)
    return _load_csv(path)


def write_dataset(dataset: FeatureDataset, path, format: str = "binary") -> None:
    _check_format(format)
    path = Path(path)
    if format == "binary":
        _write_binary(dataset, path)
    else:
        _write_csv(dataset, path)


def _write_binary(d: FeatureDataset, path: Path) -> None:
    dim, n = d.dim, len(d)
    record = np.empty(n, dtype=np.dtype([("label", "<u4"), ("x", "<f8", (dim,))]))
    record["label"] = d.labels
    record["x"] = d.features
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, dim, d.n_classes, n))
        for name in d.classes:
            raw = name.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise FeatureDataError(f"class name too long: {name[:20]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(record.tobytes())


def _load_binary(path: Path) -> FeatureDataset:
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        raise FeatureFormatError("file too short for header")
    magic, version, dim, n_classes, n_records = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise FeatureFormatError(f"bad magic {magic!r}")
    if version != VERSION:
        raise FeatureFormatError(f"unsupported version {version}")
    if dim < 1:
        raise FeatureFormatError("dimension must be positive")
    offset = _HEADER.size
    classes = []
    for _ in range(n_classes):
        if offset + 2 > len(blob):
            raise FeatureFormatError("truncated class-name table")
        (length,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        raw = blob[offset : offset + length]
        if len(raw) != length:
            raise FeatureFormatError("truncated class-name table")
        classes.append(raw.decode("utf-8"))
        offset += length
    dtype = np.dtype([("label", "<u4"), ("x", "<f8", (dim,))])
    expected = n_records * dtype.itemsize
    body = blob[offset:]
    if len(body) != expected:
        complete = len(body) // dtype.itemsize
        raise FeatureFormatError(
            f"record {complete}: expected {n_records} records of {dtype.itemsize} bytes, "
            f"found {len(body)} bytes",
            row=complete,
        )
    record = np.frombuffer(body, dtype=dtype)
    labels = record["label"].astype(np.int64)
    features = record["x"].astype(np.float64)
    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise FeatureFormatError(f"record {bad[0]}: class index {labels[bad[0]]} out of range", row=int(bad[0]))
    bad = np.flatnonzero(~np.all(np.isfinite(features), axis=1))
    if bad.size:
        raise FeatureDataError(f"record {bad[0]}: non-finite feature value")
    return FeatureDataset(tuple(classes), labels, features)


def _write_csv(d: FeatureDataset, path: Path) -> None:
    for name in d.classes:
        if "," in name or "\n" in name:
            raise FeatureDataError(f"class name {name!r} cannot be stored in CSV")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["label"] + [f"f{j}" for j in range(d.dim)]) + "\n")
        for label, row in zip(d.labels, d.features):
            # repr round-trips doubles exactly
            fh.write(",".join([d.classes[label]] + [repr(float(v)) for v in row]) + "\n")


def _load_csv(path: Path) -> FeatureDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FeatureFormatError("empty CSV file") from None
        dim = len(header) - 1
        if dim < 1 or header[0] != "label" or header[1:] != [f"f{j}" for j in range(dim)]:
            raise FeatureFormatError("CSV header must be 'label,f0,...,f{D-1}'")
        classes: dict[str, int] = {}
        labels, rows = [], []
        for i, fields in enumerate(reader, start=1):
            if not fields:
                continue
            if len(fields) != dim + 1:
                raise FeatureFormatError(
                    f"row {i}: expected {dim} feature values, found {len(fields) - 1}", row=i
                )
            try:
                values = [float(v) for v in fields[1:]]
            except ValueError as exc:
                raise FeatureFormatError(f"row {i}: {exc}", row=i) from None
            if not all(np.isfinite(values)):
                raise FeatureDataError(f"row {i}: non-finite feature value")
            labels.append(classes.setdefault(fields[0], len(classes)))
            rows.append(values)
    if not rows:
        raise FeatureDataError("CSV file contains no records")
    return FeatureDataset(tuple(classes), np.array(labels), np.array(rows, dtype=np.float64))


def transform_episode(episode: Episode) -> Episode:
    """Center by the mean over support and query together, then L2-normalize.

    Raises DegenerateFeatureError if a centered vector has norm below 1e-12;
    ``index`` counts support rows first, then query rows.
    """
    points = episode.points()
    centered = points - points.mean(axis=0)
    norms = np.linalg.norm(centered, axis=1)
    small = np.flatnonzero(norms < DEGENERATE_NORM)
    if small.size:
        i = int(small[0])
        where = f"support row {i}" if i < episode.nk else f"query row {i - episode.nk}"
        raise DegenerateFeatureError(f"{where} is zero after centering", index=i)
    normalized = centered / norms[:, None]
    return Episode(
        n_way=episode.n_way,
        k_shot=episode.k_shot,
        q_query=episode.q_query,
        support_x=normalized[: episode.nk],
        support_y=episode.support_y,
        query_x=normalized[episode.nk :],
        query_y=episode.query_y,
        class_map=episode.class_map,
        support_ids=episode.support_ids,
        query_ids=episode.query_ids,
    )


def _class_means(n_classes: int, dim: int, separation: float, rng: np.random.Generator) -> np.ndarray:
    if n_classes == 1 or separation == 0.0:
        return np.zeros((n_classes, dim))
    if n_classes <= dim + 1:
        # regular simplex with edge length `separation`, randomly rotated
        vertices = np.eye(n_classes) - 1.0 / n_classes
        _, _, vt = np.linalg.svd(vertices)
        coords = vertices @ vt[: n_classes - 1].T
        coords *= separation / np.sqrt(2.0)
        means = np.zeros((n_classes, dim))
        means[:, : n_classes - 1] = coords
        q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
        q *= np.sign(np.diag(r))
        return means @ q.T
    if dim == 1:
        # the unit sphere is {-1, +1}; use evenly spaced points on the line
        line = separation * (np.arange(n_classes) - 0.5 * (n_classes - 1))
        return rng.permutation(line)[:, None]
    # more classes than a simplex fits: random sphere directions, radius set
    # so the closest pair sits exactly `separation` apart
    directions = rng.standard_normal((n_classes, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    gaps = np.linalg.norm(directions[:, None, :] - directions[None, :, :], axis=-1)
    closest = gaps[np.triu_indices(n_classes, 1)].min()
    if closest <= 0.0:
        raise FeatureDataError("coincident class directions; try another seed")
    return directions * (separation / closest)


def gen_synthetic(n_classes: int, per_class: int, dim: int, separation: float, seed: int) -> FeatureDataset:
    """Isotropic unit-variance Gaussian blobs with pairwise mean distance >= ``separation``.

    Deterministic for a fixed ``seed`` (numpy PCG64 via SeedSequence).
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if n_classes < 1 or per_class < 1:
        raise ValueError("n_classes and per_class must be positive")
    if not separation >= 0.0:
        raise ValueError("separation must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    means = _class_means(n_classes, dim, float(separation), rng)
    labels = np.repeat(np.arange(n_classes), per_class)
    features = means[labels] + rng.standard_normal((labels.size, dim))
    width = len(str(n_classes - 1))
    classes = tuple(f"class{c:0{width}d}" for c in range(n_classes))
    return FeatureDataset(classes, labels, features)
