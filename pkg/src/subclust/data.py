"""Dataset ingestion and synthesis.

IDX binary loading (MNIST-style), header-less numeric CSV loading,
union-of-subspaces synthetic generation, per-class partition sampling and
normalization. Datasets hold one data point per column.
"""

import csv
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


class ParseError(Exception):
    """Malformed input file."""


class IdxMagicError(ParseError):
    """IDX file does not start with the expected magic number."""


class IdxTruncatedError(ParseError):
    """IDX file ends before the declared payload."""


class IdxCountMismatchError(ParseError):
    """Image and label files declare different item counts."""


@dataclass
class Dataset:
    """D x N data matrix with one point per column, plus optional labels."""

    x: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = ""
    num_clusters: int = 0

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape[0] != self.x.shape[1]:
                raise ValueError("label count does not match point count")

    @property
    def n_points(self):
        return self.x.shape[1]

    @property
    def dim(self):
        return self.x.shape[0]


@dataclass
class SyntheticSpec:
    """Parameters for a union-of-subspaces draw."""

    num_subspaces: int
    subspace_dim: int
    ambient_dim: int
    points_per_subspace: int
    noise_sigma: float = 0.0
    affine_offset: bool = False
    nonlinear_warp: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.subspace_dim >= self.ambient_dim:
            raise ValueError("subspace_dim must be smaller than ambient_dim")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")


def _read_exact(f, nbytes, path):
    buf = f.read(nbytes)
    if len(buf) != nbytes:
        raise IdxTruncatedError(f"{path}: expected {nbytes} more bytes, got {len(buf)}")
    return buf


def load_idx(images_path, labels_path):
    """Load an IDX image/label pair (big-endian MNIST layout).

    Pixels are scaled to [0, 1] and each image is flattened to one column.
    """
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != IDX_IMAGES_MAGIC:
            raise IdxMagicError(f"{images_path}: bad magic 0x{magic:08x}")
        raw = _read_exact(f, n * rows * cols, images_path)
    images = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows * cols)

    with open(labels_path, "rb") as f:
        magic, n_labels = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != IDX_LABELS_MAGIC:
            raise IdxMagicError(f"{labels_path}: bad magic 0x{magic:08x}")
        raw = _read_exact(f, n_labels, labels_path)
    labels = np.frombuffer(raw, dtype=np.uint8).astype(int)

    if n_labels != n:
        raise IdxCountMismatchError(f"{n} images but {n_labels} labels")
    x = images.T.astype(float) / 255.0
    num_clusters = int(labels.max()) + 1 if n else 0
    return Dataset(x=x, labels=labels, name="idx", num_clusters=num_clusters)


def load_csv(path, has_labels=False, name=None):
    """Load a header-less numeric CSV; one row per data point.

    If has_labels, the final column is an integer class label.
    """
    rows = []
    labels = []
    width = None
    with open(path, newline="") as f:
        for i, row in enumerate(csv.reader(f)):
            if not row:
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(f"{path}: ragged row {i} ({len(row)} cells, expected {width})")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(f"{path}: non-numeric cell in row {i}") from exc
            if has_labels:
                label = values[-1]
                if label != int(label):
                    raise ParseError(f"{path}: non-integer label in row {i}")
                labels.append(int(label))
                values = values[:-1]
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: empty file")
    x = np.array(rows, dtype=float).T
    lab = np.array(labels, dtype=int) if has_labels else None
    k = int(lab.max()) + 1 if lab is not None else 0
    return Dataset(x=x, labels=lab, name=name or str(path), num_clusters=k)


def generate_synthetic(spec):
    """Draw points from a union of low-dimensional subspaces.

    Each subspace gets an orthonormal basis (orthogonal across subspaces
    when total dimension permits), standard-normal coefficients, an
    optional affine offset, an optional elementwise tanh warp, and
    Gaussian noise. Deterministic per seed.
    """
    rng = np.random.default_rng(spec.seed)
    c, d, dim = spec.num_subspaces, spec.subspace_dim, spec.ambient_dim
    n_per = spec.points_per_subspace

    if c * d <= dim:
        q, _ = np.linalg.qr(rng.standard_normal((dim, c * d)))
        bases = [q[:, i * d : (i + 1) * d] for i in range(c)]
    else:
        bases = []
        for _ in range(c):
            q, _ = np.linalg.qr(rng.standard_normal((dim, d)))
            bases.append(q)

    blocks = []
    labels = []
    for ci in range(c):
        coeffs = rng.standard_normal((d, n_per))
        pts = bases[ci] @ coeffs
        if spec.affine_offset:
            pts = pts + rng.standard_normal((dim, 1)) / np.sqrt(dim)
        if spec.nonlinear_warp:
            pts = np.tanh(pts)
        if spec.noise_sigma > 0:
            pts = pts + spec.noise_sigma * rng.standard_normal(pts.shape)
        blocks.append(pts)
        labels.extend([ci] * n_per)
    return Dataset(
        x=np.hstack(blocks),
        labels=np.array(labels, dtype=int),
        name=f"synthetic_c{c}_d{d}_D{dim}",
        num_clusters=c,
    )


def sample_partition(ds, per_cluster, seed=0):
    """Sample per_cluster points from every class, without replacement."""
    if ds.labels is None:
        raise ValueError("sample_partition requires labels")
    rng = np.random.default_rng(seed)
    keep = []
    for c in range(ds.num_clusters):
        idx = np.flatnonzero(ds.labels == c)
        if idx.size < per_cluster:
            raise ValueError(f"class {c} has {idx.size} points, need {per_cluster}")
        keep.append(rng.choice(idx, size=per_cluster, replace=False))
    keep = np.concatenate(keep)
    return Dataset(
        x=ds.x[:, keep].copy(),
        labels=ds.labels[keep].copy(),
        name=ds.name,
        num_clusters=ds.num_clusters,
    )


def normalize(ds, mode="unit_column"):
    """Return a normalized copy: unit_column, minmax, or none."""
    if mode == "none":
        x = ds.x.copy()
    elif mode == "unit_column":
        norms = np.linalg.norm(ds.x, axis=0)
        norms = np.where(norms == 0.0, 1.0, norms)
        x = ds.x / norms
    elif mode == "minmax":
        lo, hi = ds.x.min(), ds.x.max()
        x = (ds.x - lo) / (hi - lo) if hi > lo else np.zeros_like(ds.x)
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    labels = ds.labels.copy() if ds.labels is not None else None
    return Dataset(x=x, labels=labels, name=ds.name, num_clusters=ds.num_clusters)
