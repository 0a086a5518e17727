"""Datasets, synthetic scenes, simulated weak annotations and the segmentation error."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import Correspondence, ModelHypothesis, ModelKind, as_kind, sampson_distance
from .graph import WeakAnnotation

IMAGE_SIZE = (640, 480)


class ParseError(ValueError):
    pass


class MissingGroundTruth(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


@dataclass
class Dataset:
    x1: np.ndarray
    x2: np.ndarray
    ground_truth: np.ndarray | None = None
    name: str = "dataset"
    image_size: tuple = IMAGE_SIZE
    true_models: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        self.x1 = np.asarray(self.x1, dtype=float).reshape(-1, 2)
        self.x2 = np.asarray(self.x2, dtype=float).reshape(-1, 2)
        if self.x1.shape != self.x2.shape:
            raise ValueError("x1 and x2 differ in length")
        if not (np.all(np.isfinite(self.x1)) and np.all(np.isfinite(self.x2))):
            raise ValueError("coordinates must be finite")
        if self.ground_truth is not None:
            gt = np.asarray(self.ground_truth, dtype=int)
            if gt.shape != (len(self.x1),):
                raise LengthMismatch(f"{len(gt)} labels for {len(self.x1)} points")
            present = np.unique(gt[gt > 0])
            if gt.min(initial=0) < 0 or not np.array_equal(present, np.arange(1, len(present) + 1)):
                raise ValueError("ground-truth labels must be contiguous 0..K")
            self.ground_truth = gt

    def __len__(self):
        return len(self.x1)

    @property
    def n_models(self):
        if self.ground_truth is None:
            return None
        return int(self.ground_truth.max(initial=0))

    @property
    def correspondences(self):
        return [Correspondence(tuple(a), tuple(b)) for a, b in zip(self.x1, self.x2)]

    @classmethod
    def from_correspondences(cls, corrs, ground_truth=None, name="dataset"):
        x1 = np.array([c.p1 for c in corrs], dtype=float).reshape(-1, 2)
        x2 = np.array([c.p2 for c in corrs], dtype=float).reshape(-1, 2)
        return cls(x1, x2, ground_truth, name)


@dataclass(frozen=True)
class AnnotationSimConfig:
    n_per_model: int
    n_outliers: int
    seed: int = 0

    def __post_init__(self):
        if self.n_per_model < 0 or self.n_outliers < 0:
            raise ValueError("annotation counts must be non-negative")


WA_PRESETS = {"A": (5, 5), "B": (10, 10), "C": (10, 5)}


def preset_config(name, seed=0) -> AnnotationSimConfig:
    n_g, n_o = WA_PRESETS[name.upper()]
    return AnnotationSimConfig(n_g, n_o, seed)


def simulate_weak_annotations(dataset: Dataset, config: AnnotationSimConfig):
    """Pick members of every true model with their label, plus mislabelled outliers.

    Classes smaller than ``n_per_model`` contribute all their members.
    """
    if dataset.ground_truth is None:
        raise MissingGroundTruth(f"{dataset.name} has no ground truth")
    gt = dataset.ground_truth
    rng = np.random.default_rng(config.seed)
    K = dataset.n_models
    out = []
    for k in range(1, K + 1):
        members = np.flatnonzero(gt == k)
        take = rng.choice(members, min(config.n_per_model, len(members)), replace=False)
        out += [WeakAnnotation(int(i), k) for i in take]
    outliers = np.flatnonzero(gt == 0)
    if K > 0:
        take = rng.choice(outliers, min(config.n_outliers, len(outliers)), replace=False)
        labels = rng.integers(1, K + 1, size=len(take))
        out += [WeakAnnotation(int(i), int(k)) for i, k in zip(take, labels)]
    return out


def segmentation_error(predicted, ground_truth):
    """Percent of points misclassified under the best label matching.

    Outlier (0) maps to outlier; each predicted model maps to at most one true
    model and vice versa, unmatched predictions count as errors.
    """
    p = np.asarray(predicted, dtype=int)
    g = np.asarray(ground_truth, dtype=int)
    if p.shape != g.shape:
        raise LengthMismatch(f"{p.shape} vs {g.shape}")
    if p.size == 0:
        return 0.0
    conf = np.zeros((p.max() + 1, g.max() + 1), dtype=int)
    np.add.at(conf, (p, g), 1)
    correct = conf[0, 0]
    sub = conf[1:, 1:]
    if sub.size:
        r, c = linear_sum_assignment(sub, maximize=True)
        correct += sub[r, c].sum()
    return 100.0 * (1.0 - correct / p.size)


def _grid_cells(K, width, height, margin=0.08):
    cols = math.ceil(math.sqrt(K))
    rows = math.ceil(K / cols)
    cw, ch = width / cols, height / rows
    cells = []
    for k in range(K):
        r, c = divmod(k, cols)
        mx, my = margin * cw, margin * ch
        cells.append((c * cw + mx, r * ch + my, (c + 1) * cw - mx, (r + 1) * ch - my))
    return cells


def _homography_from_4(src, dst):
    A, b = [], []
    for (x, y), (u, v) in zip(src, dst):
        A.append([x, y, 1, 0, 0, 0, -u * x, -u * y])
        A.append([0, 0, 0, x, y, 1, -v * x, -v * y])
        b += [u, v]
    h = np.linalg.solve(np.array(A, dtype=float), np.array(b, dtype=float))
    return np.append(h, 1.0).reshape(3, 3)


def _apply_h(H, x):
    xh = np.column_stack([x, np.ones(len(x))]) @ H.T
    return xh[:, :2] / xh[:, 2:3]


def _skew(t):
    return np.array([[0, -t[2], t[1]], [t[2], 0, -t[0]], [-t[1], t[0], 0]])


def _rotation(rng, max_deg):
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    ang = np.deg2rad(rng.uniform(-max_deg, max_deg))
    Kx = _skew(axis)
    return np.eye(3) + np.sin(ang) * Kx + (1 - np.cos(ang)) * Kx @ Kx


def _homography_scene(K, n, rng, size):
    w, h = size
    cells = _grid_cells(K, w, h)
    models, pts1, pts2 = [], [], []
    for x0, y0, x1_, y1_ in cells:
        corners = np.array([[x0, y0], [x1_, y0], [x1_, y1_], [x0, y1_]])
        shift = rng.uniform(-60, 60, size=2)
        H = _homography_from_4(corners, corners + shift + rng.uniform(-40, 40, size=(4, 2)))
        p1 = np.column_stack([rng.uniform(x0, x1_, n), rng.uniform(y0, y1_, n)])
        models.append(H)
        pts1.append(p1)
        pts2.append(_apply_h(H, p1))
    return models, pts1, pts2


def _fundamental_scene(K, n, rng, size):
    w, h = size
    f = 500.0
    Kc = np.array([[f, 0, w / 2], [0, f, h / 2], [0, 0, 1.0]])
    Ki = np.linalg.inv(Kc)
    cells = _grid_cells(K, w, h)
    models, pts1, pts2 = [], [], []
    for x0, y0, x1_, y1_ in cells:
        depth = rng.uniform(5.0, 8.0)
        u = rng.uniform(x0, x1_, n)
        v = rng.uniform(y0, y1_, n)
        z = depth + rng.uniform(-1.5, 1.5, n)
        X = (Ki @ np.vstack([u, v, np.ones(n)])) * z
        R = _rotation(rng, 8.0)
        t = rng.normal(size=3)
        t = 0.8 * t / np.linalg.norm(t)
        Xc = R @ X + t[:, None]
        p2 = (Kc @ Xc)
        p2 = (p2[:2] / p2[2]).T
        F = Ki.T @ _skew(t) @ R @ Ki
        models.append(F)
        pts1.append(np.column_stack([u, v]))
        pts2.append(p2)
    return models, pts1, pts2


def _well_separated(kind, models, pts1, pts2, min_px, max_fraction):
    """No group has more than ``max_fraction`` of its points within ``min_px`` of another model."""
    for j in range(len(models)):
        for k in range(len(models)):
            if j == k:
                continue
            r = sampson_distance(ModelHypothesis(kind, models[k]), pts1[j], pts2[j])
            if np.mean(np.sqrt(r) < min_px) > max_fraction:
                return False
    return True


def generate_synthetic_scene(task, K, n_per_model, n_outliers, noise_px, seed,
                             image_size=IMAGE_SIZE, min_separation_px=10.0,
                             max_ambiguous=0.05) -> Dataset:
    """K planar (homography) or rigidly moving (fundamental) point groups plus uniform outliers.

    Each group occupies its own grid cell of the first image. Scenes are redrawn
    while more than ``max_ambiguous`` of some group lies within
    ``min_separation_px`` (Sampson) of another group's model.
    """
    kind = as_kind(task)
    rng = np.random.default_rng(seed)
    make = _homography_scene if kind is ModelKind.HOMOGRAPHY else _fundamental_scene
    for _ in range(200):
        models, pts1, pts2 = make(K, n_per_model, rng, image_size)
        if _well_separated(kind, models, pts1, pts2, min_separation_px, max_ambiguous):
            break
    else:
        raise RuntimeError(f"no well separated {kind.value} scene with K={K} in 200 draws")
    w, h = image_size
    x1 = np.concatenate(pts1 + [np.zeros((0, 2))])
    x2 = np.concatenate(pts2 + [np.zeros((0, 2))])
    if noise_px > 0:
        x1 = x1 + rng.normal(scale=noise_px, size=x1.shape)
        x2 = x2 + rng.normal(scale=noise_px, size=x2.shape)
    gt = np.repeat(np.arange(1, K + 1), n_per_model)
    o1 = rng.uniform([0, 0], [w, h], size=(n_outliers, 2))
    o2 = rng.uniform([0, 0], [w, h], size=(n_outliers, 2))
    x1 = np.concatenate([x1, o1])
    x2 = np.concatenate([x2, o2])
    gt = np.concatenate([gt, np.zeros(n_outliers, dtype=int)])
    order = rng.permutation(len(x1))
    name = f"synth-{kind.value}-K{K}-n{n_per_model}-o{n_outliers}-s{seed}"
    return Dataset(x1[order], x2[order], gt[order], name, tuple(image_size),
                   [ModelHypothesis(kind, M) for M in models])


# --- file formats -------------------------------------------------------------

CSV_FIELDS = ["x1", "y1", "x2", "y2"]


def _infer_format(path, fmt):
    if fmt:
        return fmt.lower()
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in ("csv", "json"):
        raise ParseError(f"cannot infer format from {path}; pass csv or json")
    return suffix


def save_dataset(dataset: Dataset, path, fmt=None):
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        with path.open("w", newline="") as fh:
            wr = csv.writer(fh)
            has_gt = dataset.ground_truth is not None
            wr.writerow(CSV_FIELDS + (["label"] if has_gt else []))
            for i in range(len(dataset)):
                row = [repr(float(v)) for v in (*dataset.x1[i], *dataset.x2[i])]
                if has_gt:
                    row.append(str(int(dataset.ground_truth[i])))
                wr.writerow(row)
    else:
        doc = {
            "name": dataset.name,
            "image_size": [list(dataset.image_size), list(dataset.image_size)],
            "points": np.column_stack([dataset.x1, dataset.x2]).tolist(),
        }
        if dataset.ground_truth is not None:
            doc["labels"] = dataset.ground_truth.tolist()
        path.write_text(json.dumps(doc))


def load_dataset(path, fmt=None) -> Dataset:
    path = Path(path)
    fmt = _infer_format(path, fmt)
    if fmt == "csv":
        return _load_csv(path)
    if fmt == "json":
        return _load_json(path)
    raise ParseError(f"unknown format {fmt!r}")


def _load_csv(path):
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if header[:4] != CSV_FIELDS or header[4:] not in ([], ["label"]):
        raise ParseError(f"{path}: header must be x1,y1,x2,y2[,label], got {','.join(header)}")
    has_label = len(header) == 5
    pts, labels = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        vals = []
        for name, cell in zip(header[:4], row[:4]):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}:{lineno}: field {name!r} is not a number: {cell!r}") from None
            if not math.isfinite(v):
                raise ParseError(f"{path}:{lineno}: field {name!r} is not finite")
            vals.append(v)
        pts.append(vals)
        if has_label:
            try:
                labels.append(int(row[4]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: field 'label' is not an integer: {row[4]!r}") from None
    P = np.array(pts, dtype=float).reshape(-1, 4)
    gt = np.array(labels, dtype=int) if has_label else None
    return Dataset(P[:, :2], P[:, 2:], gt, path.stem)


def _load_json(path):
    try:
        doc = json.loads(path.read_text())
        P = np.array(doc["points"], dtype=float).reshape(-1, 4)
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as err:
        raise ParseError(f"{path}: {err}") from err
    gt = doc.get("labels")
    size = doc.get("image_size")
    image_size = tuple(size[0]) if size else IMAGE_SIZE
    return Dataset(P[:, :2], P[:, 2:], None if gt is None else np.array(gt, dtype=int),
                   doc.get("name", path.stem), image_size)


def save_annotations(annotations, path):
    Path(path).write_text(json.dumps(
        [{"point_index": a.point_index, "weak_label": a.weak_label} for a in annotations]))


def load_annotations(path):
    try:
        doc = json.loads(Path(path).read_text())
        return [WeakAnnotation(int(d["point_index"]), int(d["weak_label"])) for d in doc]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
        raise ParseError(f"{path}: {err}") from err
