"""File formats: CSV label tables, fold tables, JSON documents and images."""

from __future__ import annotations

import csv
import hashlib
import json
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from PIL import Image

from .core import PATTERN_COLUMNS, AnnotationDataset, PatternVector, validate_dataset
from .errors import SchemaError, ValidationError
from .rules import binary_of

ANNOTATION_COLUMNS = ("image_id", "rater_id", *PATTERN_COLUMNS)
LABEL_COLUMNS = ("image_id", *PATTERN_COLUMNS)
SR_COLUMNS = (*LABEL_COLUMNS, "bcc")
FOLD_COLUMNS = ("image_id", "fold")
MANIFEST_COLUMNS = ("image_id", "heatmap_path", "mask_path", "correct")


def _read_rows(path, required) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        header = [h.strip() for h in reader.fieldnames]
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}", path=str(path), missing=missing)
        reader.fieldnames = header
        return [row for row in reader if any((v or "").strip() for v in row.values())]


def write_rows(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def read_annotations(path) -> AnnotationDataset:
    rows = _read_rows(path, ANNOTATION_COLUMNS)
    # row numbers reported 1-based over data lines
    return validate_dataset(rows)


def write_annotations(path, ds: AnnotationDataset) -> None:
    recs = sorted(ds.records, key=lambda r: (r.image_id, r.rater_id))
    write_rows(path, ANNOTATION_COLUMNS, ([r.image_id, r.rater_id, *r.labels.to_ints()] for r in recs))


def read_labels(path) -> dict[str, PatternVector]:
    """image_id + 7 pattern columns; any further columns are ignored."""
    out = {}
    for n, row in enumerate(_read_rows(path, LABEL_COLUMNS), start=1):
        img = row["image_id"].strip()
        if img in out:
            raise ValidationError(f"{path}: duplicate image_id {img!r}", row=n, image=img)
        out[img] = PatternVector((row[c] for c in PATTERN_COLUMNS), row=n)
    return out


def write_labels(path, labels: Mapping[str, PatternVector], with_diagnosis: bool = False) -> None:
    header = SR_COLUMNS if with_diagnosis else LABEL_COLUMNS
    rows = []
    for img in sorted(labels):
        v = labels[img]
        row = [img, *v.to_ints()]
        if with_diagnosis:
            row.append(binary_of(v).as_bit())
        rows.append(row)
    write_rows(path, header, rows)


def read_folds(path) -> dict[str, int]:
    out = {}
    for n, row in enumerate(_read_rows(path, FOLD_COLUMNS), start=1):
        try:
            fold = int(row["fold"])
        except ValueError:
            raise SchemaError(f"{path}: fold must be an integer", row=n, value=row["fold"]) from None
        out[row["image_id"].strip()] = fold
    return out


def write_folds(path, assignment: Mapping[str, int]) -> None:
    write_rows(path, FOLD_COLUMNS, ([img, assignment[img]] for img in sorted(assignment)))


def read_manifest(path) -> list[dict]:
    """Saliency pairing manifest; relative paths resolve against the manifest's folder."""
    base = Path(path).parent
    out = []
    for n, row in enumerate(_read_rows(path, MANIFEST_COLUMNS), start=1):
        flag = row["correct"].strip()
        if flag not in ("0", "1"):
            raise SchemaError(f"{path}: correct must be 0 or 1", row=n, value=flag)
        out.append(
            {
                "image_id": row["image_id"].strip(),
                "heatmap_path": base / row["heatmap_path"].strip(),
                "mask_path": base / row["mask_path"].strip(),
                "correct": flag == "1",
            }
        )
    return out


def write_json(path, obj) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def load_gray(path) -> np.ndarray:
    """Grayscale image (or a saved .npy array) as float64."""
    path = Path(path)
    if path.suffix.lower() == ".npy":
        arr = np.load(path)
        if arr.ndim != 2:
            raise SchemaError(f"{path}: expected a 2-D array", path=str(path), shape=list(arr.shape))
        return arr.astype(float)
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=float)


def load_mask(path, shape=None) -> np.ndarray:
    """Binary mask: pixels above half of full scale are foreground.

    When ``shape`` differs from the file's size the mask is resampled with
    nearest-neighbour to ``shape`` (rows, cols).
    """
    path = Path(path)
    if path.suffix.lower() == ".npy":
        raw = np.load(path).astype(float)
        full = 1.0 if raw.max(initial=0) <= 1 else 255.0
        mask = raw > full / 2
    else:
        with Image.open(path) as im:
            mask = np.asarray(im.convert("L")) > 127
    if shape is not None and mask.shape != tuple(shape):
        mask = resize_nearest(mask, shape)
    return mask


def resize_nearest(arr: np.ndarray, shape) -> np.ndarray:
    h, w = arr.shape
    rows = np.minimum(((np.arange(shape[0]) + 0.5) * h / shape[0]).astype(int), h - 1)
    cols = np.minimum(((np.arange(shape[1]) + 0.5) * w / shape[1]).astype(int), w - 1)
    return arr[np.ix_(rows, cols)]


def load_rgb(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(path, arr: np.ndarray) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path)
