"""Image quality and detection evaluation metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .core import Frame

IDENTICAL = math.inf


def psnr(a: Frame, b: Frame) -> float:
    """PSNR in dB for 8-bit frames. Identical frames give ``IDENTICAL`` (inf)."""
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a.samples.astype(np.float64) - b.samples.astype(np.float64)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return IDENTICAL
    return 10.0 * math.log10(255.0 ** 2 / mse)


def format_psnr(value: float) -> str:
    return "identical" if value == IDENTICAL else f"{value:.4f}"


def gradient_correlation(a: Frame, b: Frame, sigma: float = 2.0) -> float:
    """Pearson correlation of Gaussian gradient magnitudes of two frames.

    A structure-only similarity: insensitive to the intensity offsets that
    dominate PSNR. Returns 0.0 when either map is constant.
    """
    from scipy import ndimage

    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    ga = ndimage.gaussian_gradient_magnitude(a.samples.astype(np.float64), sigma).ravel()
    gb = ndimage.gaussian_gradient_magnitude(b.samples.astype(np.float64), sigma).ravel()
    ga -= ga.mean()
    gb -= gb.mean()
    denom = math.sqrt(float(ga @ ga) * float(gb @ gb))
    return float(ga @ gb) / denom if denom > 0 else 0.0


# ---------------------------------------------------------------------------
# detection

@dataclass(frozen=True)
class Box:
    class_id: int
    x: float
    y: float
    w: float
    h: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box extents must be positive, got w={self.w} h={self.h}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


def iou(a: Box, b: Box) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    return inter / (a.w * a.h + b.w * b.h - inter)


@dataclass
class _Matching:
    rel: list            # per ranked detection: 1 if TP
    ious: list           # IoU of each TP pair
    n_gt: int


def _match(dets: Sequence[Box], gts: Sequence[Box], iou_thr: float) -> _Matching:
    # stable sort keeps input order among equal confidences
    order = sorted(range(len(dets)), key=lambda i: -dets[i].confidence)
    used = [False] * len(gts)
    rel, ious = [], []
    for i in order:
        best, best_j = -1.0, -1
        for j, g in enumerate(gts):
            if used[j]:
                continue
            v = iou(dets[i], g)
            if v > best:
                best, best_j = v, j
        if best_j >= 0 and best >= iou_thr:
            used[best_j] = True
            rel.append(1)
            ious.append(best)
        else:
            rel.append(0)
    return _Matching(rel, ious, len(gts))


def _ap_from_rel(rel: list, n_gt: int, n_det: int) -> float:
    if n_gt == 0 and n_det == 0:
        return 1.0
    tp = 0
    acc = 0.0
    for k, r in enumerate(rel, start=1):
        if r:
            tp += 1
            acc += tp / k
    return acc / max(1, tp)


def average_precision(dets: Sequence[Box], gts: Sequence[Box], iou_thr: float = 0.5) -> float:
    """AP as the mean of precision-at-k over the ranks holding true positives.

    Detections are ranked by confidence (ties keep input order) and each is
    greedily matched to the unmatched ground truth with the highest IoU.
    """
    m = _match(dets, gts, iou_thr)
    return _ap_from_rel(m.rel, m.n_gt, len(dets))


@dataclass
class EvalResult:
    ap: dict
    mAP: float
    precision: float
    recall: float
    f1: float
    mean_iou: float
    tp: int = 0
    n_det: int = 0
    n_gt: int = 0
    class_names: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "ap": {str(k): v for k, v in sorted(self.ap.items())},
            "classes": {str(k): self.class_names.get(k, str(k)) for k in sorted(self.ap)},
            "mAP": self.mAP,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "mean_iou_matched": self.mean_iou,
            "tp": self.tp,
            "detections": self.n_det,
            "ground_truth": self.n_gt,
        }


def _group(boxes) -> dict:
    out: dict = {}
    for b in boxes:
        out.setdefault(b.class_id, []).append(b)
    return out


def mean_average_precision(images: Sequence[tuple], iou_thr: float = 0.5,
                           class_names: Optional[Mapping[int, str]] = None) -> EvalResult:
    """Evaluate ``[(detections, ground_truth), ...]`` over any number of images.

    Matching happens within an image and class; ranking for AP is pooled
    per class across all images. mAP averages the APs of the classes that
    occur in the ground truth.
    """
    pooled: dict = {}     # class -> list of (confidence, seq, rel)
    n_gt: dict = {}
    ious = []
    tp = n_det = 0
    seq = 0
    for dets, gts in images:
        dg, gg = _group(dets), _group(gts)
        for c in set(dg) | set(gg):
            cd, cg = dg.get(c, []), gg.get(c, [])
            m = _match(cd, cg, iou_thr)
            order = sorted(range(len(cd)), key=lambda i: -cd[i].confidence)
            for i, r in zip(order, m.rel):
                pooled.setdefault(c, []).append((cd[i].confidence, seq, r))
                seq += 1
            n_gt[c] = n_gt.get(c, 0) + len(cg)
            ious.extend(m.ious)
            tp += sum(m.rel)
            n_det += len(cd)
    classes = sorted(c for c, n in n_gt.items() if n > 0)
    if not classes:
        raise ValueError("no ground-truth classes to evaluate")
    ap = {}
    for c in classes:
        ranked = sorted(pooled.get(c, []), key=lambda t: (-t[0], t[1]))
        ap[c] = _ap_from_rel([r for *_, r in ranked], n_gt[c], len(ranked))
    total_gt = sum(n_gt[c] for c in classes)
    precision = tp / n_det if n_det else 0.0
    recall = tp / total_gt if total_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalResult(
        ap=ap, mAP=float(sum(ap.values()) / len(ap)), precision=precision, recall=recall,
        f1=f1, mean_iou=float(np.mean(ious)) if ious else 0.0, tp=tp, n_det=n_det,
        n_gt=total_gt, class_names=dict(class_names or {}))


# ---------------------------------------------------------------------------
# text formats

class AnnotationError(ValueError):
    pass


def _parse_lines(path, ncols: int, kind: str):
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise AnnotationError(f"{path}:{lineno}: expected {ncols} fields for a {kind} line, got {len(parts)}")
        yield lineno, parts


def read_ground_truth(path) -> list:
    """Lines ``class_id x y w h`` (integers)."""
    out = []
    for lineno, p in _parse_lines(path, 5, "ground-truth"):
        try:
            out.append(Box(int(p[0]), int(p[1]), int(p[2]), int(p[3]), int(p[4])))
        except ValueError as e:
            raise AnnotationError(f"{path}:{lineno}: {e}") from None
    return out


def read_detections(path) -> list:
    """Lines ``class_id confidence x y w h``."""
    out = []
    for lineno, p in _parse_lines(path, 6, "detection"):
        try:
            out.append(Box(int(p[0]), float(p[2]), float(p[3]), float(p[4]), float(p[5]),
                           confidence=float(p[1])))
        except ValueError as e:
            raise AnnotationError(f"{path}:{lineno}: {e}") from None
    return out


def read_class_names(path) -> dict:
    names = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(None, 1)
        if len(parts) != 2:
            raise AnnotationError(f"{path}:{lineno}: expected 'class_id name'")
        try:
            names[int(parts[0])] = parts[1].strip()
        except ValueError:
            raise AnnotationError(f"{path}:{lineno}: class id must be an integer") from None
    return names


def write_boxes(path, boxes, detections: bool) -> None:
    lines = []
    for b in boxes:
        if detections:
            lines.append(f"{b.class_id} {b.confidence:.6f} {b.x:g} {b.y:g} {b.w:g} {b.h:g}")
        else:
            lines.append(f"{b.class_id} {int(b.x)} {int(b.y)} {int(b.w)} {int(b.h)}")
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
