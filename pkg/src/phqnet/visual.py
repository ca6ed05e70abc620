"""68-point 3D facial keypoint tracks: CSV I/O, per-frame normalization, slicing."""

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptySegment, FormatError, NormalizationError, ParameterError

N_POINTS = 68
FEATURE_WIDTH = 3 * N_POINTS
COORD_COLUMNS = [f"{axis}{i}" for axis in "xyz" for i in range(N_POINTS)]


@dataclass(frozen=True)
class KeypointFrame:
    timestamp: float
    points: np.ndarray  # [68, 3]
    confidence: float | None = None


class KeypointTrack:
    """Time-ordered keypoint frames stored as arrays.

    ``points`` is ``[n_frames, 68, 3]``; ``confidence`` is ``[n_frames]`` or None.
    """

    def __init__(self, timestamps, points, confidence=None, frame_ids=None, nominal_fps=30.0):
        timestamps = np.asarray(timestamps, dtype=np.float64)
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 3 or points.shape[1:] != (N_POINTS, 3) or len(points) != len(timestamps):
            raise FormatError(f"expected [{len(timestamps)}, 68, 3] points, got {points.shape}")
        if not np.all(np.isfinite(points)) or not np.all(np.isfinite(timestamps)):
            raise FormatError("keypoint track has non-finite values")
        if np.any(np.diff(timestamps) <= 0):
            raise FormatError("keypoint timestamps must be strictly increasing")
        self.timestamps = timestamps
        self.points = points
        self.confidence = None if confidence is None else np.asarray(confidence, dtype=np.float64)
        self.frame_ids = (
            np.arange(len(timestamps)) if frame_ids is None else np.asarray(frame_ids, dtype=np.int64)
        )
        self.nominal_fps = nominal_fps

    def __len__(self):
        return len(self.timestamps)

    def frame(self, i):
        conf = None if self.confidence is None else float(self.confidence[i])
        return KeypointFrame(float(self.timestamps[i]), self.points[i], conf)

    @property
    def frames(self):
        return [self.frame(i) for i in range(len(self))]

    def __eq__(self, other):
        if not isinstance(other, KeypointTrack):
            return NotImplemented
        same_conf = (self.confidence is None and other.confidence is None) or (
            self.confidence is not None
            and other.confidence is not None
            and np.array_equal(self.confidence, other.confidence)
        )
        return (
            same_conf
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.frame_ids, other.frame_ids)
        )


def _header(with_confidence):
    return ["frame", "timestamp"] + (["confidence"] if with_confidence else []) + COORD_COLUMNS


def load_keypoints(path):
    """Read a keypoint CSV: ``frame, timestamp, [confidence,] x0..x67, y0..y67, z0..z67``."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError("empty keypoint file", path=path, line=1) from None
        with_conf = len(header) > 2 and header[2] == "confidence"
        if header != _header(with_conf):
            raise FormatError(
                f"header must be frame,timestamp,[confidence,]x0..x67,y0..y67,z0..z67 ({len(header)} columns found)",
                path=path,
                line=1,
            )
        width = len(header)
        offset = 3 if with_conf else 2
        ids, stamps, conf, rows = [], [], [], []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != width:
                raise FormatError(f"expected {width} columns, got {len(row)}", path=path, line=lineno)
            try:
                fid = int(row[0])
                vals = [float(v) for v in row[1:]]
            except ValueError:
                raise FormatError("non-numeric field", path=path, line=lineno) from None
            if not all(np.isfinite(vals)):
                raise FormatError("non-finite value", path=path, line=lineno)
            if stamps and vals[0] <= stamps[-1]:
                raise FormatError(f"timestamp {vals[0]} does not increase", path=path, line=lineno)
            ids.append(fid)
            stamps.append(vals[0])
            if with_conf:
                conf.append(vals[1])
            rows.append(vals[offset - 1:])
    coords = np.array(rows, dtype=np.float64).reshape(-1, 3, N_POINTS).transpose(0, 2, 1)
    return KeypointTrack(stamps, coords, conf if with_conf else None, ids)


def save_keypoints(track, path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_header(track.confidence is not None))
        flat = track.points.transpose(0, 2, 1).reshape(len(track), -1)
        for i in range(len(track)):
            row = [int(track.frame_ids[i]), repr(float(track.timestamps[i]))]
            if track.confidence is not None:
                row.append(repr(float(track.confidence[i])))
            row.extend(repr(v) for v in flat[i].tolist())
            w.writerow(row)


def normalize_points(points):
    """Center each frame on its centroid and scale to unit RMS radius.

    Accepts ``[68, 3]`` or ``[n, 68, 3]``; returns ``[204]`` or ``[n, 204]``
    flattened as x, y, z per point in index order.
    """
    pts = np.asarray(points, dtype=np.float64)
    single = pts.ndim == 2
    if single:
        pts = pts[None]
    centered = pts - pts.mean(axis=1, keepdims=True)
    rms = np.sqrt((centered**2).sum(axis=2).mean(axis=1))
    scale = np.abs(pts).max(axis=(1, 2)) + 1.0
    if np.any(rms <= 1e-12 * scale):
        raise NormalizationError("degenerate keypoint frame: all points coincide")
    out = (centered / rms[:, None, None]).reshape(len(pts), FEATURE_WIDTH)
    return out[0] if single else out


def normalize_frame(frame):
    return normalize_points(frame.points if isinstance(frame, KeypointFrame) else frame)


def slice_track(track, start, stop, confidence_threshold=0.5):
    """Normalized features ``[n, 204]`` for frames with ``start <= t < stop``.

    Frames whose confidence is below the threshold are dropped first. Raises
    :class:`EmptySegment` when no frame qualifies.
    """
    if not start < stop:
        raise ParameterError(f"slice needs start < stop, got [{start}, {stop})")
    sel = (track.timestamps >= start) & (track.timestamps < stop)
    if track.confidence is not None and confidence_threshold is not None:
        sel &= track.confidence >= confidence_threshold
    idx = np.flatnonzero(sel)
    if idx.size == 0:
        raise EmptySegment(f"no keypoint frames in [{start}, {stop})")
    return normalize_points(track.points[idx])
