"""Samplers, grid images and file ingestion.

Pixel coordinates are ``(column, row)`` with the origin at the top-left
pixel and unit spacing.
"""

from __future__ import annotations

import csv
import gzip
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    DimensionError,
    EmptyImage,
    InvalidSamplerSpec,
    ParseError,
    PlacementError,
)
from .transport import DiscreteDistribution

FAMILIES = ("gaussian", "uniform", "poisson", "geometric", "gamma")


# --------------------------------------------------------------------------
# sampling

@dataclass(frozen=True)
class SamplerSpec:
    """i.i.d. sampler description.

    ``params`` by family: gaussian ``mean`` (scalar or vector), ``scale``;
    uniform ``low``, ``high``; poisson ``rate``; geometric ``p``;
    gamma ``shape``, ``rate``. Coordinates are drawn independently.
    """

    family: str
    dimension: int = 1
    params: dict = None
    sample_count: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.params is None:
            object.__setattr__(self, "params", {})
        self.validate()

    def param(self, name, default):
        return self.params.get(name, default)

    def validate(self):
        fam = self.family
        if fam not in FAMILIES:
            raise InvalidSamplerSpec(f"unknown family {fam!r}; expected one of {FAMILIES}")
        if int(self.dimension) < 1:
            raise InvalidSamplerSpec("dimension must be >= 1")
        if int(self.sample_count) < 1:
            raise InvalidSamplerSpec("sample_count must be >= 1")
        if fam == "gaussian":
            mean = np.broadcast_to(np.asarray(self.param("mean", 0.0), float), (self.dimension,))
            if not np.all(np.isfinite(mean)) or not self.param("scale", 1.0) > 0:
                raise InvalidSamplerSpec("gaussian needs finite mean and scale > 0")
        elif fam == "uniform":
            if not self.param("high", 1.0) > self.param("low", 0.0):
                raise InvalidSamplerSpec("uniform needs high > low")
        elif fam == "poisson":
            if not self.param("rate", 1.0) > 0:
                raise InvalidSamplerSpec("poisson needs rate > 0")
        elif fam == "geometric":
            if not 0 < self.param("p", 0.5) <= 1:
                raise InvalidSamplerSpec("geometric needs 0 < p <= 1")
        elif fam == "gamma":
            if not (self.param("shape", 2.0) > 0 and self.param("rate", 2.0) > 0):
                raise InvalidSamplerSpec("gamma needs shape > 0 and rate > 0")


def sample_points(spec: SamplerSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    size = (spec.sample_count, spec.dimension)
    fam = spec.family
    if fam == "gaussian":
        mean = np.broadcast_to(np.asarray(spec.param("mean", 0.0), float), (spec.dimension,))
        return mean + spec.param("scale", 1.0) * rng.standard_normal(size)
    if fam == "uniform":
        return rng.uniform(spec.param("low", 0.0), spec.param("high", 1.0), size)
    if fam == "poisson":
        return rng.poisson(spec.param("rate", 1.0), size).astype(float)
    if fam == "geometric":
        return rng.geometric(spec.param("p", 0.5), size).astype(float)
    # gamma: numpy takes a scale, not a rate
    return rng.gamma(spec.param("shape", 2.0), 1.0 / spec.param("rate", 2.0), size)


def sample_distribution(spec: SamplerSpec) -> DiscreteDistribution:
    """Uniform-mass empirical distribution of ``spec.sample_count`` draws."""
    return DiscreteDistribution(sample_points(spec))


def with_seed(spec: SamplerSpec, seed: int) -> SamplerSpec:
    return replace(spec, seed=int(seed))


def translate_distribution(d, t) -> DiscreteDistribution:
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if t.shape[0] != d.dim:
        raise DimensionError(f"translation has {t.shape[0]} components, points have {d.dim}")
    return DiscreteDistribution(d.points + t, d.masses)


def random_translation(max_len, dim, seed, integer=False) -> np.ndarray:
    """Direction uniform on the sphere, length uniform on ``[0, max_len]``.

    With ``integer=True`` the vector is rounded to whole pixels.
    """
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    t = direction * rng.uniform(0.0, max_len)
    return np.rint(t) if integer else t


def fixed_length_offset(length, rng) -> np.ndarray:
    """Integer 2-D pixel offset of the given length in a random direction."""
    if length == 0:
        return np.zeros(2, dtype=int)
    theta = rng.uniform(0.0, 2 * np.pi)
    return np.rint(length * np.array([np.cos(theta), np.sin(theta)])).astype(int)


# --------------------------------------------------------------------------
# grid images

@dataclass(frozen=True, eq=False)
class GridImage:
    """Nonnegative intensity grid; ``intensities[row, col]``."""

    intensities: np.ndarray
    timestamp: str | None = None

    def __post_init__(self):
        arr = np.array(self.intensities, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise DimensionError(f"intensities must be a nonempty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("intensities must be finite and nonnegative")
        arr.setflags(write=False)
        object.__setattr__(self, "intensities", arr)

    @property
    def width(self) -> int:
        return self.intensities.shape[1]

    @property
    def height(self) -> int:
        return self.intensities.shape[0]


def image_to_distribution(img: GridImage) -> DiscreteDistribution:
    """Pixel distribution: support at positive pixels, mass proportional to
    intensity."""
    rows, cols = np.nonzero(img.intensities > 0)
    if rows.size == 0:
        raise EmptyImage("image has no positive pixel")
    pts = np.column_stack([cols, rows]).astype(np.float64)
    return DiscreteDistribution(pts, img.intensities[rows, cols])


def embed_and_translate(img: GridImage, canvas_w, canvas_h, t=(0, 0)) -> GridImage:
    """Center ``img`` on a blank canvas, then move it by ``t = (dx, dy)`` pixels."""
    dx, dy = (int(v) for v in t)
    col0 = (canvas_w - img.width) // 2 + dx
    row0 = (canvas_h - img.height) // 2 + dy
    if col0 < 0 or row0 < 0 or col0 + img.width > canvas_w or row0 + img.height > canvas_h:
        raise PlacementError(
            f"{img.width}x{img.height} image at offset ({dx}, {dy}) does not fit a "
            f"{canvas_w}x{canvas_h} canvas"
        )
    canvas = np.zeros((canvas_h, canvas_w))
    canvas[row0:row0 + img.height, col0:col0 + img.width] = img.intensities
    return GridImage(canvas, img.timestamp)


# --------------------------------------------------------------------------
# synthetic shapes

def _segment(canvas, p0, p1, thickness, value):
    h, w = canvas.shape
    n = int(np.ceil(4 * np.hypot(p1[0] - p0[0], p1[1] - p0[1]))) + 1
    for frac in np.linspace(0.0, 1.0, n):
        cx = p0[0] + frac * (p1[0] - p0[0])
        cy = p0[1] + frac * (p1[1] - p0[1])
        for ox in range(thickness):
            for oy in range(thickness):
                c, r = int(round(cx)) + ox, int(round(cy)) + oy
                if 0 <= c < w and 0 <= r < h:
                    canvas[r, c] = max(canvas[r, c], value)


def _strokes(kind, jitter, rng):
    """Polylines for a shape centered on the origin, in pixel units."""
    if kind == "ring":
        rx, ry = 5.0 + rng.normal(0, jitter), 6.0 + rng.normal(0, jitter)
        ang = np.linspace(0, 2 * np.pi, 25)
        return [np.column_stack([rx * np.cos(ang), ry * np.sin(ang)])]
    if kind == "bar":
        top = np.array([rng.normal(0, jitter), -7.0 + rng.normal(0, jitter)])
        bot = np.array([rng.normal(0, jitter), 7.0 + rng.normal(0, jitter)])
        serif = top + np.array([-2.5, 2.0 + rng.normal(0, jitter)])
        return [np.array([serif, top, bot])]
    if kind == "seven":
        pts = np.array([[-5.0, -6.0], [5.0, -6.0], [-1.0, 7.0]])
        pts += rng.normal(0, jitter, pts.shape)
        return [pts]
    if kind == "cross":
        a = np.array([[-5.0, 0.0], [5.0, 0.0]]) + rng.normal(0, jitter, (2, 2))
        b = np.array([[0.0, -5.0], [0.0, 5.0]]) + rng.normal(0, jitter, (2, 2))
        return [a, b]
    raise ValueError(f"unknown shape {kind!r}")


SHAPES = ("ring", "bar", "seven", "cross")


def draw_shape(kind, size=(28, 28), center=None, jitter=0.0, thickness=1, seed=0) -> GridImage:
    """Rasterize one of :data:`SHAPES` onto a ``(width, height)`` grid."""
    w, h = size
    rng = np.random.default_rng(seed)
    if center is None:
        center = ((w - 1) / 2, (h - 1) / 2)
    canvas = np.zeros((h, w))
    for line in _strokes(kind, jitter, rng):
        line = line + np.asarray(center, dtype=float)
        for p0, p1 in zip(line[:-1], line[1:]):
            _segment(canvas, p0, p1, thickness, 1.0)
    # mild intensity texture so masses are not all equal
    texture = rng.uniform(0.6, 1.0, canvas.shape)
    return GridImage(canvas * texture)


def synthetic_digits(n_per_class=20, n_classes=3, size=28, seed=0):
    """Seeded digit-like corpus: ``[(GridImage, label), ...]``.

    Class ``c`` uses shape ``SHAPES[c]`` with jittered control points,
    stroke width 1 or 2 and a +-1 pixel placement jitter.
    """
    if not 2 <= n_classes <= len(SHAPES):
        raise ValueError(f"n_classes must be in [2, {len(SHAPES)}]")
    ss = np.random.SeedSequence(seed)
    out = []
    for label, class_seq in enumerate(ss.spawn(n_classes)):
        for child in class_seq.spawn(n_per_class):
            rng = np.random.default_rng(child)
            center = ((size - 1) / 2 + rng.integers(-1, 2), (size - 1) / 2 + rng.integers(-1, 2))
            img = draw_shape(
                SHAPES[label],
                (size, size),
                center=center,
                jitter=0.7,
                thickness=int(rng.integers(1, 3)),
                seed=int(rng.integers(2**32)),
            )
            out.append((img, label))
    return out


# --------------------------------------------------------------------------
# file formats

def save_point_cloud(d: DiscreteDistribution, path):
    path = Path(path)
    header = [f"x{k + 1}" for k in range(d.dim)] + ["mass"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for pt, m in zip(d.points, d.masses):
            writer.writerow([repr(float(v)) for v in pt] + [repr(float(m))])


def load_point_cloud(path) -> DiscreteDistribution:
    """Read a ``x1,...,xn,mass`` CSV file."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError("empty file", path, 1) from None
        n = len(header) - 1
        if n < 1 or header != [f"x{k + 1}" for k in range(n)] + ["mass"]:
            raise ParseError(f"bad header {header!r}; expected x1,...,xn,mass", path, 1)
        pts, masses = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != n + 1:
                raise ParseError(f"expected {n + 1} fields, got {len(row)}", path, lineno)
            try:
                vals = [float(c) for c in row]
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            pts.append(vals[:n])
            masses.append(vals[n])
    if not pts:
        raise ParseError("no data rows", path)
    return DiscreteDistribution(np.array(pts), np.array(masses))


def save_grid_image(img: GridImage, path):
    np.savetxt(path, img.intensities, delimiter=",", fmt="%.17g")


def load_grid_image(path) -> GridImage:
    """Read a grid image from CSV text, or the first image of an IDX file."""
    path = Path(path)
    if _is_idx(path):
        return load_idx_images(path)[0]
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if len(rows[-1]) != len(rows[0]):
                raise ParseError(f"ragged row: {len(rows[-1])} vs {len(rows[0])} columns", path, lineno)
    if not rows:
        raise ParseError("no data rows", path)
    try:
        return GridImage(np.array(rows))
    except ValueError as exc:
        raise ParseError(str(exc), path) from None


def _is_idx(path):
    name = path.name.lower()
    return name.endswith((".idx", "-ubyte", ".idx.gz", "-ubyte.gz")) or ".idx" in name


def _read_idx(path):
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise ParseError("not an IDX file", path)
    dtype = {0x08: ">u1", 0x09: ">i1", 0x0B: ">i2", 0x0C: ">i4", 0x0D: ">f4", 0x0E: ">f8"}.get(raw[2])
    if dtype is None:
        raise ParseError(f"unsupported IDX type code {raw[2]:#x}", path)
    ndim = raw[3]
    dims = struct.unpack(f">{ndim}I", raw[4:4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=dtype, offset=4 + 4 * ndim)
    if data.size != int(np.prod(dims)):
        raise ParseError(f"IDX payload has {data.size} values, header says {dims}", path)
    return data.reshape(dims)


def load_idx_images(path):
    arr = _read_idx(Path(path))
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise ParseError(f"expected a 3-D image array, got {arr.ndim}-D", path)
    return [GridImage(a.astype(np.float64)) for a in arr]


def load_idx_labels(path):
    arr = _read_idx(Path(path))
    if arr.ndim != 1:
        raise ParseError("label file must be 1-D", path)
    return arr.astype(int)


def load_sequence(manifest) -> list:
    """Grid images listed (in time order) in a manifest file.

    Relative paths resolve against the manifest's directory.
    """
    manifest = Path(manifest)
    frames = []
    for line in manifest.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        p = Path(line)
        if not p.is_absolute():
            p = manifest.parent / p
        frames.append(load_grid_image(p))
    if not frames:
        raise ParseError("manifest lists no images", manifest)
    return frames
