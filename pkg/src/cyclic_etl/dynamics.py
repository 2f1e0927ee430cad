"""System class, noise model, synthetic gait-like scenarios and CSV ingestion.

The shipped instance is the scalar random walk with cyclic increments,
``x[k] = x[k-1] + u[k] + eps[k]``, where ``x`` is an angle in degrees.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np

from .errors import ConfigurationError, CsvFormatError


def _absdiff(a, b):
    return abs(a - b)


def _euclid(a, b):
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def _additive(x, u, eps):
    return x + u + eps


@dataclass(frozen=True)
class SystemModel:
    """Known dynamics ``f(x, u, eps)`` plus its Gaussian noise level and metric."""

    state_dim: int
    input_dim: int
    noise_dim: int
    f: Callable = _additive
    noise_sigma: float = 0.0
    metric: Callable = _absdiff
    name: str = "custom"

    def __post_init__(self):
        for label, dim in (("state_dim", self.state_dim), ("input_dim", self.input_dim),
                           ("noise_dim", self.noise_dim)):
            if int(dim) != dim or dim < 1:
                raise ConfigurationError(f"{label} must be a positive integer, got {dim!r}")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")

    @property
    def is_random_walk(self) -> bool:
        return self.name == "random_walk"


def random_walk_model(sigma: float = 0.9) -> SystemModel:
    """Scalar instance: ``f(x, u, eps) = x + u + eps`` with metric ``|a - b|``."""
    return SystemModel(1, 1, 1, _additive, float(sigma), _absdiff, name="random_walk")


def vector_additive_model(dim: int, sigma: float = 0.0) -> SystemModel:
    return SystemModel(dim, dim, dim, _additive, float(sigma), _euclid, name="vector_additive")


def _check_dim(value, dim, label):
    size = np.size(value)
    if size != dim:
        raise ConfigurationError(f"{label} has dimension {size}, expected {dim}")


def step(model: SystemModel, x_prev, u, eps):
    """One application of the dynamics; validates dimensions."""
    _check_dim(x_prev, model.state_dim, "state")
    _check_dim(u, model.input_dim, "input")
    _check_dim(eps, model.noise_dim, "noise")
    return model.f(x_prev, u, eps)


def sample_noise(rng: np.random.Generator, sigma: float, size=None):
    """Zero-mean Gaussian draw(s); always consumes the rng so streams stay aligned."""
    if sigma < 0:
        raise ConfigurationError("sigma must be >= 0")
    draw = rng.standard_normal(size)
    if sigma == 0:
        return 0.0 if size is None else np.zeros(size)
    return sigma * draw


# --- excitation templates -------------------------------------------------
# Angle templates over one cycle, phase in [0, 1). Each entry is a list of
# (harmonic, weight, phase) terms; they are rescaled to unit peak-to-peak.
_HARMONICS = {
    "constant": [],
    "sine": [(1, 1.0, 0.0)],
    "harmonic2": [(1, 1.0, 0.0), (2, 0.5, 0.7)],
    "harmonic3": [(1, 1.0, 0.0), (2, 0.5, 0.7), (3, 0.25, 1.9)],
    "swapped": [(1, 0.5, 0.7), (2, 1.0, 0.0)],
    "gait": [(1, 1.0, 0.0), (2, 0.55, -1.2), (3, 0.3, 0.9), (4, 0.12, 2.1)],
    "drop_foot": [(1, 0.7, 1.4), (2, 0.15, 0.3), (3, 0.45, -0.8)],
    "stiff_knee": [(1, 0.6, -0.9), (2, 0.9, 1.6), (4, 0.25, 0.4)],
    "dragged_leg": [(1, 1.0, 2.6), (3, 0.6, 0.2), (5, 0.2, -1.1)],
}

SHAPES = tuple(_HARMONICS)


def _raw_template(terms, phase):
    out = np.zeros_like(phase, dtype=float)
    for h, w, p in terms:
        out += w * np.sin(2.0 * np.pi * h * phase + p)
    return out


def _scales():
    grid = np.linspace(0.0, 1.0, 4096, endpoint=False)
    out = {}
    for name, terms in _HARMONICS.items():
        v = _raw_template(terms, grid)
        ptp = float(v.max() - v.min())
        out[name] = 1.0 / ptp if ptp > 0 else 0.0
    return out


_SCALE = _scales()


def angle_template(shape: str, phase) -> np.ndarray:
    """Unit peak-to-peak angle of ``shape`` at the given phase(s)."""
    try:
        terms = _HARMONICS[shape]
    except KeyError:
        raise ConfigurationError(f"unknown excitation shape {shape!r}; known: {', '.join(SHAPES)}")
    return _SCALE[shape] * _raw_template(terms, np.asarray(phase, dtype=float))


def excitation_cycle(shape: str, cycle_length: int, amplitude: float = 1.0,
                     phase_offset: float = 0.0) -> np.ndarray:
    """Increments of one cycle: differences of the angle template on the sample grid."""
    if int(cycle_length) != cycle_length or cycle_length < 1:
        raise ConfigurationError("cycle length must be a positive integer")
    grid = phase_offset + np.arange(cycle_length + 1) / cycle_length
    angle = amplitude * angle_template(shape, grid)
    return np.diff(angle)


# --- scenarios ------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    duration: int
    cycle_length: int
    shape: str = "gait"
    amplitude: float = 40.0
    phase_offset: float = 0.0


@dataclass(frozen=True)
class ScenarioConfig:
    segments: tuple
    sample_rate: float = 50.0
    noise_sigma: float = 0.9
    rng_seed: int = 0
    x0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(
            s if isinstance(s, Segment) else Segment(**s) for s in self.segments))
        for s in self.segments:
            if int(s.duration) != s.duration or s.duration < 1:
                raise ConfigurationError(f"segment duration must be a positive integer: {s}")
            if int(s.cycle_length) != s.cycle_length or s.cycle_length < 1:
                raise ConfigurationError(f"cycle length must be a positive integer: {s}")
            if s.shape not in _HARMONICS:
                raise ConfigurationError(f"unknown excitation shape {s.shape!r}")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma must be >= 0")

    @property
    def n_samples(self) -> int:
        return sum(s.duration for s in self.segments)


@dataclass
class Scenario:
    """Generated trajectory; arrays are indexed by sample ``k``."""

    k: np.ndarray
    x: np.ndarray
    u: np.ndarray
    segment: np.ndarray
    config: ScenarioConfig | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.k)

    def __iter__(self) -> Iterator[tuple]:
        for k, x, u, s in zip(self.k.tolist(), self.x.tolist(), self.u.tolist(),
                              self.segment.tolist()):
            yield k, x, u, s


def generate_scenario(cfg: ScenarioConfig) -> Scenario:
    """Concatenate the configured segments and integrate the dynamics.

    Within a segment ``u`` is one cycle tiled, so ``u[k+N] == u[k]`` exactly.
    Phase is carried across segment boundaries; a segment's ``phase_offset``
    is added on top of where the previous segment stopped.
    """
    if not cfg.segments:
        raise ConfigurationError("scenario needs at least one segment")
    rng = np.random.default_rng(cfg.rng_seed)
    n = cfg.n_samples
    u = np.empty(n)
    seg_id = np.empty(n, dtype=np.int64)
    pos = 0
    phase = 0.0
    for i, s in enumerate(cfg.segments):
        start_phase = (phase + s.phase_offset) % 1.0
        cycle = excitation_cycle(s.shape, s.cycle_length, s.amplitude, start_phase)
        reps = -(-s.duration // s.cycle_length)
        u[pos:pos + s.duration] = np.tile(cycle, reps)[:s.duration]
        seg_id[pos:pos + s.duration] = i
        pos += s.duration
        phase = (start_phase + s.duration / s.cycle_length) % 1.0
    eps = sample_noise(rng, cfg.noise_sigma, n)
    model = random_walk_model(cfg.noise_sigma)
    f = model.f
    x = np.empty(n)
    prev = float(cfg.x0)
    ul, el = u.tolist(), np.asarray(eps, dtype=float).tolist()
    for k in range(n):
        prev = f(prev, ul[k], el[k])
        x[k] = prev
    return Scenario(np.arange(n, dtype=np.int64), x, u, seg_id, cfg)


def load_scenario(path) -> ScenarioConfig:
    """Read a JSON scenario file.

    Schema::

        {"sample_rate": 50, "noise_sigma": 0.9, "rng_seed": 1, "x0": 0.0,
         "segments": [{"duration": 3000, "cycle_length": 50, "shape": "gait",
                       "amplitude": 40.0, "phase_offset": 0.0}, ...]}
    """
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return ScenarioConfig(**raw)
    except TypeError as exc:
        raise ConfigurationError(f"bad scenario file {path}: {exc}") from exc


def dump_scenario(cfg: ScenarioConfig, path) -> None:
    raw = {
        "sample_rate": cfg.sample_rate, "noise_sigma": cfg.noise_sigma,
        "rng_seed": cfg.rng_seed, "x0": cfg.x0,
        "segments": [s.__dict__ for s in cfg.segments],
    }
    Path(path).write_text(json.dumps(raw, indent=2), encoding="utf-8")


GAIT_SHAPES = ("gait", "drop_foot", "stiff_knee", "dragged_leg")


def random_scenario(rng: np.random.Generator, n_segments: int = 4, *,
                    duration_range=(400, 1200), cycle_range=(40, 75),
                    amplitude_range=(30.0, 50.0), noise_sigma: float = 0.9,
                    shapes: Sequence[str] = GAIT_SHAPES, seed: int | None = None) -> ScenarioConfig:
    """Draw a mixed scenario with speed (cycle length) and style (shape) changes."""
    segs = []
    for _ in range(n_segments):
        segs.append(Segment(
            duration=int(rng.integers(duration_range[0], duration_range[1] + 1)),
            cycle_length=int(rng.integers(cycle_range[0], cycle_range[1] + 1)),
            shape=str(shapes[int(rng.integers(len(shapes)))]),
            amplitude=float(rng.uniform(*amplitude_range)),
        ))
    if seed is None:
        seed = int(rng.integers(2**31))
    return ScenarioConfig(tuple(segs), noise_sigma=noise_sigma, rng_seed=seed)


def variable_gait_scenario(minutes: float = 30.0, seed: int = 0, sample_rate: float = 50.0,
                           noise_sigma: float = 0.9) -> ScenarioConfig:
    """Long walk alternating speed changes and occasional style changes.

    Stands in for a half-hour recording of variable gait: stretches of
    10-40 s, cycle length drifting around 50 samples (about 1 s strides),
    and a style switch roughly every fourth stretch.
    """
    rng = np.random.default_rng(seed)
    total = int(round(minutes * 60 * sample_rate))
    segs = []
    shape = "gait"
    cycle = 50
    amp = 40.0
    used = 0
    while used < total:
        dur = int(rng.integers(int(10 * sample_rate), int(40 * sample_rate) + 1))
        dur = min(dur, total - used)
        if rng.random() < 0.25:
            shape = str(rng.choice([s for s in GAIT_SHAPES if s != shape]))
            amp = float(rng.uniform(30.0, 50.0))
        cycle = int(np.clip(cycle + rng.integers(-6, 7), 40, 75))
        segs.append(Segment(dur, cycle, shape, amp))
        used += dur
    return ScenarioConfig(tuple(segs), sample_rate=sample_rate, noise_sigma=noise_sigma,
                          rng_seed=seed)


# --- CSV ingestion --------------------------------------------------------

def ingest_csv(path) -> list[tuple[int, float]]:
    """Read a two-column ``k,x`` file. A non-numeric first row is a header."""
    rows: list[tuple[int, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise CsvFormatError(f"expected 2 columns, got {len(row)}", lineno)
            try:
                kf = float(row[0])
                x = float(row[1])
            except ValueError:
                if lineno == 1:
                    continue
                raise CsvFormatError(f"non-numeric value in {row!r}", lineno) from None
            if not kf.is_integer() or not math.isfinite(x):
                raise CsvFormatError(f"bad sample index or value in {row!r}", lineno)
            k = int(kf)
            if rows and k <= rows[-1][0]:
                raise CsvFormatError(f"sample index {k} not increasing", lineno)
            rows.append((k, x))
    if not rows:
        warnings.warn(f"{path}: no samples found", stacklevel=2)
    return rows
