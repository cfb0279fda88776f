"""Radar tensor container, block reshaping, RDT file I/O and synthetic scenes.

A radar frame is a complex ``C x H x W`` range-Doppler cube stored as a real
``2C x H x W`` array. Channel ``2c`` holds the real part of complex channel
``c`` and channel ``2c + 1`` its imaginary part.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import FormatError, ShapeError, TruncatedPayloadError

RDT_MAGIC = b"RDT\x00v1\x00\x00"

# Point response support is 7 bins, i.e. offsets -3..3 around the target bin.
PSF_HALF_WIDTH = 3
_PSF_LOBE_WIDTH = 4.0
_PSF_WINDOW_SIGMA = 2.0


@dataclass(frozen=True)
class RadarTensor:
    """Real-valued ``2C x H x W`` radar feature map (float32)."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 3:
            raise ShapeError(f"radar tensor must be 3-D, got shape {arr.shape}")
        if arr.shape[0] % 2:
            raise ShapeError(f"channel count must be even, got {arr.shape[0]}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("radar tensor contains NaN or Inf")
        if arr is self.data or np.shares_memory(arr, self.data):
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def power(self) -> np.ndarray:
        """Channel-summed power map ``sum_c x_c^2`` in float64."""
        d = self.data.astype(np.float64)
        return np.einsum("chw,chw->hw", d, d)

    def complex(self) -> np.ndarray:
        """Return the ``C x H x W`` complex view of the interleaved channels."""
        d = self.data.astype(np.float64)
        return d[0::2] + 1j * d[1::2]

    @classmethod
    def from_complex(cls, z: np.ndarray) -> "RadarTensor":
        z = np.asarray(z)
        out = np.empty((2 * z.shape[0],) + z.shape[1:], dtype=np.float32)
        out[0::2] = z.real
        out[1::2] = z.imag
        return cls(out)


@dataclass(frozen=True)
class BlockGrid:
    """Tensor reorganised into ``channels x B x M^2`` flattened blocks.

    Block ``b`` is the ``b``-th ``M x M`` tile in row-major tile order and the
    samples inside a block are row-major. ``data`` may hold samples or DCT
    coefficients; both share this layout.
    """

    data: np.ndarray
    M: int
    height: int
    width: int

    def __post_init__(self):
        c, b, n = self.data.shape
        if n != self.M * self.M:
            raise ShapeError(f"block length {n} does not match M^2 = {self.M ** 2}")
        if self.height % self.M or self.width % self.M:
            raise ShapeError(f"H={self.height}, W={self.width} not divisible by M={self.M}")
        if b != (self.height // self.M) * (self.width // self.M):
            raise ShapeError(f"{b} blocks cannot tile a {self.height}x{self.width} map with M={self.M}")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def blocks(self) -> int:
        return self.data.shape[1]

    @property
    def block_len(self) -> int:
        return self.data.shape[2]

    def with_data(self, data: np.ndarray) -> "BlockGrid":
        return BlockGrid(data, self.M, self.height, self.width)


def check_divisible(height: int, width: int, M: int) -> None:
    if M < 1 or height % M or width % M:
        raise ShapeError(f"H={height} and W={width} must both be divisible by M={M}")


def blockize(x: RadarTensor | np.ndarray, M: int) -> BlockGrid:
    """Split each channel into ``M x M`` tiles, flattened row-major."""
    arr = x.data if isinstance(x, RadarTensor) else np.asarray(x)
    c, h, w = arr.shape
    check_divisible(h, w, M)
    tiles = arr.reshape(c, h // M, M, w // M, M).transpose(0, 1, 3, 2, 4)
    return BlockGrid(tiles.reshape(c, -1, M * M), M, h, w)


def merge_array(g: BlockGrid) -> np.ndarray:
    """Inverse of :func:`blockize`, keeping the grid's dtype."""
    M = g.M
    c = g.channels
    tiles = g.data.reshape(c, g.height // M, g.width // M, M, M)
    return tiles.transpose(0, 1, 3, 2, 4).reshape(c, g.height, g.width)


def merge(g: BlockGrid) -> RadarTensor:
    return RadarTensor(merge_array(g))


# --------------------------------------------------------------------------
# Synthetic scenes


@dataclass(frozen=True)
class Target:
    range_bin: int
    doppler_bin: int
    amplitude: float
    phase_slope: float = 0.0


@dataclass(frozen=True)
class SceneSpec:
    """Synthetic scene description.

    ``amplitude`` is the peak magnitude of a target in every complex channel,
    so with per-sample noise ``noise_sigma`` the peak SNR is
    ``20 * log10(amplitude / noise_sigma)`` dB.

    ``clutter`` adds a smooth complex background with that RMS magnitude per
    complex channel and a correlation length of ``clutter_length`` bins. It is
    spread out in range-Doppler but compact in the DCT domain.
    """

    targets: tuple[Target, ...] = ()
    noise_sigma: float = 0.0
    dims: tuple[int, int, int] = (1, 64, 64)
    seed: int = 0
    clutter: float = 0.0
    clutter_length: float = 6.0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(
            t if isinstance(t, Target) else Target(*t) for t in self.targets))
        C, H, W = self.dims
        if C < 1 or H < 1 or W < 1:
            raise ShapeError(f"invalid scene dims {self.dims}")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.clutter < 0 or self.clutter_length <= 0:
            raise ValueError("clutter must be >= 0 and clutter_length > 0")
        for t in self.targets:
            if not (0 <= t.range_bin < H and 0 <= t.doppler_bin < W):
                raise ValueError(f"target {t} outside the {H}x{W} map")
            if t.amplitude <= 0:
                raise ValueError(f"target amplitude must be > 0, got {t.amplitude}")


def point_response() -> np.ndarray:
    """Gaussian-windowed separable sinc on a 7x7 support, peak value 1."""
    d = np.arange(-PSF_HALF_WIDTH, PSF_HALF_WIDTH + 1, dtype=np.float64)
    h = np.sinc(d / _PSF_LOBE_WIDTH) * np.exp(-0.5 * (d / _PSF_WINDOW_SIGMA) ** 2)
    return np.outer(h, h)


def generate_scene(spec: SceneSpec) -> tuple[RadarTensor, list[Target]]:
    """Render ``spec`` into a radar tensor; returns the tensor and its targets."""
    C, H, W = spec.dims
    rng = np.random.default_rng(spec.seed)
    cube = np.zeros((C, H, W), dtype=np.complex128)
    psf = point_response()
    hw = PSF_HALF_WIDTH
    for t in spec.targets:
        phase0 = rng.uniform(0.0, 2.0 * np.pi)
        phases = np.exp(1j * (phase0 + t.phase_slope * np.arange(C)))
        r0, r1 = max(t.range_bin - hw, 0), min(t.range_bin + hw + 1, H)
        d0, d1 = max(t.doppler_bin - hw, 0), min(t.doppler_bin + hw + 1, W)
        patch = psf[r0 - t.range_bin + hw:r1 - t.range_bin + hw,
                    d0 - t.doppler_bin + hw:d1 - t.doppler_bin + hw]
        cube[:, r0:r1, d0:d1] += t.amplitude * phases[:, None, None] * patch
    if spec.clutter > 0:
        cube += _clutter(spec)
    x = np.empty((2 * C, H, W), dtype=np.float64)
    x[0::2] = cube.real
    x[1::2] = cube.imag
    if spec.noise_sigma > 0:
        x += rng.normal(0.0, spec.noise_sigma, size=x.shape)
    return RadarTensor(x.astype(np.float32)), list(spec.targets)


def _clutter(spec: SceneSpec) -> np.ndarray:
    # separate stream so adding clutter leaves target phases and noise unchanged
    C, H, W = spec.dims
    rng = np.random.default_rng([spec.seed, 0xC1])
    field = (gaussian_filter(rng.standard_normal((H, W)), spec.clutter_length, mode="reflect")
             + 1j * gaussian_filter(rng.standard_normal((H, W)), spec.clutter_length, mode="reflect"))
    field *= spec.clutter / np.sqrt(np.mean(np.abs(field) ** 2))
    phases = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, C))
    return phases[:, None, None] * field


def random_scene_spec(seed: int, dims=(1, 64, 64), n_targets=4, amplitude=(10.0, 100.0),
                      noise_sigma=1.0, margin=PSF_HALF_WIDTH, min_separation=8, clutter=0.0,
                      clutter_length=6.0) -> SceneSpec:
    """Draw targets uniformly (log-uniform amplitude) and return a SceneSpec."""
    C, H, W = dims
    rng = np.random.default_rng([seed, 0x5CE7E])
    targets: list[Target] = []
    attempts = 0
    while len(targets) < n_targets and attempts < 1000:
        attempts += 1
        r = int(rng.integers(margin, H - margin))
        d = int(rng.integers(margin, W - margin))
        if any(max(abs(r - t.range_bin), abs(d - t.doppler_bin)) < min_separation for t in targets):
            continue
        amp = float(np.exp(rng.uniform(np.log(amplitude[0]), np.log(amplitude[1]))))
        targets.append(Target(r, d, amp, float(rng.uniform(-np.pi, np.pi))))
    return SceneSpec(tuple(targets), noise_sigma, tuple(dims), seed, clutter, clutter_length)


def scene_sequence(base: SceneSpec, n_frames: int, velocity: Sequence[tuple[int, int]] | None = None,
                   every: int = 4) -> list[SceneSpec]:
    """Frames of ``base`` with targets drifting one bin per ``every`` frames.

    Targets wrap around the map edges. Noise is redrawn per frame.
    """
    C, H, W = base.dims
    if velocity is None:
        velocity = [(1 if i % 2 == 0 else -1, 1 if i % 3 else 0) for i in range(len(base.targets))]
    specs = []
    for t in range(n_frames):
        step = t // every
        moved = tuple(
            Target((tg.range_bin + v[0] * step) % H, (tg.doppler_bin + v[1] * step) % W,
                   tg.amplitude, tg.phase_slope)
            for tg, v in zip(base.targets, velocity))
        specs.append(SceneSpec(moved, base.noise_sigma, base.dims, base.seed * 100003 + t,
                               base.clutter, base.clutter_length))
    return specs


# --------------------------------------------------------------------------
# RDT container


def _encode_header(channels: int, height: int, width: int, frames: int | None) -> bytes:
    hdr = {"channels": channels, "height": height, "width": width, "dtype": "f32le"}
    if frames is not None:
        hdr["frames"] = frames
    blob = json.dumps(hdr, separators=(",", ":")).encode("utf-8")
    return RDT_MAGIC + struct.pack("<I", len(blob)) + blob


def rdt_bytes(x: RadarTensor) -> bytes:
    return _encode_header(*x.shape, None) + x.data.astype("<f4").tobytes()


def rdt_sequence_bytes(frames: Sequence[RadarTensor]) -> bytes:
    if not frames:
        raise ValueError("empty frame sequence")
    shape = frames[0].shape
    for f in frames:
        if f.shape != shape:
            raise ShapeError(f"frame shape {f.shape} differs from {shape}")
    payload = b"".join(f.data.astype("<f4").tobytes() for f in frames)
    return _encode_header(*shape, len(frames)) + payload


def parse_rdt(buf: bytes) -> list[RadarTensor]:
    """Parse an RDT buffer holding one frame or a sequence of frames."""
    if len(buf) < len(RDT_MAGIC) or buf[:len(RDT_MAGIC)] != RDT_MAGIC:
        raise FormatError("not an RDT file (bad magic)")
    pos = len(RDT_MAGIC)
    if len(buf) < pos + 4:
        raise TruncatedPayloadError("RDT header length missing")
    (hlen,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    if len(buf) < pos + hlen:
        raise TruncatedPayloadError("RDT header truncated")
    try:
        hdr = json.loads(buf[pos:pos + hlen].decode("utf-8"))
        c, h, w = int(hdr["channels"]), int(hdr["height"]), int(hdr["width"])
        frames = int(hdr.get("frames", 1))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed RDT header: {exc}") from exc
    if hdr.get("dtype") != "f32le":
        raise FormatError(f"unsupported dtype {hdr.get('dtype')!r}")
    if min(c, h, w, frames) < 1:
        raise FormatError(f"invalid RDT dims {(frames, c, h, w)}")
    pos += hlen
    expected = frames * c * h * w * 4
    avail = len(buf) - pos
    if avail < expected:
        raise TruncatedPayloadError(f"payload holds {avail // 4} samples, header advertises {expected // 4}")
    if avail > expected:
        raise FormatError(f"payload holds {avail // 4} samples, header advertises {expected // 4}")
    arr = np.frombuffer(buf, dtype="<f4", count=expected // 4, offset=pos)
    arr = arr.astype(np.float32).reshape(frames, c, h, w)
    return [RadarTensor(a) for a in arr]


def write_rdt(x: RadarTensor, path) -> None:
    Path(path).write_bytes(rdt_bytes(x))


def write_rdt_sequence(frames: Sequence[RadarTensor], path) -> None:
    Path(path).write_bytes(rdt_sequence_bytes(frames))


def read_rdt(path) -> RadarTensor:
    frames = parse_rdt(Path(path).read_bytes())
    if len(frames) != 1:
        raise FormatError(f"expected a single frame, file holds {len(frames)}")
    return frames[0]


def read_rdt_sequence(path) -> list[RadarTensor]:
    return parse_rdt(Path(path).read_bytes())
