"""Uniform symmetric grids and sampled test functions.

The grid covers [-X, X)^n with N (a power of two) points per axis; the
matching frequency grid is xi_k = k*pi/X for k in [-N/2, N/2), so that
dx * dxi = 2*pi/N and the unitary Fourier transform maps grid samples
to frequency samples via one FFT with alternating-sign factors.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

#: documented minimum points-per-axis for verification runs
MIN_VERIFY_POINTS = 64


def _is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on [-X, X)^n, FFT-compatible by construction."""

    n: int
    half_width: float
    points: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        if self.half_width <= 0:
            raise ValueError("half_width must be positive")
        if not _is_power_of_two(self.points) or self.points < 16:
            raise ValueError(f"points must be a power of two >= 16, got {self.points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.points

    @property
    def dxi(self) -> float:
        return math.pi / self.half_width

    @property
    def x_nodes(self) -> np.ndarray:
        return -self.half_width + self.dx * np.arange(self.points)

    @property
    def xi_nodes(self) -> np.ndarray:
        return self.dxi * np.arange(-self.points // 2, self.points // 2)

    @property
    def nyquist(self) -> float:
        return math.pi / self.dx

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points,) * self.n

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.x_nodes] * self.n), indexing="ij")

    def refine(self, factor: int = 2) -> "GridSpec":
        """Same window, `factor` times the nodes per axis."""
        return GridSpec(self.n, self.half_width, self.points * factor)

    def radius_squared(self) -> np.ndarray:
        mesh = self.mesh()
        return sum(axis**2 for axis in mesh)


@dataclass(frozen=True)
class SampledFunction:
    """Complex samples of a function at the nodes of a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=complex)
        if vals.shape != self.grid.shape:
            raise ValueError(f"values shape {vals.shape} != grid shape {self.grid.shape}")
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError("values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.grid.n

    def norm_l2(self) -> float:
        """Riemann-sum L2 norm, (sum |psi|^2 dx^n)^(1/2)."""
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.dx**self.n))

    def inner(self, other: "SampledFunction") -> complex:
        if other.grid != self.grid:
            raise ValueError("mismatched grids")
        return complex(np.vdot(other.values, self.values) * self.grid.dx**self.n)

    def normalized(self) -> "SampledFunction":
        return SampledFunction(self.grid, self.values / self.norm_l2())

    def reflected(self) -> "SampledFunction":
        """Samples of x -> psi(-x); the -X edge node is its own image."""
        vals = self.values
        for axis in range(self.n):
            vals = np.roll(np.flip(vals, axis=axis), 1, axis=axis)
        return SampledFunction(self.grid, vals)


# ---------------------------------------------------------------------------
# built-in families
# ---------------------------------------------------------------------------

_HERMITE_MAX = 4


def _hermite_1d(k: int, x: np.ndarray) -> np.ndarray:
    coeffs = np.zeros(k + 1)
    coeffs[k] = 1.0
    h = np.polynomial.hermite.hermval(x, coeffs)
    return h * np.exp(-x * x / 2.0) / math.sqrt(2.0**k * math.factorial(k) * math.sqrt(math.pi))


@dataclass(frozen=True)
class FunctionSpec:
    """Descriptor for one member of the built-in function families.

    kind:  gauss | hermite | chirp
    shift: center offset (length-n vector, broadcast from scalar)
    scale: Gaussian width multiplier
    k:     Hermite order along axis 0 (0..4), Gaussian along other axes
    c:     quadratic chirp rate, multiplies exp(i c |x|^2 / 2)
    """

    kind: str = "gauss"
    shift: tuple = (0.0,)
    scale: float = 1.0
    k: int = 0
    c: float = 0.0

    def __post_init__(self):
        if self.kind not in ("gauss", "hermite", "chirp"):
            raise ValueError(f"unknown function family {self.kind!r}")
        if self.kind == "hermite" and not (0 <= self.k <= _HERMITE_MAX):
            raise ValueError(f"hermite order must be in 0..{_HERMITE_MAX}")
        if self.scale <= 0:
            raise ValueError("scale must be positive")
        shift = self.shift if isinstance(self.shift, tuple) else (float(self.shift),)
        object.__setattr__(self, "shift", tuple(float(s) for s in shift))

    def label(self) -> str:
        parts = [self.kind]
        if any(self.shift):
            parts.append("shift=" + "/".join(f"{s:g}" for s in self.shift))
        if self.scale != 1.0:
            parts.append(f"scale={self.scale:g}")
        if self.kind == "hermite":
            parts.append(f"k={self.k}")
        if self.c:
            parts.append(f"c={self.c:g}")
        return parts[0] + (":" + ",".join(parts[1:]) if parts[1:] else "")


def parse_descriptor(text: str) -> FunctionSpec:
    """Parse 'kind[:key=val,...]'; vector values use '/' separators."""
    head, _, tail = text.strip().partition(":")
    kwargs = {}
    if tail:
        for item in tail.split(","):
            key, _, val = item.partition("=")
            key = key.strip()
            if key == "shift":
                kwargs["shift"] = tuple(float(v) for v in val.split("/"))
            elif key in ("scale", "c"):
                kwargs[key] = float(val)
            elif key == "k":
                kwargs["k"] = int(val)
            else:
                raise ValueError(f"unknown descriptor key {key!r} in {text!r}")
    return FunctionSpec(kind=head.strip(), **kwargs)


def discretize(spec, grid: GridSpec) -> SampledFunction:
    """Sample one built-in family member, normalized to unit grid L2 norm."""
    if isinstance(spec, str):
        spec = parse_descriptor(spec)
    shift = np.zeros(grid.n)
    shift[: len(spec.shift)] = spec.shift[: grid.n]
    mesh = grid.mesh()
    centered = [mesh[i] - shift[i] for i in range(grid.n)]

    if spec.kind == "hermite":
        vals = _hermite_1d(spec.k, centered[0] / spec.scale).astype(complex)
        for axis in range(1, grid.n):
            vals = vals * _hermite_1d(0, centered[axis] / spec.scale)
    else:
        r2 = sum(c**2 for c in centered)
        vals = np.exp(-r2 / (2.0 * spec.scale**2)).astype(complex)
    if spec.kind == "chirp" or spec.c:
        r2_abs = sum(c**2 for c in centered)
        vals = vals * np.exp(0.5j * spec.c * r2_abs)

    out = SampledFunction(grid, vals).normalized()
    assert abs(out.norm_l2() - 1.0) <= 1e-8
    return out


def builtin_corpus(n: int) -> list[FunctionSpec]:
    """Six mutually non-orthogonal Gaussian-family functions.

    Kept non-orthogonal on purpose: relative-error checks of pairing
    identities divide by |<psi, phi>|^2.
    """
    return [
        FunctionSpec("gauss"),
        FunctionSpec("gauss", shift=(0.5,) * n),
        FunctionSpec("gauss", shift=(-0.8, 0.4)[:n] or (-0.8,)),
        FunctionSpec("gauss", scale=1.4),
        FunctionSpec("chirp", c=1.0),
        FunctionSpec("chirp", c=-0.6, scale=0.8, shift=(0.3,) * n),
    ]


def hermite_corpus(n: int) -> list[FunctionSpec]:
    return [FunctionSpec("hermite", k=k) for k in range(1, _HERMITE_MAX + 1)]


def random_bandlimited(grid: GridSpec, rng: np.random.Generator,
                       max_order: int = 10) -> SampledFunction:
    """Seeded random function: complex Hermite mixture, unit norm.

    Effectively band- and space-limited (phase-space radius about
    sqrt(2*max_order + 1)), so Riemann sums on verification grids are
    accurate to near machine precision.
    """
    mesh = grid.mesh()
    coeffs = rng.standard_normal(max_order + 1) + 1j * rng.standard_normal(max_order + 1)
    vals = np.zeros(grid.shape, dtype=complex)
    for k in range(max_order + 1):
        term = _hermite_1d(k, mesh[0]).astype(complex)
        for axis in range(1, grid.n):
            term = term * _hermite_1d(0, mesh[axis])
        vals += coeffs[k] * term
    return SampledFunction(grid, vals).normalized()


# ---------------------------------------------------------------------------
# fixtures: CSV and raw binary
# ---------------------------------------------------------------------------

def save_function_csv(path, f: SampledFunction) -> None:
    """Columns: one x coordinate per axis, then re, im."""
    mesh = f.grid.mesh()
    cols = [m.ravel() for m in mesh] + [f.values.real.ravel(), f.values.imag.ravel()]
    header = ",".join([f"x{i+1}" for i in range(f.n)] + ["re", "im"])
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
               header=header, comments="")


def load_function_csv(path, grid: GridSpec) -> SampledFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    vals = (data[:, -2] + 1j * data[:, -1]).reshape(grid.shape)
    return SampledFunction(grid, vals)


def save_function_bin(path, f: SampledFunction) -> None:
    """8-byte header (uint32 n, uint32 N, little-endian), then raw
    little-endian complex64 samples in C order."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", f.n, f.grid.points))
        fh.write(np.ascontiguousarray(f.values.astype("<c8")).tobytes())


def load_function_bin(path, half_width: float) -> SampledFunction:
    with open(path, "rb") as fh:
        n, points = struct.unpack("<II", fh.read(8))
        raw = np.frombuffer(fh.read(), dtype="<c8")
    grid = GridSpec(n, half_width, points)
    return SampledFunction(grid, raw.astype(complex).reshape(grid.shape))
