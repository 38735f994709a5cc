"""Time-frequency transforms and norms on the grid.

Short-time Fourier transform, cross-Wigner distribution, and the mixed
Lebesgue norms of their magnitudes in either integration order (x-inner
for modulation norms, xi-inner for amalgam norms).  Norms never require
materializing a full phase-space array: a streaming engine walks the
x-slices in chunks and feeds accumulators, which is what makes large
one-dimensional grids and n = 2 tractable.

Windows and signals are assumed concentrated well inside the window
[-X, X); window shifts wrap circularly, which is then exact up to the
negligible wrapped tails.
"""
from __future__ import annotations

import enum
import math
import struct
from dataclasses import dataclass

import numpy as np

from .sampling import GridSpec, SampledFunction, discretize

#: full phase-space arrays in 2D are capped at this many points per axis
_FULL_ARRAY_CAP_2D = 64

_CHUNK_ELEMENTS = 2_097_152


class Kind(enum.Enum):
    STFT = "stft"
    WIGNER = "wigner"


class NormOrder(enum.Enum):
    X_INNER = "x_inner"    # inner integral over x, outer over xi
    XI_INNER = "xi_inner"  # inner integral over xi, outer over x


@dataclass(frozen=True)
class PhaseSpaceArray:
    """Samples on the 2n-dimensional grid, x indices then xi indices."""

    grid: GridSpec
    values: np.ndarray
    kind: Kind

    def __post_init__(self):
        expected = self.grid.shape * 2
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != expected:
            raise ValueError(f"values shape {vals.shape} != {expected}")
        if not np.all(np.isfinite(vals.view(float))):
            raise ValueError("values must be finite")
        vals = np.ascontiguousarray(vals)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return self.grid.n


def _check_pair(psi: SampledFunction, phi: SampledFunction) -> GridSpec:
    if psi.grid != phi.grid:
        raise ValueError("mismatched grids")
    return psi.grid


def _sign_vector(points: int) -> np.ndarray:
    return np.where(np.arange(-points // 2, points // 2) % 2 == 0, 1.0, -1.0)


def _spectral_sum(batch: np.ndarray, grid: GridSpec) -> np.ndarray:
    """sum_y exp(-i xi_k . y) v(y) for a batch of y-arrays (last n axes)."""
    n, pts = grid.n, grid.points
    axes = tuple(range(batch.ndim - n, batch.ndim))
    spec = np.fft.fftshift(np.fft.fftn(batch, axes=axes), axes=axes)
    signs = _sign_vector(pts)
    for k, axis in enumerate(axes):
        shape = [1] * batch.ndim
        shape[axis] = pts
        spec = spec * signs.reshape(shape)
    return spec


def _window_chunk(window_values: np.ndarray, flat_idx: np.ndarray,
                  grid: GridSpec) -> np.ndarray:
    """Gather conj(phi(y - x_i)) for a chunk of flattened x indices."""
    pts, n = grid.points, grid.n
    multi = np.unravel_index(flat_idx, grid.shape)
    out_shape = (flat_idx.size,) + grid.shape
    gather = []
    for axis in range(n):
        j = np.arange(pts)
        shape = [1] * (n + 1)
        shape[axis + 1] = pts
        offs = (j.reshape(shape) - multi[axis].reshape((-1,) + (1,) * n)
                + pts // 2) % pts
        gather.append(np.broadcast_to(offs, out_shape))
    return np.conj(window_values[tuple(gather)])


def _stft_stream(psi: SampledFunction, window: SampledFunction):
    """Yield (flat x-index array, V-chunk) covering all x-nodes.

    V(x, xi) = (2 pi)^{-n} sum_y exp(-i xi . y) psi(y) conj(phi(y - x)) dx^n.
    """
    grid = _check_pair(psi, window)
    n, pts = grid.n, grid.points
    total = pts**n
    scale = grid.dx**n / (2.0 * math.pi) ** n
    chunk = max(1, _CHUNK_ELEMENTS // pts**n)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        sections = psi.values[None, ...] * _window_chunk(window.values, idx, grid)
        yield idx, _spectral_sum(sections, grid) * scale


def stft(psi: SampledFunction, phi: SampledFunction) -> PhaseSpaceArray:
    """Short-time Fourier transform of psi against window phi."""
    grid = _check_pair(psi, phi)
    if float(np.max(np.abs(phi.values))) == 0.0:
        raise ValueError("window must be nonzero")
    if grid.n == 2 and grid.points > _FULL_ARRAY_CAP_2D:
        raise ValueError(
            f"full 2D phase-space array needs points <= {_FULL_ARRAY_CAP_2D}; "
            "use the norm engine instead")
    out = np.empty(grid.shape * 2, dtype=complex)
    flat = out.reshape(grid.points**grid.n, *grid.shape)
    for idx, chunk in _stft_stream(psi, phi):
        flat[idx] = chunk
    return PhaseSpaceArray(grid=grid, values=out, kind=Kind.STFT)


# ---------------------------------------------------------------------------
# cross-Wigner distribution
# ---------------------------------------------------------------------------

def _refine_dyadic(f: SampledFunction) -> np.ndarray:
    """Band-limited samples on the doubled grid (trigonometric zero-pad)."""
    grid = f.grid
    n, pts = grid.n, grid.points
    spec = np.fft.fftshift(np.fft.fftn(f.values))
    padded = np.zeros((2 * pts,) * n, dtype=complex)
    sl = tuple(slice(pts // 2, pts // 2 + pts) for _ in range(n))
    padded[sl] = spec
    return np.fft.ifftn(np.fft.ifftshift(padded)) * 2**n


def _section_indices(flat_idx: np.ndarray, grid: GridSpec):
    """Refined-lattice indices of x +- y/2 for a chunk of x-nodes.

    With x_i and y_j both on the base grid, x_i +- y_j/2 lands exactly on
    the dyadically refined grid at indices 2i +- j -+ N/2; points outside
    [-X, X) read zero.
    """
    pts, n = grid.points, grid.n
    multi = np.unravel_index(flat_idx, grid.shape)
    j = np.arange(pts)
    plus_idx, minus_idx, valid = [], [], None
    out_shape = (flat_idx.size,) + grid.shape
    for axis in range(n):
        shape = [1] * (n + 1)
        shape[axis + 1] = pts
        i_ax = multi[axis].reshape((-1,) + (1,) * n)
        j_ax = j.reshape(shape)
        up = 2 * i_ax + j_ax - pts // 2
        dn = 2 * i_ax - j_ax + pts // 2
        ok = (up >= 0) & (up < 2 * pts) & (dn >= 0) & (dn < 2 * pts)
        ok = np.broadcast_to(ok, out_shape)
        valid = ok if valid is None else (valid & ok)
        plus_idx.append(np.broadcast_to(np.clip(up, 0, 2 * pts - 1), out_shape))
        minus_idx.append(np.broadcast_to(np.clip(dn, 0, 2 * pts - 1), out_shape))
    return tuple(plus_idx), tuple(minus_idx), valid


def _wigner_sections(fine_psi: np.ndarray, fine_phi: np.ndarray,
                     indices) -> np.ndarray:
    plus_idx, minus_idx, valid = indices
    sections = fine_psi[plus_idx] * np.conj(fine_phi[minus_idx])
    sections[~valid] = 0.0
    return sections


def _wigner_stream(psi: SampledFunction, phi: SampledFunction):
    grid = _check_pair(psi, phi)
    pts, n = grid.points, grid.n
    fine_psi = _refine_dyadic(psi)
    fine_phi = _refine_dyadic(phi)
    scale = grid.dx**n / (2.0 * math.pi) ** n
    total = pts**n
    chunk = max(1, _CHUNK_ELEMENTS // pts**n)
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        sections = _wigner_sections(fine_psi, fine_phi, _section_indices(idx, grid))
        yield idx, _spectral_sum(sections, grid) * scale


def cross_wigner(psi: SampledFunction, phi: SampledFunction) -> PhaseSpaceArray:
    """Cross-Wigner distribution W(psi, phi) on the phase-space grid."""
    grid = _check_pair(psi, phi)
    if grid.n == 2 and grid.points > _FULL_ARRAY_CAP_2D:
        raise ValueError(
            f"full 2D phase-space array needs points <= {_FULL_ARRAY_CAP_2D}; "
            "use moyal_gram / the norm engine instead")
    out = np.empty(grid.shape * 2, dtype=complex)
    flat = out.reshape(grid.points**grid.n, *grid.shape)
    for idx, chunk in _wigner_stream(psi, phi):
        flat[idx] = chunk
    return PhaseSpaceArray(grid=grid, values=out, kind=Kind.WIGNER)


def moyal_gram(functions: list[SampledFunction]) -> np.ndarray:
    """Gram matrix G[a, b] = <W f_a, W f_b> on the phase-space grid.

    Streams the Wigner slices of all functions together so the 2n-dim
    arrays are never materialized; entries match the grid inner product
    of full cross_wigner arrays exactly.
    """
    if not functions:
        raise ValueError("need at least one function")
    grid = functions[0].grid
    for f in functions[1:]:
        _check_pair(functions[0], f)
    pts, n = grid.points, grid.n
    fines = [_refine_dyadic(f) for f in functions]
    scale = grid.dx**n / (2.0 * math.pi) ** n
    cell = grid.dx**n * grid.dxi**n
    m = len(functions)
    gram = np.zeros((m, m), dtype=complex)
    total = pts**n
    chunk = max(1, 4 * _CHUNK_ELEMENTS // (pts**n * m))
    for lo in range(0, total, chunk):
        idx = np.arange(lo, min(lo + chunk, total))
        indices = _section_indices(idx, grid)
        stacked = np.stack([_wigner_sections(fine, fine, indices) for fine in fines])
        slices = _spectral_sum(stacked, grid) * scale
        flat = slices.reshape(m, -1)
        gram += (flat @ flat.conj().T) * cell
    # gram[a, b] above accumulates sum W_a conj(W_b) = <W_a, W_b>
    return gram


def moyal_pairing(psi: SampledFunction, phi: SampledFunction) -> complex:
    """<W psi, W phi> over the grid, computed slice by slice."""
    return complex(moyal_gram([psi, phi])[0, 1])


# ---------------------------------------------------------------------------
# mixed norms
# ---------------------------------------------------------------------------

def _validate_exponents(p: float, q: float) -> None:
    if p < 1 or q < 1:
        raise ValueError(f"exponents must satisfy p, q >= 1, got p={p}, q={q}")


def mixed_norm(a: PhaseSpaceArray, p: float, q: float, order: NormOrder) -> float:
    """Riemann mixed L^{p,q} norm of |a| in the requested order.

    X_INNER integrates x first (modulation-type), XI_INNER integrates xi
    first (amalgam-type); infinite exponents are grid maxima.
    """
    _validate_exponents(p, q)
    n = a.n
    mag = np.abs(a.values)
    x_axes = tuple(range(n))
    xi_axes = tuple(range(n, 2 * n))
    if order is NormOrder.X_INNER:
        inner_axes, inner_cell = x_axes, a.grid.dx**n
        outer_cell = a.grid.dxi**n
    else:
        inner_axes, inner_cell = xi_axes, a.grid.dxi**n
        outer_cell = a.grid.dx**n
    if math.isinf(p):
        inner = mag.max(axis=inner_axes)
    else:
        inner = (np.sum(mag**p, axis=inner_axes) * inner_cell) ** (1.0 / p)
    if math.isinf(q):
        return float(inner.max())
    return float((np.sum(inner**q) * outer_cell) ** (1.0 / q))


class _MixedAccumulator:
    """One streamed mixed norm; sees V-chunks shaped (x-chunk, xi-grid)."""

    def __init__(self, p: float, q: float, order: NormOrder, grid: GridSpec):
        _validate_exponents(p, q)
        self.p, self.q, self.order, self.grid = p, q, order, grid
        n = grid.n
        self.xi_size = grid.points**n
        if order is NormOrder.X_INNER:
            self.state = np.zeros(self.xi_size)
        else:
            self.pieces: list[np.ndarray] = []

    def update(self, chunk: np.ndarray) -> None:
        mag = np.abs(chunk).reshape(chunk.shape[0], self.xi_size)
        n = self.grid.n
        if self.order is NormOrder.X_INNER:
            if math.isinf(self.p):
                np.maximum(self.state, mag.max(axis=0), out=self.state)
            else:
                self.state += np.sum(mag**self.p, axis=0) * self.grid.dx**n
        else:
            if math.isinf(self.p):
                inner = mag.max(axis=1)
            else:
                inner = (np.sum(mag**self.p, axis=1) * self.grid.dxi**n) ** (1.0 / self.p)
            self.pieces.append(inner)

    def result(self) -> float:
        n = self.grid.n
        if self.order is NormOrder.X_INNER:
            inner = self.state if math.isinf(self.p) else self.state ** (1.0 / self.p)
            if math.isinf(self.q):
                return float(inner.max())
            return float((np.sum(inner**self.q) * self.grid.dxi**n) ** (1.0 / self.q))
        inner = np.concatenate(self.pieces)
        if math.isinf(self.q):
            return float(inner.max())
        return float((np.sum(inner**self.q) * self.grid.dx**n) ** (1.0 / self.q))


def default_window(grid: GridSpec) -> SampledFunction:
    """The pinned unit-norm standard Gaussian window."""
    return discretize("gauss", grid)


def stft_mixed_norms(psi: SampledFunction, window: SampledFunction,
                     requests: list[tuple[float, float, NormOrder]]) -> list[float]:
    """Several mixed norms of V_window(psi) in one streaming pass."""
    grid = _check_pair(psi, window)
    accs = [_MixedAccumulator(p, q, order, grid) for p, q, order in requests]
    for _, chunk in _stft_stream(psi, window):
        for acc in accs:
            acc.update(chunk)
    return [acc.result() for acc in accs]


def modulation_norm(psi: SampledFunction, p: float, q: float,
                    window: SampledFunction | None = None) -> float:
    """Modulation norm: mixed (p, q) norm of the STFT, x integral inner."""
    window = default_window(psi.grid) if window is None else window
    return stft_mixed_norms(psi, window, [(p, q, NormOrder.X_INNER)])[0]


def amalgam_norm(psi: SampledFunction, p: float, q: float,
                 window: SampledFunction | None = None) -> float:
    """Amalgam norm W(FL^p, L^q): same data, xi integral inner."""
    window = default_window(psi.grid) if window is None else window
    return stft_mixed_norms(psi, window, [(p, q, NormOrder.XI_INNER)])[0]


def wigner_mixed_norms(psi: SampledFunction, phi: SampledFunction,
                       requests: list[tuple[float, float, NormOrder]]) -> list[float]:
    """Mixed norms of |W(psi, phi)| without materializing the array."""
    grid = _check_pair(psi, phi)
    accs = [_MixedAccumulator(p, q, order, grid) for p, q, order in requests]
    for _, chunk in _wigner_stream(psi, phi):
        for acc in accs:
            acc.update(chunk)
    return [acc.result() for acc in accs]


# ---------------------------------------------------------------------------
# fixtures
# ---------------------------------------------------------------------------

def save_phase_csv(path, a: PhaseSpaceArray) -> None:
    """Columns: x coordinates, xi coordinates, re, im."""
    grid = a.grid
    n = grid.n
    axes = [grid.x_nodes] * n + [grid.xi_nodes] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    cols = [m.ravel() for m in mesh] + [a.values.real.ravel(), a.values.imag.ravel()]
    header = ",".join([f"x{i+1}" for i in range(n)] + [f"xi{i+1}" for i in range(n)]
                      + ["re", "im"])
    np.savetxt(path, np.column_stack(cols), delimiter=",", fmt="%.17g",
               header=header, comments="")


def save_phase_bin(path, a: PhaseSpaceArray) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", a.n, a.grid.points))
        fh.write(np.ascontiguousarray(a.values.astype("<c8")).tobytes())


def load_phase_bin(path, half_width: float, kind: Kind) -> PhaseSpaceArray:
    with open(path, "rb") as fh:
        n, points = struct.unpack("<II", fh.read(8))
        raw = np.frombuffer(fh.read(), dtype="<c8")
    grid = GridSpec(n, half_width, points)
    return PhaseSpaceArray(grid, raw.astype(complex).reshape(grid.shape * 2), kind)
