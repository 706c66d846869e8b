"""Wave-vector lattice and vorticity mode fields of the sine-bracket truncation.

The truncation keeps, for odd n >= 3, the n^2 - 1 nonzero integer wave
vectors with both components in [-(n-1)/2, (n-1)/2].  Vorticity on the
2pi-periodic square is represented by the Fourier coefficients

    zeta_hat(k) = (2pi)^-2 * integral zeta(x) exp(-i k.x) dx,

with the mean (k = 0) mode dropped; a real field satisfies the reality
condition zeta_hat(-k) = conj(zeta_hat(k)).  Sums of wave vectors wrap
component-wise into the symmetric range modulo n.  The wrap is part of the
truncated dynamics (Zeitlin 1991), not an aliasing artefact: a sum that
wraps to the origin simply leaves the retained set and contributes nothing.

Energy and enstrophy are the quadratic observables

    H = (2pi)^2/2 * sum_k zeta_hat(k) zeta_hat(-k) / |k|^2
    E = (2pi)^2/2 * sum_k zeta_hat(k) zeta_hat(-k)

both real and nonnegative under the reality condition.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field as dataclass_field
from typing import Iterator, Mapping, NamedTuple

import numpy as np

from .errors import ConsistencyError, ValidationError

TWO_PI = 2.0 * np.pi

#: Relative tolerance for the reality condition zeta_hat(-k) = conj(zeta_hat(k)).
REALITY_TOL = 1e-12

#: Relative bound on the imaginary residue of quantities that must be real.
IMAG_RESIDUE_TOL = 1e-14


class WaveVector(NamedTuple):
    """Integer wave vector (i1, i2) on the 2pi-periodic square."""

    i1: int
    i2: int

    def __neg__(self) -> "WaveVector":
        return WaveVector(-self.i1, -self.i2)

    def __add__(self, other) -> "WaveVector":  # type: ignore[override]
        return WaveVector(self.i1 + other[0], self.i2 + other[1])

    def cross(self, other: "WaveVector") -> int:
        """Third component of the vector product, i1*j2 - i2*j1."""
        return self.i1 * other[1] - self.i2 * other[0]

    def norm2(self) -> int:
        return self.i1 * self.i1 + self.i2 * self.i2


def _as_wave_vector(v) -> WaveVector:
    if isinstance(v, WaveVector):
        return v
    a, b = v
    return WaveVector(int(a), int(b))


@dataclass(frozen=True)
class TruncationGrid:
    """Retained wave-vector set for one odd truncation parameter n.

    Hashable and cheap to copy; the derived index tables are cached per n.
    Canonical mode order is row-major over (i1, i2), each running from
    -(n-1)/2 to (n-1)/2, with the origin skipped.
    """

    n: int

    def __post_init__(self) -> None:
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"truncation parameter must be odd and >= 3, got {self.n}")

    @property
    def half(self) -> int:
        return (self.n - 1) // 2

    @property
    def size(self) -> int:
        return self.n * self.n - 1

    # -- index tables -----------------------------------------------------

    @property
    def vectors(self) -> np.ndarray:
        """All retained wave vectors, shape (size, 2), canonical order."""
        return _grid_tables(self.n).vectors

    @property
    def norms2(self) -> np.ndarray:
        """|k|^2 for every retained vector, shape (size,)."""
        return _grid_tables(self.n).norms2

    @property
    def neg_index(self) -> np.ndarray:
        """neg_index[a] is the canonical index of -vectors[a]."""
        return _grid_tables(self.n).neg_index

    @property
    def offset_table(self) -> np.ndarray:
        """(n, n) map from offset coordinates (i1+half, i2+half) to canonical
        index, with -1 at the origin."""
        return _grid_tables(self.n).offset_table

    # -- membership and indexing ------------------------------------------

    def contains(self, v) -> bool:
        v = _as_wave_vector(v)
        if v == (0, 0):
            return False
        return abs(v.i1) <= self.half and abs(v.i2) <= self.half

    def index_of(self, v) -> int:
        v = _as_wave_vector(v)
        if not self.contains(v):
            raise ValueError(f"wave vector {tuple(v)} is not in the retained set for n={self.n}")
        flat = (v.i1 + self.half) * self.n + (v.i2 + self.half)
        origin = (self.n * self.n - 1) // 2
        return flat if flat < origin else flat - 1

    def vector_at(self, index: int) -> WaveVector:
        if not 0 <= index < self.size:
            raise ValueError(f"mode index {index} out of range for n={self.n}")
        i1, i2 = _grid_tables(self.n).vectors[index]
        return WaveVector(int(i1), int(i2))

    def __iter__(self) -> Iterator[WaveVector]:
        for i1, i2 in _grid_tables(self.n).vectors:
            yield WaveVector(int(i1), int(i2))

    def mod_reduce(self, v) -> WaveVector:
        """Component-wise reduction into [-(n-1)/2, (n-1)/2] modulo n."""
        v = _as_wave_vector(v)
        m, n = self.half, self.n
        return WaveVector((v.i1 + m) % n - m, (v.i2 + m) % n - m)


class _GridTables(NamedTuple):
    vectors: np.ndarray
    norms2: np.ndarray
    neg_index: np.ndarray
    offset_table: np.ndarray


@functools.lru_cache(maxsize=None)
def _grid_tables(n: int) -> _GridTables:
    m = (n - 1) // 2
    coords = np.arange(-m, m + 1)
    i1, i2 = np.meshgrid(coords, coords, indexing="ij")
    keep = (i1 != 0) | (i2 != 0)
    vectors = np.stack([i1[keep], i2[keep]], axis=1)
    vectors.setflags(write=False)

    norms2 = vectors[:, 0] ** 2 + vectors[:, 1] ** 2
    norms2.setflags(write=False)

    offset_table = np.full((n, n), -1, dtype=np.int64)
    offset_table[vectors[:, 0] + m, vectors[:, 1] + m] = np.arange(len(vectors))
    offset_table.setflags(write=False)

    neg_index = offset_table[-vectors[:, 0] + m, -vectors[:, 1] + m]
    neg_index.setflags(write=False)

    return _GridTables(vectors, norms2, neg_index, offset_table)


def build_grid(n: int) -> TruncationGrid:
    """Validate n and build the retained wave-vector set."""
    return TruncationGrid(int(n))


def mod_reduce(grid: TruncationGrid, v) -> WaveVector:
    return grid.mod_reduce(v)


@dataclass
class ModeField:
    """Vorticity mode coefficients on a truncation grid.

    ``coeffs`` is a complex vector of length grid.size in canonical order.
    The reality condition is a property of the data, not enforced on every
    write; use :func:`validate_reality` (or the energy/enstrophy entry
    points, which validate implicitly) at trust boundaries.
    """

    grid: TruncationGrid
    coeffs: np.ndarray = dataclass_field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.coeffs is None:
            self.coeffs = np.zeros(self.grid.size, dtype=np.complex128)
            return
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.shape != (self.grid.size,):
            raise ValidationError(
                f"coefficient vector has shape {coeffs.shape}, expected ({self.grid.size},)"
            )
        self.coeffs = coeffs

    @classmethod
    def zeros(cls, grid: TruncationGrid) -> "ModeField":
        return cls(grid)

    @classmethod
    def from_modes(
        cls,
        grid: TruncationGrid,
        modes: Mapping,
        symmetrize: bool = True,
    ) -> "ModeField":
        """Build a field from a {wave vector: coefficient} mapping.

        With ``symmetrize`` (default) every assignment also sets the mirror
        coefficient conj(c) at -k unless the mapping provides it explicitly,
        so the result satisfies the reality condition by construction.
        """
        out = cls.zeros(grid)
        explicit = {grid.index_of(v) for v in modes}
        for v, c in modes.items():
            idx = grid.index_of(v)
            out.coeffs[idx] = c
            mirror = grid.neg_index[idx]
            if symmetrize and mirror not in explicit:
                out.coeffs[mirror] = np.conj(c)
        return out

    def get(self, v) -> complex:
        return complex(self.coeffs[self.grid.index_of(v)])

    def copy(self) -> "ModeField":
        return ModeField(self.grid, self.coeffs.copy())

    def reality_residual(self) -> float:
        """max |zeta_hat(-k) - conj(zeta_hat(k))| relative to the field scale."""
        dev = np.max(np.abs(self.coeffs[self.grid.neg_index] - np.conj(self.coeffs)))
        scale = np.max(np.abs(self.coeffs))
        if scale == 0.0:
            return 0.0
        return float(dev / scale)


def validate_reality(field: ModeField, tol: float = REALITY_TOL) -> float:
    """Check the reality condition and return the relative residual."""
    residual = field.reality_residual()
    if residual > tol:
        raise ValidationError(
            f"reality condition violated: relative residual {residual:.3e} exceeds {tol:.1e}"
        )
    return residual


def _real_quadratic_sum(field: ModeField, weights: np.ndarray, label: str) -> float:
    """(2pi)^2/2 * sum_k w_k zeta_hat(k) zeta_hat(-k), checked to be real."""
    z = field.coeffs
    total = 0.5 * TWO_PI**2 * np.sum(weights * z * z[field.grid.neg_index])
    scale = 0.5 * TWO_PI**2 * np.sum(np.abs(weights) * np.abs(z) ** 2)
    if abs(total.imag) > IMAG_RESIDUE_TOL * max(scale, 1e-300):
        raise ConsistencyError(
            f"{label} acquired an imaginary part {total.imag:.3e} (scale {scale:.3e}); "
            "the input field is not conjugate-symmetric"
        )
    return float(total.real)


def energy(field: ModeField) -> float:
    """Kinetic energy (2pi)^2/2 * sum_k |k|^-2 zeta_hat(k) zeta_hat(-k)."""
    validate_reality(field)
    return _real_quadratic_sum(field, 1.0 / field.grid.norms2, "energy")


def enstrophy(field: ModeField) -> float:
    """Enstrophy (2pi)^2/2 * sum_k zeta_hat(k) zeta_hat(-k)."""
    validate_reality(field)
    return _real_quadratic_sum(field, np.ones(field.grid.size), "enstrophy")


def stream_function(field: ModeField) -> ModeField:
    """Stream function modes psi_hat(k) = -zeta_hat(k)/|k|^2 (mean-free gauge)."""
    return ModeField(field.grid, -field.coeffs / field.grid.norms2)


def _wrapped(field: ModeField, size: int) -> np.ndarray:
    """Embed the coefficients into a (size, size) array indexed by k mod size."""
    grid = field.grid
    out = np.zeros((size, size), dtype=np.complex128)
    v = grid.vectors
    out[v[:, 0] % size, v[:, 1] % size] = field.coeffs
    return out


def to_physical(field: ModeField, size: int | None = None) -> np.ndarray:
    """Evaluate the field on a uniform grid x_ab = (2pi a/size, 2pi b/size).

    Any size >= n resolves the truncation exactly.  Returns real samples of
    shape (size, size); the rounding-level imaginary part of the inverse
    transform is discarded after validating the reality condition.
    """
    grid = field.grid
    if size is None:
        size = grid.n
    if size < grid.n:
        raise ValueError(f"output resolution {size} cannot resolve n={grid.n} modes")
    validate_reality(field)
    w = _wrapped(field, size)
    samples = np.fft.ifft2(w) * size**2
    return np.ascontiguousarray(samples.real)


def from_physical(samples: np.ndarray, grid: TruncationGrid) -> ModeField:
    """Project real samples on the n x n collocation grid onto the mode set.

    The mean is discarded; components outside the retained set do not exist
    at this resolution, so the transform is exact for band-limited data.
    """
    samples = np.asarray(samples)
    if np.iscomplexobj(samples):
        raise ValidationError("physical samples must be real")
    if samples.shape != (grid.n, grid.n):
        raise ValidationError(
            f"sample array has shape {samples.shape}, expected ({grid.n}, {grid.n})"
        )
    spec = np.fft.fft2(samples.astype(np.float64)) / grid.n**2
    v = grid.vectors
    return ModeField(grid, spec[v[:, 0] % grid.n, v[:, 1] % grid.n])
