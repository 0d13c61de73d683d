"""
Spectral fields on a periodic box.

Coefficients follow the convention z_hat_k = (1/vol) * integral of z exp(-i xi.x),
so that ||z||^2_{L2} = vol * sum_k |z_hat_k|^2 and d/dx_j <-> i xi_j.
Arrays keep numpy FFT ordering on the trailing d axes.

Author: Hypocoax Team
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np

from ..errors import DimensionMismatch

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-12


def is_power_of_two(value: int) -> bool:
    return value > 0 and (value & (value - 1)) == 0


def _as_box(box_length: Union[float, Sequence[float]], d: int) -> Tuple[float, ...]:
    box = np.broadcast_to(np.asarray(box_length, dtype=float), (d,))
    if np.any(box <= 0):
        raise ValueError(f"Box lengths must be positive, got {tuple(box)}")
    return tuple(float(b) for b in box)


class SpectralGrid:
    """FFT geometry shared by every field with the same resolution and box."""

    def __init__(self, resolution: Sequence[int], box_length: Union[float, Sequence[float]]):
        self.resolution = tuple(int(r) for r in resolution)
        for size in self.resolution:
            if not is_power_of_two(size):
                raise ValueError(f"Grid resolution must be a power of two, got {size}")
        self.d = len(self.resolution)
        self.box_length = _as_box(box_length, self.d)
        self.volume = float(np.prod(self.box_length))
        self.size = int(np.prod(self.resolution))
        self.axes = tuple(range(-self.d, 0))

        ks = [np.fft.fftfreq(size, d=1.0 / size) for size in self.resolution]
        self.wavenumbers = np.stack(np.meshgrid(*ks, indexing="ij"))
        box = np.asarray(self.box_length).reshape((self.d,) + (1,) * self.d)
        self.xi = 2.0 * np.pi * self.wavenumbers / box
        self.magnitude = np.sqrt(np.sum(self.xi ** 2, axis=0))

        cutoff = np.asarray([size // 3 for size in self.resolution]).reshape((self.d,) + (1,) * self.d)
        self.dealias_mask = np.all(np.abs(self.wavenumbers) <= cutoff, axis=0)

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(coeffs, axes=self.axes).real * self.size

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        return np.fft.fftn(values, axes=self.axes) / self.size

    def derivative(self, coeffs: np.ndarray, j: int) -> np.ndarray:
        return 1j * self.xi[j] * coeffs

    def dealias(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs * self.dealias_mask

    def coordinates(self) -> np.ndarray:
        axes = [np.arange(size) * length / size for size, length in zip(self.resolution, self.box_length)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))

    def reflect(self, coeffs: np.ndarray) -> np.ndarray:
        """Reindex k -> -k on the trailing axes."""
        out = coeffs
        for axis in self.axes:
            out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
        return out

    def enforce_hermitian(self, coeffs: np.ndarray) -> np.ndarray:
        return 0.5 * (coeffs + np.conj(self.reflect(coeffs)))

    def hermitian_defect(self, coeffs: np.ndarray) -> float:
        if coeffs.size == 0:
            return 0.0
        return float(np.max(np.abs(coeffs - np.conj(self.reflect(coeffs)))))


@lru_cache(maxsize=32)
def spectral_grid(resolution: Tuple[int, ...], box_length: Tuple[float, ...]) -> SpectralGrid:
    return SpectralGrid(resolution, box_length)


@dataclass(eq=False)
class SpectralField:
    """n-component real field held as Fourier coefficients, shape (n, *resolution)."""
    coeffs: np.ndarray
    box_length: Tuple[float, ...]

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128)
        if coeffs.ndim < 2:
            raise DimensionMismatch(
                f"Coefficients need shape (n_components, *resolution), got {coeffs.shape}"
            )
        self.coeffs = coeffs
        self.box_length = _as_box(self.box_length, coeffs.ndim - 1)
        for size in coeffs.shape[1:]:
            if not is_power_of_two(size):
                raise ValueError(f"Grid resolution must be a power of two, got {size}")

    # -- construction ------------------------------------------------------

    @classmethod
    def zeros(cls, n_components: int, resolution: Sequence[int],
              box_length: Union[float, Sequence[float]]) -> "SpectralField":
        return cls(np.zeros((n_components,) + tuple(resolution), dtype=np.complex128), box_length)

    @classmethod
    def from_physical(cls, values: np.ndarray,
                      box_length: Union[float, Sequence[float]]) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        grid = spectral_grid(values.shape[1:], _as_box(box_length, values.ndim - 1))
        return cls(grid.to_spectral(values), grid.box_length)

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(coeffs, self.box_length)

    def copy(self) -> "SpectralField":
        return self.with_coeffs(self.coeffs.copy())

    # -- geometry ----------------------------------------------------------

    @property
    def grid(self) -> SpectralGrid:
        return spectral_grid(self.resolution, self.box_length)

    @property
    def d(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def resolution(self) -> Tuple[int, ...]:
        return tuple(self.coeffs.shape[1:])

    @property
    def volume(self) -> float:
        return float(np.prod(self.box_length))

    # -- views and transforms ----------------------------------------------

    def to_physical(self) -> np.ndarray:
        return self.grid.to_physical(self.coeffs)

    def components(self, start: int, stop: int = None) -> "SpectralField":
        stop = self.n_components if stop is None else stop
        return self.with_coeffs(self.coeffs[start:stop])

    def gradient(self) -> np.ndarray:
        """Coefficients of the partial derivatives, shape (d, n, *resolution)."""
        return np.stack([self.grid.derivative(self.coeffs, j) for j in range(self.d)])

    def dealiased(self) -> "SpectralField":
        return self.with_coeffs(self.grid.dealias(self.coeffs))

    def enforce_hermitian(self) -> "SpectralField":
        return self.with_coeffs(self.grid.enforce_hermitian(self.coeffs))

    def hermitian_defect(self) -> float:
        return self.grid.hermitian_defect(self.coeffs)

    def rescaled(self, lam: float) -> "SpectralField":
        """The field x -> z(lam x), living on the box shrunk by lam."""
        return SpectralField(self.coeffs.copy(), tuple(b / lam for b in self.box_length))

    def mean_mode(self) -> np.ndarray:
        index = (slice(None),) + (0,) * self.d
        return self.coeffs[index].real.copy()

    def l2_norm(self) -> float:
        return float(np.sqrt(self.volume * np.sum(np.abs(self.coeffs) ** 2)))

    # -- arithmetic --------------------------------------------------------

    def _check_compatible(self, other: "SpectralField"):
        if self.coeffs.shape != other.coeffs.shape or not np.allclose(self.box_length, other.box_length):
            raise DimensionMismatch(
                f"Incompatible fields {self.coeffs.shape}/{self.box_length} "
                f"and {other.coeffs.shape}/{other.box_length}"
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__
