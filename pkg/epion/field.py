"""Euler-Poisson ion lab - periodic grids and spectral fields"""

import math
import struct
import logging
import numpy as np
from cached_property import cached_property
from epion.misc import LIGHT_ASSERTS, ConfigError, OutputError

# Module's logger
LOGGER = logging.getLogger(__name__)

# Field file header: magic, format version, grid size, domain length
FILE_HEADER = struct.Struct("<8sIId")
# Field file magic
FILE_MAGIC = b"EPIONFLD"
# Field file format version
FILE_VERSION = 1
# Field file data type: complex interleaved little-endian 64-bit floats
FILE_DTYPE = np.dtype("<c16")


class Grid:
    """A uniform square grid on a periodic domain [-L/2, L/2)^2"""

    def __init__(self, size, length):
        """
        Initialize the grid.

        Args:
            size:   Number of points along each axis, a power of two, at
                    least two, or an even number for padded grids.
            length: The (positive) domain length along each axis.
        """
        assert isinstance(size, int) and size >= 2 and size % 2 == 0
        assert isinstance(length, (int, float)) and length > 0
        self.size = size
        self.length = float(length)
        self.spacing = self.length / size
        self.cell_area = self.spacing ** 2

    def __eq__(self, other):
        return isinstance(other, Grid) and \
            (self.size, self.length) == (other.size, other.length)

    def __hash__(self):
        return hash((self.size, self.length))

    def __repr__(self):
        return f"Grid({self.size}, {self.length!r})"

    @cached_property
    def coords(self):
        """Centered coordinates along an axis, with zero at index N/2"""
        return (np.arange(self.size) - self.size // 2) * self.spacing

    @cached_property
    def x(self):
        """A pair of physical coordinate arrays (x1, x2), "ij" indexing"""
        x1, x2 = np.meshgrid(self.coords, self.coords, indexing="ij")
        return x1, x2

    @cached_property
    def abs_x(self):
        """Distance of each grid point to the domain center"""
        return np.hypot(*self.x)

    @cached_property
    def wavenumbers(self):
        """Angular wavenumbers along an axis, in numpy FFT order"""
        return 2 * np.pi * np.fft.fftfreq(self.size, d=self.spacing)

    @cached_property
    def xi(self):
        """A pair of frequency coordinate arrays (xi1, xi2)"""
        xi1, xi2 = np.meshgrid(self.wavenumbers, self.wavenumbers,
                               indexing="ij")
        return xi1, xi2

    @cached_property
    def abs_xi(self):
        """Frequency magnitude |xi| of each mode"""
        return np.hypot(*self.xi)

    @cached_property
    def centering(self):
        """Phases moving the transform origin to physical index N/2"""
        return np.exp(-0.5j * self.length * (self.xi[0] + self.xi[1]))

    @cached_property
    def derivative_symbols(self):
        """Symbols i*xi1, i*xi2 with the Nyquist modes zeroed"""
        symbols = []
        for xi in self.xi:
            symbol = 1j * xi
            nyquist = np.abs(np.abs(xi) - self.nyquist) < 1e-9 * self.nyquist
            symbol[nyquist] = 0
            symbols.append(symbol)
        return tuple(symbols)

    @property
    def nyquist(self):
        """The Nyquist (largest resolved) angular wavenumber"""
        return np.pi / self.spacing

    @property
    def lowest_wavenumber(self):
        """The lowest non-zero resolved angular wavenumber"""
        return 2 * np.pi / self.length

    def padded(self, factor):
        """
        Create a finer grid on the same domain, for dealiased evaluation of
        nonlinear terms.

        Args:
            factor: The padding factor, at least one.

        Returns:
            The padded grid, with ceil(factor * N) points rounded up to an
            even number.
        """
        assert factor >= 1
        size = int(math.ceil(factor * self.size - 1e-9))
        size += size % 2
        return Grid(size, self.length)

    def zeros(self):
        """Create a real zero field on this grid"""
        return SpectralField(self, physical=np.zeros((self.size,) * 2),
                             real=True)


def _shifted_slices(small, large):
    """
    Get the slices of a centered (fftshift-ed) large spectrum holding the
    modes of a small one.
    """
    start = large // 2 - small // 2
    return (slice(start, start + small),) * 2


class SpectralField:
    """
    An immutable field on a periodic grid, available in both the physical and
    the Fourier (numpy FFT, unnormalized) representations.
    """

    def __init__(self, grid, physical=None, spectral=None, real=False):
        """
        Initialize the field from exactly one of its representations.

        Args:
            grid:       The grid (Grid) the field lives on.
            physical:   The N x N array of physical values, or None.
            spectral:   The N x N array of Fourier coefficients, or None.
            real:       True if the field is real-valued.
        """
        assert isinstance(grid, Grid)
        assert (physical is None) != (spectral is None)
        shape = (grid.size, grid.size)
        self.grid = grid
        self.real = bool(real)
        if physical is not None:
            physical = np.array(physical,
                                dtype=float if self.real else complex)
            assert physical.shape == shape
            physical.flags.writeable = False
            self.__dict__["physical"] = physical
        else:
            spectral = np.array(spectral, dtype=complex)
            assert spectral.shape == shape
            spectral.flags.writeable = False
            self.__dict__["spectral"] = spectral
        assert LIGHT_ASSERTS or not self.real or self.is_hermitian()

    @cached_property
    def physical(self):
        """Physical values"""
        values = np.fft.ifft2(self.spectral)
        if self.real:
            values = values.real
        values.flags.writeable = False
        return values

    @cached_property
    def spectral(self):
        """Fourier coefficients, numpy FFT order and normalization"""
        values = np.fft.fft2(self.physical)
        values.flags.writeable = False
        return values

    def is_hermitian(self, tolerance=1e-9):
        """Check the Fourier coefficients are those of a real field"""
        spectral = self.spectral
        mirrored = np.conj(np.roll(spectral[::-1, ::-1], 1, axis=(0, 1)))
        scale = max(np.max(np.abs(spectral)), 1.0)
        return np.max(np.abs(spectral - mirrored)) <= tolerance * scale

    @classmethod
    def from_function(cls, grid, function, real=True):
        """
        Create a field sampling a function of the physical coordinates.

        Args:
            grid:       The grid to sample on.
            function:   A function accepting arrays x1, x2 and returning the
                        array of values.
            real:       True if the function is real-valued.

        Returns:
            The created field.
        """
        return cls(grid, physical=function(*grid.x), real=real)

    @classmethod
    def from_symbol(cls, grid, function, real=True):
        """
        Create a field with continuum-normalized Fourier transform given by a
        function of the frequency coordinates: the field approximates
        (2 pi)^-2 integral f(xi) exp(i x.xi) dxi.

        Args:
            grid:       The grid to create the field on.
            function:   A function accepting arrays xi1, xi2 and returning
                        the array of transform values.
            real:       True if the resulting field is real-valued.

        Returns:
            The created field.
        """
        spectral = function(*grid.xi) * grid.centering / grid.cell_area
        return cls(grid, spectral=spectral, real=real)

    def continuum_transform(self):
        """
        Get the continuum-normalized Fourier transform samples, the inverse
        of from_symbol().
        """
        return self.spectral * np.conj(self.grid.centering) * \
            self.grid.cell_area

    def _same(self, other):
        assert isinstance(other, SpectralField)
        assert other.grid == self.grid

    def __add__(self, other):
        self._same(other)
        return SpectralField(self.grid,
                             spectral=self.spectral + other.spectral,
                             real=self.real and other.real)

    def __sub__(self, other):
        self._same(other)
        return SpectralField(self.grid,
                             spectral=self.spectral - other.spectral,
                             real=self.real and other.real)

    def __neg__(self):
        return SpectralField(self.grid, spectral=-self.spectral,
                             real=self.real)

    def scale(self, factor):
        """Multiply the field by a (real or complex) number"""
        return SpectralField(self.grid, spectral=self.spectral * factor,
                             real=self.real and np.isrealobj(factor))

    def __mul__(self, factor):
        assert np.isscalar(factor)
        return self.scale(factor)

    __rmul__ = __mul__

    def apply(self, symbol, real=None):
        """
        Apply a Fourier multiplier.

        Args:
            symbol: The N x N array of multiplier values on the grid's modes.
            real:   True if the result is real, None to keep the field's
                    reality for real-valued symbols and drop it otherwise.

        Returns:
            The resulting field.
        """
        if real is None:
            real = self.real and np.isrealobj(symbol)
        return SpectralField(self.grid, spectral=self.spectral * symbol,
                             real=real)

    def derivative(self, axis):
        """Differentiate spectrally along axis 0 (x1) or 1 (x2)"""
        assert axis in (0, 1)
        return self.apply(self.grid.derivative_symbols[axis], real=self.real)

    def gradient(self):
        """Get the pair of partial derivatives"""
        return self.derivative(0), self.derivative(1)

    def laplacian(self):
        """Get the spectral Laplacian"""
        return self.apply(-self.grid.abs_xi ** 2)

    def real_part(self):
        """Get the real part, as a real field"""
        return SpectralField(self.grid, physical=self.physical.real,
                             real=True)

    def imag_part(self):
        """Get the imaginary part, as a real field"""
        return SpectralField(self.grid, physical=np.imag(self.physical),
                             real=True)

    def pad(self, grid):
        """
        Re-sample the field onto a finer grid on the same domain by
        zero-padding its spectrum. The Nyquist modes are dropped.

        Args:
            grid:   The finer grid.

        Returns:
            The padded field.
        """
        assert isinstance(grid, Grid)
        assert grid.length == self.grid.length
        assert grid.size >= self.grid.size
        if grid == self.grid:
            return self
        small = np.fft.fftshift(self.spectral).copy()
        small[0, :] = 0
        small[:, 0] = 0
        large = np.zeros((grid.size, grid.size), dtype=complex)
        large[_shifted_slices(self.grid.size, grid.size)] = small
        large *= (grid.size / self.grid.size) ** 2
        return SpectralField(grid, spectral=np.fft.ifftshift(large),
                             real=self.real)

    def truncate(self, grid):
        """
        Re-sample the field onto a coarser grid on the same domain by
        truncating its spectrum. The coarse Nyquist modes are dropped.

        Args:
            grid:   The coarser grid.

        Returns:
            The truncated field.
        """
        assert isinstance(grid, Grid)
        assert grid.length == self.grid.length
        assert grid.size <= self.grid.size
        if grid == self.grid:
            return self
        large = np.fft.fftshift(self.spectral)
        small = large[_shifted_slices(grid.size, self.grid.size)].copy()
        small[0, :] = 0
        small[:, 0] = 0
        small *= (grid.size / self.grid.size) ** 2
        return SpectralField(grid, spectral=np.fft.ifftshift(small),
                             real=self.real)

    def map(self, function, padding=2.0, real=None):
        """
        Apply a pointwise function with dealiasing: evaluate it on a padded
        grid and truncate the result back.

        Args:
            function:   A function accepting and returning arrays of
                        physical values.
            padding:    The padding factor, one to disable dealiasing.
            real:       True if the result is real, None to inherit from the
                        field.

        Returns:
            The resulting field on the field's grid.
        """
        fine = self.pad(self.grid.padded(padding))
        values = function(fine.physical)
        result = SpectralField(fine.grid, physical=values,
                               real=self.real if real is None else real)
        return result.truncate(self.grid)

    def multiply(self, other, padding=2.0):
        """Multiply by another field on the same grid, with dealiasing"""
        self._same(other)
        fine_grid = self.grid.padded(padding)
        values = self.pad(fine_grid).physical * other.pad(fine_grid).physical
        return SpectralField(fine_grid, physical=values,
                             real=self.real and other.real). \
            truncate(self.grid)

    def mean(self):
        """Get the mean value over the domain"""
        mean = self.spectral[0, 0] / self.grid.size ** 2
        return mean.real if self.real else mean

    def integral(self):
        """Get the integral over the domain"""
        return self.mean() * self.grid.length ** 2

    def l2_norm(self):
        """Get the discrete L2 norm computed in physical space"""
        return float(np.sqrt(self.grid.cell_area *
                             np.sum(np.abs(self.physical) ** 2)))

    def spectral_l2_norm(self):
        """Get the discrete L2 norm computed via the Parseval identity"""
        return float(np.sqrt(self.grid.cell_area / self.grid.size ** 2 *
                             np.sum(np.abs(self.spectral) ** 2)))

    def sup_norm(self):
        """Get the maximum absolute physical value"""
        return float(np.max(np.abs(self.physical)))

    def save(self, path):
        """
        Save the field to a file in the field file format: a header
        followed by the row-major physical values.

        Args:
            path:   The path to the file to write.

        Raises:
            OutputError if writing failed.
        """
        header = FILE_HEADER.pack(FILE_MAGIC, FILE_VERSION,
                                  self.grid.size, self.grid.length)
        data = np.ascontiguousarray(self.physical, dtype=FILE_DTYPE)
        try:
            with open(path, "wb") as file:
                file.write(header)
                file.write(data.tobytes())
        except OSError as exc:
            raise OutputError(path) from exc

    @classmethod
    def load(cls, path, real=None):
        """
        Load a field from a file in the field file format.

        Args:
            path:   The path to the file to read.
            real:   True to load a real field, False for complex, None to
                    detect from the data.

        Returns:
            The loaded field.

        Raises:
            ConfigError if the file is unreadable or not a field file.
        """
        try:
            with open(path, "rb") as file:
                header = file.read(FILE_HEADER.size)
                data = file.read()
        except OSError as exc:
            raise ConfigError(f"Cannot read field file {path!r}") from exc
        if len(header) != FILE_HEADER.size:
            raise ConfigError(f"Truncated field file {path!r}")
        magic, version, size, length = FILE_HEADER.unpack(header)
        if magic != FILE_MAGIC or version != FILE_VERSION:
            raise ConfigError(f"Not a field file: {path!r}")
        if size < 2 or size % 2 or not length > 0 or \
           len(data) != size * size * FILE_DTYPE.itemsize:
            raise ConfigError(f"Malformed field file {path!r}")
        values = np.frombuffer(data, dtype=FILE_DTYPE).reshape(size, size)
        if real is None:
            real = not np.any(values.imag)
        LOGGER.debug("Loaded %s field on %dx%d grid from %r",
                     "real" if real else "complex", size, size, path)
        return cls(Grid(size, length),
                   physical=values.real if real else values, real=real)
