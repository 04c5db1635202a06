"""Commensurate discretization of R x T and the skew torus.

All translations that occur anywhere in the calculus (integer shifts, shifts
by multiples of the deformation steps su, sv) are exact index maps on the
grid, so the algebraic identities downstream hold at machine precision.
Sampled fields optionally carry a chain of exact x-derivatives; arithmetic
propagates the chain by the Leibniz rule, which keeps derivative-based
identities exact as well.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# order-6 central difference stencil, denominator 60*h
_FD6 = np.array([-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0]) / 60.0
_FD_STENCILS = {
    2: np.array([-0.5, 0.0, 0.5]),
    4: np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
    6: _FD6,
}


class CommensurabilityError(ValueError):
    """A shift or parameter does not land on the grid."""


class WindowOverflowError(RuntimeError):
    """A field's x-support left the configured window."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise CommensurabilityError(
        f"parameter {x!r} must be an exact rational (int, Fraction or 'a/b' string)"
    )


@dataclass(frozen=True)
class Params:
    """Deformation parameters of the manifold algebra.

    su = 2*hbar*mu and sv = 2*hbar*nu are the x/y translation steps of the
    Z-action; both must be rational so the grid can resolve them exactly.
    """

    c: int
    hbar: Fraction
    mu: Fraction
    nu: Fraction

    def __post_init__(self):
        object.__setattr__(self, "hbar", _as_fraction(self.hbar))
        object.__setattr__(self, "mu", _as_fraction(self.mu))
        object.__setattr__(self, "nu", _as_fraction(self.nu))
        if not (isinstance(self.c, int) and self.c > 0):
            raise ValueError("c must be a positive integer")
        if self.hbar <= 0:
            raise ValueError("hbar must be positive")
        if self.mu == 0 and self.nu == 0:
            raise ValueError("mu and nu must not both vanish")
        if not (0 < self.su < Fraction(1, 2)):
            raise ValueError(f"need 0 < 2*hbar*mu < 1/2, got su={self.su}")

    @property
    def su(self) -> Fraction:
        return 2 * self.hbar * self.mu

    @property
    def sv(self) -> Fraction:
        return 2 * self.hbar * self.nu

    @classmethod
    def from_steps(cls, c: int, su, sv, hbar=Fraction(1)) -> "Params":
        """Build params from the translation steps themselves."""
        hbar = _as_fraction(hbar)
        su = _as_fraction(su)
        sv = _as_fraction(sv)
        return cls(c=c, hbar=hbar, mu=su / (2 * hbar), nu=sv / (2 * hbar))


@dataclass(frozen=True)
class Grid:
    """Sampling lattice: hx divides both 1 and su, hy divides both 1 and sv."""

    params: Params
    hx: Fraction
    hy: Fraction
    x_halfwidth: int  # window bound, in whole x-units

    def __post_init__(self):
        for step, unit in ((self.hx, Fraction(1)), (self.hx, self.params.su),
                           (self.hy, Fraction(1)), (self.hy, self.params.sv)):
            if unit != 0 and (unit / step).denominator != 1:
                raise CommensurabilityError(f"{step} does not divide {unit}")

    @property
    def nx_unit(self) -> int:
        """Grid points per unit x-interval."""
        return int(1 / self.hx)

    @property
    def ny(self) -> int:
        """Grid points per y-period."""
        return int(1 / self.hy)

    @property
    def su_steps(self) -> int:
        return int(self.params.su / self.hx)

    @property
    def sv_steps(self) -> int:
        return int(self.params.sv / self.hy)

    @property
    def hx_f(self) -> float:
        return float(self.hx)

    @property
    def hy_f(self) -> float:
        return float(self.hy)

    @property
    def i_bound(self) -> int:
        return self.x_halfwidth * self.nx_unit

    def x_of(self, i) -> np.ndarray:
        return np.asarray(i, dtype=float) * self.hx_f

    def y_of(self, j) -> np.ndarray:
        return np.asarray(j, dtype=float) * self.hy_f

    def steps_of(self, dx: Fraction) -> int:
        """Exact number of x-steps in a shift, or raise."""
        q = _as_fraction(dx) / self.hx
        if q.denominator != 1:
            raise CommensurabilityError(f"shift {dx} is not a multiple of hx={self.hx}")
        return int(q)

    def ysteps_of(self, dy: Fraction) -> int:
        q = _as_fraction(dy) / self.hy
        if q.denominator != 1:
            raise CommensurabilityError(f"shift {dy} is not a multiple of hy={self.hy}")
        return int(q)


def make_grid(params: Params, refinement: int, x_halfwidth: int = 6,
              max_points: int = 50_000_000) -> Grid:
    """Grid with hx = 1/(b*refinement) for su = a/b and likewise in y.

    Both 1 and the translation step are integer multiples of the spacing,
    so every translation in the calculus is an exact index shift.
    """
    if refinement < 1:
        raise ValueError("refinement must be >= 1")
    b = params.su.denominator
    bp = params.sv.denominator if params.sv != 0 else 1
    hx = Fraction(1, b * refinement)
    hy = Fraction(1, bp * refinement)
    grid = Grid(params=params, hx=hx, hy=hy, x_halfwidth=x_halfwidth)
    if 2 * grid.i_bound * grid.ny > max_points:
        raise WindowOverflowError(
            f"grid would exceed {max_points} points; lower refinement or window"
        )
    return grid


def _binom(n: int, k: int) -> int:
    return math.comb(n, k)


class ScalarField:
    """Complex sampled function on R x T with compact x-support.

    data[i, j] is the value at (x, y) = ((i0 + i)*hx, j*hy); y is periodic.
    `chain` holds [f, f', f'', ...] -- samples of exact x-derivatives when
    the field was built from a closed form.  Arithmetic propagates the chain
    (Leibniz rule), so differentiate() stays exact through the calculus.
    """

    __slots__ = ("grid", "i0", "chain")

    def __init__(self, grid: Grid, i0: int, chain: Sequence[np.ndarray]):
        self.grid = grid
        self.i0 = int(i0)
        self.chain = [np.ascontiguousarray(a, dtype=complex) for a in chain]
        nx, ny = self.chain[0].shape
        if ny != grid.ny:
            raise ValueError("y-extent mismatch with grid")
        for a in self.chain[1:]:
            if a.shape != (nx, ny):
                raise ValueError("derivative chain shape mismatch")
        if nx and (self.i0 < -grid.i_bound or self.i0 + nx > grid.i_bound):
            raise WindowOverflowError(
                f"support [{self.i0}, {self.i0 + nx}) exceeds window +-{grid.i_bound}"
            )

    # -- constructors ----------------------------------------------------

    @classmethod
    def zeros(cls, grid: Grid, depth: int = 0) -> "ScalarField":
        return cls(grid, 0, [np.zeros((0, grid.ny), complex) for _ in range(depth + 1)])

    @classmethod
    def from_function(cls, grid: Grid, i_lo: int, i_hi: int, funcs,
                      y_mode: int = 0) -> "ScalarField":
        """Sample closed-form x-profiles times one y-character e(y_mode*y).

        `funcs` is a list [f, f', f'', ...] of vectorized x-functions.
        """
        xs = grid.x_of(np.arange(i_lo, i_hi))
        ys = np.arange(grid.ny) * grid.hy_f
        ych = np.exp(2j * math.pi * y_mode * ys)[None, :]
        chain = [np.asarray(f(xs), complex)[:, None] * ych for f in funcs]
        return cls(grid, i_lo, chain).trimmed()

    # -- basic queries ---------------------------------------------------

    @property
    def data(self) -> np.ndarray:
        return self.chain[0]

    @property
    def depth(self) -> int:
        return len(self.chain) - 1

    @property
    def nx(self) -> int:
        return self.data.shape[0]

    @property
    def i1(self) -> int:
        return self.i0 + self.nx

    def is_zero(self) -> bool:
        return self.nx == 0 or not np.any(self.data)

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.data))) if self.nx else 0.0

    def xs(self) -> np.ndarray:
        return self.grid.x_of(np.arange(self.i0, self.i1))

    def trimmed(self) -> "ScalarField":
        """Drop leading/trailing all-zero x-rows (every chain entry zero)."""
        if self.nx == 0:
            return self
        nz = np.any([np.any(a, axis=1) for a in self.chain], axis=0)
        idx = np.flatnonzero(nz)
        if idx.size == 0:
            return ScalarField(self.grid, 0,
                               [a[:0] for a in self.chain])
        lo, hi = idx[0], idx[-1] + 1
        return ScalarField(self.grid, self.i0 + lo, [a[lo:hi] for a in self.chain])

    def window(self, i_lo: int, i_hi: int, n: int = 0) -> np.ndarray:
        """Samples of chain[n] on [i_lo, i_hi), zero outside support."""
        out = np.zeros((i_hi - i_lo, self.grid.ny), complex)
        lo = max(i_lo, self.i0)
        hi = min(i_hi, self.i1)
        if hi > lo:
            out[lo - i_lo:hi - i_lo] = self.chain[n][lo - self.i0:hi - self.i0]
        return out

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "ScalarField"):
        if self.grid is not other.grid and self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        depth = min(self.depth, other.depth)
        if self.nx == 0:
            return ScalarField(self.grid, other.i0, other.chain[:depth + 1])
        if other.nx == 0:
            return ScalarField(self.grid, self.i0, self.chain[:depth + 1])
        lo = min(self.i0, other.i0)
        hi = max(self.i1, other.i1)
        chain = [self.window(lo, hi, n) + other.window(lo, hi, n)
                 for n in range(depth + 1)]
        return ScalarField(self.grid, lo, chain)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        return self + (-other)

    def __neg__(self) -> "ScalarField":
        return ScalarField(self.grid, self.i0, [-a for a in self.chain])

    def __mul__(self, other):
        if isinstance(other, ScalarField):
            return self._pointwise_mul(other)
        return self.scaled(other)

    __rmul__ = __mul__

    def scaled(self, z: complex) -> "ScalarField":
        return ScalarField(self.grid, self.i0, [z * a for a in self.chain])

    def _pointwise_mul(self, other: "ScalarField") -> "ScalarField":
        self._check(other)
        depth = min(self.depth, other.depth)
        lo = max(self.i0, other.i0)
        hi = min(self.i1, other.i1)
        if hi <= lo:
            return ScalarField.zeros(self.grid, depth)
        a = [self.window(lo, hi, n) for n in range(depth + 1)]
        b = [other.window(lo, hi, n) for n in range(depth + 1)]
        chain = []
        for n in range(depth + 1):
            acc = np.zeros_like(a[0])
            for j in range(n + 1):
                acc += _binom(n, j) * a[j] * b[n - j]
            chain.append(acc)
        return ScalarField(self.grid, lo, chain).trimmed()

    def conj(self) -> "ScalarField":
        return ScalarField(self.grid, self.i0, [np.conj(a) for a in self.chain])

    def shift_steps(self, kx: int, ky: int) -> "ScalarField":
        """result(x, y) = f(x + kx*hx, y + ky*hy); exact index move."""
        chain = self.chain
        if ky % self.grid.ny:
            chain = [np.roll(a, -ky % self.grid.ny, axis=1) for a in chain]
        return ScalarField(self.grid, self.i0 - kx, chain)

    def y_phase(self, cycles: float, const: float = 0.0) -> "ScalarField":
        """Multiply by e(cycles*y + const) with e(t) = exp(2*pi*i*t)."""
        ys = np.arange(self.grid.ny) * self.grid.hy_f
        ph = np.exp(2j * math.pi * (cycles * ys + const))[None, :]
        return ScalarField(self.grid, self.i0, [a * ph for a in self.chain])

    def x_affine(self, a: complex, b: complex) -> "ScalarField":
        """Multiply by (a + b*x), propagating the derivative chain."""
        xs = self.xs()[:, None]
        fac = a + b * xs
        chain = []
        for n, arr in enumerate(self.chain):
            new = fac * arr
            if n >= 1:
                new = new + n * b * self.chain[n - 1]
            chain.append(new)
        return ScalarField(self.grid, self.i0, chain)

    # -- calculus --------------------------------------------------------

    def dy(self) -> "ScalarField":
        """Spectral derivative along the periodic y-direction."""
        return ScalarField(self.grid, self.i0,
                           [spectral_dy(a, self.grid.ny) for a in self.chain])

    def dx(self, fd_order: int = 6) -> "ScalarField":
        """x-derivative: the attached analytic chain when present, else
        central finite differences of the given order."""
        if self.depth >= 1:
            return ScalarField(self.grid, self.i0, self.chain[1:])
        return self.dx_fd(fd_order)

    def dx_fd(self, fd_order: int = 6) -> "ScalarField":
        """Finite-difference x-derivative (always; ignores the chain)."""
        st = _FD_STENCILS[fd_order]
        halo = len(st) // 2
        if self.nx == 0:
            return ScalarField.zeros(self.grid)
        padded = np.zeros((self.nx + 2 * halo, self.grid.ny), complex)
        padded[halo:halo + self.nx] = self.data
        out = np.zeros_like(padded)
        for k, w in enumerate(st):
            if w:
                out += w * np.roll(padded, halo - k, axis=0)
        # rolled-in wrap rows are zero because the pad is >= stencil halo
        return ScalarField(self.grid, self.i0 - halo,
                           [out / self.grid.hx_f]).trimmed()

    def without_chain(self) -> "ScalarField":
        return ScalarField(self.grid, self.i0, [self.data])


def spectral_dy(a: np.ndarray, ny: int) -> np.ndarray:
    if a.shape[0] == 0:
        return a.copy()
    m = np.fft.fftfreq(ny, d=1.0 / ny)
    if ny % 2 == 0:
        m = m.copy()
        m[ny // 2] = 0.0  # drop the unmatched Nyquist mode
    return np.fft.ifft(np.fft.fft(a, axis=1) * (2j * math.pi * m)[None, :], axis=1)


def shift(f: ScalarField, dx, dy) -> ScalarField:
    """Exact shift by (dx, dy); raises on non-commensurate amounts."""
    return f.shift_steps(f.grid.steps_of(dx), f.grid.ysteps_of(dy))


def differentiate(f: ScalarField, axis: str, fd_order: int = 6) -> ScalarField:
    if axis == "x":
        return f.dx(fd_order)
    if axis == "y":
        return f.dy()
    raise ValueError("axis must be 'x' or 'y'")


def integrate(f: ScalarField, x_range: Optional[tuple] = None) -> complex:
    """Equal-weight Riemann sum hx*hy*sum over x_range x one y-period.

    Exact for trigonometric polynomials in y; superalgebraic for smooth
    compactly supported x-data.
    """
    g = f.grid
    if x_range is None:
        s = complex(np.sum(f.data))
    else:
        lo = g.steps_of(x_range[0])
        hi = g.steps_of(x_range[1])
        s = complex(np.sum(f.window(lo, hi, 0)))
    return s * g.hx_f * g.hy_f


# -- skew-torus functions ------------------------------------------------


class TorusFunction:
    """Function on R^2 / L with L generated by (su, sv) and (0, 1).

    Sampled on the fundamental domain [0, su) x [0, 1); evaluation at any
    lattice-commensurate point reduces through L exactly, so L-invariance
    holds by construction.
    """

    __slots__ = ("grid", "samples")

    def __init__(self, grid: Grid, samples: np.ndarray):
        self.grid = grid
        self.samples = np.ascontiguousarray(samples, dtype=complex)
        if self.samples.shape != (grid.su_steps, grid.ny):
            raise ValueError(
                f"samples must be ({grid.su_steps}, {grid.ny}), got {self.samples.shape}"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "TorusFunction":
        return cls(grid, np.zeros((grid.su_steps, grid.ny), complex))

    @classmethod
    def from_x_profile(cls, grid: Grid, values: np.ndarray) -> "TorusFunction":
        """su-periodic function of x alone, constant in the skew direction."""
        values = np.asarray(values, complex)
        if values.shape != (grid.su_steps,):
            raise ValueError("profile length must be su_steps")
        return cls(grid, np.repeat(values[:, None], grid.ny, axis=1))

    def eval_idx(self, i, j):
        """Value at global grid point (i*hx, j*hy); exact L-reduction."""
        S = self.grid.su_steps
        i = np.asarray(i)
        k = np.floor_divide(i, S)
        ii = i - k * S
        jj = np.mod(np.asarray(j) - k * self.grid.sv_steps, self.grid.ny)
        return self.samples[ii, jj]

    # arithmetic ----------------------------------------------------------

    def _binop(self, other, op):
        if isinstance(other, TorusFunction):
            return TorusFunction(self.grid, op(self.samples, other.samples))
        return TorusFunction(self.grid, op(self.samples, other))

    def __add__(self, other):
        return self._binop(other, np.add)

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    __rmul__ = __mul__

    def __neg__(self):
        return TorusFunction(self.grid, -self.samples)

    def conj(self) -> "TorusFunction":
        return TorusFunction(self.grid, np.conj(self.samples))

    def norm_inf(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def mean(self) -> complex:
        return complex(np.mean(self.samples))

    def integral(self) -> complex:
        """Integral over the fundamental domain."""
        return complex(np.sum(self.samples)) * self.grid.hx_f * self.grid.hy_f

    # spectral machinery ---------------------------------------------------

    def _shear(self) -> np.ndarray:
        g = self.grid
        # (sv/su) * x_i for i on the fundamental domain
        return float(g.params.sv / g.params.su) * g.x_of(np.arange(g.su_steps))

    def fft(self) -> np.ndarray:
        """Coefficients wrt the dual characters
        chi_{n,m}(x,y) = e(n*x/su + m*(y - (sv/su)*x)); array indexed
        fft-style in (n, m)."""
        g = self.grid
        f1 = np.fft.fft(self.samples, axis=1) / g.ny
        mvals = np.fft.fftfreq(g.ny, d=1.0 / g.ny)
        f1 *= np.exp(2j * math.pi * np.outer(self._shear(), mvals))
        return np.fft.fft(f1, axis=0) / g.su_steps

    @classmethod
    def from_fft(cls, grid: Grid, coeffs: np.ndarray) -> "TorusFunction":
        f1 = np.fft.ifft(coeffs, axis=0) * grid.su_steps
        mvals = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)
        shear = float(grid.params.sv / grid.params.su) * grid.x_of(np.arange(grid.su_steps))
        f1 *= np.exp(-2j * math.pi * np.outer(shear, mvals))
        return cls(grid, np.fft.ifft(f1, axis=1) * grid.ny)

    def mode_frequencies(self):
        """(kx, ky) with d/dx chi = 2*pi*i*kx chi, d/dy chi = 2*pi*i*ky chi."""
        g = self.grid
        n = np.fft.fftfreq(g.su_steps, d=1.0 / g.su_steps)
        m = np.fft.fftfreq(g.ny, d=1.0 / g.ny)
        su = float(g.params.su)
        sv = float(g.params.sv)
        kx = (n[:, None] - sv * m[None, :]) / su
        ky = np.broadcast_to(m[None, :], kx.shape)
        return kx, ky

    def _odd_mask_x(self) -> np.ndarray:
        """True on modes where kx changes sign under (n,m) -> (-n,-m).

        The unmatched Nyquist slots of even-length axes are self-paired but
        carry a nonzero kx label, so odd x-operators (kx multipliers) must
        vanish there to preserve Hermitian symmetry.  On odd-length axes the
        mask is all-True."""
        g = self.grid
        keep_x = np.ones(g.su_steps, bool)
        if g.su_steps % 2 == 0:
            keep_x[g.su_steps // 2] = False
        keep_y = np.ones(g.ny, bool)
        if g.ny % 2 == 0:
            keep_y[g.ny // 2] = False
        return keep_x[:, None] & keep_y[None, :]

    def _odd_mask_y(self) -> np.ndarray:
        """Like _odd_mask_x but for ky = m: only the y-Nyquist column is
        self-paired with a nonzero label; the x-Nyquist row is harmless
        since ky does not involve n."""
        g = self.grid
        keep_y = np.ones(g.ny, bool)
        if g.ny % 2 == 0:
            keep_y[g.ny // 2] = False
        return np.broadcast_to(keep_y[None, :], (g.su_steps, g.ny))

    def d_dx(self) -> "TorusFunction":
        kx, _ = self.mode_frequencies()
        mult = np.where(self._odd_mask_x(), 2j * math.pi * kx, 0.0)
        return TorusFunction.from_fft(self.grid, self.fft() * mult)

    def d_dy(self) -> "TorusFunction":
        _, ky = self.mode_frequencies()
        mult = np.where(self._odd_mask_y(), 2j * math.pi * ky, 0.0)
        return TorusFunction.from_fft(self.grid, self.fft() * mult)

    def antiderivative_x(self) -> "TorusFunction":
        """Spectral x-antiderivative; input must vanish on d/dx-kernel modes.

        On even-length axes the Nyquist slots also sit in the kernel of the
        discrete d/dx (the odd operators zero them), so any content there is
        dropped; the geometric kernel kx = 0 must be empty and raises."""
        kx, _ = self.mode_frequencies()
        co = self.fft()
        kernel = np.abs(kx) < 1e-12
        bad = float(np.max(np.abs(co[kernel]))) if np.any(kernel) else 0.0
        scale = max(float(np.max(np.abs(co))), 1e-300)
        if bad > 1e-10 * scale:
            raise ValueError(
                f"x-antiderivative needs mean-zero input on kernel modes (residual {bad:.2e})"
            )
        out = np.zeros_like(co)
        good = self._odd_mask_x() & ~kernel
        np.divide(co, 2j * math.pi * kx, out=out, where=good)
        return TorusFunction.from_fft(self.grid, out)

    def derivative_chain(self, depth: int):
        """[G, G_x, G_xx, ...] sample arrays to the given depth (spectral)."""
        kx, _ = self.mode_frequencies()
        mult = np.where(self._odd_mask_x(), 2j * math.pi * kx, 0.0)
        co = self.fft()
        out = [self.samples.copy()]
        cur = co
        for _ in range(depth):
            cur = cur * mult
            out.append(TorusFunction.from_fft(self.grid, cur).samples)
        return out

    def is_skew(self, tol: float = 1e-12) -> bool:
        """Purely imaginary values: conj G = -G."""
        scale = max(self.norm_inf(), 1.0)
        return float(np.max(np.abs(self.samples.real))) <= tol * scale


def torus_fft(g: TorusFunction) -> np.ndarray:
    return g.fft()


def torus_ifft(grid: Grid, coeffs: np.ndarray) -> TorusFunction:
    return TorusFunction.from_fft(grid, coeffs)
