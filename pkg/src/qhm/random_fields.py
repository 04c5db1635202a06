"""Seeded generators for test batteries.

Module vectors are built from integer translates and y-characters of a
smooth compactly supported envelope, so they carry exact derivative chains;
torus functions are random band-limited combinations of the dual
characters.  Everything is driven by a caller-supplied Generator for
reproducibility.
"""

from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from .lattice import Grid, ScalarField, TorusFunction
from .projection import BumpSpec, _ramp_values


def smooth_envelope(grid: Grid, spec: BumpSpec = BumpSpec()) -> ScalarField:
    """A C-infinity bump on (-1/2, 1/2): up-ramp, plateau, down-ramp."""
    funcs = []
    for n in range(spec.depth + 1):
        def fn(x, n=n):
            x = np.asarray(x, dtype=float)
            out = np.zeros_like(x)
            scale = 4.0 ** n
            up = (x > -0.5) & (x < -0.25)
            if np.any(up):
                out[up] = scale * _ramp_values((x[up] + 0.5) * 4, n, spec, True)
            if n == 0:
                out[(x >= -0.25) & (x <= 0.25)] = 1.0
            down = (x > 0.25) & (x < 0.5)
            if np.any(down):
                out[down] = scale * _ramp_values((x[down] - 0.25) * 4, n, spec, False)
            return out
        funcs.append(fn)
    n2 = grid.nx_unit // 2
    return ScalarField.from_function(grid, -n2, n2 + 1, funcs)


def random_module_vector(grid: Grid, rng: np.random.Generator,
                         terms: int = 3, y_modes: int = 1,
                         max_shift_units: int = 1,
                         envelope: Optional[ScalarField] = None) -> ScalarField:
    """Random smooth vector: sum of shifted, y-modulated envelope copies."""
    if envelope is None:
        envelope = smooth_envelope(grid)
    out = ScalarField.zeros(grid, envelope.depth)
    for _ in range(terms):
        kx = int(rng.integers(-max_shift_units * grid.su_steps,
                              max_shift_units * grid.su_steps + 1))
        m = int(rng.integers(-y_modes, y_modes + 1))
        coef = complex(rng.normal(), rng.normal())
        out = out + envelope.shift_steps(kx, 0).y_phase(m, rng.uniform()).scaled(coef)
    return out


def battery_bandwidth(grid: Grid):
    """(y_modes, max_shift_units) the grid resolves through inner products.

    Components of D-valued inner products pick up wrap phases with y-
    frequency c*k*p, where p ranges over the translate offsets between the
    two vectors; unit-width envelopes with unit shifts push that past the
    Nyquist line ny/2 when ny < 16, so on such coarse grids the battery
    drops both the character modulation and the random translates.  The
    identities are then grid-exact instead of polluted by aliased modes the
    lattice cannot represent.
    """
    return (1, 1) if grid.ny >= 16 else (0, 0)


def make_battery(grid: Grid, count: int, seed: int,
                 include: Sequence[ScalarField] = ()) -> List[ScalarField]:
    """Deterministic battery of smooth test vectors."""
    rng = np.random.default_rng(seed)
    env = smooth_envelope(grid)
    y_modes, max_shift = battery_bandwidth(grid)
    out = list(include)
    for _ in range(count):
        out.append(random_module_vector(grid, rng, y_modes=y_modes,
                                        max_shift_units=max_shift,
                                        envelope=env))
    return out


def random_torus_function(grid: Grid, rng: np.random.Generator,
                          x_modes: int = 2, y_modes: int = 1,
                          skew: bool = True,
                          zero_mean: bool = False) -> TorusFunction:
    """Band-limited random function on the skew torus.

    With skew=True the values are purely imaginary at every sample (the
    coefficient array is Hermitian before multiplying by i).
    """
    nx, ny = grid.su_steps, grid.ny
    co = np.zeros((nx, ny), complex)
    for n in range(-x_modes, x_modes + 1):
        for m in range(-y_modes, y_modes + 1):
            co[n % nx, m % ny] = complex(rng.normal(), rng.normal())
    if zero_mean:
        co[0, 0] = 0.0
    if skew:
        herm = np.zeros_like(co)
        for n in range(nx):
            for m in range(ny):
                herm[n, m] = 0.5 * (co[n, m] + np.conj(co[-n % nx, -m % ny]))
        co = 1j * herm
    return TorusFunction.from_fft(grid, co)


def random_perturbation(grid: Grid, rng: np.random.Generator,
                        zero_mean: bool = False):
    from .calculus import Perturbation
    return Perturbation(
        random_torus_function(grid, rng, zero_mean=zero_mean),
        random_torus_function(grid, rng, zero_mean=zero_mean),
        random_torus_function(grid, rng, zero_mean=zero_mean))
