"""The two crossed-product flavors and their calculus.

Elements are finitely p-supported maps p -> field.  Invariant elements are
(phase-)periodic in x, so each p-component is stored on a fundamental
domain: x in [0,1) for flavor D, x in [0,su) for flavor E.  Evaluation at
arbitrary grid points wraps through the invariance action exactly, which
keeps every translation in the star products an exact index map.

Components carry the same x-derivative chains as ScalarField, so the
derivations are exact on elements built from closed forms.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional

import numpy as np

from .lattice import Grid, ScalarField, TorusFunction, spectral_dy, _FD_STENCILS

Chain = List[np.ndarray]

D_FLAVOR = "D"
E_FLAVOR = "E"

LIE_LABELS = ("X", "Y", "Z")


def bracket(w1: str, w2: str):
    """Heisenberg bracket table: [X,Y] = c*Z, all other pairs commute.

    Returns (sign, label) with label None for a vanishing bracket; the
    structure constant c itself is supplied by the caller's params.
    """
    if (w1, w2) == ("X", "Y"):
        return 1, "Z"
    if (w1, w2) == ("Y", "X"):
        return -1, "Z"
    return 0, None


class FlavorError(ValueError):
    pass


def _chain_mul(a: Chain, b: Chain) -> Chain:
    depth = min(len(a), len(b)) - 1
    out = []
    for n in range(depth + 1):
        acc = np.zeros_like(a[0])
        for j in range(n + 1):
            acc += math.comb(n, j) * a[j] * b[n - j]
        out.append(acc)
    return out


class AlgebraElement:
    """Finitely p-supported element of the D- or E-flavored algebra."""

    __slots__ = ("flavor", "grid", "comps")

    def __init__(self, flavor: str, grid: Grid, comps: Dict[int, Chain]):
        if flavor not in (D_FLAVOR, E_FLAVOR):
            raise FlavorError(f"unknown flavor {flavor!r}")
        self.flavor = flavor
        self.grid = grid
        nxd = self.domain_steps(flavor, grid)
        clean: Dict[int, Chain] = {}
        for p, chain in comps.items():
            chain = [np.ascontiguousarray(a, complex) for a in chain]
            for a in chain:
                if a.shape != (nxd, grid.ny):
                    raise ValueError(
                        f"component shape {a.shape} != ({nxd}, {grid.ny})"
                    )
            if any(np.any(a) for a in chain):
                clean[int(p)] = chain
        self.comps = clean

    # -- structure -------------------------------------------------------

    @staticmethod
    def domain_steps(flavor: str, grid: Grid) -> int:
        return grid.nx_unit if flavor == D_FLAVOR else grid.su_steps

    @property
    def nxd(self) -> int:
        return self.domain_steps(self.flavor, self.grid)

    @property
    def p_support(self):
        return sorted(self.comps)

    @property
    def depth(self) -> int:
        if not self.comps:
            return 0
        return min(len(c) for c in self.comps.values()) - 1

    def component(self, p: int, depth: Optional[int] = None) -> Chain:
        d = self.depth if depth is None else depth
        chain = self.comps.get(p)
        if chain is None:
            z = np.zeros((self.nxd, self.grid.ny), complex)
            return [z.copy() for _ in range(d + 1)]
        return chain[: d + 1]

    def norm_inf(self) -> float:
        if not self.comps:
            return 0.0
        return max(float(np.max(np.abs(c[0]))) for c in self.comps.values())

    def without_chain(self) -> "AlgebraElement":
        return AlgebraElement(self.flavor, self.grid,
                              {p: [c[0]] for p, c in self.comps.items()})

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, flavor: str, grid: Grid) -> "AlgebraElement":
        return cls(flavor, grid, {})

    @classmethod
    def identity(cls, flavor: str, grid: Grid, depth: int = 4) -> "AlgebraElement":
        nxd = cls.domain_steps(flavor, grid)
        one = np.ones((nxd, grid.ny), complex)
        zero = np.zeros_like(one)
        return cls(flavor, grid, {0: [one] + [zero.copy() for _ in range(depth)]})

    @classmethod
    def from_torus(cls, g: TorusFunction, depth: int = 4) -> "AlgebraElement":
        """Multiplication-type E-element G*delta_0 from a skew-torus function."""
        return cls(E_FLAVOR, g.grid, {0: g.derivative_chain(depth)})

    def as_torus(self) -> TorusFunction:
        """p=0 component of an E-element as a skew-torus function."""
        if self.flavor != E_FLAVOR:
            raise FlavorError("as_torus needs flavor E")
        return TorusFunction(self.grid, self.component(0, 0)[0])

    # -- linear structure ------------------------------------------------

    def _check(self, other: "AlgebraElement"):
        if self.flavor != other.flavor:
            raise FlavorError(f"flavor mismatch {self.flavor} vs {other.flavor}")
        if self.grid != other.grid:
            raise ValueError("grid mismatch")

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        self._check(other)
        d = min(self.depth, other.depth)
        comps = {}
        for p in set(self.comps) | set(other.comps):
            a = self.component(p, d)
            b = other.component(p, d)
            comps[p] = [x + y for x, y in zip(a, b)]
        return AlgebraElement(self.flavor, self.grid, comps)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.flavor, self.grid,
                              {p: [-a for a in c] for p, c in self.comps.items()})

    def scaled(self, z: complex) -> "AlgebraElement":
        return AlgebraElement(self.flavor, self.grid,
                              {p: [z * a for a in c] for p, c in self.comps.items()})

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return star(self, other)
        return self.scaled(other)

    __rmul__ = scaled

    # -- twisted-periodic evaluation -------------------------------------

    def _wrap_phase(self, k: int, p: int) -> np.ndarray:
        """Phase relating the fundamental-domain samples to the block at
        offset k periods: value(x + k*period, y) = phase * samples."""
        g = self.grid
        ys = np.arange(g.ny) * g.hy_f
        c = g.params.c
        if self.flavor == D_FLAVOR:
            # Phi(x+k, y, p) = e(c k p (y - p sv/2)) Phi(x, y, p)
            return np.exp(2j * math.pi * c * k * p * (ys - p * float(g.params.sv) / 2))
        # Psi(x + m su, y, p) = e(c p m (y - m sv/2)) Psi(x, y - m sv, p)
        return np.exp(2j * math.pi * c * p * k * (ys - k * float(g.params.sv) / 2))

    def eval_window(self, p: int, i_lo: int, i_hi: int,
                    dxs: int = 0, dys: int = 0, depth: Optional[int] = None) -> Chain:
        """Chain arrays W with W[i, j] = comp_p(x_{i_lo+i} + dxs*hx, y_j + dys*hy)."""
        g = self.grid
        N = self.nxd
        d = self.depth if depth is None else depth
        chain = self.component(p, d)
        out = [np.zeros((i_hi - i_lo, g.ny), complex) for _ in range(d + 1)]
        if p in self.comps:
            gi = np.arange(i_lo + dxs, i_hi + dxs)
            blocks = np.floor_divide(gi, N)
            for k in np.unique(blocks):
                sel = blocks == k
                rows = gi[sel] - k * N
                ph = self._wrap_phase(int(k), p)[None, :]
                for n in range(d + 1):
                    vals = chain[n][rows, :]
                    if self.flavor == E_FLAVOR and k:
                        vals = np.roll(vals, int(k) * g.sv_steps, axis=1)
                    out[n][sel, :] = vals * ph
        if dys:
            out = [np.roll(a, -dys, axis=1) for a in out]
        return out

    def eval_field(self, p: int, i_lo: int, i_hi: int,
                   dxs: int = 0, dys: int = 0) -> ScalarField:
        return ScalarField(self.grid, i_lo, self.eval_window(p, i_lo, i_hi, dxs, dys))


# -- operations ----------------------------------------------------------


def star(a: AlgebraElement, b: AlgebraElement) -> AlgebraElement:
    """Twisted convolution over the p-index.

    D: (A*B)(x,y,p) = sum_q A(x,y,q) B(x - q su, y - q sv, p - q)
    E: (A*B)(x,y,p) = sum_q A(x,y,q) B(x + q, y, p - q)
    """
    a._check(b)
    g = a.grid
    comps: Dict[int, Chain] = {}
    for q in a.p_support:
        aq = a.component(q)
        for r in b.p_support:
            p = q + r
            if a.flavor == D_FLAVOR:
                bw = b.eval_window(r, 0, a.nxd, dxs=-q * g.su_steps, dys=-q * g.sv_steps)
            else:
                bw = b.eval_window(r, 0, a.nxd, dxs=q * g.nx_unit, dys=0)
            term = _chain_mul(aq, bw)
            if p in comps:
                dmin = min(len(comps[p]), len(term))
                comps[p] = [x + y for x, y in zip(comps[p][:dmin], term[:dmin])]
            else:
                comps[p] = term
    return AlgebraElement(a.flavor, g, comps)


def adjoint(a: AlgebraElement) -> AlgebraElement:
    """D: A*(x,y,p) = conj A(x - p su, y - p sv, -p);
    E: A*(x,y,p) = conj A(x + p, y, -p)."""
    g = a.grid
    comps: Dict[int, Chain] = {}
    for q in a.p_support:
        p = -q
        if a.flavor == D_FLAVOR:
            w = a.eval_window(q, 0, a.nxd, dxs=-p * g.su_steps, dys=-p * g.sv_steps)
        else:
            w = a.eval_window(q, 0, a.nxd, dxs=p * g.nx_unit, dys=0)
        comps[p] = [np.conj(x) for x in w]
    return AlgebraElement(a.flavor, g, comps)


def invariance_action(a: AlgebraElement, k: int) -> AlgebraElement:
    """rho_k on flavor D, gamma_k on flavor E (exact phase bookkeeping).

    rho_k Phi (x,y,p) = conj-e(c k p (y - p sv/2)) Phi(x+k, y, p)
    gamma_k Psi(x,y,p) = e(c p k (y - k sv/2)) Psi(x - k su, y - k sv, p)
    """
    g = a.grid
    c = g.params.c
    ys = np.arange(g.ny) * g.hy_f
    comps: Dict[int, Chain] = {}
    for p in a.p_support:
        if a.flavor == D_FLAVOR:
            w = a.eval_window(p, 0, a.nxd, dxs=k * g.nx_unit, dys=0)
            ph = np.exp(-2j * math.pi * c * k * p * (ys - p * float(g.params.sv) / 2))
        else:
            w = a.eval_window(p, 0, a.nxd, dxs=-k * g.su_steps, dys=-k * g.sv_steps)
            ph = np.exp(2j * math.pi * c * p * k * (ys - k * float(g.params.sv) / 2))
        comps[p] = [x * ph[None, :] for x in w]
    return AlgebraElement(a.flavor, g, comps)


def _component_dx(a: AlgebraElement, p: int, fd_order: int = 6) -> Chain:
    """x-derivative of one component: analytic chain when present, else
    finite differences with twisted-periodic halo."""
    chain = a.comps[p]
    if len(chain) >= 2:
        return chain[1:]
    st = _FD_STENCILS[fd_order]
    halo = len(st) // 2
    ext = a.eval_window(p, -halo, a.nxd + halo, depth=0)[0]
    out = np.zeros_like(ext)
    for k, w in enumerate(st):
        if w:
            out += w * np.roll(ext, halo - k, axis=0)
    return [out[halo:halo + a.nxd] / a.grid.hx_f]


def derivation(w: str, a: AlgebraElement, fd_order: int = 6) -> AlgebraElement:
    """Infinitesimal Heisenberg actions on flavor D, componentwise in p:

    delta_X Phi = 2 pi i c p (x - p su/2) Phi - dPhi/dy
    delta_Y Phi = -dPhi/dx
    delta_Z Phi = 2 pi i p c Phi
    """
    if a.flavor != D_FLAVOR:
        raise FlavorError("derivations are defined on flavor D")
    g = a.grid
    c = g.params.c
    comps: Dict[int, Chain] = {}
    for p, chain in a.comps.items():
        if w == "Z":
            z = 2j * math.pi * p * c
            comps[p] = [z * arr for arr in chain]
        elif w == "Y":
            comps[p] = [-arr for arr in _component_dx(a, p, fd_order)]
        elif w == "X":
            z = 2j * math.pi * c * p
            xs = (np.arange(g.nx_unit) * g.hx_f - p * float(g.params.su) / 2)[:, None]
            new = []
            for n, arr in enumerate(chain):
                term = z * xs * arr - spectral_dy(arr, g.ny)
                if n >= 1:
                    term = term + n * z * chain[n - 1]
                new.append(term)
            comps[p] = new
        else:
            raise ValueError(f"unknown Lie label {w!r}")
    return AlgebraElement(D_FLAVOR, g, comps)


def laplacian(a: AlgebraElement, fd_order: int = 6) -> AlgebraElement:
    """delta_X^2 + delta_Y^2 on flavor D."""
    return (derivation("X", derivation("X", a, fd_order), fd_order)
            + derivation("Y", derivation("Y", a, fd_order), fd_order))


def trace_D(a: AlgebraElement) -> complex:
    """tau(A) = integral of the p=0 component over [0,1) x T; tau(Id) = 1."""
    if a.flavor != D_FLAVOR:
        raise FlavorError("trace_D needs flavor D")
    comp0 = a.component(0, 0)[0]
    return complex(np.sum(comp0)) * a.grid.hx_f * a.grid.hy_f


def invariance_defect(a: AlgebraElement, k: int = 1) -> float:
    """Sup-norm of (action_k - id) applied to the element."""
    return (invariance_action(a, k) - a).norm_inf()


def element_allclose(a: AlgebraElement, b: AlgebraElement, tol: float = 1e-12) -> bool:
    scale = max(a.norm_inf(), b.norm_inf(), 1.0)
    return (a - b).norm_inf() <= tol * scale
