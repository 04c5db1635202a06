"""Connections, curvature, and the multiplication-operator commutators.

The Grassmannian connection is nabla0_W(f) = R . delta_W(<R,f>_D); adding a
multiplication-type skew perturbation G gives the full family considered
here.  Curvature is computed both from the operator definition and from the
closed form

  Theta0(W1,W2) = < R . (delta_W1 Q delta_W2 Q - delta_W2 Q delta_W1 Q), R >_E

with Q = <R,R>_D, and the two are compared as operators in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .algebra import (AlgebraElement, E_FLAVOR, bracket, derivation, star)
from .bimodule import ModuleVector, act_left, act_right, inner_D, inner_E
from .lattice import ScalarField, TorusFunction
from .projection import grassmann_apply

SKEW_TOL = 1e-12
DEFAULT_DEPTH = 4


class StructureError(ValueError):
    """A computed object violates a structural property it should have."""


def check_skew(g: TorusFunction, name: str, tol: float = SKEW_TOL):
    scale = max(g.norm_inf(), 1.0)
    worst = float(np.max(np.abs(g.samples.real)))
    if worst > tol * scale:
        raise StructureError(f"{name} is not skew-symmetric (real part {worst:.2e})")


@dataclass(frozen=True)
class Perturbation:
    """Multiplication-type direction (G1, G2, G3) = (mu_X, mu_Y, mu_Z)."""

    g1: TorusFunction
    g2: TorusFunction
    g3: TorusFunction

    def __post_init__(self):
        for name, g in self.items():
            check_skew(g, name)

    def items(self):
        return (("G1", self.g1), ("G2", self.g2), ("G3", self.g3))

    def component(self, w: str) -> TorusFunction:
        return {"X": self.g1, "Y": self.g2, "Z": self.g3}[w]

    def scaled(self, t: float) -> "Perturbation":
        return Perturbation(t * self.g1, t * self.g2, t * self.g3)

    def __add__(self, other: "Perturbation") -> "Perturbation":
        return Perturbation(self.g1 + other.g1, self.g2 + other.g2,
                            self.g3 + other.g3)

    @classmethod
    def zero(cls, grid) -> "Perturbation":
        z = TorusFunction.zeros(grid)
        return cls(z, z, z)


@dataclass(frozen=True)
class Connection:
    R: ModuleVector
    perturbation: Optional[Perturbation] = None

    @property
    def grid(self):
        return self.R.grid


def mult_element(g: TorusFunction, depth: int = DEFAULT_DEPTH) -> AlgebraElement:
    return AlgebraElement.from_torus(g, depth)


def connect(nabla: Connection, w: str, f: ModuleVector) -> ModuleVector:
    """Apply the connection along basis direction w."""
    out = grassmann_apply(nabla.R, w, f)
    if nabla.perturbation is not None:
        g = nabla.perturbation.component(w)
        out = out + act_left(mult_element(g, max(f.depth, 1)), f)
    return out


def curvature_definition(nabla: Connection, w1: str, w2: str,
                         f: ModuleVector) -> ModuleVector:
    """Theta(W1,W2) f = nabla_W1 nabla_W2 f - nabla_W2 nabla_W1 f
    - nabla_[W1,W2] f, with [X,Y] = cZ."""
    out = connect(nabla, w1, connect(nabla, w2, f)) \
        - connect(nabla, w2, connect(nabla, w1, f))
    sign, lbl = bracket(w1, w2)
    if lbl is not None:
        out = out - connect(nabla, lbl, f).scaled(sign * nabla.grid.params.c)
    return out


@dataclass(frozen=True)
class Curvature2Form:
    """The three independent components of an alternating E-valued 2-form."""

    xy: AlgebraElement
    xz: AlgebraElement
    yz: AlgebraElement

    def component(self, w1: str, w2: str) -> AlgebraElement:
        table = {("X", "Y"): self.xy, ("X", "Z"): self.xz, ("Y", "Z"): self.yz}
        if (w1, w2) in table:
            return table[(w1, w2)]
        if (w2, w1) in table:
            return -table[(w2, w1)]
        return AlgebraElement.zero(E_FLAVOR, self.xy.grid)

    def norm_inf(self) -> float:
        return max(self.xy.norm_inf(), self.xz.norm_inf(), self.yz.norm_inf())

    def skew_defect(self) -> float:
        """Max violation of adjoint(component) = -component."""
        from .algebra import adjoint
        return max((adjoint(t) + t).norm_inf() for t in (self.xy, self.xz, self.yz))


def curvature_closed(R: ModuleVector) -> Curvature2Form:
    """Grassmannian curvature via the closed form."""
    q = inner_D(R, R)
    dq = {w: derivation(w, q) for w in "XYZ"}

    def comp(w1, w2):
        anti = star(dq[w1], dq[w2]) - star(dq[w2], dq[w1])
        return inner_E(act_right(R, anti), R)

    return Curvature2Form(comp("X", "Y"), comp("X", "Z"), comp("Y", "Z"))


def curvature_perturbed(theta0: Curvature2Form, pert: Perturbation,
                        c: int, depth: int = DEFAULT_DEPTH) -> Curvature2Form:
    """Assemble the curvature of nabla0 + G from the Grassmannian one.

    The multiplication-operator commutators contribute, as E-elements,
    [nabla0_X, G] = (-dG/dy) delta_0,  [nabla0_Y, G] = (-dG/dx) delta_0,
    [nabla0_Z, G] = 0, and mult-type elements commute among themselves, so

      Theta(X,Y) = (f1 + dx G1 - dy G2 - c G3) delta_0
      Theta(X,Z) = Theta0(X,Z) + (-dy G3) delta_0
      Theta(Y,Z) = (f2 - dx G3) delta_0.

    The XY and YZ components are rebuilt as single multiplication elements
    from the profile functions, so the whole 2-form lives in the discrete
    spectral calculus with self-consistent derivative chains (the analytic
    chains of the closed-form element would disagree with the spectral ones
    by the aliasing error of the barely-resolved bump profiles, polluting
    operator commutators against them).  Theta0(X,Z) vanishes to machine
    precision, so it is kept additively.
    """
    g1, g2, g3 = pert.g1, pert.g2, pert.g3
    f1, f2 = extract_f1_f2(theta0)
    xy = mult_element(f1 + g1.d_dx() - g2.d_dy() - float(c) * g3, depth)
    xz = theta0.xz + mult_element(-g3.d_dy(), depth)
    yz = mult_element(f2 - g3.d_dx(), depth)
    return Curvature2Form(xy, xz, yz)


def curvature_of(nabla: Connection, theta0: Optional[Curvature2Form] = None,
                 depth: int = DEFAULT_DEPTH) -> Curvature2Form:
    if theta0 is None:
        theta0 = curvature_closed(nabla.R)
    if nabla.perturbation is None:
        return theta0
    return curvature_perturbed(theta0, nabla.perturbation,
                               nabla.grid.params.c, depth)


def extract_f1_f2(theta: Curvature2Form) -> Tuple[TorusFunction, TorusFunction]:
    """One-variable profiles of the two nonzero Grassmannian components.

    Asserts the structure the closed-form computation must produce:
    p-support {0}, no y-dependence, purely imaginary values; su-periodicity
    is automatic in the fundamental-domain representation.
    """
    out = []
    for name, comp in (("XY", theta.xy), ("YZ", theta.yz)):
        bad = [p for p in comp.p_support if p != 0]
        if bad:
            raise StructureError(f"Theta0({name}) has p-support {bad} beyond {{0}}")
        samples = comp.component(0, 0)[0]
        scale = max(float(np.max(np.abs(samples))), 1e-30)
        prof = samples.mean(axis=1)
        ydev = float(np.max(np.abs(samples - prof[:, None])))
        if ydev > 1e-9 * scale:
            raise StructureError(f"Theta0({name}) depends on y ({ydev:.2e})")
        realdev = float(np.max(np.abs(prof.real)))
        if realdev > 1e-9 * scale:
            raise StructureError(f"Theta0({name}) is not purely imaginary "
                                 f"({realdev:.2e})")
        grid = comp.grid
        out.append(TorusFunction(grid, np.repeat(prof[:, None], grid.ny, axis=1)))
    return out[0], out[1]


def commutator_mult(nabla0: Connection, g: TorusFunction, w: str,
                    f: ModuleVector) -> ModuleVector:
    """[nabla0_W, G] f with G acting by its multiplication-type element."""
    t = mult_element(g, max(f.depth, 1))
    return connect(nabla0, w, act_left(t, f)) - act_left(t, connect(nabla0, w, f))
