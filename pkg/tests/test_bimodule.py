"""Equivalence-bimodule structure tests.

The load-bearing identity is imprimitivity, <f,g>_E . h = f . <g,h>_D,
which ties both inner products and both actions together and fails if any
single phase or translation convention is wrong.
"""

import numpy as np
import pytest

from qhm.algebra import adjoint, star, trace_D
from qhm.bimodule import (act_left, act_right, inner_D, inner_E, trace_E)
from qhm.random_fields import make_battery, random_module_vector


@pytest.fixture()
def vectors(grid4, rng):
    return [random_module_vector(grid4, rng) for _ in range(3)]


def test_inner_products_are_conjugate_symmetric(vectors):
    f, g, _ = vectors
    assert (adjoint(inner_D(f, g)) - inner_D(g, f)).norm_inf() < 1e-12
    assert (adjoint(inner_E(f, g)) - inner_E(g, f)).norm_inf() < 1e-12


def test_inner_products_sesquilinear(grid4, vectors):
    f, g, h = vectors
    z = 0.7 - 0.3j
    lhs = inner_D(f, g.scaled(z) + h)
    rhs = inner_D(f, g).scaled(np.conj(z)) + inner_D(f, h)
    assert (lhs - rhs).norm_inf() < 1e-11


def test_imprimitivity(vectors):
    f, g, h = vectors
    lhs = act_left(inner_E(f, g), h)
    rhs = act_right(f, inner_D(g, h))
    scale = max(lhs.norm_inf(), 1.0)
    assert (lhs - rhs).norm_inf() < 1e-11 * scale


def test_left_action_is_module_action(vectors):
    f, g, h = vectors
    psi = inner_E(f, g)
    lhs = act_left(psi, act_left(psi, h))
    rhs = act_left(star(psi, psi), h)
    assert (lhs - rhs).norm_inf() < 1e-10 * max(lhs.norm_inf(), 1.0)


def test_right_action_is_module_action(vectors):
    f, g, h = vectors
    phi = inner_D(f, g)
    lhs = act_right(act_right(h, phi), phi)
    rhs = act_right(h, star(phi, phi))
    assert (lhs - rhs).norm_inf() < 1e-10 * max(lhs.norm_inf(), 1.0)


def test_inner_d_compatible_with_right_action(vectors):
    # <f.phi, g>_D = phi* <f,g>_D   and   <f, g.phi>_D = <f,g>_D phi
    f, g, h = vectors
    phi = inner_D(g, h)
    lhs = inner_D(act_right(f, phi), g)
    rhs = star(adjoint(phi), inner_D(f, g))
    assert (lhs - rhs).norm_inf() < 1e-10 * max(lhs.norm_inf(), 1.0)
    lhs2 = inner_D(f, act_right(g, phi))
    rhs2 = star(inner_D(f, g), phi)
    assert (lhs2 - rhs2).norm_inf() < 1e-10 * max(lhs2.norm_inf(), 1.0)


def test_traces_agree_through_the_bimodule(vectors):
    # tau_D(<f,f>_D) = tau_E(<f,f>_E): the bimodule links the two traces
    f = vectors[0]
    a = trace_D(inner_D(f, f))
    b = trace_E(inner_E(f, f))
    assert abs(a - b) < 1e-11 * max(abs(a), 1)
    assert a.real > 0 and abs(a.imag) < 1e-12 * max(abs(a), 1)


def test_battery_is_deterministic(grid4):
    a = make_battery(grid4, 3, seed=7)
    b = make_battery(grid4, 3, seed=7)
    for u, v in zip(a, b):
        assert (u - v).norm_inf() == 0.0
