"""Spectral Poisson solver and the critical-point construction."""

import math

import numpy as np
import pytest

from qhm.calculus import Connection, curvature_closed, extract_f1_f2
from qhm.laplace import (assemble_rhs, build_perturbation, laplace_form_residuals,
                         laplace_eigenvalues, solve_poisson, verify_critical)
from qhm.lattice import TorusFunction
from qhm.random_fields import make_battery


def character(grid, n, m):
    co = np.zeros((grid.su_steps, grid.ny), complex)
    co[n % grid.su_steps, m % grid.ny] = 1.0
    return TorusFunction.from_fft(grid, co)


def test_eigenfunction_exactness(grid4):
    lam = laplace_eigenvalues(grid4)
    # in-band modes only: Nyquist rows carry the odd-operator mask
    for n, m in ((0, 1), (1, 0), (1, 1), (1, 2)):
        chi = character(grid4, n, m)
        lhs = chi.d_dx().d_dx() + chi.d_dy().d_dy()
        dev = (lhs - chi * lam[n % grid4.su_steps, m % grid4.ny]).norm_inf()
        assert dev < 1e-12 * max(abs(lam[n % grid4.su_steps, m % grid4.ny]), 1)


def test_poisson_solves_manufactured_problem(grid4, rng):
    # manufacture G, form w = Laplace(G), recover G up to the zero mode
    from qhm.laplace import PoissonRHS
    co = np.zeros((grid4.su_steps, grid4.ny), complex)
    for n in range(-1, 2):
        for m in range(-1, 2):
            if (n, m) != (0, 0):
                co[n, m] = complex(rng.normal(), rng.normal())
    g_true = TorusFunction.from_fft(grid4, co)
    w = g_true.d_dx().d_dx() + g_true.d_dy().d_dy()
    sol = solve_poisson(PoissonRHS(w=w, a0=0.0, discarded_mean=0.0))
    assert (sol - g_true).norm_inf() < 1e-10 * max(g_true.norm_inf(), 1)


def test_poisson_apply_residual(grid4, rng):
    from qhm.laplace import PoissonRHS
    co = np.zeros((grid4.su_steps, grid4.ny), complex)
    for n in range(-1, 2):
        for m in range(-3, 4):
            if (n, m) != (0, 0):
                co[n, m] = complex(rng.normal(), rng.normal())
    w = TorusFunction.from_fft(grid4, co)
    sol = solve_poisson(PoissonRHS(w=w, a0=0.0, discarded_mean=0.0))
    resid = (sol.d_dx().d_dx() + sol.d_dy().d_dy() - w).norm_inf()
    assert resid < 1e-9 * w.norm_inf()


def test_poisson_rejects_nonzero_mean(grid4):
    from qhm.laplace import PoissonRHS
    w = TorusFunction(grid4, np.ones((grid4.su_steps, grid4.ny), complex))
    with pytest.raises(ValueError):
        solve_poisson(PoissonRHS(w=w, a0=0.0, discarded_mean=0.0))


def test_assemble_rhs_splits_zero_mode(grid9, R9):
    f1, f2 = extract_f1_f2(curvature_closed(R9))
    rhs = assemble_rhs(f1, f2, grid9.params.c)
    assert abs(rhs.w.mean()) < 1e-12 * max(rhs.w.norm_inf(), 1)
    assert abs(rhs.discarded_mean - grid9.params.c * rhs.a0) < 1e-12
    # the observed zero mode of f1 is purely imaginary and nonzero
    assert abs(rhs.a0.real) < 1e-10
    assert abs(rhs.a0.imag) > 0.5


def test_construction_is_critical(grid9, R9):
    battery = make_battery(grid9, 3, 0, include=[R9])
    rep = verify_critical(R9)
    from qhm.yangmills import critical_residuals
    nabla = Connection(R9, rep["perturbation"])
    res = critical_residuals(nabla, battery, rep["theta0"])
    assert res.r1 < 1e-10
    assert res.r2 < 1e-10
    assert res.r3 < 1e-10


def test_flat_connection_is_not_critical(grid9, R9):
    battery = make_battery(grid9, 3, 0, include=[R9])
    rep = verify_critical(R9, battery=battery)
    res0 = rep["residuals_grassmannian"]
    assert res0["r3"] > 1.0


def test_zero_mode_policy(grid9, R9):
    # absorbed: third equation holds as stated; mean-zero: c*a0 remains
    battery = make_battery(grid9, 2, 0)
    rep_abs = verify_critical(R9, battery=battery, absorb_zero_mode=True)
    rep_osc = verify_critical(R9, battery=battery, absorb_zero_mode=False)
    assert rep_abs["residuals"]["r3"] < 1e-10
    assert rep_osc["residuals"]["r3"] > 1e-3        # constant c*a0 defect
    assert rep_osc["residuals"]["r3_osc"] < 1e-10   # removed in the osc part
    a0 = rep_abs["a0"]
    g3_shift = (rep_abs["perturbation"].g3 - rep_osc["perturbation"].g3).mean()
    assert abs(g3_shift - a0 / grid9.params.c) < 1e-12


def test_laplace_form_residuals(grid9, R9):
    rep = verify_critical(R9)
    cor = laplace_form_residuals(rep["f1"], rep["f2"], rep["perturbation"],
                              grid9.params.c)
    a0 = abs(rep["a0"])
    # theta_xy and the oscillatory second equation vanish; the two "as
    # stated" forms carry exactly the absorbed constant |a0|
    assert cor["theta_xy"] < 1e-10
    assert cor["second_eq_osc"] < 1e-9
    assert abs(cor["first_eq"] - a0) < 1e-10
    assert abs(cor["second_eq_const"] - a0) < 1e-10


def test_perturbation_components_are_skew(grid9, R9):
    rep = verify_critical(R9)
    pert = rep["perturbation"]
    for name, g in pert.items():
        assert g.is_skew(1e-11), name
    assert pert.g2.norm_inf() == 0.0
