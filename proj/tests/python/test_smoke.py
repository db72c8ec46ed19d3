import math

import numpy as np
import pytest

import deformk as dk


def test_isotropic_section_geometry():
    phi = dk.Potential.isotropic(2)
    assert phi.dim == 2
    assert dk.quasi_distance(phi, [0, 0], [0.3, 0.4]) == pytest.approx(0.5 / math.sqrt(2))
    assert dk.section_volume(phi, [0.1, 0.2], 0.5, 300) == pytest.approx(2 * math.pi * 0.25, rel=5e-3)
    e = dk.fit_ellipsoid(phi, [0, 0], 0.5)
    assert e["inner"] == pytest.approx(1, abs=1e-3)
    assert dk.compute_tau(phi) == pytest.approx(3, abs=1e-3)


def test_bad_potential_raises():
    with pytest.raises(dk.DeformkError):
        dk.Potential.from_id("perturbed", [0.9], 2)


def test_operator_order():
    phi = dk.Potential.isotropic(1)
    lo, mid, hi = dk.operator_triple(lambda x: math.exp(-x[0] ** 2), 1.0, [0.2], phi, 1, 2, 1.3)
    assert lo <= mid <= hi


def test_solve_and_holder():
    phi = dk.Potential.isotropic(1)
    r = dk.solve(phi, [[-1, 1]], 1 / 128, 1, 2, 1.5, "plus", exterior=lambda x: 1.0 if x[0] > 1 else 0.0)
    assert r["converged"]
    v = np.asarray(r["values"])
    assert v.shape == (257,)
    assert v.min() >= -1e-9 and v.max() <= 1 + 1e-9
    # step datum on the right: the solution increases across the box
    assert np.all(np.diff(v) >= -1e-9)
    assert 0.3 < v[128] < 0.7
    fit = dk.holder_exponent(phi, [[-1, 1]], 1 / 128, v, [0.0])
    assert 0 < fit["alpha"] and fit["r2"] >= 0.9


def test_sigma_out_of_range():
    with pytest.raises(dk.DeformkError):
        dk.solve(dk.Potential.isotropic(1), [[-1, 1]], 1 / 16, 1, 2, 2.5)


def test_monte_carlo_constant_payoff():
    e = dk.exit_payoff(dk.Potential.isotropic(1), 1.0, 1.2, 0.25, [0.0], [[-1, 1]], paths=200)
    assert e["mean"] == 0.25 and e["std_error"] == 0
