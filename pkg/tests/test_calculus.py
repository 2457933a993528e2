import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from varfrac import (CheckerboardPerturbation, ConfigurationError, ConstantFar, ConstantField,
                     DiscreteFunction, DivergenceError, ExteriorModel, KernelSpec, PowerFar,
                     SeparableField, SignFar, ZeroFar, build_mesh, crossregion_seminorm, energy,
                     energy_gradient, gagliardo_seminorm, tail, tail_space_seminorm)
from varfrac.solver import assemble_linear_system

from conftest import finite_difference, random_instance

S05, P2 = ConstantField("order", 0.5), ConstantField("exponent", 2.0)


def two_cell():
    mesh = build_mesh((0.0, 2.0), 1.0, 2.0, 1)
    v = DiscreteFunction(mesh, np.where(mesh.centers[:, 0] == 1.5, 1.0, 0.0), ZeroFar())
    return mesh, v


# -- seminorm -----------------------------------------------------------------


def test_seminorm_constant_zero(mesh_1d):
    v = DiscreteFunction(mesh_1d, np.full(mesh_1d.n_cells, 3.0))
    assert gagliardo_seminorm(v, None, S05, P2).value == 0.0


def test_seminorm_two_cells():
    _, v = two_cell()
    assert gagliardo_seminorm(v, None, S05, P2).value == 2.0


def test_seminorm_sign_and_shift(mesh_1d, rng):
    v = DiscreteFunction(mesh_1d, rng.normal(size=mesh_1d.n_cells))
    base = gagliardo_seminorm(v, None, S05, P2).value
    assert gagliardo_seminorm(-v, None, S05, P2).value == pytest.approx(base, rel=1e-14)
    assert gagliardo_seminorm(v + 4.0, None, S05, P2).value == pytest.approx(base, rel=1e-12)


def test_seminorm_refinement_settles():
    mesh = build_mesh((0.0, 1.0), 1 / 8, 2.0, 1)
    v = DiscreteFunction.from_callable(mesh, lambda c: c[:, 0] ** 2)
    vals = [gagliardo_seminorm(v, None, ConstantField("order", 0.3), P2, refine=k).value
            for k in range(4)]
    steps = np.abs(np.diff(vals))
    assert np.all(np.diff(steps) < 0)
    assert np.all(np.sign(np.diff(vals)) == np.sign(vals[1] - vals[0]))


# -- cross-region seminorm ---------------------------------------------------


def test_crossregion_constant_zero():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, ConstantFar(2.0)).discrete(2.0)
    assert crossregion_seminorm(v, S05, P2).value == 0.0


def test_crossregion_far_only_closed_form():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, ConstantFar(1.0), 0.0).discrete(0.0)
    x = mesh.centers[mesh.interior, 0]
    r = mesh.r_max
    exact = 2 * np.sum(mesh.measure * ((r - x) ** -1.0 + (r + x) ** -1.0))
    assert crossregion_seminorm(v, S05, P2).value == pytest.approx(exact, rel=1e-10)


def test_crossregion_power_decay_finite():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    p = ConstantField("exponent", 2.5)
    v = ExteriorModel(mesh, PowerFar(1.0, 1.5)).discrete(0.0)
    assert np.isfinite(crossregion_seminorm(v, S05, p).value)


# -- tails ---------------------------------------------------------------------


def test_tail_zero(mesh_1d):
    v = DiscreteFunction(mesh_1d, np.zeros(mesh_1d.n_cells))
    assert tail(v, [0.0], 1.0, 0.5, S05, P2).value == 0.0


def test_tail_unit_radial():
    mesh = build_mesh((-1.0, 1.0), 1 / 64, 4.0, 1)
    v = ExteriorModel(mesh, ConstantFar(1.0)).discrete(1.0)
    t = tail(v, [0.0], 1.0, 0.5, S05, P2)
    assert t.value == pytest.approx(2.0, rel=1e-3)
    assert t.analytic_part == pytest.approx(2 * 4.0 ** -1, rel=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 0.9), st.floats(0.05, 0.3))
def test_tail_monotone_in_radius(r, rho):
    mesh = build_mesh((-1.0, 1.0), 1 / 16, 2.0, 1)
    v = ExteriorModel(mesh, PowerFar(1.0, 0.5)).discrete(0.5)
    small = tail(v, [0.0], 2 * r, rho, S05, P2).value
    big = tail(v, [0.0], r, rho, S05, P2).value
    assert small <= big


def test_tail_requires_ball_inside_collar():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, ZeroFar()).discrete(1.0)
    with pytest.raises(ConfigurationError, match="R_max"):
        tail(v, [0.5], 1.8, 0.2, S05, P2)


def test_tail_truncation_consistency():
    v1 = ExteriorModel(build_mesh((-1.0, 1.0), 1 / 32, 3.0, 1), PowerFar(1.0, 0.25))
    v2 = ExteriorModel(build_mesh((-1.0, 1.0), 1 / 32, 6.0, 1), PowerFar(1.0, 0.25))
    t1 = tail(v1.discrete(0.0), [0.0], 1.0, 0.5, S05, P2)
    t2 = tail(v2.discrete(0.0), [0.0], 1.0, 0.5, S05, P2)
    assert abs(t1.value - t2.value) < t1.analytic_part


def test_tail_space_zero(mesh_1d):
    v = DiscreteFunction(mesh_1d, np.zeros(mesh_1d.n_cells))
    assert tail_space_seminorm(v, S05, P2).value == 0.0


@pytest.mark.parametrize("bound", [0.5, 1.0, 3.0])
def test_tail_space_bounded(bound):
    mesh = build_mesh((-1.0, 1.0), 1 / 16, 2.0, 1)
    order = SeparableField("order", 0.3, 0.05, 0.5)
    exponent = SeparableField("exponent", 1.8, 0.1, 0.5)
    v = ExteriorModel(mesh, SignFar(bound)).discrete(
        np.linspace(-bound, bound, mesh.interior.size))
    sp = order.lower * exponent.lower
    weight = 2 * integrate.quad(lambda t: (1 + t) ** (-(1 + sp)), 0, np.inf)[0]
    assert tail_space_seminorm(v, order, exponent).value <= bound ** (exponent.upper - 1) * weight


@pytest.mark.parametrize("x0, r, rho", [([0.0], 0.5, 0.3), ([0.3], 0.4, 0.2), ([-0.5], 1.0, 0.5)])
def test_tail_bounded_by_tail_space(x0, r, rho):
    mesh = build_mesh((-1.0, 1.0), 1 / 16, 2.0, 1)
    order = SeparableField("order", 0.3, 0.05, 0.5)
    exponent = SeparableField("exponent", 1.8, 0.1, 0.5)
    v = ExteriorModel(mesh, PowerFar(1.5, 0.3)).discrete(0.7)
    factor = (1 + (abs(x0[0]) + 1) / r) ** (1 + order.upper * exponent.upper)
    left = tail(v, x0, r, rho, order, exponent).value
    assert left <= factor * tail_space_seminorm(v, order, exponent).value


def test_growing_far_field_diverges():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, PowerFar(1.0, -2.0)).discrete(0.0)
    with pytest.raises(DivergenceError):
        tail(v, [0.0], 1.0, 0.5, S05, P2)


# -- energy --------------------------------------------------------------------


def test_energy_constant_zero():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, ConstantFar(1.5)).discrete(1.5)
    assert energy(v, S05, P2, KernelSpec()) == 0.0


def test_energy_two_cells_by_hand():
    _, v = two_cell()
    # interior pair 1/2; collar cells -0.5, -1.5 against the cell at 1.5;
    # far field beyond |y| = 2 in closed form
    expected = 0.5 + 0.5 / 4 + 0.5 / 9 + 0.5 * (1 / 0.5 + 1 / 3.5)
    assert energy(v, S05, P2, KernelSpec()) == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("lam", [0.5, 2.0, -3.0])
def test_energy_homogeneous_p2(mesh_1d, rng, lam):
    v = ExteriorModel(mesh_1d, ZeroFar()).discrete(rng.normal(size=mesh_1d.interior.size))
    base = energy(v, S05, P2, KernelSpec())
    assert energy(lam * v, S05, P2, KernelSpec()) == pytest.approx(lam ** 2 * base, rel=1e-12)


def test_energy_nonnegative_and_threads(rng):
    v, order, exponent, kernel = random_instance(3, 2)
    e1 = energy(v, order, exponent, kernel, n_jobs=1)
    e4 = energy(v, order, exponent, kernel, n_jobs=4)
    assert e1 > 0 and e1 == e4


def test_gradient_zero_at_matching_constant():
    mesh = build_mesh((-1.0, 1.0), 0.25, 2.0, 1)
    v = ExteriorModel(mesh, ConstantFar(0.7)).discrete(0.7)
    assert np.all(energy_gradient(v, S05, ConstantField("exponent", 1.5), KernelSpec()) == 0.0)


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("n", [1, 2])
def test_gradient_finite_differences(seed, n):
    v, order, exponent, kernel = random_instance(seed, n)
    g = energy_gradient(v, order, exponent, kernel)
    fd = finite_difference(v, order, exponent, kernel)
    assert np.max(np.abs(g - fd)) <= 1e-6 * np.max(np.abs(fd))


@pytest.mark.parametrize("n", [1, 2])
def test_gradient_matches_linear_system(n):
    v, order, _, kernel = random_instance(5, n)
    ext = v.exterior_model()
    A, b = assemble_linear_system(v.mesh, order, P2, kernel, ext)
    g = energy_gradient(v, order, P2, kernel)
    assert np.allclose(g, A @ v.interior_values - b, rtol=1e-10, atol=1e-12)
    assert np.array_equal(A, A.T) and np.all(np.diag(A) > 0)


@pytest.mark.parametrize("seed", range(6))
def test_lambda_sandwich(seed):
    v, order, exponent, _ = random_instance(seed, 1 + seed % 2)
    lam = 2.0
    base = energy(v, order, exponent, KernelSpec(lam=lam, n=v.mesh.n))
    pert = KernelSpec(lam=lam, perturbation=CheckerboardPerturbation(0.2, 0.55, 1.9), n=v.mesh.n)
    perturbed = energy(v, order, exponent, pert)
    assert base / lam <= perturbed <= lam * base
