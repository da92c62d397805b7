import math

import numpy as np
import pytest

from llmpcc.envelope import (Cone, EnvelopeParams, R_beta, Region, classify_region,
                             cone_membership, dist_to_D, in_interior_T, lipschitz_modulus,
                             moreau_env, p_lambda_mu, pl_constant, project_D,
                             project_D_C_beta, r_beta)
from llmpcc.errors import DomainError, ParameterError

BETAS = (0.1, 0.5, 0.9, 0.999)


def _samples(n, seed=0, scale=5.0):
    rng = np.random.Generator(np.random.PCG64(seed))
    return rng.uniform(-scale, scale, (n, 2))


@pytest.mark.parametrize("z,beta,expected", [
    ((-1, -1), 0.5, Region.OMinus),
    ((1, 1), 0.5, Region.TBeta),
    ((1, 3), 0.5, Region.HPlus),
    ((3, -1), 0.5, Region.HMinus),
    ((0, 0), 0.5, Region.OMinus),
    ((0, 2), 0.5, Region.HPlus),
])
def test_classify_region_examples(z, beta, expected):
    assert classify_region(z, beta) is expected


@pytest.mark.parametrize("beta", [0.0, 1.0, -0.5, 1.5, float("nan")])
def test_beta_out_of_range(beta):
    with pytest.raises(ParameterError):
        classify_region((1, 1), beta)
    with pytest.raises(ParameterError):
        r_beta((1, 1), beta)


def test_region_partition():
    Z = _samples(20000, 1)
    for beta in BETAS:
        omb = 1.0 - beta
        for z1, z2 in Z:
            reg = classify_region((z1, z2), beta)
            if reg is Region.OMinus:
                assert z1 <= 0 and z2 <= 0
            elif reg is Region.TBeta:
                assert z1 > 0 and omb * z1 <= z2 <= z1 / omb
            elif reg is Region.HPlus:
                assert z2 >= max(z1, 0.0) / omb
            else:
                assert z1 >= max(z2, 0.0) / omb or z2 < omb * z1


@pytest.mark.parametrize("z,d", [((2, 0), 0.0), ((1, 1), 1.0), ((-3, -4), 5.0), ((-1, 5), 1.0)])
def test_dist_to_D(z, d):
    assert dist_to_D(z) == pytest.approx(d, abs=1e-15)


def test_dist_matches_formula_away_from_cancellation():
    for z in _samples(2000, 2):
        m = max(z[0], z[1], 0.0)
        assert dist_to_D(z) == pytest.approx(math.sqrt(z @ z - m * m), rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("z,p", [((3, 2), (3, 0)), ((-1, 5), (0, 5)), ((2, 2), (2, 0)),
                                 ((-1, -1), (0, 0)), ((2, 3), (0, 3))])
def test_project_D(z, p):
    np.testing.assert_array_equal(project_D(z), p)


def test_moreau_env():
    assert moreau_env((1, 1), 1.0) == pytest.approx(0.5)
    assert moreau_env((-1, -2), 0.5) == pytest.approx(5.0)
    assert moreau_env((4.0, 0.0), 0.3) == 0.0
    with pytest.raises(ParameterError):
        moreau_env((1, 1), 0.0)


def test_p_lambda_mu():
    np.testing.assert_allclose(p_lambda_mu((-1, -1), 1.0, 0.5), (-2, -2))
    np.testing.assert_allclose(p_lambda_mu((0, 3), 1.0, 0.5), (0, 3))
    np.testing.assert_allclose(p_lambda_mu((1, 1), 1.0, 0.5), (4 / 3, 4 / 3))
    for mu in (0.0, 1.0, 2.0):
        with pytest.raises(ParameterError):
            p_lambda_mu((1, 1), 1.0, mu)


def test_p_lambda_mu_attains_sup():
    # the double envelope value equals the objective of the sup at its maximiser
    lam = 1.3
    for beta in (0.3, 0.9):
        mu = beta * lam
        for z in _samples(500, 3, 3.0):
            w = p_lambda_mu(z, lam, mu)
            val = moreau_env(w, lam) - float((w - z) @ (w - z)) / (2 * mu)
            assert val == pytest.approx(r_beta(z, beta) / lam, rel=1e-9, abs=1e-12)


def test_r_beta_examples():
    assert r_beta((2, 0), 0.5) == 0.0
    assert r_beta((-1, -2), 0.5) == pytest.approx(5.0)
    assert r_beta((1, 1), 0.5) == pytest.approx(2 / 3)


def test_R_beta_examples():
    np.testing.assert_allclose(R_beta((0, 5), 0.5), (0, 0))
    np.testing.assert_allclose(R_beta((1, 1), 0.5), (2 / 3, 2 / 3))
    np.testing.assert_allclose(R_beta((3, -1), 0.5), (0, -2))


def test_sandwich_and_zero_set():
    for beta in BETAS:
        for z in _samples(5000, 4):
            d2 = dist_to_D(z) ** 2
            r = r_beta(z, beta)
            assert 0.5 * d2 * (1 - 1e-12) <= r <= d2 / (2 * (1 - beta)) * (1 + 1e-12) + 1e-300
        for z in [(0, 0), (3, 0), (0, 7.5)]:
            assert r_beta(z, beta) == 0.0


def test_r_beta_positive_off_D():
    for beta in BETAS:
        for z in _samples(2000, 5):
            if dist_to_D(z) > 1e-12:
                assert r_beta(z, beta) > 0


def _boundary_points(beta, rng, n):
    omb = 1.0 - beta
    t = rng.uniform(0.1, 4.0, n)
    return [
        *[(ti, omb * ti) for ti in t],        # T / HMinus
        *[(ti, ti / omb) for ti in t],        # T / HPlus
        *[(0.0, ti) for ti in t],             # OMinus / HPlus
        *[(ti, 0.0) for ti in t],             # OMinus side / HMinus
        *[(-ti, 0.0) for ti in t],
        *[(0.0, -ti) for ti in t],
    ]


def test_R_beta_continuous_across_boundaries():
    rng = np.random.Generator(np.random.PCG64(6))
    for beta in BETAS:
        for z in _boundary_points(beta, rng, 50):
            z = np.array(z)
            for d in 1e-10 * np.array([[1, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]]):
                a, b = R_beta(z, beta), R_beta(z + d, beta)
                assert np.linalg.norm(a - b) <= 1e-6
                assert abs(r_beta(z, beta) - r_beta(z + d, beta)) <= 1e-6


def test_lipschitz_and_pl_constants():
    assert lipschitz_modulus(0.5) == 2.0
    assert lipschitz_modulus(0.9) == pytest.approx(10.0)
    assert lipschitz_modulus(0.1) == pytest.approx(10.0)
    assert pl_constant(0.5) == pytest.approx(2 / 3)
    assert pl_constant(0.9) == pytest.approx(0.1 / (0.9 * 1.1))
    assert pl_constant(0.25) == pytest.approx(4 / 3)


def test_pl_fails_on_diagonal_for_small_beta():
    # recorded discrepancy: the stated constant is too large for beta < 1/2
    beta = 0.25
    R = R_beta((1, 1), beta)
    assert 0.5 * R @ R < pl_constant(beta) * r_beta((1, 1), beta)
    assert 0.5 * R @ R == pytest.approx(r_beta((1, 1), beta) / (2 - beta))


def test_project_D_C_beta():
    np.testing.assert_array_equal(project_D_C_beta((1, 1), 0.5), (0, 0))
    np.testing.assert_array_equal(project_D_C_beta((3, -1), 0.5), (3, 0))
    np.testing.assert_array_equal(project_D_C_beta((-2, -2), 0.5), (0, 0))
    assert in_interior_T((1, 1), 0.5)
    assert not in_interior_T((1, 0.5), 0.5)


@pytest.mark.parametrize("y,zbar,cone,expected", [
    ((0, -7), (2, 0), Cone.Regular, True),
    ((1, 1), (0, 0), Cone.Limiting, False),
    ((1, 1), (0, 0), Cone.Clarke, True),
    ((-1, -2), (0, 0), Cone.Regular, True),
    ((3, 0), (0, 0), Cone.Regular, False),
    ((3, 0), (0, 0), Cone.Limiting, True),
    ((3, -1), (0, 0), Cone.Limiting, False),
    ((3, -1), (0, 0), Cone.Clarke, False),
    ((1, 0), (2, 0), Cone.Clarke, False),
    ((5, 0), (0, 2), Cone.Regular, True),
])
def test_cone_membership_table(y, zbar, cone, expected):
    assert cone_membership(y, zbar, cone) is expected


def test_cone_membership_needs_point_of_D():
    with pytest.raises(DomainError):
        cone_membership((0, 0), (1, 1), Cone.Clarke)
    with pytest.raises(DomainError):
        cone_membership((0, 0), (-1, 0), Cone.Regular)


def test_cones_nested():
    rng = np.random.Generator(np.random.PCG64(7))
    Y = rng.integers(-2, 3, (400, 2)).astype(float)
    for zbar in [(0, 0), (1, 0), (0, 1)]:
        for y in Y:
            reg = cone_membership(y, zbar, Cone.Regular)
            lim = cone_membership(y, zbar, Cone.Limiting)
            cla = cone_membership(y, zbar, Cone.Clarke)
            assert (not reg or lim) and (not lim or cla)


def test_R_beta_in_regular_cone_outside_T():
    for beta in BETAS:
        for z in _samples(5000, 8):
            if in_interior_T(z, beta):
                continue
            assert cone_membership(R_beta(z, beta), project_D(z), Cone.Regular, 1e-12)


def test_envelope_params():
    p = EnvelopeParams(2.0, 0.25)
    assert p.mu == 0.5
    with pytest.raises(ParameterError):
        EnvelopeParams(-1.0, 0.5)
    with pytest.raises(ParameterError):
        EnvelopeParams(1.0, 1.0)
