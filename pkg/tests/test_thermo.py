import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conjclt.conjugacy import class_of, class_sphere_array, class_sphere_size, restricted_sphere_array
from conjclt.symbolic import birkhoff_array, constant_weight, tree_length_weight
from conjclt.thermo import (
    SpectralIterationError,
    build_transfer_matrix,
    derivatives,
    eta_coefficient,
    kappa_bound,
    kappa_exact,
    lambda_,
    perron,
    pressure,
    sigma2,
    sigma2_green_kubo,
    spectral_decomposition,
    spectral_projection_value,
    weighted_restricted_sum,
)
from conjclt.words import Word, sample_sphere_array, sphere_array

from conftest import SQRT2

# Green-Kubo for the (1, sqrt 2) tree weight by hand: the generator type of
# consecutive letters is a two-state chain with eigenvalue 1/3 - 2/3 = -1/3,
# so sigma^2 = Var f * (1 + 2 sum_j (-1/3)^j) = Var f / 2 with Var f = (sqrt2 - 1)^2 / 4.
TREE_SIGMA2 = (SQRT2 - 1) ** 2 / 8
assert abs(TREE_SIGMA2 - (3 - 2 * SQRT2) / 8) < 1e-16


def eig_pressure(f, t):
    """log spectral radius of the q-block matrix, by a dense eigensolve."""
    blocks = [tuple(b) for b in sphere_array(f.p, f.q).tolist()]
    idx = {b: i for i, b in enumerate(blocks)}
    M = np.zeros((len(blocks), len(blocks)))
    for b in blocks:
        for c in range(2 * f.p):
            if c != b[-1] ^ 1:
                nb = b[1:] + (c,)
                M[idx[b], idx[nb]] = math.exp(t * f.value(nb))
    return math.log(max(abs(np.linalg.eigvals(M))))


@pytest.mark.parametrize("p", [2, 3])
def test_pressure_at_zero(p, tree, turn):
    for f in [constant_weight(p), tree_length_weight(p, [1.0] + [SQRT2] * (p - 1))]:
        assert abs(pressure(f, 0.0) - math.log(2 * p - 1)) < 1e-12
    assert abs(pressure(turn, 0.0) - math.log(3)) < 1e-12


@pytest.mark.parametrize("t", [-1.0, -0.3, 0.4, 1.5])
def test_pressure_matches_eigensolve(t, tree, turn):
    assert pressure(tree, t) == pytest.approx(eig_pressure(tree, t), abs=1e-11)
    assert pressure(turn, t) == pytest.approx(eig_pressure(turn, t), abs=1e-11)


def test_pressure_is_growth_rate(turn):
    z = [math.fsum(np.exp(0.7 * birkhoff_array(turn, sphere_array(2, n)))) for n in (9, 10)]
    assert math.log(z[1] / z[0]) == pytest.approx(pressure(turn, 0.7), abs=1e-4)


def test_constant_shift():
    f = constant_weight(2, 1.0)
    for t in (-0.5, 0.25, 1.0):
        assert pressure(f, t) == pytest.approx(math.log(3) + t, abs=1e-12)


def test_perron_data(turn):
    tm = build_transfer_matrix(turn, 0.6)
    pd = perron(tm)
    M = np.asarray(tm.entries)
    assert np.allclose(M @ pd.psi, pd.beta * pd.psi, rtol=1e-11)
    assert np.allclose(pd.nu @ M, pd.beta * pd.nu, rtol=1e-11)
    assert pd.nu.sum() == pytest.approx(1.0)
    assert pd.nu @ pd.psi == pytest.approx(1.0)
    assert (pd.psi > 0).all() and (pd.nu > 0).all()
    assert 0 <= pd.gap < 1
    ev = sorted(abs(np.linalg.eigvals(M)), reverse=True)
    assert pd.gap >= ev[1] / ev[0] - 1e-6
    with pytest.raises(SpectralIterationError):
        perron(tm, max_iter=1)


def test_transfer_matrix_at_zero_is_adjacency(tree):
    tm = build_transfer_matrix(tree, 0.0)
    A = np.ones((4, 4)) - np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    assert np.array_equal(tm.entries, A)
    assert tm.states[tm.empty_index] == (4,)


def test_spectral_decomposition(turn):
    sd = spectral_decomposition(turn)
    assert sd.beta == pytest.approx(3.0)
    assert np.allclose(sd.R0 @ sd.R0, sd.R0, atol=1e-12)
    assert np.allclose(sd.R0 @ sd.Q, 0, atol=1e-11)
    assert sd.q_bound < sd.beta


def test_tree_derivatives(tree):
    assert lambda_(tree) == pytest.approx((1 + SQRT2) / 2, abs=1e-15)
    d = derivatives(tree)
    assert d.lambda_discrepancy < 1e-8
    assert abs(d.sigma2_gk - TREE_SIGMA2) < 1e-12
    assert abs(d.sigma2_fd - TREE_SIGMA2) < 1e-6


def test_turn_derivatives(turn):
    d = derivatives(turn)
    assert d.lambda_discrepancy < 1e-8
    assert d.sigma2_discrepancy < 1e-6
    assert d.sigma2_gk > 1e-3


@settings(max_examples=20, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0))
def test_duality_random_tree(a, b):
    f = tree_length_weight(2, [a, b])
    d = derivatives(f)
    assert d.lambda_discrepancy < 1e-6
    assert d.sigma2_discrepancy < 1e-6
    # same two-state reasoning as TREE_SIGMA2
    assert d.sigma2_gk == pytest.approx((a - b) ** 2 / 8, abs=1e-12)


def test_degenerate_weights():
    assert abs(sigma2(tree_length_weight(2, [1.0, 1.0]))) < 1e-10
    assert abs(sigma2_green_kubo(constant_weight(3, 2.0))) < 1e-14


S_VALUES = [0.0, 0.3, -1.0, 1.0, 0.5j, -1j, 0.4 + 0.6j]


@pytest.mark.parametrize("s", S_VALUES)
@pytest.mark.parametrize("m", [1, 4, 7])
def test_restricted_sum_matches_enumeration(s, m, turn):
    g = Word.parse("a1.a2")
    w = restricted_sphere_array(2, g, m)
    brute = np.exp(s * birkhoff_array(turn, w)).sum()
    got = weighted_restricted_sum(turn, g, m, s)
    assert abs(got - brute) <= 1e-10 * abs(brute)


def test_restricted_sum_m0(tree):
    assert weighted_restricted_sum(tree, Word.parse("a1.a2"), 0, 0.5) == 1.0
    with pytest.raises(ValueError):
        weighted_restricted_sum(tree, Word.parse("a1.a2.A1"), 2, 0.1)


@pytest.mark.parametrize("s", [0.2, 0.3j, -0.7, 1.0])
def test_eta_depth1_decomposition_exact(s, tree):
    # depth-1 weights have no junction correction
    C = class_of(Word.parse("a1.a1.a2"))
    for m in (2, 5):
        ex = eta_coefficient(C, tree, m, s, mode="exact").value
        de = eta_coefficient(C, tree, m, s)
        assert abs(ex - de.value) <= 1e-10 * abs(ex)


@pytest.mark.parametrize("s", [0.2, 0.3j, -0.5 + 0.5j])
def test_eta_depth2_within_bound(s, turn):
    C = class_of(Word.parse("a1.a2"))
    for m in (2, 6):
        ex = eta_coefficient(C, turn, m, s, mode="exact").value
        de = eta_coefficient(C, turn, m, s)
        assert abs(ex - de.value) <= de.bound * (1 + 1e-12)


def test_eta_counts_class_at_zero(turn):
    C = class_of(Word.parse("a1.a2"))
    assert eta_coefficient(C, turn, 5, 0.0).value == pytest.approx(2 * 2 * 3**4)


def test_kappa(tree, turn):
    rng = np.random.default_rng(4)
    g = Word.parse("a1.a2")
    K = kappa_bound(turn)
    worst = 0.0
    for m in range(1, 7):
        for row in sample_sphere_array(2, m, 50, rng, first_letters=[1, 2]).tolist():
            w = Word(tuple(row))
            assert kappa_exact(tree, g, w) == pytest.approx(0.0, abs=1e-12)
            worst = max(worst, abs(kappa_exact(turn, g, w)))
    assert 0 < worst <= K
    with pytest.raises(ValueError):
        kappa_exact(turn, g, Word.parse("a1"))


@pytest.mark.parametrize("rep,p", [("a1.a2", 2), ("a1.a1.a2", 2), ("a1.a2", 3), ("a1", 3)])
def test_spectral_projection_limit(rep, p, turn):
    C = class_of(Word.parse(rep), p)
    f = turn if p == 2 else constant_weight(p)
    total = sum(spectral_projection_value(f, g) for g in C.orbit)
    limit = (2 * p - 2) / (2 * p - 1) * len(C.orbit)
    assert abs(total - limit) < 1e-10
    for m in (3, 6):
        assert len(class_sphere_array(C, m)) / (2 * p - 1) ** m == pytest.approx(limit, abs=1e-10)


@pytest.mark.parametrize("s", [0.3, -0.8, 0.5j])
@pytest.mark.parametrize("m", [1, 3, 6])
def test_matrix_power_is_path_sum(s, m, tree, turn):
    rng = np.random.default_rng(m)
    for f in (tree, turn):
        tm = build_transfer_matrix(f, s)
        M = np.asarray(tm.entries)
        omega = rng.normal(size=len(M))
        got = np.linalg.matrix_power(M, m) @ omega
        idx = {b: i for i, b in enumerate(tm.sigma_states)}
        L = len(tm.sigma_states[0])
        for i, x in enumerate(tm.sigma_states):
            total = 0j
            for y in sphere_array(2, m).tolist():
                if y[-1] == x[0] ^ 1:
                    continue
                yx = tuple(y) + x
                fsum = sum(f.value(f.padded_block(yx, j)) for j in range(m))
                total += np.exp(s * fsum) * omega[idx[yx[:L]]]
            assert abs(got[i] - total) <= 1e-10 * max(1.0, abs(total))


def test_transfer_matrix_entries(tree):
    tm = build_transfer_matrix(tree, 0.7)
    M = np.asarray(tm.entries)
    allowed = M[M > 0]
    assert np.allclose(np.sort(np.unique(np.round(allowed, 12))),
                       np.round([math.exp(0.7), math.exp(0.7 * SQRT2)], 12))
    zero = constant_weight(2, 0.0)
    assert max(abs(np.linalg.eigvals(build_transfer_matrix(zero, 1.0).entries))) == pytest.approx(3.0)


def test_perron_examples(tree):
    pd = perron(build_transfer_matrix(constant_weight(2, 0.0), 0.0))
    assert pd.beta == pytest.approx(3.0, abs=1e-12)
    assert np.allclose(pd.psi, pd.psi[0]) and np.allclose(pd.nu, 0.25)
    for p, c in ((2, 0.4), (3, -1.3)):
        beta = perron(build_transfer_matrix(constant_weight(p, c), 1.0)).beta
        assert beta == pytest.approx((2 * p - 1) * math.exp(c), rel=1e-12)
    beta = perron(build_transfer_matrix(tree, 0.1)).beta
    assert math.log(beta) == pytest.approx(eig_pressure(tree, 0.1), abs=1e-10)


def test_pressure_examples(turn):
    one = constant_weight(2, 1.0)
    for t in (-1.0, 0.0, 1.0):
        assert pressure(one, t) == pytest.approx(math.log(3) + t, abs=1e-12)
    ts = np.linspace(-1, 1, 5)
    P = [pressure(turn, t) for t in ts]
    for a in range(5):
        for b in range(a + 1, 5):
            assert pressure(turn, (ts[a] + ts[b]) / 2) <= (P[a] + P[b]) / 2 + 1e-12


def test_lambda_and_sigma2_examples():
    one = constant_weight(2, 1.0)
    assert lambda_(one) == 1.0
    assert abs(sigma2(constant_weight(3, 2.7))) < 1e-10


def test_restricted_sum_examples(tree):
    g = Word.parse("a1.a2")
    zero = constant_weight(2, 0.0)
    assert weighted_restricted_sum(zero, g, 3, 0.9) == pytest.approx(18)
    C = class_of(g)
    for m in range(1, 9):
        assert weighted_restricted_sum(tree, g, m, 0.0) == pytest.approx(len(class_sphere_array(C, m)) / 2)
        brute = np.exp(0.2 * birkhoff_array(tree, restricted_sphere_array(2, g, m))).sum()
        assert abs(weighted_restricted_sum(tree, g, m, 0.2) - brute) <= 1e-10 * brute


def test_eta_examples(tree, turn):
    C = class_of(Word.parse("a1.a2"))
    for mode in ("exact", "decomposed"):
        assert eta_coefficient(C, turn, 4, 0.0, mode=mode).value == pytest.approx(108)
    for m in range(1, 7):
        ex = eta_coefficient(C, tree, m, 0.35, mode="exact").value
        assert abs(eta_coefficient(C, tree, m, 0.35).value - ex) <= 1e-12 * abs(ex)
    for m in range(1, 6):
        ex = eta_coefficient(C, turn, m, 0.35, mode="exact").value
        de = eta_coefficient(C, turn, m, 0.35)
        assert abs(ex - de.value) <= de.bound


def test_kappa_bound_examples(tree):
    assert kappa_bound(constant_weight(2, 3.0)) == 0.0
    assert kappa_bound(tree) == pytest.approx(2 * (SQRT2 - 1))
    g = Word.parse("a1.a1.a2")
    assert kappa_exact(constant_weight(2, 1.0), g, Word.parse("a2.A1")) == 0.0


def test_spectral_projection_examples(turn):
    g = Word.parse("a1.a2")
    assert spectral_projection_value(turn, g) == pytest.approx(
        spectral_projection_value(constant_weight(2, 0.0), g), abs=1e-12)
    C = class_of(Word.parse("a1.a1.a2"))
    limit = sum(spectral_projection_value(turn, h) for h in C.orbit)
    assert limit == pytest.approx(2 / 3 * 3, abs=1e-12)
    for m in range(1, 11):
        assert class_sphere_size(C, m) / 3**m == pytest.approx(limit, abs=1e-12)
