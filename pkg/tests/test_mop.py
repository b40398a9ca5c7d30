import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from nikmop.mop import (
    IndexPair,
    NormalityViolation,
    assemble_moment_system,
    decreasing_indices,
    extract_cached,
    extract_Q,
    solve_cached,
    solve_mop,
)
from nikmop.precision import working

from conftest import BASE, BITS, UP1, make_pair, monic_chebyshev_u

FLOOR = mp.mpf(10) ** -60


def test_index_pair_validation():
    with pytest.raises(ValueError):
        IndexPair((2, 1), (3,))
    with pytest.raises(ValueError):
        IndexPair((2, -1), (0,))
    ip = IndexPair((3, 2), (3, 1))
    assert ip.size == 5
    assert ip.m1 == 1 and ip.m2 == 1
    assert ip.is_decreasing()
    assert not IndexPair((1, 2), (1, 1)).is_decreasing()


def test_zero_count_table():
    ip = IndexPair((3, 2), (3, 1))
    assert ip.zero_count(1) == 1
    assert ip.zero_count(0) == 4
    assert ip.zero_count(-1) == 1
    assert ip.zero_count(-2) == 0
    # Empty tail on the first side: the form vanishes identically.
    assert IndexPair((1, 0), (0, 0)).zero_count(1) == -1


def test_shifted_adds_one_unit_per_side():
    ip = IndexPair((3, 2), (3, 1))
    up = ip.shifted(1, 0)
    assert up.n1 == (3, 3) and up.n2 == (4, 1)
    assert ip.shifted(0, 1).n2 == (3, 2)
    # Equal components block the shift from staying in the class.
    assert not IndexPair((2, 2), (2, 1)).shifted(1, 0).is_decreasing()


def test_lattice_counts():
    # Partition-product counts for the four acceptance layouts.
    for (m1, m2), count in [((0, 0), 10), ((1, 0), 35), ((1, 1), 125), ((2, 1), 255)]:
        lattice = decreasing_indices(m1, m2, 10)
        assert len(lattice) == count
        assert all(ip.is_decreasing() for ip in lattice)
        assert all(ip.size <= 10 for ip in lattice)
        assert len(set(lattice)) == count


@settings(deadline=None, max_examples=60)
@given(data=st.data())
def test_shift_gains_zero_counts_on_its_level_window(data):
    # One unit per side lands exactly on the levels between -l2 and l1,
    # the same window that classifies which limits keep a pole at
    # infinity.
    lattice = decreasing_indices(2, 1, 7)
    ip = data.draw(st.sampled_from(lattice))
    l1 = data.draw(st.integers(min_value=0, max_value=2))
    l2 = data.draw(st.integers(min_value=0, max_value=1))
    shifted = ip.shifted(l1, l2)
    assert shifted.size == ip.size + 1
    for j in range(-ip.m2 - 1, ip.m1 + 1):
        gain = shifted.zero_count(j) - ip.zero_count(j)
        if j == -ip.m2 - 1:
            assert gain == 0
        else:
            assert gain == (1 if -l2 <= j <= l1 else 0)


@settings(deadline=None, max_examples=60)
@given(data=st.data())
def test_zero_count_matches_tail_sums(data):
    ip = data.draw(st.sampled_from(decreasing_indices(2, 1, 8)))
    for j in range(ip.m1 + 1):
        assert ip.zero_count(j) == ip.tail_sum1(j) - 1
    for j in range(1, ip.m2 + 1):
        assert ip.zero_count(-j) == ip.tail_sum2(j)
    assert ip.zero_count(-ip.m2 - 1) == 0


def test_classical_degree_two_solution(pair00):
    sol = solve_mop(pair00, IndexPair((3,), (2,)))
    coeffs = sol.coeffs[0]
    with working(BITS):
        assert abs(coeffs[0] + mp.mpf(1) / 4) < FLOOR
        assert abs(coeffs[1]) < FLOOR
        assert coeffs[2] == 1


@pytest.mark.parametrize("n", [1, 2, 4, 7])
def test_classical_matches_monic_chebyshev(pair00, n):
    sol = solve_cached(pair00, IndexPair((n + 1,), (n,)))
    want = monic_chebyshev_u(n)
    with working(BITS):
        for got, ref in zip(sol.coeffs[0], want):
            assert abs(got - ref) < mp.mpf(10) ** -25


def test_moment_system_residual(pair11):
    index = IndexPair((3, 2), (3, 1))
    sol = solve_cached(pair11, index)
    mat = assemble_moment_system(pair11, index)
    flat = [c for block in sol.coeffs for c in block]
    with working(BITS):
        worst = mp.mpf(0)
        for r in range(mat.rows):
            num = mp.fsum(mat[r, c] * v for c, v in enumerate(flat))
            den = mp.fsum(abs(mat[r, c] * v) for c, v in enumerate(flat))
            if den > 0:
                worst = max(worst, abs(num) / den)
        assert worst < FLOOR


def test_monic_normalization_last_nonzero_block(pair11):
    sol = solve_cached(pair11, IndexPair((2, 2), (2, 1)))
    assert sol.coeffs[-1][-1] == 1
    # When the last block is empty, the previous one carries the pin.
    sol = solve_cached(pair11, IndexPair((2, 0), (1, 0)))
    assert sol.coeffs[1] == ()
    assert sol.coeffs[0][-1] == 1


def test_full_degrees_on_small_lattice(pair21):
    # solve_mop raises when a leading coefficient vanishes, so a full
    # block length certifies deg a_j = n1[j] - 1.
    for index in decreasing_indices(2, 1, 5):
        sol = solve_cached(pair21, index)
        assert all(
            len(sol.coeffs[j]) == index.n1[j] for j in range(index.m1 + 1)
        ), index


def test_classical_zeros_at_half(pair00):
    sol = solve_cached(pair00, IndexPair((3,), (2,)))
    zs = extract_Q(sol, 0)
    with working(BITS):
        assert abs(zs.zeros[0] + mp.mpf(1) / 2) < FLOOR
        assert abs(zs.zeros[1] - mp.mpf(1) / 2) < FLOOR


def test_extract_counts_across_levels(pair11):
    index = IndexPair((3, 2), (3, 1))
    sol = solve_cached(pair11, index)
    for j in range(-1, 2):
        zs = extract_cached(sol, j)
        assert len(zs.zeros) == max(index.zero_count(j), 0)
        lo, hi = pair11.hull(j)
        for r in zs.zeros:
            assert lo < r < hi
    # The outer boundary level carries no zeros at all.
    assert extract_Q(sol, -2).zeros == ()


def test_extract_identically_zero_level(pair11):
    sol = solve_cached(pair11, IndexPair((1, 0), (0, 0)))
    zs = extract_Q(sol, 1)
    assert zs.zeros == () and zs.expected == 0


def test_zero_set_poly_eval_matches_coeffs(pair11):
    sol = solve_cached(pair11, IndexPair((3, 2), (3, 1)))
    zs = extract_cached(sol, 0)
    with working(BITS):
        from nikmop.polys import poly_eval

        coeffs = zs.poly_coeffs()
        for x in (mp.mpf("-0.3"), mp.mpf("1.7"), mp.mpc("0.2", "0.8")):
            a = zs.poly_eval(x)
            b = poly_eval(coeffs, x)
            assert abs(a - b) <= abs(a) * FLOOR


def test_solve_cached_identity(pair11):
    a = solve_cached(pair11, IndexPair((2, 1), (1, 1)))
    b = solve_cached(pair11, IndexPair((2, 1), (1, 1)))
    assert a is b


def test_form_on_support_matches_pointwise(pair11):
    sol = solve_cached(pair11, IndexPair((2, 2), (2, 1)))
    for j in (-1, 0, 1):
        meas = pair11.measure(j)
        vals = sol.form_on_support(j)
        with working(BITS):
            for x, v in zip(meas.support_points[:5], vals[:5]):
                direct = sol.form(j, x)
                assert abs(direct - v) <= abs(v) * FLOOR


def test_mixed_moment_against_direct_quadrature(pair11):
    base = pair11.base
    with working(BITS):
        d1 = pair11.base_density1(1)
        d2 = pair11.base_density2(1)
        want = mp.fsum(
            w * a * b * x
            for w, x, a, b in zip(
                base.signed_weights, base.support_points, d1, d2
            )
        )
        got = pair11.mixed_moment(1, 1, 1)
        assert abs(got - want) <= abs(want) * FLOOR


def test_classical_varying_constant():
    # Orthonormal second-kind polynomials have kappa = 2^n sqrt(2/pi).
    from nikmop.mop import compute_varying_data

    pair = make_pair((BASE,), (BASE,), nodes=32)
    sol = solve_cached(pair, IndexPair((4,), (3,)))
    zsets = {0: extract_cached(sol, 0)}
    vd = compute_varying_data(sol, zsets)
    with working(BITS):
        want = 8 * mp.sqrt(2 / mp.pi)
        assert abs(vd.kappa[0] - want) / want < FLOOR
        assert vd.epsilon[0] == 1
        assert vd.K[1] == 1


def test_normality_violation_names_precision():
    pair = make_pair((BASE, UP1), (BASE,), nodes=16, bits=64)
    with pytest.raises(NormalityViolation, match="precision"):
        solve_mop(pair, IndexPair((7, 6), (12,)))
