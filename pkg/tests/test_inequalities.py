import numpy as np
import pytest
from hypothesis import given, strategies as st

from nelsonlab.grid import Grid, LatticeFunction
from nelsonlab.inequalities import (
    DomainError,
    PreconditionError,
    RadialProfile,
    ScalingError,
    diagonal_divergence_demo,
    hardy_littlewood_check,
    integral_1d,
    integral_3d,
    integral_estimate_check,
    offset_decay_check,
    peetre_check,
    rearrange,
    subtracted_kernel,
)

GRID = Grid(1, 128, 32.0)
SMALL = Grid(1, 16, 8.0)

# Frozen quadrature references (independent oracle, quad tolerance 1e-6).
PROP_R0 = {1.0: 0.523599, 2.0: 0.261799, 4.0: 0.130900, 8.0: 0.065450}
PROP_R1 = {1.0: 0.436332, 2.0: 0.245639, 4.0: 0.128456, 8.0: 0.065121}
CUTOFF_PREFACTORS = [0.33628585, 0.15855297, 0.05228344, 0.01454629]
DECAY_I = [6.542648, 3.568951, 1.860886, 0.949676, 0.479654]
DECAY_SLOPE = -0.9450
DECAY_PROXY = [23.98, 18.21, 6.65]
DEMO_UNSUB = [0.0048601, 0.0069463, 0.0091045, 0.0112877, 0.0134789]
DEMO_SUB = [-0.0009716, -0.0010263, -0.0010460, -0.0010525, -0.0010546]


def lattice(grid, values):
    return LatticeFunction(grid, np.asarray(values, dtype=complex))


def signed_positions(grid):
    half = 0.5 * grid.box
    return np.mod(grid.axis_positions() + half, grid.box) - half


nonneg_16 = st.lists(
    st.floats(min_value=0.0, max_value=1e3, allow_nan=False),
    min_size=16,
    max_size=16,
)
point_3d = st.lists(
    st.floats(min_value=-50.0, max_value=50.0, allow_nan=False),
    min_size=3,
    max_size=3,
)


# -- rearrangement


@given(nonneg_16)
def test_rearrange_idempotent_and_equimeasurable(vals):
    prof = rearrange(lattice(SMALL, vals))
    assert rearrange(prof) is prof
    assert np.all(np.diff(prof.values) <= 0.0)
    assert np.array_equal(np.sort(prof.values), np.sort(np.asarray(vals)))


@given(nonneg_16, nonneg_16)
def test_rearrange_order_preserving(base, bump):
    lo = np.asarray(base)
    hi = lo + np.asarray(bump)
    p_lo = rearrange(lattice(SMALL, lo))
    p_hi = rearrange(lattice(SMALL, hi))
    assert np.all(p_lo.values <= p_hi.values)


def test_rearrange_fixes_nonincreasing_profile():
    prof = RadialProfile(np.array([1.0, 2.0, 3.0]), np.array([3.0, 1.0, 1.0]), d=3)
    assert rearrange(prof) is prof


def test_rearrange_matches_closed_form_on_lattice():
    absx = np.abs(signed_positions(GRID))
    f = lattice(GRID, np.where(absx > 1.0, np.maximum(absx, 1.0) ** -1.5, 0.0))
    prof = rearrange(f)
    h = GRID.spacing
    radii = np.sort(absx, kind="stable")
    closed = (radii + 1.0) ** -1.5
    local = np.maximum(
        np.abs((radii + h + 1.0) ** -1.5 - closed),
        np.abs((np.maximum(radii - h, 0.0) + 1.0) ** -1.5 - closed),
    )
    # the cut level set must fit inside the box
    mask = radii + 1.0 <= 0.5 * GRID.box - h
    assert int(mask.sum()) == 119
    dev = np.abs(prof.values - closed)
    assert np.all(dev[mask] <= 2.0 * local[mask] + 1e-12)


def test_rearrange_matches_closed_form_radial_3d():
    # cutoff aligned with a shell boundary makes the comparison exact
    radii = np.arange(1, 129) / 16.0
    prof = RadialProfile(radii, np.where(radii > 1.0, radii**-1.5, 0.0), d=3)
    star = rearrange(prof)
    support = star.values > 0.0
    closed = (star.radii[support] ** 3 + 1.0) ** -0.5
    assert np.max(np.abs(star.values[support] - closed)) < 1e-12


def test_rearrange_translate_of_symmetric_bump():
    xs = signed_positions(GRID)
    centered = np.exp(-0.5 * xs**2)
    shifted = np.roll(centered, 37)
    p0 = rearrange(lattice(GRID, centered))
    p1 = rearrange(lattice(GRID, shifted))
    assert np.array_equal(p0.values, p1.values)
    assert np.array_equal(p0.radii, p1.radii)


def test_rearrange_rejects_bad_input():
    vals = np.ones(GRID.size)
    vals[5] = -0.25
    with pytest.raises(DomainError, match="negative value"):
        rearrange(lattice(GRID, vals))
    with pytest.raises(DomainError, match="real"):
        rearrange(LatticeFunction(GRID, np.full(GRID.size, 1.0 + 1.0j)))
    with pytest.raises(DomainError, match="increasing"):
        RadialProfile(np.array([1.0, 1.0]), np.array([1.0, 1.0]))
    with pytest.raises(DomainError, match="dimension"):
        RadialProfile(np.array([1.0]), np.array([1.0]), d=2)


# -- Hardy-Littlewood


def test_hardy_littlewood_constant_and_equal_inputs():
    rng = np.random.default_rng(7)
    f = lattice(GRID, rng.random(GRID.size))
    g = lattice(GRID, np.full(GRID.size, 0.75))
    lhs, rhs = hardy_littlewood_check(f, g)
    assert abs(lhs - rhs) < 1e-12
    lhs, rhs = hardy_littlewood_check(f, f)
    assert abs(lhs - rhs) < 1e-12


def test_hardy_littlewood_fuzz_campaign():
    rng = np.random.default_rng(23)
    for _ in range(1000):
        f = lattice(GRID, rng.random(GRID.size))
        g = lattice(GRID, rng.random(GRID.size))
        lhs, rhs = hardy_littlewood_check(f, g)
        assert lhs <= rhs + 1e-12


@given(nonneg_16, nonneg_16)
def test_hardy_littlewood_property(a, b):
    lhs, rhs = hardy_littlewood_check(lattice(SMALL, a), lattice(SMALL, b))
    assert lhs <= rhs + 1e-12 * max(1.0, rhs)


def test_hardy_littlewood_rejects_mismatched_grids():
    with pytest.raises(DomainError, match="same grid"):
        hardy_littlewood_check(
            lattice(GRID, np.ones(GRID.size)), lattice(SMALL, np.ones(SMALL.size))
        )


# -- Peetre


def test_peetre_trivial_cases():
    x = np.array([[[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]])
    assert peetre_check(2.5, x) == 0
    assert peetre_check(0.0, x) == 0


def test_peetre_fuzz_campaign():
    rng = np.random.default_rng(5)
    samples = rng.normal(scale=4.0, size=(10**5, 2, 3))
    for t in (-4.0, -1.5, 0.5, 4.0):
        assert peetre_check(t, samples) == 0


@given(point_3d, point_3d, st.floats(min_value=-4.0, max_value=4.0))
def test_peetre_property(x, y, t):
    assert peetre_check(t, np.array([[x, y]])) == 0


def test_peetre_rejects_bad_shape():
    with pytest.raises(DomainError, match="shape"):
        peetre_check(1.0, np.ones((4, 3)))


# -- weighted integral estimates


def test_omega_scaling_at_origin_matches_exact_value():
    for om, want in PROP_R0.items():
        value, bound = integral_estimate_check(0, 0, 4, 1, 3, 0.0, om, 0.0, 0.0)
        assert abs(value - want) < 1e-5
        assert abs(value - np.pi / (6.0 * om)) < 1e-6
        assert value <= bound + 1e-12


def test_omega_scaling_off_origin_within_band():
    vals = {}
    for om in (1.0, 2.0, 4.0, 8.0):
        value, bound = integral_estimate_check(0, 0, 4, 1, 3, 0.0, om, 1.0, 0.05)
        vals[om] = value
        assert abs(value - PROP_R1[om]) < 1e-5
        assert value <= bound + 1e-12
    for om in (1.0, 2.0, 4.0):
        ratio = vals[2.0 * om] / vals[om]
        assert 0.425 <= ratio <= 0.575


def test_scaling_guard_trips_without_slack():
    with pytest.raises(ScalingError, match="omega-scaling"):
        integral_estimate_check(0, 0, 4, 1, 3, 0.0, 1.0, 1.0, 0.0)


def test_cutoff_suppresses_integral():
    bare, _ = integral_estimate_check(0, 0, 4, 1, 3, 0.0, 1.0, 1.0, 0.05)
    cut, _ = integral_estimate_check(0, 0, 4, 1, 3, 1.0, 1.0, 1.0, 0.05)
    assert cut < bare


def test_prefactor_decreases_along_cutoff_sweep():
    values = []
    for lam in (1.0, 4.0, 16.0, 64.0):
        value, bound = integral_estimate_check(0, 0, 4, 1, 3, lam, 1.0, 1.0, 0.05)
        values.append(value)
        assert value <= bound + 1e-12
    assert np.max(np.abs(np.array(values) - CUTOFF_PREFACTORS)) < 1e-6
    assert values == sorted(values, reverse=True)


def test_estimate_preconditions():
    with pytest.raises(PreconditionError, match="window"):
        integral_estimate_check(0, 0, 1, 1, 3, 0.0, 1.0, 0.0, 0.0)
    with pytest.raises(PreconditionError, match="omega"):
        integral_estimate_check(0, 0, 4, 1, 3, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(PreconditionError, match="d in"):
        integral_estimate_check(0, 0, 4, 1, 2, 0.0, 1.0, 0.0, 0.0)


def test_one_dimensional_analog_is_exact():
    # int 1/(2 xi^2 + omega) dxi = pi / sqrt(2 omega)
    for om in (0.5, 2.0):
        value, bound = integral_estimate_check(0, 0, 1, 2, 1, 0.0, om, 0.0, 0.0)
        assert abs(value - np.pi / np.sqrt(2.0 * om)) < 1e-9
        assert value <= bound + 1e-12


def test_offset_decay_table():
    table = offset_decay_check(2.0, [4.0, 8.0, 16.0, 32.0, 64.0], 0.0)
    assert np.max(np.abs(table["integral"] - np.array(DECAY_I))) < 1e-5
    assert np.all(np.isfinite(table["integral"]))
    assert abs(table["slope"] - DECAY_SLOPE) < 1e-3
    assert table["slope"] <= table["decay_exponent"] + 0.1
    assert table["decay_exponent"] == -(2.0 - 1.0 - 0.05)


def test_offset_prefactor_decreases_with_cutoff():
    proxies = [offset_decay_check(2.0, [8.0], lam)["prefactor"] for lam in (1.0, 4.0, 16.0)]
    assert np.max(np.abs(np.array(proxies) - DECAY_PROXY)) < 1e-2
    assert proxies == sorted(proxies, reverse=True)
    assert np.isnan(offset_decay_check(2.0, [8.0], 0.0)["slope"])


def test_offset_decay_preconditions():
    for nu in (1.0, 3.0, 0.5):
        with pytest.raises(PreconditionError, match="nu"):
            offset_decay_check(nu, [4.0], 0.0)
    with pytest.raises(PreconditionError, match="sweep"):
        offset_decay_check(2.0, [-1.0], 0.0)


def test_quadrature_tolerance_convergence():
    def F(r, s):
        return 1.0 / (r + s + 1.0) ** 4

    coarse = integral_3d(F, 1.0, tol=1e-6)
    fine = integral_3d(F, 1.0, tol=5e-7)
    assert abs(coarse - fine) < 5e-7

    def F1(r, s):
        return 1.0 / (r * r + s * s + 1.0)

    assert abs(integral_1d(F1, 0.0, tol=1e-6) - integral_1d(F1, 0.0, tol=5e-7)) < 5e-7


# -- diagonal divergence demo


def test_diagonal_divergence_demo_columns():
    demo = diagonal_divergence_demo()
    assert np.max(np.abs(demo["unsubtracted"] - np.array(DEMO_UNSUB))) < 1e-6
    assert np.max(np.abs(demo["subtracted"] - np.array(DEMO_SUB))) < 1e-6
    assert np.all(np.diff(demo["unsubtracted"]) > 0.0)
    assert demo["log_r_squared"] >= 0.99
    assert demo["variation"] < 0.10
    sub = demo["subtracted"]
    assert abs(sub[-1] - sub[2]) / abs(sub[2]) < 0.10


def test_diagonal_demo_needs_a_sweep():
    with pytest.raises(PreconditionError, match="sweep"):
        diagonal_divergence_demo(lams=[4.0])


@given(st.floats(min_value=0.0, max_value=1e9, allow_nan=False))
def test_subtracted_kernel_cancellation(h0):
    # the difference cancels to (h0 + 1)^-2, so round-off scales with the terms
    assert abs(subtracted_kernel(h0) - (h0 + 1.0) ** -2) <= 1e-15 / (h0 + 1.0)
