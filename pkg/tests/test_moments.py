"""Tests for cascadelab.moments — exact recursions against each other and brute force."""

import json
from pathlib import Path

import pytest

from cascadelab.errors import (
    ComplexSpec,
    DenominatorNotPositive,
    InvalidArgument,
    TooManyCombinations,
    WrongRegime,
)
from cascadelab.fmt import to_json
from cascadelab.moments import (
    METHODS,
    MomentTable,
    brute_force_moment,
    finite_n_moment,
    limit_moment_convergent,
    limit_moment_even,
    moment_table,
    multi_indices,
    multinomial,
    raw_moment,
    second_moment_exact,
)
from cascadelab.regime import sigma_n
from cascadelab.weights import beta_transform, iid, load_spec

SPEC_DIR = Path(__file__).parent.parent / "specs"


def _spec(name):
    return load_spec(SPEC_DIR / f"{name}.json")


# -- Multi-indices -----------------------------------------------------------


class TestMultiIndices:

    def test_b2_q4(self):
        assert multi_indices(4, 2) == [(1, 3), (2, 2), (3, 1)]

    def test_excludes_concentrated(self):
        for beta in multi_indices(3, 3):
            assert sum(beta) == 3 and max(beta) < 3
        assert len(multi_indices(3, 3)) == 10 - 3

    def test_multinomial(self):
        assert multinomial((2, 2)) == 6
        assert multinomial((1, 1, 1)) == 6
        assert multinomial((4, 0)) == 1

    def test_multinomial_order_guard(self):
        with pytest.raises(InvalidArgument):
            multinomial((11, 10))


# -- v_n -----------------------------------------------------------------------


class TestSecondMoment:

    def test_geometric(self):
        assert second_moment_exact(_spec("clt"), 3) == pytest.approx(3.859375, abs=1e-12)

    def test_critical_linear(self):
        assert second_moment_exact(_spec("sign"), 4) == pytest.approx(3.0, abs=1e-12)

    def test_depth_zero(self):
        assert second_moment_exact(_spec("clt"), 0) == pytest.approx(1.0)

    def test_conservative_complex(self):
        assert second_moment_exact(_spec("levy-c"), 10) == pytest.approx(1.0)

    def test_negative_depth(self):
        with pytest.raises(InvalidArgument):
            second_moment_exact(_spec("clt"), -1)


# -- Normalized moments ----------------------------------------------------


class TestFiniteN:

    def test_sign_first_level(self):
        assert finite_n_moment(_spec("sign"), 2, 1) == pytest.approx(3.0, abs=1e-12)

    def test_sign_depth_4(self):
        assert finite_n_moment(_spec("sign"), 2, 4) == pytest.approx(1.5, abs=1e-12)

    def test_second_moment_is_v_over_sigma_n(self):
        spec = _spec("clt")
        expected = 3.859375 / (3 * 1.25 ** 3)
        assert finite_n_moment(spec, 2, 3) == pytest.approx(expected, abs=1e-12)

    def test_converges_to_limit(self):
        spec = _spec("clt")
        assert finite_n_moment(spec, 2, 120) == pytest.approx(1.0, abs=1e-6)
        assert finite_n_moment(spec, 4, 120) == pytest.approx(
            limit_moment_even(spec, 4), abs=1e-6
        )

    def test_odd_moments_decay(self):
        spec = _spec("clt")
        early = abs(finite_n_moment(spec, 3, 4))
        late = abs(finite_n_moment(spec, 3, 120))
        assert late < early
        assert late < 1e-3

    def test_complex_spec(self):
        with pytest.raises(ComplexSpec):
            finite_n_moment(_spec("levy-c"), 2, 3)

    def test_matches_enumeration(self):
        for name in ("sign", "clt"):
            spec = _spec(name)
            for n in (1, 2, 3):
                for q in range(1, 7):
                    brute = brute_force_moment(spec, q, n, normalized=True).real
                    assert finite_n_moment(spec, q, n) == pytest.approx(
                        brute, rel=1e-9, abs=1e-12
                    ), (name, q, n)

    def test_mean_is_inverse_sigma_n(self):
        # E F_n(1) = 1, so Z_n(1) is centred at 1/σ_n, not 0.
        spec = _spec("sign")
        assert finite_n_moment(spec, 1, 12) == pytest.approx(1 / sigma_n(spec, 12), abs=1e-12)
        assert finite_n_moment(spec, 1, 12) == pytest.approx(0.408248, abs=1e-6)

    def test_wrong_regime(self):
        with pytest.raises(WrongRegime):
            finite_n_moment(_spec("convergent"), 2, 3)

    def test_n_zero(self):
        with pytest.raises(InvalidArgument):
            finite_n_moment(_spec("clt"), 2, 0)


class TestLimitEven:

    def test_sign_is_gaussian(self):
        assert limit_moment_even(_spec("sign"), 2) == 1.0
        assert limit_moment_even(_spec("sign"), 4) == pytest.approx(3.0, abs=1e-12)

    def test_multifractal_time(self):
        assert limit_moment_even(_spec("clt"), 4) == pytest.approx(6.521739, abs=1e-6)

    def test_odd_orders_vanish(self):
        assert limit_moment_even(_spec("clt"), 3) == 0.0
        assert limit_moment_even(_spec("clt"), 5) == 0.0

    def test_cross_identity(self):
        spec = _spec("clt")
        m2 = limit_moment_convergent(beta_transform(spec, 2), 2)
        assert limit_moment_even(spec, 4) == pytest.approx(3 * m2, abs=1e-9)

    def test_heavy_weights_blow_up(self):
        with pytest.raises(DenominatorNotPositive):
            limit_moment_even(_spec("degenerate"), 4)

    def test_wrong_regime(self):
        with pytest.raises(WrongRegime):
            limit_moment_even(_spec("identity"), 4)


class TestLimitConvergent:

    def test_extinct_spec(self):
        assert limit_moment_convergent(_spec("extinct"), 2) == pytest.approx(4 / 3, abs=1e-12)

    def test_convergent_spec(self):
        assert limit_moment_convergent(_spec("convergent"), 2) == pytest.approx(1.5625, abs=1e-12)

    def test_identity_is_constant(self):
        for q in range(1, 7):
            assert limit_moment_convergent(_spec("identity"), q) == pytest.approx(1.0)

    def test_condition_c_fails(self):
        with pytest.raises(WrongRegime):
            limit_moment_convergent(_spec("clt"), 2)


# -- Raw moments and brute force ------------------------------------------------


class TestBruteForce:

    def test_one_level(self):
        # ((1.6)² + 1² + 1² + (0.4)²) / 4
        value = brute_force_moment(_spec("convergent"), 2, 1)
        assert value.real == pytest.approx(1.18, abs=1e-12)
        assert value.imag == 0

    def test_two_levels(self):
        value = brute_force_moment(_spec("clt"), 2, 2)
        assert value.real == pytest.approx(2.6875, abs=1e-10)
        assert value.real == pytest.approx(second_moment_exact(_spec("clt"), 2), abs=1e-10)

    def test_normalized(self):
        spec = _spec("sign")
        value = brute_force_moment(spec, 2, 2, normalized=True)
        assert value.real == pytest.approx(finite_n_moment(spec, 2, 2), abs=1e-10)

    def test_absolute_complex(self):
        value = brute_force_moment(_spec("levy-c"), 2, 3, absolute=True)
        assert value.real == pytest.approx(1.0)

    def test_matches_raw_moment(self):
        for name, depths in [("clt", (1, 2, 3)), ("convergent", (1, 2, 3)),
                             ("extinct", (1, 2)), ("critical", (1, 2)),
                             ("b3", (1, 2)), ("levy-c", (1, 2, 3))]:
            spec = _spec(name)
            for n in depths:
                for q in range(1, 7):
                    exact = raw_moment(spec, q, n)
                    brute = brute_force_moment(spec, q, n)
                    assert abs(exact - brute) <= 1e-9 * max(1.0, abs(exact)), (name, n, q)

    def test_threads_do_not_change_result(self):
        spec = _spec("clt")
        a = brute_force_moment(spec, 4, 3, threads=1)
        b = brute_force_moment(spec, 4, 3, threads=4)
        assert a == b

    def test_enumeration_guard(self):
        with pytest.raises(TooManyCombinations):
            brute_force_moment(_spec("critical"), 2, 4)


class TestRawMoment:

    def test_mean_is_one(self):
        for name in ("clt", "convergent", "critical", "levy-c"):
            assert raw_moment(_spec(name), 1, 5) == pytest.approx(1.0)

    def test_conservative_is_one(self):
        assert raw_moment(_spec("b3"), 4, 6) == pytest.approx(1.0)

    def test_second_moment_real_spec(self):
        spec = _spec("clt")
        assert raw_moment(spec, 2, 3).real == pytest.approx(second_moment_exact(spec, 3))


# -- Table -------------------------------------------------------------------


class TestMomentTable:

    def test_clt_entries(self):
        table = moment_table(_spec("clt"), 4, 3)
        assert table.lookup(2, 3, "v_recursion") == pytest.approx(3.859375)
        assert table.lookup(4, "limit", "eq45") == pytest.approx(6.521739, abs=1e-6)
        assert table.lookup(2, 3, "eq44") is not None
        assert table.lookup(2, "limit", "sesi") is None

    def test_convergent_with_brute_force(self):
        spec = _spec("convergent")
        table = moment_table(spec, 4, 2, brute=True)
        assert table.lookup(2, "limit", "sesi") == pytest.approx(1.5625)
        assert table.lookup(2, 2, "brute_force") == pytest.approx(second_moment_exact(spec, 2))
        assert table.lookup(2, 2, "eq44") is None

    def test_brute_force_guard_becomes_note(self):
        table = moment_table(iid(3, [(0.5, 0.5), (0.5, 1 / 6)]), 2, 4, brute=True)
        assert table.lookup(2, 3, "brute_force") is None
        assert any("exceed" in note for note in table.notes)

    def test_non_finite_values_are_noted(self):
        table = MomentTable(spec="x")
        table.add(2, 1, float("inf"), "sesi")
        assert table.entries == []
        assert table.notes

    def test_json_document(self):
        doc = json.loads(to_json(moment_table(_spec("sign"), 4, 2).to_dict()))
        assert doc["spec"].startswith("random signs")
        methods = {e["method"] for e in doc["entries"]}
        assert {"v_recursion", "sesi", "eq44", "eq45"} <= methods
        assert methods <= {"v_recursion", "eq44", "eq45", "sesi", "brute_force"}
        assert set(METHODS) == {"v_recursion", "eq44", "eq45", "sesi", "brute_force"}
        for e in doc["entries"]:
            assert set(e) == {"q", "n", "value", "method"}
