"""Disturbance catalogue, perturbation identities, and class-tag gates."""

import numpy as np
import pytest

from rmquad import (
    CATALOGUE,
    ClassTag,
    ConfigError,
    DomainError,
    EXACT_INFO,
    NoiseSpec,
    check_growth_bound,
    custom_disturbance,
    get_disturbance,
    perturb_w,
    perturb_x,
)


class TestCatalogue:
    def test_names(self):
        assert set(CATALOGUE) == {
            "one",
            "identity",
            "xt-squared",
            "linear-drift-t",
            "sqrt-abs",
            "x-abs-x-half",
        }

    def test_get_by_name(self):
        for name in CATALOGUE:
            assert get_disturbance(name).name == name
        with pytest.raises(ConfigError):
            get_disturbance("nope")

    def test_class_tags(self):
        assert get_disturbance("one").class_tag.smooth
        assert get_disturbance("identity").class_tag.smooth
        assert get_disturbance("xt-squared").class_tag.smooth
        assert get_disturbance("linear-drift-t").class_tag.smooth
        assert not get_disturbance("sqrt-abs").class_tag.smooth
        assert get_disturbance("sqrt-abs").class_tag.blowup_eligible
        assert get_disturbance("x-abs-x-half").class_tag.blowup_eligible
        assert not get_disturbance("identity").class_tag.blowup_eligible

    def test_pointwise_values(self):
        t = np.array([0.0, 0.5, 1.0])
        y = np.array([-2.0, 0.25, 3.0])
        assert np.array_equal(get_disturbance("one")(t, y), np.ones(3))
        assert np.array_equal(get_disturbance("identity")(t, y), y)
        assert np.array_equal(get_disturbance("xt-squared")(t, y), y * t * t)
        assert np.array_equal(get_disturbance("linear-drift-t")(t, y), t)
        assert np.array_equal(get_disturbance("sqrt-abs")(t, y), np.sqrt(np.abs(y)))
        assert np.array_equal(
            get_disturbance("x-abs-x-half")(t, y), 0.5 * y * np.abs(y)
        )

    def test_functions_vectorize_and_broadcast(self):
        t = np.linspace(0.0, 1.0, 5)
        y = np.linspace(-1.0, 1.0, 5)
        for name in CATALOGUE:
            out = get_disturbance(name)(t, y)
            assert np.shape(out) == (5,)

    def test_custom(self):
        p = custom_disturbance(lambda t, y: 0.0 * y, ClassTag("K2", s=0.0))
        assert p.name == "custom"
        assert p(0.0, 3.0) == 0.0


class TestNoiseSpec:
    def test_exact_flag(self):
        assert EXACT_INFO.exact
        assert not NoiseSpec(0.1, 0.0).exact
        assert not NoiseSpec(0.0, 0.1).exact

    def test_rejects_bad_deltas(self):
        with pytest.raises(DomainError):
            NoiseSpec(-0.1, 0.0)
        with pytest.raises(DomainError):
            NoiseSpec(0.0, float("nan"))
        with pytest.raises(DomainError):
            NoiseSpec(0.0, float("inf"))

    def test_perturb_identities(self):
        spec = NoiseSpec(0.5, 0.25, get_disturbance("identity"), get_disturbance("one"))
        x = np.array([1.0, -2.0, 4.0])
        t = np.array([0.0, 0.5, 1.0])
        assert np.array_equal(perturb_x(x, t, spec), x + 0.5 * x)
        assert np.array_equal(perturb_w(x, t, spec), x + 0.25)

    def test_exact_info_perturbs_nothing(self):
        x = np.array([1.0, -2.0, 4.0])
        t = np.array([0.0, 0.5, 1.0])
        assert np.array_equal(perturb_x(x, t, EXACT_INFO), x)
        assert np.array_equal(perturb_w(x, t, EXACT_INFO), x)


class TestClassTag:
    def test_validation(self):
        with pytest.raises(ConfigError):
            ClassTag("K9")
        with pytest.raises(ConfigError):
            ClassTag("K3", alpha=0.0)
        with pytest.raises(ConfigError):
            ClassTag("K3", beta=3.0)
        with pytest.raises(ConfigError):
            ClassTag("K2", s=-1.0)
        assert ClassTag("K3", alpha=1.0, beta=0.5).blowup_eligible


class TestGrowthCheck:
    t_grid = np.linspace(0.0, 1.0, 7)
    y_grid = np.linspace(-3.0, 3.0, 25)

    def test_passes_conforming_shapes(self):
        assert check_growth_bound(get_disturbance("one"), self.t_grid, self.y_grid)
        assert check_growth_bound(get_disturbance("identity"), self.t_grid, self.y_grid)
        assert check_growth_bound(get_disturbance("linear-drift-t"), self.t_grid, self.y_grid)
        assert check_growth_bound(get_disturbance("sqrt-abs"), self.t_grid, self.y_grid)

    def test_advisory_flags_fast_time_growth(self):
        # time derivative 2|y|t outruns the unit normalization at |y| > 1:
        # the check reports it, nothing enforces it
        assert not check_growth_bound(
            get_disturbance("xt-squared"), self.t_grid, self.y_grid
        )
        narrow = np.linspace(-0.4, 0.4, 9)
        assert check_growth_bound(get_disturbance("xt-squared"), self.t_grid, narrow)

    def test_rejects_empty_grid(self):
        with pytest.raises(DomainError):
            check_growth_bound(get_disturbance("one"), np.array([]), self.y_grid)
