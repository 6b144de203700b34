import math

import pytest
from hypothesis import given, settings, strategies as st

from inarq import (
    AdmissibleRangeError,
    DegenerateClassError,
    GeomInarSpec,
    Inar1Spec,
    ParameterError,
    UnderreportedModel,
    absorb_reporting,
    admissible_reporting_interval,
    canonicalize,
    curve_to_csv,
    equivalence_curve,
    expand_lags,
    shift_reporting,
    split_reporting,
)

LAM, ALPHA, Q = 1.62, 0.52, 0.33
EXAMPLE = UnderreportedModel.from_inar1(Inar1Spec(LAM, ALPHA), Q)

TOL = 1e-12


def close(a, b, scale=1.0):
    return abs(a - b) <= TOL * max(1.0, abs(scale))


# Parameter strategies kept away from the extreme corners so the 1e-12
# round-trip contract is meaningful (total lag weight capped at 0.97).
lambdas = st.floats(0.1, 10.0)
alphas = st.floats(0.0, 0.95)
probs = st.floats(0.05, 1.0)
betas = st.floats(0.01, 0.9)
fractions = st.floats(0.0, 1.0)


@st.composite
def geom_specs(draw):
    lam = draw(lambdas)
    beta = draw(betas)
    gamma = draw(fractions) * (0.97 - beta)
    return GeomInarSpec(lam, beta, gamma)


@st.composite
def models(draw):
    return UnderreportedModel(latent=draw(geom_specs()), q=draw(probs))


@st.composite
def models_with_target(draw):
    model = draw(models())
    lower, upper = admissible_reporting_interval(model)
    frac = draw(fractions)
    return model, lower + frac * (upper - lower)


class TestAbsorbReporting:
    def test_worked_example(self):
        image = absorb_reporting(Inar1Spec(LAM, ALPHA), Q)
        # independent re-derivation with a different arithmetic arrangement
        assert close(image.lambda_, (LAM * Q) / (1 - ALPHA + ALPHA * Q))
        assert close(image.beta, 0.1716)
        assert close(image.gamma, ALPHA - ALPHA * Q)
        assert round(image.lambda_, 2) == 0.82

    def test_full_reporting_is_identity_representation(self):
        image = absorb_reporting(Inar1Spec(LAM, ALPHA), 1.0)
        assert (image.lambda_, image.beta, image.gamma) == (LAM, ALPHA, 0.0)

    def test_thinned_iid_poisson_stays_iid(self):
        image = absorb_reporting(Inar1Spec(2.0, 0.0), 0.5)
        assert (image.lambda_, image.beta, image.gamma) == (1.0, 0.0, 0.0)

    @pytest.mark.parametrize("q", [0.0, -0.1, 1.2])
    def test_reporting_probability_domain(self, q):
        with pytest.raises(ParameterError):
            absorb_reporting(Inar1Spec(LAM, ALPHA), q)


class TestSplitReporting:
    def test_worked_example_rounds_to_published_estimates(self):
        c = split_reporting(GeomInarSpec(0.8204, 0.1716, 0.3484))
        assert round(c.lambda_star, 2) == 1.62
        assert round(c.alpha_star, 2) == 0.52
        assert round(c.q_star, 2) == 0.33

    def test_first_order_input_is_fixed_point(self):
        c = split_reporting(GeomInarSpec(1.7, 0.4, 0.0))
        assert (c.lambda_star, c.alpha_star, c.q_star) == (1.7, 0.4, 1.0)

    def test_degenerate_class_rejected(self):
        with pytest.raises(DegenerateClassError):
            split_reporting(GeomInarSpec(1.0, 0.0, 0.5))

    @given(lam=lambdas, alpha=st.floats(0.01, 0.95), q=probs)
    def test_round_trip_recovers_input(self, lam, alpha, q):
        c = split_reporting(absorb_reporting(Inar1Spec(lam, alpha), q))
        assert close(c.lambda_star, lam, scale=lam)
        assert close(c.alpha_star, alpha)
        assert close(c.q_star, q)

    @given(spec=geom_specs())
    def test_reverse_round_trip_recovers_lag_structure(self, spec):
        c = split_reporting(spec)
        back = absorb_reporting(Inar1Spec(c.lambda_star, c.alpha_star), c.q_star)
        assert close(back.lambda_, spec.lambda_, scale=spec.lambda_)
        assert close(back.beta, spec.beta)
        assert close(back.gamma, spec.gamma)


class TestShiftReporting:
    def test_identity_at_current_probability(self):
        out = shift_reporting(EXAMPLE, Q)
        assert close(out.latent.lambda_, LAM, scale=LAM)
        assert close(out.latent.beta, ALPHA)
        assert close(out.latent.gamma, 0.0)
        assert out.q == Q

    def test_worked_example_at_half_reporting(self):
        out = shift_reporting(EXAMPLE, 0.5)
        # direct evaluation of the reparameterization formulas
        r = Q / 0.5
        assert close(out.latent.beta, ALPHA * r)
        assert close(out.latent.gamma, (1 - r) * ALPHA)
        assert close(out.latent.lambda_, LAM * r / (1 - (1 - r) * ALPHA), scale=LAM)
        c0, c1 = canonicalize(EXAMPLE), canonicalize(out)
        assert close(c0.lambda_star, c1.lambda_star, scale=c0.lambda_star)
        assert close(c0.alpha_star, c1.alpha_star)
        assert close(c0.q_star, c1.q_star)

    def test_full_observation_endpoint_matches_absorbed_form(self):
        out = shift_reporting(EXAMPLE, 1.0)
        image = absorb_reporting(Inar1Spec(LAM, ALPHA), Q)
        assert close(out.latent.lambda_, image.lambda_, scale=image.lambda_)
        assert close(out.latent.beta, image.beta)
        assert close(out.latent.gamma, image.gamma)
        assert out.q == 1.0

    def test_out_of_range_target_names_interval(self):
        with pytest.raises(AdmissibleRangeError) as err:
            shift_reporting(EXAMPLE, 0.2)
        assert close(err.value.lower, 0.33)
        assert err.value.upper == 1.0
        with pytest.raises(AdmissibleRangeError):
            shift_reporting(EXAMPLE, 1.1)

    @given(pair=models_with_target())
    def test_image_satisfies_lag_spec_invariants(self, pair):
        model, q_target = pair
        out = shift_reporting(model, q_target)  # GeomInarSpec validates on build
        assert 0.0 <= out.latent.beta < 1.0 - out.latent.gamma

    @given(pair=models_with_target(), frac=fractions)
    def test_semigroup_law(self, pair, frac):
        model, q1 = pair
        lower, upper = admissible_reporting_interval(model)
        q2 = lower + frac * (upper - lower)
        via_q1 = shift_reporting(shift_reporting(model, q1), q2)
        direct = shift_reporting(model, q2)
        assert close(via_q1.latent.lambda_, direct.latent.lambda_, scale=direct.latent.lambda_)
        assert close(via_q1.latent.beta, direct.latent.beta)
        assert close(via_q1.latent.gamma, direct.latent.gamma)

    @given(pair=models_with_target())
    def test_conserved_quantities(self, pair):
        model, q_target = pair
        out = shift_reporting(model, q_target)
        before = model.latent.beta + model.latent.gamma
        after = out.latent.beta + out.latent.gamma
        assert close(after, before)
        c0, c1 = canonicalize(model), canonicalize(out)
        assert close(c0.q_star, c1.q_star)
        mean0 = model.q * model.latent.stationary_mean
        mean1 = out.q * out.latent.stationary_mean
        assert close(mean1, mean0, scale=mean0)


class TestCanonicalize:
    def test_first_order_model_is_its_own_representative(self):
        c = canonicalize(EXAMPLE)
        assert (c.lambda_star, c.alpha_star, c.q_star) == (LAM, ALPHA, Q)

    def test_fully_observed_image_canonicalizes_back(self):
        c = canonicalize(UnderreportedModel(GeomInarSpec(0.8204, 0.1716, 0.3484), 1.0))
        assert round(c.lambda_star, 2) == 1.62
        assert round(c.alpha_star, 2) == 0.52
        assert round(c.q_star, 2) == 0.33

    def test_degenerate_class_rejected(self):
        with pytest.raises(DegenerateClassError):
            canonicalize(UnderreportedModel(GeomInarSpec(1.0, 0.0, 0.4), 0.5))

    def test_iid_class_gets_unique_representative(self):
        a = canonicalize(UnderreportedModel(GeomInarSpec(2.0, 0.0, 0.0), 0.5))
        b = canonicalize(UnderreportedModel(GeomInarSpec(1.0, 0.0, 0.0), 1.0))
        assert close(a.lambda_star, b.lambda_star)
        assert (a.alpha_star, a.q_star) == (b.alpha_star, b.q_star) == (0.0, 1.0)

    @given(pair=models_with_target())
    def test_invariant_along_the_class(self, pair):
        model, q_target = pair
        c0 = canonicalize(model)
        c1 = canonicalize(shift_reporting(model, q_target))
        assert close(c0.lambda_star, c1.lambda_star, scale=c0.lambda_star)
        assert close(c0.alpha_star, c1.alpha_star)
        assert close(c0.q_star, c1.q_star)


class TestExpandLags:
    def test_worked_example_expansion(self):
        image = absorb_reporting(Inar1Spec(LAM, ALPHA), Q)
        terms = expand_lags(image, 0.005)
        assert [i for i, _ in terms] == [1, 2, 3, 4]
        assert [round(w, 2) for _, w in terms] == [0.17, 0.06, 0.02, 0.01]
        assert [round(w, 4) for _, w in terms] == [0.1716, 0.0598, 0.0208, 0.0073]

    def test_first_order_expansion_has_one_term(self):
        assert expand_lags(GeomInarSpec(1.0, 0.5, 0.0), 0.3) == [(1, 0.5)]
        assert expand_lags(GeomInarSpec(1.0, 0.5, 0.0), 0.0) == [(1, 0.5)]

    def test_non_terminating_request_rejected(self):
        with pytest.raises(ParameterError):
            expand_lags(GeomInarSpec(1.0, 0.2, 0.5), 0.0)

    def test_total_weight_matches_geometric_series(self):
        spec = GeomInarSpec(1.0, 0.1716, 0.3484)
        terms = expand_lags(spec, 1e-9)
        tail = spec.beta * spec.gamma ** len(terms) / (1 - spec.gamma)
        total = math.fsum(w for _, w in terms) + tail
        assert close(total, spec.beta / (1 - spec.gamma))
        assert close(spec.total_weight, spec.beta / (1 - spec.gamma))


class TestEquivalenceCurve:
    def test_endpoints(self):
        points = equivalence_curve(EXAMPLE, 68)
        assert len(points) == 68
        first, last = points[0], points[-1]
        assert close(first.q_y, Q)
        assert close(first.lambda_y, LAM, scale=LAM)
        assert close(first.beta_y, ALPHA)
        assert close(first.gamma_y, 0.0)
        image = absorb_reporting(Inar1Spec(LAM, ALPHA), Q)
        assert last.q_y == 1.0
        assert close(last.lambda_y, image.lambda_, scale=image.lambda_)
        assert close(last.beta_y, image.beta)
        assert close(last.gamma_y, image.gamma)

    def test_every_point_canonicalizes_identically(self):
        for p in equivalence_curve(EXAMPLE, 68):
            c = canonicalize(
                UnderreportedModel(GeomInarSpec(p.lambda_y, p.beta_y, p.gamma_y), p.q_y)
            )
            assert close(c.lambda_star, LAM, scale=LAM)
            assert close(c.alpha_star, ALPHA)
            assert close(c.q_star, Q)

    def test_monotone_in_reporting_probability(self):
        points = equivalence_curve(EXAMPLE, 40)
        for a, b in zip(points, points[1:]):
            assert b.beta_y < a.beta_y
            assert b.gamma_y > a.gamma_y
            assert b.lambda_y < a.lambda_y

    def test_grid_too_small_rejected(self):
        with pytest.raises(ParameterError):
            equivalence_curve(EXAMPLE, 1)

    def test_csv_format(self):
        text = curve_to_csv(equivalence_curve(EXAMPLE, 3))
        lines = text.splitlines()
        assert lines[0] == "q_Y,lambda_Y,beta_Y,gamma_Y"
        assert len(lines) == 4
        assert lines[1].startswith("0.33,")
