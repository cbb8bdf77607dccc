import itertools
from fractions import Fraction

import pytest

from lcumulants.lattice import FULL, Family
from lcumulants.lcumulant import classical_cumulants, detect_independence_structure, to_lcumulants
from lcumulants.moments import (
    DiscreteDistribution,
    StateSpace,
    central_moments,
    moments_from_distribution,
)
from lcumulants.models import (
    HMMParams,
    SecantParams,
    binary_regression_identity_check,
    gmm_distribution,
    hmm_distribution,
    hmm_normalized_tree_cumulants,
    hmm_pipeline_tree_cumulants,
    hmm_tree_cumulants_closed,
    random_gmm_params,
    random_hmm_params,
    regression_mean_check,
    reroot_params,
    secant_moments,
    secant_tree_cumulants,
    verify_split_binomials,
)
from lcumulants.partition import SetPartition
from lcumulants.topology import caterpillar, quartet, star
from lcumulants.trees import (
    GMMParams,
    normalized_tree_cumulants,
    subset_tree_cumulants,
    tree_cumulants,
)

from conftest import random_distribution


def star_mixture_params(rng, n=4):
    t = rng.probability(24)
    a = [rng.probability(24) for _ in range(n)]
    b = [rng.probability(24) for _ in range(n)]
    params = GMMParams((1 - t, t), {("c", i + 1): (a[i], b[i]) for i in range(n)})
    return t, a, b, params


class TestLatentTreeDistribution:
    def test_table_sums_to_one(self, rng):
        for tree in (quartet(), caterpillar(5)):
            params = random_gmm_params(tree, rng)
            dist = gmm_distribution(tree, params)
            assert sum(dist.table.values()) == 1

    def test_zero_slopes_give_product_law(self, rng):
        q = quartet()
        params = random_gmm_params(q, rng)
        tables = {
            edge: (row[0], row[0]) for edge, row in params.tables.items()
        }
        flat = GMMParams(params.root_dist, tables)
        dist = gmm_distribution(q, flat)
        mv = moments_from_distribution(dist)
        lv = to_lcumulants(mv, Family(FULL))
        assert detect_independence_structure(lv) == SetPartition.singletons(4)

    def test_star_matches_mixture_chart(self, rng):
        t, a, b, params = star_mixture_params(rng)
        dist = gmm_distribution(star(4), params)
        chart = secant_moments(SecantParams(t, tuple(a), tuple(b)))
        assert moments_from_distribution(dist).entries == chart.entries

    def test_rerooting_preserves_the_law_and_coordinates(self, rng):
        from lcumulants.trees import gmm_tree_cumulants

        q = quartet()
        params = random_gmm_params(q, rng)
        dist = gmm_distribution(q, params)
        coords = gmm_tree_cumulants(q, params)
        for node in q.inner_nodes():
            retree, reparams = reroot_params(q, params, node)
            assert gmm_distribution(retree, reparams) == dist
            assert gmm_tree_cumulants(retree, reparams).entries == coords.entries


class TestSecant:
    def test_rank_one_point(self):
        params = SecantParams(Fraction(0), (Fraction(1, 2), Fraction(1, 3)), (Fraction(9), Fraction(9)))
        mv = secant_moments(params)
        assert mv[(1, 1)] == Fraction(1, 2) * Fraction(1, 3)

    def test_constant_third_golden(self):
        params = SecantParams(Fraction(1, 3), (Fraction(0),) * 4, (Fraction(1),) * 4)
        mv = secant_moments(params)
        assert all(v == Fraction(1, 3) for x, v in mv.entries.items() if sum(x) > 0)
        closed = secant_tree_cumulants(params)
        assert closed[(1, 2, 3, 4)] == Fraction(2, 81)
        kv = classical_cumulants(mv)
        assert kv.of_multiset((1, 2, 3, 4)) == Fraction(-2, 27)
        assert kv.of_multiset((1, 3)) == Fraction(2, 9)

    def test_cumulants_match_mixture_formulas(self, rng):
        for _ in range(5):
            t = rng.fraction(30, signed=True)
            a = tuple(rng.fraction(20, signed=True) for _ in range(4))
            b = tuple(rng.fraction(20, signed=True) for _ in range(4))
            params = SecantParams(t, a, b)
            kv = classical_cumulants(secant_moments(params))
            gap = [bi - ai for ai, bi in zip(a, b)]
            for i, j in itertools.combinations(range(1, 5), 2):
                assert kv.of_multiset((i, j)) == t * (1 - t) * gap[i - 1] * gap[j - 1]
            for i, j, k in itertools.combinations(range(1, 5), 3):
                assert kv.of_multiset((i, j, k)) == t * (1 - t) * (1 - 2 * t) * gap[i - 1] * gap[j - 1] * gap[k - 1]
            quartic = t * (1 - t) * (6 * t**2 - 6 * t + 1)
            for g in gap:
                quartic *= g
            assert kv.of_multiset((1, 2, 3, 4)) == quartic

    @pytest.mark.parametrize("n", [4, 5])
    def test_closed_form_equals_pipeline(self, n, rng):
        from lcumulants.moments import distribution_from_moments

        t = rng.probability(24)
        a = tuple(rng.fraction(20) for _ in range(n))
        b = tuple(rng.fraction(20) for _ in range(n))
        params = SecantParams(t, a, b)
        dist = distribution_from_moments(secant_moments(params), algebraic=True)
        pipeline = subset_tree_cumulants(dist, caterpillar(n))
        assert secant_tree_cumulants(params) == pipeline

    def test_one_cluster_coordinate_is_messier(self, rng):
        t = rng.probability(24)
        a = tuple(rng.fraction(20) for _ in range(4))
        b = tuple(rng.fraction(20) for _ in range(4))
        mv = secant_moments(SecantParams(t, a, b))
        quartic = t * (1 - t) * (3 * t**2 - 3 * t + 1)
        for ai, bi in zip(a, b):
            quartic *= bi - ai
        assert central_moments(mv)[(1, 1, 1, 1)] == quartic

    def test_balanced_mixture_kills_higher_coordinates(self):
        params = SecantParams(Fraction(1, 2), (Fraction(0),) * 4, (Fraction(1),) * 4)
        closed = secant_tree_cumulants(params)
        assert all(v == 0 for ms, v in closed.items() if len(ms) >= 3)


class TestSplitBinomials:
    def test_quartet_model_point_is_rank_one(self, rng):
        q = quartet()
        params = random_gmm_params(q, rng)
        tv = tree_cumulants(moments_from_distribution(gmm_distribution(q, params)), q)
        report = verify_split_binomials(tv, (1, 2), (3, 4))
        assert report.all_zero
        assert report.checked == 81
        assert report.max_abs_residual == 0

    def test_worked_pairs(self, rng):
        q = quartet()
        params = random_gmm_params(q, rng)
        tv = tree_cumulants(moments_from_distribution(gmm_distribution(q, params)), q)
        t = {tv.space.index_multiset(x): v for x, v in tv.entries.items()}
        assert t[(1, 3)] * t[(2, 4)] - t[(1, 4)] * t[(2, 3)] == 0
        assert t[(1, 2, 3, 4)] * t[(1, 3)] - t[(1, 2, 3)] * t[(1, 3, 4)] == 0

    def test_off_model_point_is_caught(self, rng):
        q = quartet()
        params = random_gmm_params(q, rng)
        tv = tree_cumulants(moments_from_distribution(gmm_distribution(q, params)), q)
        values = {tv.space.index_multiset(x): v for x, v in tv.entries.items()}
        values[(1, 3)] += Fraction(1, 9)
        report = verify_split_binomials(values, (1, 2), (3, 4))
        assert not report.all_zero
        assert report.max_abs_residual > 0

    def test_product_point_vanishes_trivially(self):
        space = StateSpace.binary(4)
        factors = [[Fraction(2, 5), Fraction(3, 5)]] * 4
        mv = moments_from_distribution(DiscreteDistribution.product(space, factors))
        tv = tree_cumulants(mv, caterpillar(4))
        report = verify_split_binomials(tv, (1, 2), (3, 4))
        assert report.all_zero

    def test_overlapping_split_rejected(self):
        with pytest.raises(ValueError):
            verify_split_binomials({}, (1, 2), (2, 3))


class TestHiddenChainDistribution:
    def test_single_step_is_emission_mixture(self, rng):
        params = random_hmm_params(rng, 1)
        dist = hmm_distribution(params)
        p1 = params.initial[1]
        for level in range(params.space.arities[0]):
            expected = (1 - p1) * params.emissions[0][0][level] + p1 * params.emissions[0][1][level]
            assert dist.p((level,)) == expected

    def test_table_sums_to_one(self, rng):
        params = random_hmm_params(rng, 4, arities=[2, 3, 2, 2])
        assert sum(hmm_distribution(params).table.values()) == 1

    def test_degenerate_chain_rejected(self, rng):
        em = ((tuple(rng.weights(2)), tuple(rng.weights(2))),) * 2
        dead = HMMParams(
            StateSpace.binary(2),
            (Fraction(1), Fraction(0)),
            ((Fraction(0), Fraction(0)),),
            em,
        )
        with pytest.raises(ValueError):
            hmm_distribution(dead)

    def test_invalid_conditional_table_rejected(self, rng):
        q = quartet()
        params = random_gmm_params(q, rng)
        tables = dict(params.tables)
        tables[("a", 1)] = (Fraction(3, 2), Fraction(1, 2))
        with pytest.raises(ValueError):
            gmm_distribution(q, GMMParams(params.root_dist, tables))

    def test_constant_transitions_make_observations_independent(self, rng):
        n = 4
        p1 = rng.probability(24)
        a = rng.probability(24)
        em = tuple((tuple(rng.weights(2)), tuple(rng.weights(2))) for _ in range(n))
        params = HMMParams(StateSpace.binary(n), (1 - p1, p1), ((a, a),) * (n - 1), em)
        lv = to_lcumulants(moments_from_distribution(hmm_distribution(params)), Family(FULL))
        assert detect_independence_structure(lv) == SetPartition.singletons(n)


class TestHiddenChainClosedForm:
    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_matches_pipeline(self, n, rng):
        for trial in range(4):
            arities = [2] * n if trial % 2 == 0 else [3 if i % 2 else 2 for i in range(n)]
            params = random_hmm_params(rng, n, arities)
            assert hmm_tree_cumulants_closed(params) == hmm_pipeline_tree_cumulants(params)

    def test_pair_value_factorizes_through_the_chain(self, rng):
        params = random_hmm_params(rng, 4)
        closed = hmm_tree_cumulants_closed(params)
        v = params.hidden_variances()
        c = params.hidden_step_covariances()
        e = params.hidden_observed_covariances()
        # Distant pair: the chain covariance telescopes over skipped steps.
        expected = (c[0] * c[1] * c[2] / (v[1] * v[2])) * e[0] * e[3] / (v[0] * v[3])
        assert closed[(1, 4)] == expected

    def test_normalized_route_against_pipeline(self, rng):
        from lcumulants.moments import within_tolerance

        params = random_hmm_params(rng, 4)
        norm = hmm_normalized_tree_cumulants(params)
        pipe = normalized_tree_cumulants(
            hmm_pipeline_tree_cumulants(params), params.observed_variances()
        )
        for support, value in norm.items():
            assert within_tolerance(value, pipe[support])

    def test_normalized_route_exact_on_square_variances(self):
        initial = (Fraction(1, 2), Fraction(1, 2))
        transitions = ((Fraction(1, 5), Fraction(4, 5)),) * 3
        rows = ((Fraction(4, 5), Fraction(1, 5)), (Fraction(1, 5), Fraction(4, 5)))
        params = HMMParams(StateSpace.binary(4), initial, transitions, (rows,) * 4)
        norm = hmm_normalized_tree_cumulants(params)
        assert all(isinstance(v, Fraction) for v in norm.values())
        pipe = normalized_tree_cumulants(
            hmm_pipeline_tree_cumulants(params), params.observed_variances()
        )
        for support, value in norm.items():
            assert pipe[support] == value

    def test_homogeneous_monomial_parametrization(self):
        # A stationary chain with mean 1/5 has variance 4/25, a rational
        # square, and emissions p(X=1|h) in {1/8, 1/2} keep the observed
        # mean at 1/5 too, so every standard deviation is rational: the
        # normalized coordinate of an index set of size d spanning s steps
        # is exactly b^d rho^s gamma^(d-2) with b = rho = 3/8, gamma = 3/2.
        n = 5
        params = HMMParams(
            StateSpace.binary(n),
            (Fraction(4, 5), Fraction(1, 5)),
            ((Fraction(1, 8), Fraction(1, 2)),) * (n - 1),
            (((Fraction(7, 8), Fraction(1, 8)), (Fraction(1, 2), Fraction(1, 2))),) * n,
        )
        norm = hmm_normalized_tree_cumulants(params)
        b = rho = Fraction(3, 8)
        gamma = Fraction(3, 2)
        for support, value in norm.items():
            d = len(support)
            span = support[-1] - support[0]
            assert value == b**d * rho**span * gamma ** (d - 2)

    def test_homogeneous_identities_exact(self, rng):
        n = 6
        params = random_hmm_params(rng, n, homogeneous=True)
        closed = hmm_tree_cumulants_closed(params)

        def pairs(gap):
            return [(i, i + gap) for i in range(1, n + 1 - gap)]

        for (i, i2), (j, j2) in itertools.product(pairs(2), repeat=2):
            for (k, k3), (l, l1) in itertools.product(pairs(3), pairs(1)):
                assert closed[(i, i2)] * closed[(j, j2)] == closed[(k, k3)] * closed[(l, l1)]
        for i, j, k in itertools.combinations(range(1, n + 1), 3):
            assert closed[(i, j)] * closed[(i, k)] * closed[(j, k)] >= 0

    def test_chain_correlation_telescopes(self, rng):
        params = random_hmm_params(rng, 5)
        m = params.hidden_means()
        v = params.hidden_variances()
        c = params.hidden_step_covariances()
        a01, a11 = params.transitions[0]
        a02, a12 = params.transitions[1]
        p_h3_given_h1_1 = a11 * a12 + (1 - a11) * a02
        cov13 = m[0] * p_h3_given_h1_1 - m[0] * m[2]
        assert cov13 == c[0] * c[1] / v[1]


class TestRegressionIdentities:
    @pytest.fixture
    def star_model(self, rng):
        # Three observed children of an observed binary regressor.
        pr = rng.probability(24)
        rows = {v: (tuple(rng.weights(2)), tuple(rng.weights(2))) for v in (1, 2, 3)}
        space = StateSpace.binary(4)
        table = {}
        for x in space.states():
            p = pr if x[3] == 1 else 1 - pr
            for v in (1, 2, 3):
                p *= rows[v][x[3]][x[v - 1]]
            table[x] = p
        return DiscreteDistribution(space, table)

    def test_identity_holds_with_block(self, star_model):
        report = binary_regression_identity_check(star_model, 1, 2, (3,), 4)
        assert report.applicable
        assert report.residual == 0

    def test_identity_holds_with_empty_block(self, star_model):
        report = binary_regression_identity_check(star_model, 1, 2, (), 4)
        assert report.applicable
        assert report.residual == 0

    def test_violated_premise_reported(self, star_model):
        table = dict(star_model.table)
        table[(0, 0, 0, 0)] += Fraction(1, 40)
        table[(1, 1, 1, 1)] -= Fraction(1, 40)
        bad = DiscreteDistribution(star_model.space, table, algebraic=True)
        report = binary_regression_identity_check(bad, 1, 2, (3,), 4)
        assert not report.applicable
        assert report.residual != 0

    def test_conditional_mean_is_linear_in_binary_regressor(self, star_model):
        assert regression_mean_check(star_model, 1, 4) == 0

    def test_conditional_mean_linear_on_any_table(self, rng):
        # Linearity in a binary regressor is distribution-free.
        dist = random_distribution(StateSpace.of([3, 2]), rng)
        assert regression_mean_check(dist, 1, 2) == 0

    def test_perfectly_coupled_child(self, rng):
        # A child equal to the regressor has slope one.
        pr = rng.probability(24)
        space = StateSpace.binary(2)
        table = {
            (0, 0): 1 - pr,
            (1, 1): pr,
            (0, 1): Fraction(0),
            (1, 0): Fraction(0),
        }
        dist = DiscreteDistribution(space, table)
        var = dist.raw_moment([2, 2]) - dist.raw_moment([2]) ** 2
        cov = dist.raw_moment([1, 2]) - dist.raw_moment([1]) * dist.raw_moment([2])
        assert cov / var == 1
