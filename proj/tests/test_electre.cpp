#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "electre_reference.hpp"
#include "fogsim/electre.hpp"

using namespace fogsim;
using namespace fogsim::electre;

using namespace electre_reference;

TEST(Percentile, LinearInterpolation)
{
    EXPECT_DOUBLE_EQ(percentile({10, 20, 30, 40, 50}, 10), 14);
    EXPECT_DOUBLE_EQ(percentile({50, 40, 30, 20, 10}, 20), 18);
    EXPECT_DOUBLE_EQ(percentile({10, 20, 30, 40, 50}, 100), 50);
    EXPECT_DOUBLE_EQ(percentile({0, 100}, 10), 10);
    EXPECT_THROW(percentile({}, 10), std::invalid_argument);
}

TEST(Thresholds, WorkedExamples)
{
    DecisionMatrix m;
    m.alternatives = {0, 1, 2, 3, 4};
    m.criteria_count = 3;
    m.values = {-10, -20, -30, -40, -50,  // absolute values are used
                7,   7,   7,   7,   7,
                0,   100, 0,   100, 0};
    m.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    const auto t = compute_thresholds(m);
    EXPECT_NEAR(t.indifference[0], 14.0 / 3, 1e-12);
    EXPECT_DOUBLE_EQ(t.preference[0], 18);
    EXPECT_DOUBLE_EQ(t.veto[0], 50);
    EXPECT_NEAR(t.indifference[1], 7.0 / 3, 1e-12);
    EXPECT_DOUBLE_EQ(t.preference[1], 7);
    EXPECT_DOUBLE_EQ(t.veto[1], 7);

    DecisionMatrix two;
    two.alternatives = {0, 1};
    two.criteria_count = 1;
    two.values = {0, -100};
    two.weights = {1};
    const auto t2 = compute_thresholds(two);
    EXPECT_NEAR(t2.indifference[0], 10.0 / 3, 1e-12);
    EXPECT_DOUBLE_EQ(t2.preference[0], 20);
    EXPECT_DOUBLE_EQ(t2.veto[0], 100);
}

TEST(Thresholds, NeedTwoAlternativesAndStayOrdered)
{
    DecisionMatrix one;
    one.alternatives = {0};
    one.criteria_count = 1;
    one.values = {1};
    one.weights = {1};
    EXPECT_THROW(compute_thresholds(one), std::invalid_argument);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto m = random_matrix(rng, 2 + trial % 6);
        ThresholdRule odd{50, 0.5, 10, 30};  // forces both clamps
        for (const auto& rule : {ThresholdRule{}, odd}) {
            const auto t = compute_thresholds(m, rule);
            for (std::size_t i = 0; i < m.criteria_count; ++i) {
                ASSERT_GE(t.indifference[i], 0);
                ASSERT_LE(t.indifference[i], t.preference[i]);
                ASSERT_LE(t.preference[i], t.veto[i]);
            }
        }
    }
}

TEST(ConcordanceIndex, WorkedExamples)
{
    EXPECT_EQ(concordance_index(5, 5, 1, 2), 1);
    EXPECT_EQ(concordance_index(5, 8, 1, 2), 0);
    EXPECT_DOUBLE_EQ(concordance_index(5, 6.5, 1, 2), 0.5);
    EXPECT_EQ(concordance_index(5, 5.5, 1, 1), 1);  // step when p = q
    EXPECT_EQ(concordance_index(5, 6.5, 1, 1), 0);
}

TEST(DiscordanceIndex, WorkedExamples)
{
    EXPECT_EQ(discordance_index(5, 6, 2, 4), 0);
    EXPECT_EQ(discordance_index(5, 10, 2, 4), 1);
    EXPECT_DOUBLE_EQ(discordance_index(5, 8, 2, 4), 0.5);
    EXPECT_EQ(discordance_index(5, 7.5, 2, 2), 1);  // step when v = p
    EXPECT_EQ(discordance_index(5, 7, 2, 2), 0);
}

TEST(PartialIndices, MonotoneAndContinuous)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 10);
    for (int trial = 0; trial < 1000; ++trial) {
        const double q = u(rng);
        const double p = q + 0.1 + u(rng);
        const double v = p + 0.1 + u(rng);
        const double ga = u(rng);
        double prev_c = 2, prev_d = -1;
        for (double diff = -5; diff <= v + 5; diff += 0.01) {
            const double c = concordance_index(ga, ga + diff, q, p);
            const double d = discordance_index(ga, ga + diff, p, v);
            ASSERT_GE(c, 0);
            ASSERT_LE(c, 1);
            ASSERT_GE(d, 0);
            ASSERT_LE(d, 1);
            ASSERT_LE(c, prev_c + 1e-12);
            ASSERT_GE(d, prev_d - 1e-12);
            prev_c = c;
            prev_d = d;
        }
        const double eps = 1e-9;
        EXPECT_NEAR(concordance_index(ga, ga + q + eps, q, p), 1, 1e-6);
        EXPECT_NEAR(concordance_index(ga, ga + p - eps, q, p), 0, 1e-6);
        EXPECT_NEAR(discordance_index(ga, ga + p + eps, p, v), 0, 1e-6);
        EXPECT_NEAR(discordance_index(ga, ga + v - eps, p, v), 1, 1e-6);
    }
}

TEST(Credibility, WorkedExamples)
{
    const std::vector<double> low{0.1, 0.3, 0.5};
    EXPECT_DOUBLE_EQ(credibility_from(0.5, low), 0.5);
    const std::vector<double> one_high{0.8, 0.2, 0.0};
    EXPECT_NEAR(credibility_from(0.6, one_high), 0.3, 1e-12);
    const std::vector<double> veto{1.0, 0.0};
    EXPECT_EQ(credibility_from(0.5, veto), 0.0);
    EXPECT_EQ(credibility_from(1.0, veto), 1.0);
}

TEST(Credibility, MatchesReferenceOnRandomInstances)
{
    std::mt19937_64 rng(20240601);
    std::size_t binding = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        std::uniform_int_distribution<std::size_t> size(2, 7);
        const auto m = random_matrix(rng, size(rng));
        const auto t = compute_thresholds(m);
        for (std::size_t i = 0; i < m.criteria_count; ++i) {
            std::vector<double> col;
            for (std::size_t a = 0; a < m.size(); ++a) col.push_back(std::fabs(m(i, a)));
            ASSERT_NEAR(t.indifference[i], ref_percentile(col, 10) / 3, 1e-9);
            ASSERT_NEAR(t.preference[i], std::max(t.indifference[i], ref_percentile(col, 20)), 1e-9);
            ASSERT_NEAR(t.veto[i], std::max(t.preference[i], ref_percentile(col, 100)), 1e-9);
        }
        const auto sigma = credibility(m, t);
        const auto ref = ref_credibility(m, t);
        const auto n = m.size();
        for (std::size_t a = 0; a < n; ++a) {
            EXPECT_EQ(sigma(a, a), 1.0);
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b) continue;
                const double c = ref.c[a * n + b];
                ASSERT_NEAR(concordance(m, t, a, b), c, 1e-9);
                ASSERT_NEAR(sigma(a, b), ref.sigma[a * n + b], 1e-9);
                ASSERT_GE(sigma(a, b), 0);
                ASSERT_LE(sigma(a, b), c + 1e-12);
                const auto& d = ref.d[a * n + b];
                const bool all_below = std::all_of(d.begin(), d.end(), [&](double x) { return x <= c; });
                if (all_below) {
                    ASSERT_EQ(sigma(a, b), concordance(m, t, a, b));
                } else {
                    ++binding;
                    if (c > 0) {
                        ASSERT_LT(sigma(a, b), c);
                    } else {
                        ASSERT_EQ(sigma(a, b), 0);  // nothing left to reduce
                    }
                }
            }
        }
    }
    // Discordance with v = P100 rarely binds; it must still be exercised.
    EXPECT_GT(binding, 0u);
}

TEST(Rank, WorkedExamples)
{
    CredibilityMatrix single(1);
    EXPECT_EQ(rank(single).tiers, (std::vector<std::vector<std::size_t>>{{0}}));

    CredibilityMatrix two(2);
    two(0, 1) = 1;
    two(1, 0) = 0;
    EXPECT_EQ(rank(two).tiers, (std::vector<std::vector<std::size_t>>{{0}, {1}}));

    CredibilityMatrix sym(4);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0, 1);
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = a + 1; b < 4; ++b) sym(a, b) = sym(b, a) = u(rng);
    }
    EXPECT_EQ(rank(sym).tiers, (std::vector<std::vector<std::size_t>>{{0, 1, 2, 3}}));
    EXPECT_THROW(rank(CredibilityMatrix(0)), std::invalid_argument);
}

TEST(Rank, PartitionsAndIsPermutationEquivariant)
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0, 1);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + trial % 7;
        CredibilityMatrix s(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a != b) s(a, b) = std::round(u(rng) * 10) / 10;
            }
        }
        const auto r = rank(s);
        std::vector<std::size_t> seen;
        for (const auto& tier : r.tiers) {
            ASSERT_FALSE(tier.empty());
            seen.insert(seen.end(), tier.begin(), tier.end());
        }
        std::sort(seen.begin(), seen.end());
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), 0);
        ASSERT_EQ(seen, all);

        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        CredibilityMatrix relabelled(n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) relabelled(perm[a], perm[b]) = s(a, b);
        }
        const auto r2 = rank(relabelled);
        ASSERT_EQ(r2.tiers.size(), r.tiers.size());
        for (std::size_t k = 0; k < r.tiers.size(); ++k) {
            std::vector<std::size_t> mapped;
            for (auto x : r.tiers[k]) mapped.push_back(perm[x]);
            std::sort(mapped.begin(), mapped.end());
            auto got = r2.tiers[k];
            std::sort(got.begin(), got.end());
            ASSERT_EQ(got, mapped);
        }
    }
}

TEST(Select, SingleCandidate)
{
    const std::vector<NodeId> c{7};
    const std::vector<double> costs{1, 2, 3, 4, 5};
    const std::vector<Proximity> prox{{1, 1}};
    const auto o = select(c, costs, 5, prox);
    EXPECT_EQ(o.chosen, 7);
    EXPECT_FALSE(o.tie());
}

TEST(Select, EmptyOrMisshapedInputThrows)
{
    EXPECT_THROW(select({}, {}, 5, {}), std::invalid_argument);
    const std::vector<NodeId> c{1, 2};
    const std::vector<double> costs{1, 2, 3};
    const std::vector<Proximity> prox{{1, 1}, {1, 1}};
    EXPECT_THROW(select(c, costs, 5, prox), std::invalid_argument);
}

TEST(Select, IdenticalCandidatesGoToNearest)
{
    const std::vector<NodeId> c{3, 1, 2};
    const std::vector<double> costs(15, 4.0);
    const std::vector<Proximity> prox{{2, 3}, {2, 3}, {1, 9}};
    const auto o = select(c, costs, 5, prox);
    EXPECT_EQ(o.chosen, 2);
    EXPECT_TRUE(o.tie());
    EXPECT_EQ(o.top_tier_size, 3u);

    const std::vector<Proximity> same{{2, 3}, {2, 3}, {2, 3}};
    EXPECT_EQ(select(c, costs, 5, same).chosen, 1);  // node id breaks the last tie
}

TEST(Select, DominantCandidateWins)
{
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(1, 50);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 2 + trial % 5;
        std::vector<NodeId> c(n);
        std::iota(c.begin(), c.end(), 10);
        std::vector<double> costs(5 * n);
        const auto dom = static_cast<std::size_t>(trial) % n;
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t a = 0; a < n; ++a) costs[i * n + a] = 100 + u(rng);
            costs[i * n + dom] = u(rng) / 100;  // far below every rival
        }
        const auto o = select(c, costs, 5, random_proximity(rng, n));
        // Brute-force check of the outranking relation the choice rests on.
        for (std::size_t b = 0; b < n; ++b) {
            if (b == dom) continue;
            ASSERT_EQ(o.credibility(dom, b), 1.0);
            ASSERT_LT(o.credibility(b, dom), 1.0);
        }
        ASSERT_EQ(o.chosen, c[dom]);
    }
}

TEST(Select, TopTierTieBreaksByHops)
{
    // Two candidates with symmetric trade-offs tie; the closer one wins.
    const std::vector<NodeId> c{1, 2};
    const std::vector<double> costs{1, 2, 2, 1, 1, 2, 2, 1, 5, 5};
    const std::vector<Proximity> prox{{2, 1}, {1, 1}};
    const auto o = select(c, costs, 5, prox);
    ASSERT_EQ(o.top_tier_size, 2u);
    EXPECT_EQ(o.chosen, 2);
}

TEST(Select, DegenerateSingleCriterionIsArgmin)
{
    std::mt19937_64 rng(123);
    Options opt;
    opt.fixed_thresholds = Thresholds{{0}, {0}, {std::numeric_limits<double>::infinity()}};
    for (int trial = 0; trial < 1000; ++trial) {
        std::uniform_int_distribution<std::size_t> size(1, 8);
        const auto n = size(rng);
        std::vector<NodeId> c(n);
        std::iota(c.begin(), c.end(), 0);
        std::shuffle(c.begin(), c.end(), rng);
        std::uniform_int_distribution<int> cost(0, 5);
        std::vector<double> costs;
        for (std::size_t a = 0; a < n; ++a) costs.push_back(cost(rng));
        const auto prox = random_proximity(rng, n);

        std::size_t best = 0;
        for (std::size_t a = 1; a < n; ++a) {
            const auto key = std::tuple{costs[a], prox[a].hops, prox[a].propagation, c[a]};
            const auto bkey = std::tuple{costs[best], prox[best].hops, prox[best].propagation, c[best]};
            if (key < bkey) best = a;
        }
        ASSERT_EQ(select(c, costs, 1, prox, opt).chosen, c[best]) << "trial " << trial;
    }
}

TEST(Select, InvariantUnderScalingOneCriterion)
{
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + trial % 6;
        std::vector<NodeId> c(n);
        std::iota(c.begin(), c.end(), 0);
        std::uniform_real_distribution<double> u(0, 20);
        std::vector<double> costs(5 * n);
        for (auto& x : costs) x = u(rng);
        const auto prox = random_proximity(rng, n);
        const auto base = select(c, costs, 5, prox).chosen;
        for (double k : {0.5, 10.0}) {
            for (std::size_t row = 0; row < 5; ++row) {
                auto scaled = costs;
                for (std::size_t a = 0; a < n; ++a) scaled[row * n + a] *= k;
                ASSERT_EQ(select(c, scaled, 5, prox).chosen, base) << "trial " << trial << " row " << row << " k " << k;
            }
        }
    }
}

namespace {

struct NewcomerCase {
    std::vector<NodeId> candidates, enlarged;
    std::vector<double> costs, enlarged_costs;
    std::vector<Proximity> proximity, enlarged_proximity;
};

/// A random set plus a newcomer worse than every candidate on every
/// criterion by more than any threshold the enlarged set can produce.
NewcomerCase dominated_newcomer(std::mt19937_64& rng, std::size_t n)
{
    NewcomerCase k;
    std::uniform_real_distribution<double> u(0, 20);
    k.costs.resize(5 * n);
    for (auto& x : k.costs) x = u(rng);
    k.candidates.resize(n);
    std::iota(k.candidates.begin(), k.candidates.end(), 0);
    k.proximity = random_proximity(rng, n);
    k.enlarged_costs.resize(5 * (n + 1));
    for (std::size_t i = 0; i < 5; ++i) {
        double worst = 0;
        for (std::size_t a = 0; a < n; ++a) {
            k.enlarged_costs[i * (n + 1) + a] = k.costs[i * n + a];
            worst = std::max(worst, k.costs[i * n + a]);
        }
        k.enlarged_costs[i * (n + 1) + n] = 2 * worst + 1;
    }
    k.enlarged = k.candidates;
    k.enlarged.push_back(static_cast<NodeId>(n));
    k.enlarged_proximity = k.proximity;
    k.enlarged_proximity.push_back({0, 0});  // even the closest possible newcomer
    return k;
}

double max_off_diagonal(const CredibilityMatrix& s)
{
    double top = 0;
    for (std::size_t a = 0; a < s.size(); ++a) {
        for (std::size_t b = 0; b < s.size(); ++b) {
            if (a != b) top = std::max(top, s(a, b));
        }
    }
    return top;
}

} // namespace

TEST(Select, DominatedNewcomerIsNeverChosen)
{
    std::mt19937_64 rng(57);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + trial % 5;
        const auto k = dominated_newcomer(rng, n);
        const auto o = select(k.enlarged, k.enlarged_costs, 5, k.enlarged_proximity);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t a = 0; a < n; ++a) {
                ASSERT_GT(k.enlarged_costs[i * (n + 1) + n] - k.enlarged_costs[i * (n + 1) + a],
                          o.thresholds.preference[i]);
            }
        }
        ASSERT_NE(o.chosen, static_cast<NodeId>(n)) << "trial " << trial;
    }
}

TEST(Select, DominatedNewcomerChangesNothingWhenCutLevelIsFixed)
{
    // With the original thresholds and a cut level the newcomer cannot raise
    // (max credibility already 1), every old candidate gains the same +1
    // qualification and the top tier is unchanged.
    std::mt19937_64 rng(57);
    std::size_t checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = dominated_newcomer(rng, 2 + trial % 5);
        const auto base = select(k.candidates, k.costs, 5, k.proximity);
        if (max_off_diagonal(base.credibility) < 1) continue;
        Options fixed;
        fixed.fixed_thresholds = base.thresholds;
        EXPECT_EQ(select(k.enlarged, k.enlarged_costs, 5, k.enlarged_proximity, fixed).chosen, base.chosen)
            << "trial " << trial;
        ++checked;
    }
    EXPECT_GT(checked, 300u);
}

TEST(Select, DominatedNewcomerCanShiftTheCutLevel)
{
    // Per-decision thresholds and a cut level relative to the largest
    // credibility make the unconditional form of the property false: the
    // newcomer is outranked with credibility 1, which can raise the cut and
    // reorder the original candidates.
    std::mt19937_64 rng(57);
    std::size_t changed = 0, changed_with_raised_cut = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto k = dominated_newcomer(rng, 2 + trial % 5);
        const auto base = select(k.candidates, k.costs, 5, k.proximity);
        const auto grown = select(k.enlarged, k.enlarged_costs, 5, k.enlarged_proximity);
        if (grown.chosen == base.chosen) continue;
        ++changed;
        changed_with_raised_cut += max_off_diagonal(base.credibility) < max_off_diagonal(grown.credibility);
    }
    EXPECT_GT(changed, 0u);
    EXPECT_GT(changed_with_raised_cut, changed / 2);
}

TEST(DecisionMatrix, ValidatesWeights)
{
    DecisionMatrix m;
    m.alternatives = {0, 1};
    m.criteria_count = 2;
    m.values = {1, 2, 3, 4};
    m.weights = {0.5, 0.5};
    EXPECT_NO_THROW(m.validate());
    m.weights = {0.6, 0.5};
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m.weights = {1.0, 0.0};
    EXPECT_THROW(m.validate(), std::invalid_argument);
    m.weights = {0.5, 0.5};
    m.values.pop_back();
    EXPECT_THROW(m.validate(), std::invalid_argument);
}
