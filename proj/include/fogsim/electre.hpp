#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "fogsim/topology.hpp"

/// ELECTRE III outranking: pseudo-criteria thresholds, concordance,
/// discordance, credibility and a distillation-style ranking with ties.
///
/// Values are in the maximize convention throughout (larger is better).
/// Callers with cost criteria negate them first; `select` does that.
namespace fogsim::electre {

/// K criteria x n alternatives, row-major by criterion.
struct DecisionMatrix {
    std::vector<NodeId> alternatives;
    std::size_t criteria_count = 0;
    std::vector<double> values;
    std::vector<double> weights;

    std::size_t size() const noexcept { return alternatives.size(); }

    double operator()(std::size_t criterion, std::size_t alt) const
    {
        return values[criterion * alternatives.size() + alt];
    }

    void validate() const
    {
        if (values.size() != criteria_count * alternatives.size()) {
            throw std::invalid_argument("decision matrix has " + std::to_string(values.size()) + " values, expected " +
                                        std::to_string(criteria_count * alternatives.size()));
        }
        if (weights.size() != criteria_count) throw std::invalid_argument("one weight per criterion required");
        double sum = 0;
        for (double w : weights) {
            if (!(w > 0)) throw std::invalid_argument("criterion weights must be positive");
            sum += w;
        }
        if (std::fabs(sum - 1.0) > 1e-9) throw std::invalid_argument("criterion weights must sum to 1");
    }
};

struct Thresholds {
    std::vector<double> indifference;  ///< q
    std::vector<double> preference;    ///< p
    std::vector<double> veto;          ///< v
};

/// Percentile ranks used to derive thresholds from the current candidates.
struct ThresholdRule {
    double indifference_percentile = 10;
    double indifference_divisor = 3;
    double preference_percentile = 20;
    double veto_percentile = 100;
};

/// Linear-interpolation percentile: rank r = pct/100 * (n-1) on sorted data.
inline double percentile(std::vector<double> sorted_or_not, double pct)
{
    if (sorted_or_not.empty()) throw std::invalid_argument("percentile of empty set");
    std::sort(sorted_or_not.begin(), sorted_or_not.end());
    const double rank = pct / 100.0 * static_cast<double>(sorted_or_not.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(rank));
    const auto hi = static_cast<std::size_t>(std::ceil(rank));
    const double frac = rank - static_cast<double>(lo);
    return sorted_or_not[lo] + (sorted_or_not[hi] - sorted_or_not[lo]) * frac;
}

/// Per-criterion q = P10/3, p = P20, v = P100 over absolute values, then
/// clamped so that q <= p <= v.
inline Thresholds compute_thresholds(const DecisionMatrix& m, const ThresholdRule& rule = {})
{
    if (m.size() < 2) throw std::invalid_argument("thresholds need at least two alternatives");
    Thresholds t;
    std::vector<double> column(m.size());
    for (std::size_t i = 0; i < m.criteria_count; ++i) {
        for (std::size_t a = 0; a < m.size(); ++a) column[a] = std::fabs(m(i, a));
        const double q = percentile(column, rule.indifference_percentile) / rule.indifference_divisor;
        const double p = std::max(q, percentile(column, rule.preference_percentile));
        const double v = std::max(p, percentile(column, rule.veto_percentile));
        t.indifference.push_back(q);
        t.preference.push_back(p);
        t.veto.push_back(v);
    }
    return t;
}

/// Partial concordance c_i(aSb): support of one criterion for "a is at least
/// as good as b".
inline double concordance_index(double g_a, double g_b, double q, double p)
{
    if (g_b <= g_a + q) return 1.0;
    if (g_b >= g_a + p) return 0.0;
    return (g_a - g_b + p) / (p - q);
}

/// Partial discordance d_i(aSb): opposition of one criterion to aSb.
inline double discordance_index(double g_a, double g_b, double p, double v)
{
    if (g_b > g_a + v) return 1.0;
    if (g_b <= g_a + p) return 0.0;
    return (g_b - g_a - p) / (v - p);
}

/// n x n matrix, row = a, column = b, entry = sigma(aSb).
class CredibilityMatrix {
public:
    CredibilityMatrix() = default;
    explicit CredibilityMatrix(std::size_t n) : n_(n), cells_(n * n, 0.0)
    {
        for (std::size_t i = 0; i < n; ++i) cells_[i * n + i] = 1.0;
    }

    std::size_t size() const noexcept { return n_; }
    double& operator()(std::size_t a, std::size_t b) { return cells_[a * n_ + b]; }
    double operator()(std::size_t a, std::size_t b) const { return cells_[a * n_ + b]; }

private:
    std::size_t n_ = 0;
    std::vector<double> cells_;
};

/// Global concordance c(aSb) = sum_i w_i c_i(aSb).
inline double concordance(const DecisionMatrix& m, const Thresholds& t, std::size_t a, std::size_t b)
{
    double c = 0.0;
    for (std::size_t i = 0; i < m.criteria_count; ++i) {
        c += m.weights[i] * concordance_index(m(i, a), m(i, b), t.indifference[i], t.preference[i]);
    }
    return c;
}

/// sigma(aSb) from a global concordance and the per-criterion discordances.
inline double credibility_from(double c, std::span<const double> discordances)
{
    double sigma = c;
    for (double d : discordances) {
        if (d > c) sigma *= (1.0 - d) / (1.0 - c);
    }
    return sigma;
}

inline CredibilityMatrix credibility(const DecisionMatrix& m, const Thresholds& t)
{
    const auto n = m.size();
    CredibilityMatrix out(n);
    std::vector<double> d(m.criteria_count);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            for (std::size_t i = 0; i < m.criteria_count; ++i) {
                d[i] = discordance_index(m(i, a), m(i, b), t.preference[i], t.veto[i]);
            }
            out(a, b) = credibility_from(concordance(m, t, a, b), d);
        }
    }
    return out;
}

/// Tiers of alternative indices, best first.
struct Ranking {
    std::vector<std::vector<std::size_t>> tiers;
};

inline constexpr double default_discrimination = 0.15;

/// Iterative qualification distillation. At each step the cut level is the
/// largest remaining off-diagonal credibility minus `discrimination`; a beats
/// b when sigma(aSb) reaches the cut and sigma(bSa) does not. The
/// alternatives with the best (wins - losses) form the next tier.
inline Ranking rank(const CredibilityMatrix& sigma, double discrimination = default_discrimination)
{
    const auto n = sigma.size();
    if (n == 0) throw std::invalid_argument("cannot rank an empty set");
    Ranking ranking;
    std::vector<std::size_t> remaining(n);
    for (std::size_t i = 0; i < n; ++i) remaining[i] = i;

    std::vector<long> qualification;
    while (!remaining.empty()) {
        if (remaining.size() == 1) {
            ranking.tiers.push_back(remaining);
            break;
        }
        double top = -std::numeric_limits<double>::infinity();
        for (auto a : remaining) {
            for (auto b : remaining) {
                if (a != b) top = std::max(top, sigma(a, b));
            }
        }
        const double cut = top - discrimination;

        qualification.assign(remaining.size(), 0);
        for (std::size_t x = 0; x < remaining.size(); ++x) {
            for (std::size_t y = 0; y < remaining.size(); ++y) {
                if (x == y) continue;
                const auto a = remaining[x];
                const auto b = remaining[y];
                if (sigma(a, b) >= cut && sigma(b, a) < cut) {
                    ++qualification[x];
                    --qualification[y];
                }
            }
        }
        const long best = *std::max_element(qualification.begin(), qualification.end());
        std::vector<std::size_t> tier;
        std::vector<std::size_t> rest;
        for (std::size_t x = 0; x < remaining.size(); ++x) {
            (qualification[x] == best ? tier : rest).push_back(remaining[x]);
        }
        ranking.tiers.push_back(std::move(tier));
        remaining = std::move(rest);
    }
    return ranking;
}

/// Tie-break key: fewer hops first, then less propagation delay.
struct Proximity {
    std::size_t hops = 0;
    double propagation = 0.0;
};

struct Options {
    std::vector<double> weights;                ///< empty = uniform 1/K
    ThresholdRule rule;
    std::optional<Thresholds> fixed_thresholds;  ///< overrides `rule` when set
    double discrimination = default_discrimination;
};

/// Everything that went into one decision, for the debug dump.
struct Outcome {
    NodeId chosen = -1;
    std::size_t top_tier_size = 1;
    DecisionMatrix matrix;
    Thresholds thresholds;
    CredibilityMatrix credibility;
    Ranking ranking;

    bool tie() const noexcept { return top_tier_size > 1; }
};

/// Index of the candidate with the smallest (hops, propagation, node id).
inline std::size_t nearest_of(std::span<const NodeId> candidates, std::span<const Proximity> proximity,
                              std::span<const std::size_t> among)
{
    std::size_t best = among.front();
    for (auto i : among) {
        const auto& p = proximity[i];
        const auto& q = proximity[best];
        if (p.hops < q.hops || (p.hops == q.hops && p.propagation < q.propagation) ||
            (p.hops == q.hops && p.propagation == q.propagation && candidates[i] < candidates[best])) {
            best = i;
        }
    }
    return best;
}

/// Picks a candidate from cost criteria (`costs` is K x n row-major, smaller
/// is better). Ties in the top tier go to the nearest candidate.
inline Outcome select(std::span<const NodeId> candidates, std::span<const double> costs, std::size_t criteria_count,
                      std::span<const Proximity> proximity, const Options& options = {})
{
    const auto n = candidates.size();
    if (n == 0) throw std::invalid_argument("ELECTRE selection needs at least one candidate");
    if (proximity.size() != n) throw std::invalid_argument("one proximity entry per candidate required");
    if (costs.size() != criteria_count * n) throw std::invalid_argument("cost matrix shape mismatch");

    Outcome out;
    out.matrix.alternatives.assign(candidates.begin(), candidates.end());
    out.matrix.criteria_count = criteria_count;
    out.matrix.values.resize(costs.size());
    std::transform(costs.begin(), costs.end(), out.matrix.values.begin(), [](double c) { return -c; });
    out.matrix.weights = options.weights.empty()
                             ? std::vector<double>(criteria_count, 1.0 / static_cast<double>(criteria_count))
                             : options.weights;
    out.matrix.validate();

    if (n == 1) {
        out.chosen = candidates.front();
        out.ranking.tiers = {{0}};
        return out;
    }

    out.thresholds = options.fixed_thresholds ? *options.fixed_thresholds : compute_thresholds(out.matrix, options.rule);
    out.credibility = credibility(out.matrix, out.thresholds);
    out.ranking = rank(out.credibility, options.discrimination);
    const auto& top = out.ranking.tiers.front();
    out.top_tier_size = top.size();
    out.chosen = candidates[nearest_of(candidates, proximity, top)];
    return out;
}

} // namespace fogsim::electre
