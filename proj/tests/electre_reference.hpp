#pragma once

// Reference ELECTRE formulas written out case by case, independent of the
// library implementation. Shared by the unit tests and the acceptance gate.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "fogsim/electre.hpp"

namespace electre_reference {

using namespace fogsim;
using namespace fogsim::electre;

inline double ref_concordance(double ga, double gb, double q, double p)
{
    const double diff = gb - ga;
    if (diff <= q) return 1;
    if (diff >= p) return 0;
    return (p - diff) / (p - q);
}

inline double ref_discordance(double ga, double gb, double p, double v)
{
    const double diff = gb - ga;
    if (diff <= p) return 0;
    if (diff > v) return 1;
    return (diff - p) / (v - p);
}

inline double ref_percentile(std::vector<double> xs, double pct)
{
    std::sort(xs.begin(), xs.end());
    const double r = pct / 100 * static_cast<double>(xs.size() - 1);
    const auto i = static_cast<std::size_t>(r);
    if (i + 1 >= xs.size()) return xs.back();
    return xs[i] * (1 - (r - static_cast<double>(i))) + xs[i + 1] * (r - static_cast<double>(i));
}

struct RefResult {
    std::vector<double> c, sigma;  // n*n
    std::vector<std::vector<double>> d;
};

inline RefResult ref_credibility(const DecisionMatrix& m, const Thresholds& t)
{
    const auto n = m.size();
    RefResult r;
    r.c.assign(n * n, 1);
    r.sigma.assign(n * n, 1);
    r.d.assign(n * n, {});
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b < n; ++b) {
            if (a == b) continue;
            double c = 0;
            std::vector<double> d;
            for (std::size_t i = 0; i < m.criteria_count; ++i) {
                c += m.weights[i] * ref_concordance(m(i, a), m(i, b), t.indifference[i], t.preference[i]);
                d.push_back(ref_discordance(m(i, a), m(i, b), t.preference[i], t.veto[i]));
            }
            double s = c;
            if (c < 1) {
                for (double di : d) {
                    if (di > c) s *= (1 - di) / (1 - c);
                }
            }
            r.c[a * n + b] = c;
            r.sigma[a * n + b] = s;
            r.d[a * n + b] = d;
        }
    }
    return r;
}

inline DecisionMatrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t k = 5)
{
    DecisionMatrix m;
    for (std::size_t a = 0; a < n; ++a) m.alternatives.push_back(static_cast<NodeId>(a));
    m.criteria_count = k;
    std::uniform_real_distribution<double> val(0, 100);
    std::bernoulli_distribution coarse(0.3);
    for (std::size_t i = 0; i < k * n; ++i) {
        // Some coarse values so exact ties and band edges occur.
        m.values.push_back(coarse(rng) ? -std::floor(val(rng) / 20) * 20 : -val(rng));
    }
    std::uniform_real_distribution<double> w(0.1, 1);
    double sum = 0;
    for (std::size_t i = 0; i < k; ++i) {
        m.weights.push_back(w(rng));
        sum += m.weights.back();
    }
    for (auto& x : m.weights) x /= sum;
    return m;
}

inline std::vector<Proximity> random_proximity(std::mt19937_64& rng, std::size_t n)
{
    std::uniform_int_distribution<std::size_t> hops(1, 3);
    std::uniform_int_distribution<int> pr(0, 4);
    std::vector<Proximity> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({hops(rng), static_cast<double>(pr(rng))});
    return out;
}

} // namespace electre_reference
