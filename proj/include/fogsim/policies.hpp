#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fogsim/electre.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

/// The five cost criteria of one candidate, all to be minimised.
struct CriteriaVector {
    double hop_count = 0;    ///< links on the route
    double propagation = 0;  ///< summed link propagation delay
    double processing = 0;   ///< I / IPT
    double execution = 0;    ///< processing + propagation + summed transmission
    double waiting = 0;      ///< processing delay of everything queued or in service

    static constexpr std::size_t size = 5;
    std::array<double, size> as_array() const { return {hop_count, propagation, processing, execution, waiting}; }
};

/// Everything a policy may look at when choosing a replica for one request.
struct SelectionContext {
    NodeId source = 0;
    std::size_t app = 0;
    double instructions = 0;
    double bytes = 0;
    std::span<const NodeId> candidates;
    const Topology* topology = nullptr;
    const Routing* routing = nullptr;
    /// Instructions currently queued or in service, indexed by node id.
    std::span<const double> backlog;
};

inline CriteriaVector compute_criteria(const SelectionContext& ctx, NodeId candidate)
{
    if (std::find(ctx.candidates.begin(), ctx.candidates.end(), candidate) == ctx.candidates.end()) {
        throw std::invalid_argument("node " + std::to_string(candidate) + " does not host the requested module");
    }
    const auto& topo = *ctx.topology;
    const auto& path = ctx.routing->path(ctx.source, candidate);
    const double ipt = topo.node(candidate).ipt;

    CriteriaVector c;
    c.hop_count = static_cast<double>(path.links.size());
    double transmission = 0;
    for (auto l : path.links) {
        const auto& link = topo.link(l);
        c.propagation += link.pr;
        transmission += ctx.bytes / link.bw;
    }
    c.processing = ctx.instructions / ipt;
    c.execution = c.processing + c.propagation + transmission;
    const auto slot = static_cast<std::size_t>(candidate);
    c.waiting = slot < ctx.backlog.size() ? ctx.backlog[slot] / ipt : 0.0;
    return c;
}

inline electre::Proximity proximity(const SelectionContext& ctx, NodeId candidate)
{
    return {ctx.routing->hops(ctx.source, candidate), ctx.routing->propagation(ctx.source, candidate)};
}

namespace detail {

inline void require_candidates(const SelectionContext& ctx)
{
    if (ctx.candidates.empty()) throw std::invalid_argument("no candidate replicas to select from");
}

inline std::vector<electre::Proximity> proximities(const SelectionContext& ctx)
{
    std::vector<electre::Proximity> out;
    out.reserve(ctx.candidates.size());
    for (auto c : ctx.candidates) out.push_back(proximity(ctx, c));
    return out;
}

} // namespace detail

inline NodeId select_random(const SelectionContext& ctx, Rng& rng)
{
    detail::require_candidates(ctx);
    std::uniform_int_distribution<std::size_t> pick(0, ctx.candidates.size() - 1);
    return ctx.candidates[pick(rng)];
}

/// Round-robin position per (source device, application), or per device only.
class DrrCounters {
public:
    explicit DrrCounters(bool per_app = true) : per_app_(per_app) {}

    std::size_t next(NodeId source, std::size_t app, std::size_t modulo)
    {
        auto& c = counters_[{source, per_app_ ? app : 0}];
        return c++ % modulo;
    }

private:
    bool per_app_;
    std::map<std::pair<NodeId, std::size_t>, std::size_t> counters_;
};

/// Cycles candidates in ascending node-id order.
inline NodeId select_drr(const SelectionContext& ctx, DrrCounters& counters)
{
    detail::require_candidates(ctx);
    std::vector<NodeId> order(ctx.candidates.begin(), ctx.candidates.end());
    std::sort(order.begin(), order.end());
    return order[counters.next(ctx.source, ctx.app, order.size())];
}

inline NodeId select_nearest(const SelectionContext& ctx)
{
    detail::require_candidates(ctx);
    const auto prox = detail::proximities(ctx);
    std::vector<std::size_t> all(ctx.candidates.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return ctx.candidates[electre::nearest_of(ctx.candidates, prox, all)];
}

/// Smallest static execution delay; the current load is not consulted.
inline NodeId select_fastest(const SelectionContext& ctx)
{
    detail::require_candidates(ctx);
    const auto prox = detail::proximities(ctx);
    std::vector<double> exec;
    for (auto c : ctx.candidates) exec.push_back(compute_criteria(ctx, c).execution);
    const double best = *std::min_element(exec.begin(), exec.end());
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < exec.size(); ++i) {
        if (exec[i] == best) tied.push_back(i);
    }
    return ctx.candidates[electre::nearest_of(ctx.candidates, prox, tied)];
}

inline electre::Outcome select_electre_outcome(const SelectionContext& ctx, const electre::Options& options = {})
{
    detail::require_candidates(ctx);
    const auto n = ctx.candidates.size();
    std::vector<double> costs(CriteriaVector::size * n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto row = compute_criteria(ctx, ctx.candidates[j]).as_array();
        for (std::size_t i = 0; i < CriteriaVector::size; ++i) costs[i * n + j] = row[i];
    }
    const auto prox = detail::proximities(ctx);
    return electre::select(ctx.candidates, costs, CriteriaVector::size, prox, options);
}

inline NodeId select_electre(const SelectionContext& ctx, const electre::Options& options = {})
{
    return select_electre_outcome(ctx, options).chosen;
}

enum class PolicyKind { random, drr, nearest, fastest, electre };

inline constexpr std::array<PolicyKind, 5> all_policies{PolicyKind::random, PolicyKind::drr, PolicyKind::nearest,
                                                        PolicyKind::fastest, PolicyKind::electre};

inline std::string_view to_string(PolicyKind p)
{
    switch (p) {
    case PolicyKind::random: return "random";
    case PolicyKind::drr: return "drr";
    case PolicyKind::nearest: return "nearest";
    case PolicyKind::fastest: return "fastest";
    case PolicyKind::electre: return "electre";
    }
    return "?";
}

inline PolicyKind parse_policy(std::string_view s)
{
    for (auto p : all_policies) {
        if (to_string(p) == s) return p;
    }
    throw std::invalid_argument("unknown policy: " + std::string(s));
}

/// JSON record of one ELECTRE decision.
inline nlohmann::json decision_record(const SelectionContext& ctx, const electre::Outcome& o)
{
    using nlohmann::json;
    const auto n = o.matrix.size();
    json costs = json::array();
    for (std::size_t i = 0; i < o.matrix.criteria_count; ++i) {
        json row = json::array();
        for (std::size_t a = 0; a < n; ++a) row.push_back(-o.matrix(i, a));
        costs.push_back(std::move(row));
    }
    json conc = json::array();
    json cred = json::array();
    if (o.credibility.size() == n && n > 1) {
        for (std::size_t a = 0; a < n; ++a) {
            json crow = json::array();
            json srow = json::array();
            for (std::size_t b = 0; b < n; ++b) {
                crow.push_back(a == b ? 1.0 : electre::concordance(o.matrix, o.thresholds, a, b));
                srow.push_back(o.credibility(a, b));
            }
            conc.push_back(std::move(crow));
            cred.push_back(std::move(srow));
        }
    }
    json tiers = json::array();
    for (const auto& tier : o.ranking.tiers) {
        json t = json::array();
        for (auto idx : tier) t.push_back(o.matrix.alternatives[idx]);
        tiers.push_back(std::move(t));
    }
    return json{{"source", ctx.source},
                {"app", ctx.app},
                {"candidates", o.matrix.alternatives},
                {"criteria", {"hop_count", "propagation", "processing", "execution", "waiting"}},
                {"costs", std::move(costs)},
                {"thresholds",
                 {{"q", o.thresholds.indifference}, {"p", o.thresholds.preference}, {"v", o.thresholds.veto}}},
                {"concordance", std::move(conc)},
                {"credibility", std::move(cred)},
                {"tiers", std::move(tiers)},
                {"chosen", o.chosen}};
}

struct PolicyStats {
    std::uint64_t decisions = 0;         ///< selections made
    std::uint64_t contested = 0;         ///< selections with more than one candidate
    std::uint64_t ties = 0;              ///< ELECTRE top tier held more than one candidate
};

/// One configured selection policy with whatever state it carries across
/// decisions of a single run.
class Policy {
public:
    explicit Policy(PolicyKind kind, std::uint64_t seed = 0, electre::Options options = {}, bool drr_per_app = true)
        : kind_(kind), rng_(seed), drr_(drr_per_app), options_(std::move(options))
    {
    }

    PolicyKind kind() const noexcept { return kind_; }
    const PolicyStats& stats() const noexcept { return stats_; }

    /// Write one JSON line per ELECTRE decision to `out` (null disables).
    void dump_decisions_to(std::ostream* out) noexcept { dump_ = out; }

    NodeId operator()(const SelectionContext& ctx)
    {
        ++stats_.decisions;
        if (ctx.candidates.size() > 1) ++stats_.contested;
        switch (kind_) {
        case PolicyKind::random: return select_random(ctx, rng_);
        case PolicyKind::drr: return select_drr(ctx, drr_);
        case PolicyKind::nearest: return select_nearest(ctx);
        case PolicyKind::fastest: return select_fastest(ctx);
        case PolicyKind::electre: {
            const auto outcome = select_electre_outcome(ctx, options_);
            if (outcome.tie()) ++stats_.ties;
            if (dump_) *dump_ << decision_record(ctx, outcome).dump() << '\n';
            return outcome.chosen;
        }
        }
        throw std::logic_error("unhandled policy");
    }

private:
    PolicyKind kind_;
    Rng rng_;
    DrrCounters drr_;
    electre::Options options_;
    PolicyStats stats_;
    std::ostream* dump_ = nullptr;
};

} // namespace fogsim
