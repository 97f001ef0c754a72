#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fogsim/rng.hpp"

namespace fogsim {

using NodeId = int;
using LinkId = int;

enum class NodeKind { cloud, fog, iot };

inline std::string_view to_string(NodeKind kind)
{
    switch (kind) {
    case NodeKind::cloud: return "cloud";
    case NodeKind::fog: return "fog";
    case NodeKind::iot: return "iot";
    }
    return "?";
}

inline NodeKind parse_node_kind(std::string_view s)
{
    if (s == "cloud") return NodeKind::cloud;
    if (s == "fog") return NodeKind::fog;
    if (s == "iot") return NodeKind::iot;
    throw std::invalid_argument("unknown node kind: " + std::string(s));
}

inline constexpr double default_ram = 4000.0;

struct Node {
    NodeId id = 0;
    NodeKind kind = NodeKind::fog;
    double ipt = 1.0;  ///< instructions per time-step
    double ram = default_ram;

    friend bool operator==(const Node&, const Node&) = default;
};

/// Bidirectional link. Each direction is scheduled as its own queue by the engine.
struct Link {
    LinkId id = 0;
    NodeId a = 0;
    NodeId b = 0;
    double bw = 1.0;  ///< bytes per time-step
    double pr = 0.0;  ///< propagation delay in time-steps

    NodeId other(NodeId n) const { return n == a ? b : a; }

    friend bool operator==(const Link&, const Link&) = default;
};

/// Node ids are dense: the node with id k is stored at index k. Same for links.
class Topology {
public:
    struct Adjacent {
        NodeId node;
        LinkId link;
    };

    NodeId add_node(NodeKind kind, double ipt, double ram = default_ram)
    {
        if (!(ipt > 0.0)) {
            throw std::invalid_argument("node ipt must be positive");
        }
        const auto id = static_cast<NodeId>(nodes_.size());
        nodes_.push_back(Node{id, kind, ipt, ram});
        adjacency_.emplace_back();
        return id;
    }

    LinkId add_link(NodeId a, NodeId b, double bw, double pr)
    {
        check_node(a);
        check_node(b);
        if (a == b) {
            throw std::invalid_argument("self-loop link on node " + std::to_string(a));
        }
        if (!(bw > 0.0)) {
            throw std::invalid_argument("link bandwidth must be positive");
        }
        if (!(pr >= 0.0)) {
            throw std::invalid_argument("link propagation delay must be non-negative");
        }
        if (find_link(a, b)) {
            throw std::invalid_argument("duplicate link " + std::to_string(a) + "-" + std::to_string(b));
        }
        const auto id = static_cast<LinkId>(links_.size());
        links_.push_back(Link{id, a, b, bw, pr});
        insert_sorted(adjacency_[a], Adjacent{b, id});
        insert_sorted(adjacency_[b], Adjacent{a, id});
        return id;
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Link>& links() const noexcept { return links_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t link_count() const noexcept { return links_.size(); }

    const Node& node(NodeId id) const
    {
        check_node(id);
        return nodes_[static_cast<std::size_t>(id)];
    }

    const Link& link(LinkId id) const
    {
        if (id < 0 || static_cast<std::size_t>(id) >= links_.size()) {
            throw std::out_of_range("unknown link id " + std::to_string(id));
        }
        return links_[static_cast<std::size_t>(id)];
    }

    bool has_node(NodeId id) const noexcept
    {
        return id >= 0 && static_cast<std::size_t>(id) < nodes_.size();
    }

    /// Neighbours sorted by node id.
    const std::vector<Adjacent>& neighbors(NodeId id) const
    {
        check_node(id);
        return adjacency_[static_cast<std::size_t>(id)];
    }

    const Link* find_link(NodeId a, NodeId b) const
    {
        if (!has_node(a) || !has_node(b)) return nullptr;
        for (const auto& adj : adjacency_[static_cast<std::size_t>(a)]) {
            if (adj.node == b) return &links_[static_cast<std::size_t>(adj.link)];
        }
        return nullptr;
    }

    std::vector<NodeId> nodes_of_kind(NodeKind kind) const
    {
        std::vector<NodeId> out;
        for (const auto& n : nodes_) {
            if (n.kind == kind) out.push_back(n.id);
        }
        return out;
    }

    bool is_connected() const
    {
        if (nodes_.empty()) return true;
        std::vector<char> seen(nodes_.size(), 0);
        std::vector<NodeId> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (const auto& adj : adjacency_[static_cast<std::size_t>(u)]) {
                if (!seen[static_cast<std::size_t>(adj.node)]) {
                    seen[static_cast<std::size_t>(adj.node)] = 1;
                    ++count;
                    stack.push_back(adj.node);
                }
            }
        }
        return count == nodes_.size();
    }

    friend bool operator==(const Topology& x, const Topology& y)
    {
        return x.nodes_ == y.nodes_ && x.links_ == y.links_;
    }

private:
    void check_node(NodeId id) const
    {
        if (!has_node(id)) {
            throw std::out_of_range("unknown node id " + std::to_string(id));
        }
    }

    static void insert_sorted(std::vector<Adjacent>& v, Adjacent a)
    {
        auto it = std::lower_bound(v.begin(), v.end(), a,
                                   [](const Adjacent& x, const Adjacent& y) { return x.node < y.node; });
        v.insert(it, a);
    }

    std::vector<Node> nodes_;
    std::vector<Link> links_;
    std::vector<std::vector<Adjacent>> adjacency_;
};

/// Route between two nodes. `links` is the canonical representation; `nodes`
/// holds the visited node sequence (links.size() + 1 entries, or empty).
struct Path {
    std::vector<LinkId> links;
    std::vector<NodeId> nodes;

    friend bool operator==(const Path&, const Path&) = default;
};

inline std::size_t hop_count(const Path& path) noexcept { return path.links.size(); }

inline double path_propagation_delay(const Topology& topo, const Path& path)
{
    double total = 0.0;
    for (auto l : path.links) total += topo.link(l).pr;
    return total;
}

namespace detail {

inline bool same_delay(double x, double y) noexcept
{
    return std::fabs(x - y) <= 1e-9 * std::max({1.0, std::fabs(x), std::fabs(y)});
}

struct Distance {
    std::size_t hops = std::numeric_limits<std::size_t>::max();
    double pr = std::numeric_limits<double>::infinity();
};

// Lexicographic (hops, propagation) distances from every node to `dst`.
inline std::vector<Distance> distances_to(const Topology& topo, NodeId dst)
{
    std::vector<Distance> dist(topo.node_count());
    using Item = std::tuple<std::size_t, double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[static_cast<std::size_t>(dst)] = {0, 0.0};
    heap.emplace(0, 0.0, dst);
    while (!heap.empty()) {
        auto [h, p, u] = heap.top();
        heap.pop();
        const auto& du = dist[static_cast<std::size_t>(u)];
        if (h != du.hops || p != du.pr) continue;
        for (const auto& adj : topo.neighbors(u)) {
            const double np = p + topo.link(adj.link).pr;
            auto& dv = dist[static_cast<std::size_t>(adj.node)];
            if (h + 1 < dv.hops || (h + 1 == dv.hops && np < dv.pr)) {
                dv = {h + 1, np};
                heap.emplace(h + 1, np, adj.node);
            }
        }
    }
    return dist;
}

// Walks from src toward the destination the distances were computed for,
// always stepping to the smallest-id neighbour that stays on an optimal route.
inline Path walk(const Topology& topo, const std::vector<Distance>& dist, NodeId src)
{
    Path path;
    const auto& ds = dist[static_cast<std::size_t>(src)];
    if (ds.hops == std::numeric_limits<std::size_t>::max()) {
        throw std::runtime_error("topology is not connected: node " + std::to_string(src) + " unreachable");
    }
    if (ds.hops == 0) return path;
    path.nodes.push_back(src);
    NodeId u = src;
    while (dist[static_cast<std::size_t>(u)].hops != 0) {
        const auto& du = dist[static_cast<std::size_t>(u)];
        bool advanced = false;
        for (const auto& adj : topo.neighbors(u)) {
            const auto& dw = dist[static_cast<std::size_t>(adj.node)];
            if (dw.hops + 1 == du.hops && same_delay(dw.pr + topo.link(adj.link).pr, du.pr)) {
                path.links.push_back(adj.link);
                path.nodes.push_back(adj.node);
                u = adj.node;
                advanced = true;
                break;
            }
        }
        if (!advanced) throw std::logic_error("shortest path walk lost its way");
    }
    return path;
}

} // namespace detail

/// Minimum hop count, then minimum total propagation delay, then the
/// lexicographically smallest node-id sequence.
inline Path shortest_path(const Topology& topo, NodeId src, NodeId dst)
{
    if (!topo.has_node(src)) throw std::out_of_range("unknown node id " + std::to_string(src));
    if (!topo.has_node(dst)) throw std::out_of_range("unknown node id " + std::to_string(dst));
    if (src == dst) return {};
    return detail::walk(topo, detail::distances_to(topo, dst), src);
}

/// All-pairs static routing table, computed once per topology.
class Routing {
public:
    Routing() = default;

    explicit Routing(const Topology& topo) : n_(topo.node_count()), paths_(n_ * n_), propagation_(n_ * n_, 0.0)
    {
        for (NodeId dst = 0; static_cast<std::size_t>(dst) < n_; ++dst) {
            const auto dist = detail::distances_to(topo, dst);
            for (NodeId src = 0; static_cast<std::size_t>(src) < n_; ++src) {
                if (src == dst) continue;
                auto& p = paths_[index(src, dst)];
                p = detail::walk(topo, dist, src);
                propagation_[index(src, dst)] = path_propagation_delay(topo, p);
            }
        }
    }

    const Path& path(NodeId src, NodeId dst) const { return paths_[checked(src, dst)]; }
    std::size_t hops(NodeId src, NodeId dst) const { return paths_[checked(src, dst)].links.size(); }
    double propagation(NodeId src, NodeId dst) const { return propagation_[checked(src, dst)]; }
    std::size_t node_count() const noexcept { return n_; }

private:
    std::size_t index(NodeId s, NodeId d) const noexcept
    {
        return static_cast<std::size_t>(s) * n_ + static_cast<std::size_t>(d);
    }

    std::size_t checked(NodeId s, NodeId d) const
    {
        if (s < 0 || d < 0 || static_cast<std::size_t>(s) >= n_ || static_cast<std::size_t>(d) >= n_) {
            throw std::out_of_range("routing query for unknown node");
        }
        return index(s, d);
    }

    std::size_t n_ = 0;
    std::vector<Path> paths_;
    std::vector<double> propagation_;
};

/// Unnormalised betweenness: for every unordered pair {s, t} (s < t), the
/// node interior to the chosen s->t shortest path gets one count.
inline std::vector<std::int64_t> betweenness_centrality(const Topology& topo)
{
    if (!topo.is_connected()) throw std::invalid_argument("betweenness requires a connected topology");
    const Routing routing(topo);
    std::vector<std::int64_t> score(topo.node_count(), 0);
    const auto n = static_cast<NodeId>(topo.node_count());
    for (NodeId s = 0; s < n; ++s) {
        for (NodeId t = s + 1; t < n; ++t) {
            const auto& nodes = routing.path(s, t).nodes;
            for (std::size_t i = 1; i + 1 < nodes.size(); ++i) {
                ++score[static_cast<std::size_t>(nodes[i])];
            }
        }
    }
    return score;
}

// --- Scenario builders ------------------------------------------------------

/// Node ids of the generic four-tier scenario.
namespace generic {
inline constexpr NodeId cloud = 0;
inline constexpr NodeId fog1 = 1;
inline constexpr NodeId fog2 = 2;
inline constexpr NodeId fog3 = 3;
inline constexpr NodeId first_iot = 4;
inline constexpr int iot_on_fog1 = 2;
inline constexpr int iot_on_fog2 = 20;
} // namespace generic

/// Cloud, three unbalanced Fog nodes and 22 IoT devices. IoT 4 and 5 hang off
/// Fog1; IoT 6..25 hang off Fog2; Fog3 has no devices.
inline Topology build_generic_topology()
{
    Topology t;
    t.add_node(NodeKind::cloud, 1e6);
    t.add_node(NodeKind::fog, 1e4);
    t.add_node(NodeKind::fog, 1e3);
    t.add_node(NodeKind::fog, 1e5);

    t.add_link(generic::fog1, generic::fog3, 1000, 2);
    t.add_link(generic::fog2, generic::fog3, 1000, 2);
    t.add_link(generic::fog1, generic::cloud, 100000, 10);
    t.add_link(generic::fog2, generic::cloud, 100000, 10);
    t.add_link(generic::fog3, generic::cloud, 1000, 20);

    for (int i = 0; i < generic::iot_on_fog1 + generic::iot_on_fog2; ++i) {
        const NodeId dev = t.add_node(NodeKind::iot, 10);
        t.add_link(dev, i < generic::iot_on_fog1 ? generic::fog1 : generic::fog2, 1000, 1);
    }
    return t;
}

struct LinkRange {
    double bw_lo, bw_hi, pr_lo, pr_hi;
};

struct AsParameters {
    std::size_t target_nodes = 32;  ///< pre-Cloud graph size
    std::size_t attach = 2;         ///< edges added per new node
    double iot_ipt = 10;
    double fog_ipt_lo = 1e3;
    double fog_ipt_hi = 1e5;
    double cloud_ipt = 1e6;
    LinkRange iot_fog{1e2, 1e3, 1, 2};
    LinkRange fog_fog{1e3, 1e4, 2, 4};
    LinkRange fog_cloud{1e3, 1e4, 10, 20};
    int max_attempts = 64;
};

struct AsGeneration {
    Topology topology;
    std::vector<std::int64_t> centrality;  ///< pre-Cloud betweenness, indexed by node id
    int attempts = 0;
};

/// `count` evenly spaced integers over [lo, hi], truncated toward zero.
inline std::vector<double> evenly_spaced_integers(double lo, double hi, std::size_t count)
{
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) return {std::floor(lo)};
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(i + 1 == count ? std::floor(hi) : std::floor(lo + step * static_cast<double>(i)));
    }
    return out;
}

namespace detail {

// Preferential-attachment growth seeded with a clique of attach+1 nodes.
inline std::vector<std::pair<NodeId, NodeId>> preferential_attachment(std::size_t n, std::size_t m, Rng& rng)
{
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::vector<NodeId> weighted;  // each node repeated once per incident edge
    const std::size_t seed_nodes = std::min(n, m + 1);
    for (std::size_t i = 0; i < seed_nodes; ++i) {
        for (std::size_t j = i + 1; j < seed_nodes; ++j) {
            edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
            weighted.push_back(static_cast<NodeId>(i));
            weighted.push_back(static_cast<NodeId>(j));
        }
    }
    for (std::size_t v = seed_nodes; v < n; ++v) {
        std::vector<NodeId> chosen;
        while (chosen.size() < m) {
            std::uniform_int_distribution<std::size_t> pick(0, weighted.size() - 1);
            const NodeId c = weighted[pick(rng)];
            if (std::find(chosen.begin(), chosen.end(), c) == chosen.end()) chosen.push_back(c);
        }
        std::sort(chosen.begin(), chosen.end());
        for (auto c : chosen) {
            edges.emplace_back(c, static_cast<NodeId>(v));
            weighted.push_back(c);
            weighted.push_back(static_cast<NodeId>(v));
        }
    }
    return edges;
}

} // namespace detail

/// Random AS-like Fog topology: zero-betweenness nodes become IoT devices,
/// the rest become Fog nodes with IPT inversely ordered to centrality, and a
/// Cloud attaches to the two most central Fog nodes.
inline AsGeneration generate_as_topology_detailed(std::uint64_t seed, const AsParameters& params = {})
{
    if (params.target_nodes < 10) {
        throw std::invalid_argument("AS topology needs at least 10 nodes");
    }
    for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
        Rng rng(derive_seed(seed, {stream::topology, static_cast<std::uint64_t>(attempt)}));
        const auto edges = detail::preferential_attachment(params.target_nodes, params.attach, rng);

        Topology skeleton;
        for (std::size_t i = 0; i < params.target_nodes; ++i) skeleton.add_node(NodeKind::fog, 1);
        for (auto [a, b] : edges) skeleton.add_link(a, b, 1, 0);
        auto centrality = betweenness_centrality(skeleton);

        std::vector<NodeId> fogs;
        std::size_t iot_count = 0;
        for (std::size_t i = 0; i < centrality.size(); ++i) {
            if (centrality[i] == 0) ++iot_count;
            else fogs.push_back(static_cast<NodeId>(i));
        }
        if (fogs.size() < 2 || iot_count < 1) continue;

        // Highest centrality first; ties by id ascending.
        std::stable_sort(fogs.begin(), fogs.end(), [&](NodeId x, NodeId y) {
            return centrality[static_cast<std::size_t>(x)] > centrality[static_cast<std::size_t>(y)];
        });
        const auto ipts = evenly_spaced_integers(params.fog_ipt_lo, params.fog_ipt_hi, fogs.size());
        std::vector<double> ipt(params.target_nodes, params.iot_ipt);
        for (std::size_t r = 0; r < fogs.size(); ++r) ipt[static_cast<std::size_t>(fogs[r])] = ipts[r];

        AsGeneration gen;
        gen.centrality = std::move(centrality);
        gen.attempts = attempt + 1;
        auto& topo = gen.topology;
        for (std::size_t i = 0; i < params.target_nodes; ++i) {
            topo.add_node(gen.centrality[i] == 0 ? NodeKind::iot : NodeKind::fog, ipt[i]);
        }
        const NodeId cloud = topo.add_node(NodeKind::cloud, params.cloud_ipt);

        auto draw = [&rng](const LinkRange& r) {
            std::uniform_real_distribution<double> bw(r.bw_lo, r.bw_hi);
            std::uniform_real_distribution<double> pr(r.pr_lo, r.pr_hi);
            const double b = bw(rng);
            return std::pair{b, pr(rng)};
        };
        for (auto [a, b] : edges) {
            const bool touches_iot = topo.node(a).kind == NodeKind::iot || topo.node(b).kind == NodeKind::iot;
            const auto [bw, pr] = draw(touches_iot ? params.iot_fog : params.fog_fog);
            topo.add_link(a, b, bw, pr);
        }
        for (std::size_t r = 0; r < 2; ++r) {
            const auto [bw, pr] = draw(params.fog_cloud);
            topo.add_link(fogs[r], cloud, bw, pr);
        }
        return gen;
    }
    throw std::runtime_error("AS topology generation failed after " + std::to_string(params.max_attempts) +
                             " attempts");
}

inline Topology generate_as_topology(std::uint64_t seed, std::size_t target_nodes = 32)
{
    AsParameters params;
    params.target_nodes = target_nodes;
    return generate_as_topology_detailed(seed, params).topology;
}

} // namespace fogsim
