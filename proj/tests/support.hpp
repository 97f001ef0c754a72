#pragma once

// Test-side generators and brute-force oracles, written independently of
// the library algorithms they check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fogsim/topology.hpp"

namespace testing_support {

using fogsim::NodeId;
using fogsim::Topology;

/// Random connected graph on `n` nodes: a random spanning tree plus extra
/// edges with probability `density`. Propagation delays are small integers
/// so that equal-cost ties actually happen.
inline Topology random_connected_graph(std::mt19937_64& rng, int n, double density = 0.3, int max_pr = 3)
{
    Topology t;
    std::uniform_real_distribution<double> ipt(1, 1000);
    for (int i = 0; i < n; ++i) t.add_node(fogsim::NodeKind::fog, ipt(rng));
    std::uniform_int_distribution<int> pr(0, max_pr);
    std::uniform_int_distribution<int> bw(1, 1000);
    for (int v = 1; v < n; ++v) {
        std::uniform_int_distribution<int> parent(0, v - 1);
        t.add_link(parent(rng), v, bw(rng), pr(rng));
    }
    std::bernoulli_distribution extra(density);
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            if (!t.find_link(a, b) && extra(rng)) t.add_link(a, b, bw(rng), pr(rng));
        }
    }
    return t;
}

/// Every simple path src -> dst as node sequences.
inline std::vector<std::vector<NodeId>> all_simple_paths(const Topology& t, NodeId src, NodeId dst)
{
    std::vector<std::vector<NodeId>> out;
    std::vector<NodeId> cur{src};
    std::vector<char> used(t.node_count(), 0);
    used[static_cast<std::size_t>(src)] = 1;
    std::function<void(NodeId)> dfs = [&](NodeId u) {
        if (u == dst) {
            out.push_back(cur);
            return;
        }
        for (const auto& adj : t.neighbors(u)) {
            if (used[static_cast<std::size_t>(adj.node)]) continue;
            used[static_cast<std::size_t>(adj.node)] = 1;
            cur.push_back(adj.node);
            dfs(adj.node);
            cur.pop_back();
            used[static_cast<std::size_t>(adj.node)] = 0;
        }
    };
    dfs(src);
    return out;
}

inline double sequence_propagation(const Topology& t, const std::vector<NodeId>& nodes)
{
    double pr = 0;
    for (std::size_t i = 1; i < nodes.size(); ++i) pr += t.find_link(nodes[i - 1], nodes[i])->pr;
    return pr;
}

/// The route the routing rule should pick, found by enumeration: fewest
/// hops, then least propagation (1e-9 tolerance), then smallest node sequence.
inline std::vector<NodeId> brute_force_route(const Topology& t, NodeId src, NodeId dst)
{
    if (src == dst) return {src};
    auto paths = all_simple_paths(t, src, dst);
    std::sort(paths.begin(), paths.end(), [&](const auto& x, const auto& y) {
        if (x.size() != y.size()) return x.size() < y.size();
        const double px = sequence_propagation(t, x);
        const double py = sequence_propagation(t, y);
        if (std::fabs(px - py) > 1e-9) return px < py;
        return x < y;
    });
    return paths.front();
}

/// Betweenness by enumeration of the brute-force routes.
inline std::vector<std::int64_t> brute_force_betweenness(const Topology& t)
{
    std::vector<std::int64_t> score(t.node_count(), 0);
    const auto n = static_cast<NodeId>(t.node_count());
    for (NodeId s = 0; s < n; ++s) {
        for (NodeId d = s + 1; d < n; ++d) {
            const auto route = brute_force_route(t, s, d);
            for (std::size_t i = 1; i + 1 < route.size(); ++i) ++score[static_cast<std::size_t>(route[i])];
        }
    }
    return score;
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("fogsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testing_support
