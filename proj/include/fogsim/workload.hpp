#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fogsim/rng.hpp"
#include "fogsim/topology.hpp"

namespace fogsim {

enum class ModuleKind { source, compute, sink };

inline std::string_view to_string(ModuleKind kind)
{
    switch (kind) {
    case ModuleKind::source: return "source";
    case ModuleKind::compute: return "compute";
    case ModuleKind::sink: return "sink";
    }
    return "?";
}

inline ModuleKind parse_module_kind(std::string_view s)
{
    if (s == "source") return ModuleKind::source;
    if (s == "compute") return ModuleKind::compute;
    if (s == "sink") return ModuleKind::sink;
    throw std::invalid_argument("unknown module kind: " + std::string(s));
}

struct AppModule {
    std::string name;
    ModuleKind kind = ModuleKind::compute;
    double ram = 1.0;

    friend bool operator==(const AppModule&, const AppModule&) = default;
};

/// A dependency between two modules. `trigger_fraction` is the probability
/// that finishing work on an inbound message of `from_module` emits this one.
struct MessageSpec {
    std::string name;
    std::string from_module;
    std::string to_module;
    double instructions = 0;
    double bytes = 0;
    double trigger_fraction = 1.0;

    friend bool operator==(const MessageSpec&, const MessageSpec&) = default;
};

/// Ordered chain of message names, e.g. Sensor -> Fog -> Cloud.
struct Loop {
    std::string name;
    std::vector<std::string> messages;

    friend bool operator==(const Loop&, const Loop&) = default;
};

class Application {
public:
    std::string name;
    std::vector<AppModule> modules;
    std::vector<MessageSpec> messages;
    std::vector<Loop> loops;

    friend bool operator==(const Application&, const Application&) = default;

    std::size_t module_index(std::string_view module) const
    {
        for (std::size_t i = 0; i < modules.size(); ++i) {
            if (modules[i].name == module) return i;
        }
        throw std::out_of_range("application " + name + " has no module " + std::string(module));
    }

    std::size_t message_index(std::string_view message) const
    {
        for (std::size_t i = 0; i < messages.size(); ++i) {
            if (messages[i].name == message) return i;
        }
        throw std::out_of_range("application " + name + " has no message " + std::string(message));
    }

    const AppModule& module(std::string_view m) const { return modules[module_index(m)]; }
    const MessageSpec& message(std::string_view m) const { return messages[message_index(m)]; }

    /// Indices of messages emitted by `module`, in declaration order.
    std::vector<std::size_t> outbound(std::string_view module) const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < messages.size(); ++i) {
            if (messages[i].from_module == module) out.push_back(i);
        }
        return out;
    }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const
    {
        auto fail = [this](const std::string& what) { throw std::invalid_argument("application " + name + ": " + what); };
        for (std::size_t i = 0; i < modules.size(); ++i) {
            for (std::size_t j = i + 1; j < modules.size(); ++j) {
                if (modules[i].name == modules[j].name) fail("duplicate module " + modules[i].name);
            }
        }
        for (std::size_t i = 0; i < messages.size(); ++i) {
            const auto& m = messages[i];
            for (std::size_t j = i + 1; j < messages.size(); ++j) {
                if (m.name == messages[j].name) fail("duplicate message " + m.name);
            }
            const auto fi = find_module(m.from_module);
            const auto ti = find_module(m.to_module);
            if (fi == npos) fail("message " + m.name + " from unknown module " + m.from_module);
            if (ti == npos) fail("message " + m.name + " to unknown module " + m.to_module);
            if (modules[fi].kind == ModuleKind::sink) fail("sink module " + m.from_module + " emits " + m.name);
            if (modules[ti].kind == ModuleKind::source) fail("source module " + m.to_module + " consumes " + m.name);
            if (!(m.bytes > 0)) fail("message " + m.name + " needs positive bytes");
            if (modules[ti].kind == ModuleKind::compute && !(m.instructions > 0)) {
                fail("message " + m.name + " needs positive instructions");
            }
            if (!(m.trigger_fraction >= 0.0 && m.trigger_fraction <= 1.0)) {
                fail("message " + m.name + " trigger fraction outside [0,1]");
            }
        }
        if (!acyclic()) fail("module graph has a cycle");
        for (const auto& loop : loops) {
            if (loop.messages.empty()) fail("loop " + loop.name + " is empty");
            for (std::size_t k = 0; k < loop.messages.size(); ++k) {
                if (find_message(loop.messages[k]) == npos) fail("loop " + loop.name + " names unknown message " + loop.messages[k]);
                if (k > 0 && message(loop.messages[k - 1]).to_module != message(loop.messages[k]).from_module) {
                    fail("loop " + loop.name + " is not a connected chain");
                }
            }
        }
    }

    /// Kahn's algorithm over the module graph.
    bool acyclic() const
    {
        std::vector<int> indegree(modules.size(), 0);
        for (const auto& m : messages) {
            const auto t = find_module(m.to_module);
            if (t != npos) ++indegree[t];
        }
        std::vector<std::size_t> ready;
        for (std::size_t i = 0; i < modules.size(); ++i) {
            if (indegree[i] == 0) ready.push_back(i);
        }
        std::size_t visited = 0;
        while (!ready.empty()) {
            const auto u = ready.back();
            ready.pop_back();
            ++visited;
            for (const auto& m : messages) {
                if (m.from_module != modules[u].name) continue;
                const auto t = find_module(m.to_module);
                if (t != npos && --indegree[t] == 0) ready.push_back(t);
            }
        }
        return visited == modules.size();
    }

private:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t find_module(std::string_view n) const
    {
        for (std::size_t i = 0; i < modules.size(); ++i) {
            if (modules[i].name == n) return i;
        }
        return npos;
    }

    std::size_t find_message(std::string_view n) const
    {
        for (std::size_t i = 0; i < messages.size(); ++i) {
            if (messages[i].name == n) return i;
        }
        return npos;
    }
};

/// Replica sets keyed by (application name, module name). Node lists are
/// kept sorted ascending.
class Placement {
public:
    void place(const std::string& app, const std::string& module, NodeId node)
    {
        auto& v = replicas_[{app, module}];
        auto it = std::lower_bound(v.begin(), v.end(), node);
        if (it == v.end() || *it != node) v.insert(it, node);
    }

    const std::vector<NodeId>& hosts(const std::string& app, const std::string& module) const
    {
        auto it = replicas_.find({app, module});
        if (it == replicas_.end()) {
            throw std::out_of_range("no replicas placed for " + app + "/" + module);
        }
        return it->second;
    }

    bool hosts_module(const std::string& app, const std::string& module, NodeId node) const
    {
        auto it = replicas_.find({app, module});
        return it != replicas_.end() && std::binary_search(it->second.begin(), it->second.end(), node);
    }

    const std::map<std::pair<std::string, std::string>, std::vector<NodeId>>& entries() const noexcept
    {
        return replicas_;
    }

    /// Referential integrity against a topology and application set.
    void validate(const Topology& topo, const std::vector<Application>& apps) const
    {
        for (const auto& [key, nodes] : replicas_) {
            const auto& [app_name, module_name] = key;
            auto app = std::find_if(apps.begin(), apps.end(), [&](const Application& a) { return a.name == app_name; });
            if (app == apps.end()) throw std::invalid_argument("placement names unknown application " + app_name);
            const auto& module = app->module(module_name);
            if (nodes.empty()) throw std::invalid_argument("empty replica set for " + app_name + "/" + module_name);
            for (auto n : nodes) {
                if (!topo.has_node(n)) {
                    throw std::invalid_argument("placement of " + app_name + "/" + module_name + " on unknown node " +
                                                std::to_string(n));
                }
                const bool iot = topo.node(n).kind == NodeKind::iot;
                if ((module.kind == ModuleKind::compute) == iot) {
                    throw std::invalid_argument("module " + app_name + "/" + module_name + " placed on a node of kind " +
                                                std::string(to_string(topo.node(n).kind)));
                }
            }
        }
        for (const auto& app : apps) {
            for (const auto& m : app.modules) {
                if (m.kind == ModuleKind::compute && !replicas_.contains({app.name, m.name})) {
                    throw std::invalid_argument("compute module " + app.name + "/" + m.name + " has no replica");
                }
            }
        }
    }

    friend bool operator==(const Placement&, const Placement&) = default;

private:
    std::map<std::pair<std::string, std::string>, std::vector<NodeId>> replicas_;
};

struct ArrivalProcess {
    double scale = 100.0;   ///< mean inter-arrival time
    double minimum = 1.0;   ///< floor applied after rounding
};

/// Exponential draw with mean `scale`, rounded half-up to an integer and
/// floored at `minimum` (a zero gap would create simultaneous tasks).
inline double sample_inter_arrival(const ArrivalProcess& process, Rng& rng)
{
    std::exponential_distribution<double> dist(1.0 / process.scale);
    const double rounded = std::floor(dist(rng) + 0.5);
    return std::max(process.minimum, rounded);
}

// --- Application suites -----------------------------------------------------

struct AppTier {
    double instructions;
    double bytes;
};

inline std::vector<AppTier> default_tiers() { return {{100, 10}, {1000, 100}, {10000, 1000}}; }

struct TwoLoopFractions {
    double fog_down = 1.0;
    double fog_up = 0.1;
    double cloud = 0.5;
};

struct Suite {
    std::vector<Application> apps;
    Placement placement;
};

namespace detail {

inline void place_standard(Suite& suite, const Topology& topo)
{
    for (const auto& app : suite.apps) {
        for (const auto& m : app.modules) {
            if (m.kind != ModuleKind::compute) {
                for (auto n : topo.nodes_of_kind(NodeKind::iot)) suite.placement.place(app.name, m.name, n);
            } else if (m.name == "Cloud") {
                for (auto n : topo.nodes_of_kind(NodeKind::cloud)) suite.placement.place(app.name, m.name, n);
            } else {
                for (auto n : topo.nodes_of_kind(NodeKind::fog)) suite.placement.place(app.name, m.name, n);
            }
        }
    }
}

} // namespace detail

/// Sensor -> Fog -> Cloud -> Actuator, one application per tier. Every IoT
/// device hosts Sensor/Actuator, every Fog node a Fog replica, the Cloud the
/// Cloud module.
inline Suite build_single_loop_suite(const Topology& topo, const std::vector<AppTier>& tiers = default_tiers())
{
    Suite suite;
    for (std::size_t k = 0; k < tiers.size(); ++k) {
        const auto [instr, bytes] = tiers[k];
        Application app;
        app.name = "App" + std::to_string(k + 1);
        app.modules = {{"Sensor", ModuleKind::source, 1},
                       {"Fog", ModuleKind::compute, 1},
                       {"Cloud", ModuleKind::compute, 1},
                       {"Actuator", ModuleKind::sink, 1}};
        app.messages = {{"Sensor", "Sensor", "Fog", instr, bytes, 1.0},
                        {"Fog", "Fog", "Cloud", instr, bytes, 1.0},
                        {"Cloud", "Cloud", "Actuator", instr, bytes, 1.0}};
        app.loops = {{"Loop", {"Sensor", "Fog", "Cloud"}}};
        app.validate();
        suite.apps.push_back(std::move(app));
    }
    detail::place_standard(suite, topo);
    suite.placement.validate(topo, suite.apps);
    return suite;
}

/// Immediate Fog feedback (Loop1) plus a thinned Fog -> Cloud -> device
/// feedback path (Loop2).
inline Suite build_two_loop_suite(const Topology& topo, const std::vector<AppTier>& tiers = default_tiers(),
                                  const TwoLoopFractions& fractions = {})
{
    Suite suite;
    for (std::size_t k = 0; k < tiers.size(); ++k) {
        const auto [instr, bytes] = tiers[k];
        Application app;
        app.name = "App" + std::to_string(k + 1);
        app.modules = {{"Sensor", ModuleKind::source, 1},
                       {"Fog", ModuleKind::compute, 1},
                       {"Cloud", ModuleKind::compute, 1},
                       {"Actuator", ModuleKind::sink, 1}};
        app.messages = {{"Sensor", "Sensor", "Fog", instr, bytes, 1.0},
                        {"FogDown", "Fog", "Actuator", instr, bytes, fractions.fog_down},
                        {"FogUp", "Fog", "Cloud", instr, bytes, fractions.fog_up},
                        {"Cloud", "Cloud", "Actuator", instr, bytes, fractions.cloud}};
        app.loops = {{"Loop1", {"Sensor", "FogDown"}}, {"Loop2", {"Sensor", "FogUp", "Cloud"}}};
        app.validate();
        suite.apps.push_back(std::move(app));
    }
    detail::place_standard(suite, topo);
    suite.placement.validate(topo, suite.apps);
    return suite;
}

} // namespace fogsim
