#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fogsim/topology.hpp"
#include "fogsim/workload.hpp"

// JSON interchange for topologies and application suites.
namespace fogsim {

using nlohmann::json;

inline json to_json(const Topology& topo)
{
    json nodes = json::array();
    for (const auto& n : topo.nodes()) {
        nodes.push_back({{"id", n.id}, {"kind", to_string(n.kind)}, {"ipt", n.ipt}, {"ram", n.ram}});
    }
    json links = json::array();
    for (const auto& l : topo.links()) {
        links.push_back({{"a", l.a}, {"b", l.b}, {"bw", l.bw}, {"pr", l.pr}});
    }
    return {{"nodes", std::move(nodes)}, {"links", std::move(links)}};
}

/// Node ids must be 0..n-1 in order; links get ids in file order.
inline Topology topology_from_json(const json& j)
{
    Topology topo;
    const auto& nodes = j.at("nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        if (n.at("id").get<NodeId>() != static_cast<NodeId>(i)) {
            throw std::invalid_argument("topology node ids must be dense and ordered; got " + n.at("id").dump() +
                                        " at position " + std::to_string(i));
        }
        topo.add_node(parse_node_kind(n.at("kind").get<std::string>()), n.at("ipt").get<double>(),
                      n.value("ram", default_ram));
    }
    for (const auto& l : j.at("links")) {
        topo.add_link(l.at("a").get<NodeId>(), l.at("b").get<NodeId>(), l.at("bw").get<double>(),
                      l.at("pr").get<double>());
    }
    if (!topo.is_connected()) throw std::invalid_argument("topology is not connected");
    return topo;
}

inline json to_json(const Application& app)
{
    json modules = json::array();
    for (const auto& m : app.modules) modules.push_back({{"name", m.name}, {"kind", to_string(m.kind)}, {"ram", m.ram}});
    json messages = json::array();
    for (const auto& m : app.messages) {
        messages.push_back({{"name", m.name}, {"from", m.from_module}, {"to", m.to_module},
                            {"instructions", m.instructions}, {"bytes", m.bytes},
                            {"trigger_fraction", m.trigger_fraction}});
    }
    json loops = json::array();
    for (const auto& l : app.loops) loops.push_back({{"name", l.name}, {"messages", l.messages}});
    return {{"name", app.name}, {"modules", modules}, {"messages", messages}, {"loops", loops}};
}

inline Application application_from_json(const json& j)
{
    Application app;
    app.name = j.at("name").get<std::string>();
    for (const auto& m : j.at("modules")) {
        app.modules.push_back({m.at("name").get<std::string>(), parse_module_kind(m.at("kind").get<std::string>()),
                               m.value("ram", 1.0)});
    }
    for (const auto& m : j.at("messages")) {
        app.messages.push_back({m.at("name").get<std::string>(), m.at("from").get<std::string>(),
                                m.at("to").get<std::string>(), m.at("instructions").get<double>(),
                                m.at("bytes").get<double>(), m.value("trigger_fraction", 1.0)});
    }
    for (const auto& l : j.value("loops", json::array())) {
        app.loops.push_back({l.at("name").get<std::string>(), l.at("messages").get<std::vector<std::string>>()});
    }
    app.validate();
    return app;
}

inline json to_json(const Suite& suite)
{
    json apps = json::array();
    for (const auto& a : suite.apps) apps.push_back(to_json(a));
    json placement = json::array();
    for (const auto& [key, nodes] : suite.placement.entries()) {
        placement.push_back({{"app", key.first}, {"module", key.second}, {"nodes", nodes}});
    }
    return {{"applications", apps}, {"placement", placement}};
}

inline Suite suite_from_json(const json& j)
{
    Suite suite;
    for (const auto& a : j.at("applications")) suite.apps.push_back(application_from_json(a));
    for (const auto& p : j.at("placement")) {
        for (auto n : p.at("nodes").get<std::vector<NodeId>>()) {
            suite.placement.place(p.at("app").get<std::string>(), p.at("module").get<std::string>(), n);
        }
    }
    return suite;
}

inline json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const json& j, const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace fogsim
