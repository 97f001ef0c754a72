#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fogsim/records.hpp"

namespace fogsim {

// --- Per-message delays -----------------------------------------------------

/// Link waiting + transmission + propagation summed over the message's
/// links. Absent until the message reaches its destination.
inline std::optional<double> latency(const MetricsLog& log, const MessageRecord& m)
{
    if (!is_set(m.delivered)) return std::nullopt;
    if (m.hop_count == 0) return 0.0;
    double total = 0;
    for (const auto& h : log.hops_of(m)) total += h.arrive - h.queue_enter;
    return total;
}

struct DelayComponents {
    double latency = 0;
    double waiting = 0;
    double service = 0;
    double response = 0;
    double total_response = 0;
};

inline bool is_completed(const MessageRecord& m) noexcept { return m.state == MessageState::completed; }

/// Only defined for completed messages. Sink-bound messages have zero
/// waiting and service.
inline std::optional<DelayComponents> delay_components(const MetricsLog& log, const MessageRecord& m)
{
    if (!is_completed(m)) return std::nullopt;
    DelayComponents d;
    d.latency = *latency(log, m);
    if (m.served_at_node) {
        d.waiting = m.service_start - m.node_enter;
        d.service = m.service_end - m.service_start;
    }
    d.response = d.waiting + d.service;
    d.total_response = d.response + d.latency;
    return d;
}

/// A message counts as transmitted once it crossed at least one link and
/// reached its destination.
inline bool is_transmitted(const MessageRecord& m) noexcept { return m.hop_count > 0 && is_set(m.delivered); }

// --- Loops ------------------------------------------------------------------

inline double loop_execution_delay(std::span<const double> total_responses)
{
    double sum = 0;
    for (double t : total_responses) sum += t;
    return sum;
}

/// Transmitted bytes over the mean execution delay of completed instances.
/// Absent when no instance completed.
inline std::optional<double> loop_transfer_rate(double transmitted_bytes, std::span<const double> instance_delays)
{
    if (instance_delays.empty()) return std::nullopt;
    double sum = 0;
    for (double d : instance_delays) sum += d;
    const double mean = sum / static_cast<double>(instance_delays.size());
    if (!(mean > 0)) return std::nullopt;
    return transmitted_bytes / mean;
}

struct LoopInstance {
    std::uint16_t app = 0;
    std::uint16_t loop = 0;
    MessageId root = 0;
    MessageId last = 0;
    double execution_delay = 0;
};

/// Position of each message spec inside each loop: [app][loop][spec] -> index or -1.
inline std::vector<std::vector<std::vector<int>>> loop_positions(const std::vector<Application>& apps)
{
    std::vector<std::vector<std::vector<int>>> pos(apps.size());
    for (std::size_t a = 0; a < apps.size(); ++a) {
        for (const auto& loop : apps[a].loops) {
            std::vector<int> p(apps[a].messages.size(), -1);
            for (std::size_t k = 0; k < loop.messages.size(); ++k) {
                p[apps[a].message_index(loop.messages[k])] = static_cast<int>(k);
            }
            pos[a].push_back(std::move(p));
        }
    }
    return pos;
}

/// Every completed loop instance: a parent chain of completed messages whose
/// specs follow the loop definition. Chains cut short by the end of the run
/// are excluded.
inline std::vector<LoopInstance> loop_instances(const MetricsLog& log)
{
    const auto pos = loop_positions(log.apps);
    std::size_t max_loops = 0;
    for (const auto& a : log.apps) max_loops = std::max(max_loops, a.loops.size());
    std::vector<LoopInstance> out;
    if (max_loops == 0) return out;

    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> acc(log.messages.size() * max_loops, nan);
    for (const auto& m : log.messages) {
        const auto d = delay_components(log, m);
        if (!d) continue;
        const auto& loops = pos[m.app];
        for (std::size_t l = 0; l < loops.size(); ++l) {
            const int k = loops[l][m.spec];
            if (k < 0) continue;
            double sum = nan;
            if (k == 0) {
                sum = d->total_response;
            } else if (m.parent != no_message && loops[l][log.messages[m.parent].spec] == k - 1) {
                const double prev = acc[m.parent * max_loops + l];
                if (!std::isnan(prev)) sum = prev + d->total_response;
            }
            acc[m.id * max_loops + l] = sum;
            if (!std::isnan(sum) && static_cast<std::size_t>(k) + 1 == log.apps[m.app].loops[l].messages.size()) {
                out.push_back({m.app, static_cast<std::uint16_t>(l), m.root, m.id, sum});
            }
        }
    }
    return out;
}

// --- Utilisation ------------------------------------------------------------

struct Utilization {
    double busy_time = 0;
    double fraction = 0;
    std::uint64_t served = 0;
};

/// Busy time per (node, app, spec), clipped to [0, duration], plus the count
/// of completed services.
inline std::map<std::pair<NodeId, TypeKey>, Utilization> module_utilization(const MetricsLog& log)
{
    std::map<std::pair<NodeId, TypeKey>, Utilization> out;
    for (const auto& m : log.messages) {
        if (!m.served_at_node || !is_set(m.service_start)) continue;
        auto& u = out[{m.destination, {m.app, m.spec}}];
        const double end = is_set(m.service_end) ? m.service_end : log.duration;
        u.busy_time += std::max(0.0, std::min(end, log.duration) - m.service_start);
        if (is_set(m.service_end)) ++u.served;
    }
    for (auto& [key, u] : out) u.fraction = log.duration > 0 ? u.busy_time / log.duration : 0.0;
    return out;
}

// --- Summary ----------------------------------------------------------------

/// Streaming mean / population standard deviation.
struct Stat {
    std::uint64_t count = 0;
    double mean = 0;
    double m2 = 0;

    void add(double x) noexcept
    {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    double stddev() const noexcept { return count > 1 ? std::sqrt(m2 / static_cast<double>(count)) : 0.0; }
};

inline nlohmann::json to_json(const Stat& s)
{
    return {{"count", s.count}, {"mean", s.mean}, {"std", s.stddev()}};
}

struct TypeSummary {
    std::string app;
    std::string type;
    std::uint64_t generated = 0;
    std::uint64_t transmitted = 0;
    std::uint64_t completed = 0;
    Stat latency, waiting, service, response, total_response;
};

struct LoopSummary {
    std::string app;
    std::string loop;
    Stat execution_delay;
    double transmitted_bytes = 0;
    std::optional<double> transfer_rate;
};

struct NodeSummary {
    NodeId node = 0;
    double utilization = 0;
    std::uint64_t served = 0;
    std::map<std::string, Utilization> by_type;  ///< key "App/Type"
};

struct RunMeta {
    std::string run_id;
    std::string scenario;
    std::string policy;
    double duration = 0;
    std::uint64_t seed_index = 0;
    std::uint64_t seed = 0;
};

struct RunSummary {
    RunMeta meta;
    std::vector<TypeSummary> types;
    std::vector<LoopSummary> loops;
    std::vector<NodeSummary> nodes;
    StateCounts saturation;
    Stat latency, waiting, service, response, total_response;
    std::optional<double> mean_loop_transfer_rate;  ///< mean over loops with a defined rate
    std::optional<double> mean_loop_execution_delay;  ///< mean over loops of per-instance means
    PolicyStats policy;
    std::uint64_t generated = 0;
    std::uint64_t completed = 0;
    std::uint64_t events = 0;
    std::uint64_t event_hash = 0;
    /// (app name, source device, chosen node) -> root messages routed there
    std::map<std::tuple<std::string, NodeId, NodeId>, std::uint64_t> placements;

    double tie_rate() const noexcept
    {
        return policy.contested ? static_cast<double>(policy.ties) / static_cast<double>(policy.contested) : 0.0;
    }
};

inline std::string type_label(const MetricsLog& log, TypeKey k)
{
    return log.apps[k.first].name + "/" + log.apps[k.first].messages[k.second].name;
}

inline RunSummary summarize(const MetricsLog& log, RunMeta meta = {})
{
    RunSummary s;
    s.meta = std::move(meta);
    s.saturation = log.drain.total;
    s.policy = log.policy;
    s.events = log.events;
    s.event_hash = log.event_hash;

    std::map<TypeKey, std::size_t> type_slot;
    for (std::uint16_t a = 0; a < log.apps.size(); ++a) {
        for (std::uint16_t k = 0; k < log.apps[a].messages.size(); ++k) {
            type_slot[{a, k}] = s.types.size();
            TypeSummary t;
            t.app = log.apps[a].name;
            t.type = log.apps[a].messages[k].name;
            if (auto it = log.generated.find({a, k}); it != log.generated.end()) t.generated = it->second;
            s.types.push_back(std::move(t));
        }
    }

    const auto pos = loop_positions(log.apps);
    std::vector<std::vector<std::size_t>> loop_slot(log.apps.size());
    for (std::size_t a = 0; a < log.apps.size(); ++a) {
        for (const auto& loop : log.apps[a].loops) {
            loop_slot[a].push_back(s.loops.size());
            s.loops.push_back({log.apps[a].name, loop.name, {}, 0, std::nullopt});
        }
    }

    for (const auto& m : log.messages) {
        auto& t = s.types[type_slot[{m.app, m.spec}]];
        if (is_transmitted(m)) {
            ++t.transmitted;
            for (std::size_t l = 0; l < pos[m.app].size(); ++l) {
                if (pos[m.app][l][m.spec] >= 0) s.loops[loop_slot[m.app][l]].transmitted_bytes += m.bytes;
            }
        }
        if (const auto lat = latency(log, m); lat && m.hop_count > 0) {
            t.latency.add(*lat);
            s.latency.add(*lat);
        }
        if (m.parent == no_message) ++s.placements[{log.apps[m.app].name, m.source, m.destination}];
        const auto d = delay_components(log, m);
        if (!d) continue;
        ++t.completed;
        t.total_response.add(d->total_response);
        s.total_response.add(d->total_response);
        if (m.served_at_node) {
            t.waiting.add(d->waiting);
            t.service.add(d->service);
            t.response.add(d->response);
            s.waiting.add(d->waiting);
            s.service.add(d->service);
            s.response.add(d->response);
        }
    }
    for (const auto& t : s.types) {
        s.generated += t.generated;
        s.completed += t.completed;
    }

    std::vector<std::vector<double>> delays(s.loops.size());
    for (const auto& inst : loop_instances(log)) {
        const auto slot = loop_slot[inst.app][inst.loop];
        s.loops[slot].execution_delay.add(inst.execution_delay);
        delays[slot].push_back(inst.execution_delay);
    }
    Stat rate, delay;
    for (std::size_t i = 0; i < s.loops.size(); ++i) {
        auto& l = s.loops[i];
        l.transfer_rate = loop_transfer_rate(l.transmitted_bytes, delays[i]);
        if (l.transfer_rate) {
            rate.add(*l.transfer_rate);
            delay.add(l.execution_delay.mean);
        }
    }
    if (rate.count) s.mean_loop_transfer_rate = rate.mean;
    if (delay.count) s.mean_loop_execution_delay = delay.mean;

    std::map<NodeId, NodeSummary> nodes;
    for (const auto& [key, u] : module_utilization(log)) {
        auto& n = nodes[key.first];
        n.node = key.first;
        n.utilization += u.fraction;
        n.served += u.served;
        n.by_type[type_label(log, key.second)] = u;
    }
    for (auto& [id, n] : nodes) s.nodes.push_back(std::move(n));
    return s;
}

inline nlohmann::json to_json(const RunMeta& m)
{
    return {{"run_id", m.run_id}, {"scenario", m.scenario}, {"policy", m.policy},
            {"duration", m.duration}, {"seed_index", m.seed_index}, {"seed", m.seed}};
}

inline nlohmann::json to_json(const StateCounts& c)
{
    return {{"link_waiting", c.link_waiting}, {"transmitting", c.transmitting}, {"propagating", c.propagating},
            {"node_waiting", c.node_waiting}, {"in_service", c.in_service}};
}

inline nlohmann::json to_json(const RunSummary& s)
{
    using nlohmann::json;
    json types = json::array();
    for (const auto& t : s.types) {
        types.push_back({{"app", t.app}, {"type", t.type}, {"generated", t.generated},
                         {"transmitted", t.transmitted}, {"completed", t.completed},
                         {"latency", to_json(t.latency)}, {"waiting", to_json(t.waiting)},
                         {"service", to_json(t.service)}, {"response", to_json(t.response)},
                         {"total_response", to_json(t.total_response)}});
    }
    json loops = json::array();
    for (const auto& l : s.loops) {
        loops.push_back({{"app", l.app}, {"loop", l.loop}, {"execution_delay", to_json(l.execution_delay)},
                         {"transmitted_bytes", l.transmitted_bytes},
                         {"transfer_rate", l.transfer_rate ? json(*l.transfer_rate) : json(nullptr)}});
    }
    json nodes = json::array();
    for (const auto& n : s.nodes) {
        json by_type = json::object();
        for (const auto& [k, u] : n.by_type) by_type[k] = {{"utilization", u.fraction}, {"served", u.served}};
        nodes.push_back({{"node", n.node}, {"utilization", n.utilization}, {"served", n.served}, {"by_type", by_type}});
    }
    json placements = json::array();
    for (const auto& [k, count] : s.placements) {
        placements.push_back({{"app", std::get<0>(k)}, {"source", std::get<1>(k)}, {"destination", std::get<2>(k)},
                              {"count", count}});
    }
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"meta", to_json(s.meta)},
            {"generated", s.generated},
            {"completed", s.completed},
            {"events", s.events},
            {"event_hash", s.event_hash},
            {"mean_loop_transfer_rate", opt(s.mean_loop_transfer_rate)},
            {"mean_loop_execution_delay", opt(s.mean_loop_execution_delay)},
            {"latency", to_json(s.latency)},
            {"waiting", to_json(s.waiting)},
            {"service", to_json(s.service)},
            {"response", to_json(s.response)},
            {"total_response", to_json(s.total_response)},
            {"saturation", to_json(s.saturation)},
            {"decisions", {{"total", s.policy.decisions}, {"contested", s.policy.contested},
                           {"ties", s.policy.ties}, {"tie_rate", s.tie_rate()}}},
            {"types", types},
            {"loops", loops},
            {"nodes", nodes},
            {"placements", placements}};
}

// --- Export -----------------------------------------------------------------

inline const std::vector<std::string>& csv_columns()
{
    static const std::vector<std::string> cols{
        "run_id", "seed",    "policy",  "scenario", "msg_id",   "app",      "loop",           "type",
        "src",    "dst",     "bytes",   "instr",    "created",  "latency",  "waiting",        "service",
        "response", "total_response", "root", "parent", "state"};
    return cols;
}

inline std::string_view to_string(MessageState s)
{
    switch (s) {
    case MessageState::link_queued: return "link_queued";
    case MessageState::transmitting: return "transmitting";
    case MessageState::propagating: return "propagating";
    case MessageState::node_queued: return "node_queued";
    case MessageState::in_service: return "in_service";
    case MessageState::completed: return "completed";
    }
    return "?";
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << std::setprecision(17);
    return out;
}

} // namespace detail

/// Per-message CSV. Undefined values (e.g. latency of an undelivered
/// message) are written as empty fields. `loop` lists every loop that
/// contains the message type, separated by '|'.
inline void export_messages_csv(const MetricsLog& log, const RunMeta& meta, const std::filesystem::path& path)
{
    auto out = detail::open_for_write(path);
    for (std::size_t i = 0; i < csv_columns().size(); ++i) out << (i ? "," : "") << csv_columns()[i];
    out << '\n';

    std::vector<std::vector<std::string>> loop_names(log.apps.size());
    for (std::size_t a = 0; a < log.apps.size(); ++a) {
        for (const auto& spec : log.apps[a].messages) {
            std::string names;
            for (const auto& loop : log.apps[a].loops) {
                if (std::find(loop.messages.begin(), loop.messages.end(), spec.name) != loop.messages.end()) {
                    names += (names.empty() ? "" : "|") + loop.name;
                }
            }
            loop_names[a].push_back(names);
        }
    }
    auto opt = [&out](std::optional<double> v) {
        if (v) out << *v;
    };
    for (const auto& m : log.messages) {
        const auto lat = latency(log, m);
        const auto d = delay_components(log, m);
        out << meta.run_id << ',' << meta.seed << ',' << meta.policy << ',' << meta.scenario << ',' << m.id << ','
            << log.apps[m.app].name << ',' << loop_names[m.app][m.spec] << ',' << log.spec_of(m).name << ','
            << m.source << ',' << m.destination << ',' << m.bytes << ',' << m.instructions << ',' << m.created << ',';
        opt(lat);
        out << ',';
        opt(d ? std::optional(d->waiting) : std::nullopt);
        out << ',';
        opt(d ? std::optional(d->service) : std::nullopt);
        out << ',';
        opt(d ? std::optional(d->response) : std::nullopt);
        out << ',';
        opt(d ? std::optional(d->total_response) : std::nullopt);
        out << ',' << m.root << ',';
        if (m.parent != no_message) out << m.parent;
        out << ',' << to_string(m.state) << '\n';
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

inline void export_summary_json(const RunSummary& summary, const std::filesystem::path& path)
{
    auto out = detail::open_for_write(path);
    out << to_json(summary).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

/// Completed messages bucketed by completion time.
inline void export_buckets_csv(const MetricsLog& log, double width, const std::filesystem::path& path)
{
    if (!(width > 0)) throw std::invalid_argument("bucket width must be positive");
    std::map<std::tuple<std::int64_t, std::uint16_t, std::uint16_t>, std::pair<Stat, Stat>> buckets;
    for (const auto& m : log.messages) {
        const auto d = delay_components(log, m);
        if (!d) continue;
        const double done = m.served_at_node ? m.service_end : m.delivered;
        auto& [lat, total] = buckets[{static_cast<std::int64_t>(std::floor(done / width)), m.app, m.spec}];
        lat.add(d->latency);
        total.add(d->total_response);
    }
    auto out = detail::open_for_write(path);
    out << "bucket_start,app,type,completed,mean_latency,mean_total_response\n";
    for (const auto& [key, stats] : buckets) {
        const auto& [b, app, spec] = key;
        out << static_cast<double>(b) * width << ',' << log.apps[app].name << ',' << log.apps[app].messages[spec].name
            << ',' << stats.first.count << ',' << stats.first.mean << ',' << stats.second.mean << '\n';
    }
}

// --- Read-back --------------------------------------------------------------

struct CsvMessage {
    std::uint64_t msg_id = 0;
    std::string app, loop, type;
    double bytes = 0;
    std::optional<double> latency, total_response;
    std::uint64_t root = 0;
    std::optional<std::uint64_t> parent;
};

inline std::vector<CsvMessage> read_messages_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    std::vector<CsvMessage> rows;
    std::vector<std::string> f;
    while (std::getline(in, line)) {
        f.clear();
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != csv_columns().size()) throw std::runtime_error("malformed CSV row in " + path.string());
        auto num = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional(std::stod(s)); };
        CsvMessage r;
        r.msg_id = std::stoull(f[4]);
        r.app = f[5];
        r.loop = f[6];
        r.type = f[7];
        r.bytes = std::stod(f[10]);
        r.latency = num(f[13]);
        r.total_response = num(f[17]);
        r.root = std::stoull(f[18]);
        if (!f[19].empty()) r.parent = std::stoull(f[19]);
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Loop transfer rates rebuilt from exported rows alone, keyed by (app, loop).
inline std::map<std::pair<std::string, std::string>, double> transfer_rates_from_csv(
    const std::vector<CsvMessage>& rows, const std::vector<Application>& apps)
{
    std::map<std::uint64_t, const CsvMessage*> by_id;
    for (const auto& r : rows) by_id[r.msg_id] = &r;
    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& app : apps) {
        for (const auto& loop : app.loops) {
            double bytes = 0;
            std::vector<double> delays;
            for (const auto& r : rows) {
                if (r.app != app.name) continue;
                const auto at = std::find(loop.messages.begin(), loop.messages.end(), r.type);
                if (at == loop.messages.end()) continue;
                if (r.latency && *r.latency > 0) bytes += r.bytes;
                if (at + 1 != loop.messages.end() || !r.total_response) continue;
                // Walk back up the parent chain, matching the loop in reverse,
                // then sum root-first like the in-memory pass does.
                std::vector<double> chain{*r.total_response};
                const CsvMessage* cur = &r;
                bool ok = true;
                for (auto k = (at - loop.messages.begin()); k > 0; --k) {
                    if (!cur->parent) { ok = false; break; }
                    const auto* p = by_id.at(*cur->parent);
                    if (p->type != loop.messages[static_cast<std::size_t>(k - 1)] || !p->total_response) { ok = false; break; }
                    chain.push_back(*p->total_response);
                    cur = p;
                }
                double sum = 0;
                for (auto it = chain.rbegin(); it != chain.rend(); ++it) sum += *it;
                if (ok) delays.push_back(sum);
            }
            if (auto rate = loop_transfer_rate(bytes, delays)) out[{app.name, loop.name}] = *rate;
        }
    }
    return out;
}

} // namespace fogsim
