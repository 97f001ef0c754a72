#pragma once

#include <bit>
#include <cstdint>
#include <deque>
#include <ostream>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fogsim/policies.hpp"
#include "fogsim/records.hpp"
#include "fogsim/rng.hpp"
#include "fogsim/topology.hpp"
#include "fogsim/workload.hpp"

namespace fogsim {

/// How long a node holds a message: exactly I/IPT, or an exponential draw
/// with that mean (textbook M/M/1 service).
enum class ServiceModel { deterministic, exponential };

inline std::string_view to_string(ServiceModel m)
{
    return m == ServiceModel::deterministic ? "deterministic" : "exponential";
}

inline ServiceModel parse_service_model(std::string_view s)
{
    if (s == "deterministic") return ServiceModel::deterministic;
    if (s == "exponential") return ServiceModel::exponential;
    throw std::invalid_argument("unknown service model: " + std::string(s));
}

struct EngineConfig {
    double duration = 1e4;
    std::uint64_t seed = 0;
    ArrivalProcess arrival{};
    ServiceModel service = ServiceModel::deterministic;
    bool autogenerate = true;           ///< run the Poisson sources
    std::ostream* event_dump = nullptr;  ///< one JSON line per processed event
};

enum class EventKind : std::uint8_t { generate, inject, link_free, arrive, service_done };

inline std::string_view to_string(EventKind k)
{
    switch (k) {
    case EventKind::generate: return "generate";
    case EventKind::inject: return "inject";
    case EventKind::link_free: return "link_free";
    case EventKind::arrive: return "arrive";
    case EventKind::service_done: return "service_done";
    }
    return "?";
}

struct Event {
    double time = 0;
    std::uint64_t sequence = 0;
    EventKind kind = EventKind::generate;
    std::int32_t resource = 0;  ///< process, link half or node, by kind
    MessageId message = no_message;

    friend bool operator>(const Event& x, const Event& y) noexcept
    {
        return x.time != y.time ? x.time > y.time : x.sequence > y.sequence;
    }
};

/// Discrete-event simulation of one (topology, apps, placement, policy) run.
///
/// Every node and every direction of every link is a single-server FCFS
/// queue with unbounded capacity. A link direction is held for the
/// transmission time S/BW only; propagation is pure latency.
class Simulator {
public:
    Simulator(const Topology& topo, const Routing& routing, const std::vector<Application>& apps,
              const Placement& placement, Policy& policy, EngineConfig config)
        : topo_(topo), routing_(routing), placement_(placement), policy_(policy), config_(std::move(config)),
          trigger_rng_(derive_seed(config_.seed, {stream::triggers})),
          service_rng_(derive_seed(config_.seed, {stream::service}))
    {
        if (!(config_.duration >= 0)) throw std::invalid_argument("duration must be non-negative");
        if (config_.arrival.scale < 1) throw std::invalid_argument("arrival scale must be >= 1");
        for (const auto& app : apps) app.validate();
        placement_.validate(topo_, apps);
        log_.apps = apps;
        log_.duration = config_.duration;
        resolve_apps();

        links_.resize(topo_.link_count() * 2);
        nodes_.resize(topo_.node_count());
        backlog_.assign(topo_.node_count(), 0.0);

        if (config_.autogenerate) {
            for (std::size_t p = 0; p < processes_.size(); ++p) {
                const double first = sample_inter_arrival(config_.arrival, processes_[p].rng);
                schedule(first, EventKind::generate, static_cast<std::int32_t>(p));
            }
        }
    }

    /// Emit one root message from `device` for application `app` at `time`
    /// without scheduling a follow-up.
    void inject(NodeId device, std::size_t app, double time)
    {
        for (std::size_t p = 0; p < processes_.size(); ++p) {
            if (processes_[p].device == device && processes_[p].app == app) {
                schedule(time, EventKind::inject, static_cast<std::int32_t>(p));
                return;
            }
        }
        throw std::invalid_argument("device " + std::to_string(device) + " hosts no source of app " +
                                    std::to_string(app));
    }

    /// Processes every event stamped at or before the configured duration.
    MetricsLog run()
    {
        while (!events_.empty() && events_.top().time <= config_.duration) {
            const Event ev = events_.top();
            events_.pop();
            clock_ = ev.time;
            record_event(ev);
            switch (ev.kind) {
            case EventKind::generate: handle_generate(static_cast<std::size_t>(ev.resource), true); break;
            case EventKind::inject: handle_generate(static_cast<std::size_t>(ev.resource), false); break;
            case EventKind::link_free: finish_transmission(static_cast<std::size_t>(ev.resource)); break;
            case EventKind::arrive: arrive(ev.message); break;
            case EventKind::service_done: finish_service(static_cast<NodeId>(ev.resource)); break;
            }
        }
        log_.drain = drain_status();
        log_.policy = policy_.stats();
        return std::move(log_);
    }

    double clock() const noexcept { return clock_; }

    /// Messages still queued, transmitting, propagating or in service.
    DrainReport drain_status() const
    {
        DrainReport report;
        auto bump = [&](MessageId id, std::uint64_t StateCounts::*field) {
            const auto& m = log_.messages[id];
            ++(report.total.*field);
            ++(report.by_type[{m.app, m.spec}].*field);
        };
        for (const auto& half : links_) {
            for (auto id : half.queue) bump(id, &StateCounts::link_waiting);
            if (half.current != no_message) bump(half.current, &StateCounts::transmitting);
        }
        for (const auto& node : nodes_) {
            for (auto id : node.queue) bump(id, &StateCounts::node_waiting);
            if (node.current != no_message) bump(node.current, &StateCounts::in_service);
        }
        auto pending = events_;
        while (!pending.empty()) {
            if (pending.top().kind == EventKind::arrive) bump(pending.top().message, &StateCounts::propagating);
            pending.pop();
        }
        return report;
    }

private:
    struct ResolvedApp {
        std::vector<ModuleKind> module_kind;
        std::vector<std::vector<std::size_t>> outbound;  // by module
        std::vector<std::vector<NodeId>> replicas;       // by module; empty when unplaced
        std::vector<std::size_t> spec_target;            // module index consumed by each spec
    };

    struct Process {
        NodeId device;
        std::size_t app;
        std::size_t module;
        Rng rng;
    };

    struct Resource {
        std::deque<MessageId> queue;
        MessageId current = no_message;
    };

    void resolve_apps()
    {
        for (std::size_t a = 0; a < log_.apps.size(); ++a) {
            const auto& app = log_.apps[a];
            ResolvedApp r;
            for (const auto& m : app.modules) {
                r.module_kind.push_back(m.kind);
                r.outbound.push_back(app.outbound(m.name));
                const auto key = std::pair{app.name, m.name};
                r.replicas.push_back(placement_.entries().contains(key) ? placement_.hosts(app.name, m.name)
                                                                        : std::vector<NodeId>{});
            }
            for (const auto& s : app.messages) r.spec_target.push_back(app.module_index(s.to_module));
            for (std::size_t m = 0; m < app.modules.size(); ++m) {
                if (app.modules[m].kind != ModuleKind::source) continue;
                for (auto device : r.replicas[m]) {
                    const auto seed = derive_seed(config_.seed, {stream::arrivals, static_cast<std::uint64_t>(device),
                                                                 static_cast<std::uint64_t>(a)});
                    processes_.push_back(Process{device, a, m, Rng(seed)});
                }
            }
            resolved_.push_back(std::move(r));
        }
    }

    void schedule(double time, EventKind kind, std::int32_t resource, MessageId message = no_message)
    {
        events_.push(Event{time, sequence_++, kind, resource, message});
    }

    void record_event(const Event& ev)
    {
        ++log_.events;
        auto mix = [this](std::uint64_t v) {
            for (int i = 0; i < 8; ++i) {
                log_.event_hash ^= (v >> (8 * i)) & 0xFF;
                log_.event_hash *= 0x100000001B3ULL;
            }
        };
        if (log_.events == 1) log_.event_hash = 0xCBF29CE484222325ULL;
        mix(std::bit_cast<std::uint64_t>(ev.time));
        mix(static_cast<std::uint64_t>(ev.kind));
        mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(ev.resource)));
        mix(ev.message);
        if (config_.event_dump) {
            *config_.event_dump << R"({"t":)" << ev.time << R"(,"seq":)" << ev.sequence << R"(,"kind":")"
                                << to_string(ev.kind) << R"(","resource":)" << ev.resource;
            if (ev.message != no_message) *config_.event_dump << R"(,"msg":)" << ev.message;
            *config_.event_dump << "}\n";
        }
    }

    MessageId create_message(std::size_t app, std::size_t spec, NodeId from, NodeId to, MessageId parent,
                             MessageId root, NodeId origin)
    {
        const auto id = static_cast<MessageId>(log_.messages.size());
        const auto& s = log_.apps[app].messages[spec];
        const auto& path = routing_.path(from, to);
        MessageRecord m;
        m.id = id;
        m.root = root == no_message ? id : root;
        m.parent = parent;
        m.app = static_cast<std::uint16_t>(app);
        m.spec = static_cast<std::uint16_t>(spec);
        m.source = from;
        m.destination = to;
        m.origin = origin;
        m.bytes = s.bytes;
        m.instructions = s.instructions;
        m.created = clock_;
        m.hop_offset = static_cast<std::uint32_t>(log_.hops.size());
        m.hop_count = static_cast<std::uint16_t>(path.links.size());
        m.served_at_node = resolved_[app].module_kind[resolved_[app].spec_target[spec]] == ModuleKind::compute;
        for (auto l : path.links) {
            HopRecord h;
            h.link = l;
            log_.hops.push_back(h);
        }
        log_.messages.push_back(m);
        ++log_.generated[{m.app, m.spec}];
        return id;
    }

    bool triggered(double fraction)
    {
        if (fraction >= 1.0) return true;
        if (fraction <= 0.0) return false;
        return std::bernoulli_distribution(fraction)(trigger_rng_);
    }

    /// New root message(s) from a source module; the policy picks the replica.
    void handle_generate(std::size_t process, bool reschedule)
    {
        auto& proc = processes_[process];
        const auto& r = resolved_[proc.app];
        for (auto spec : r.outbound[proc.module]) {
            const auto& s = log_.apps[proc.app].messages[spec];
            if (!triggered(s.trigger_fraction)) continue;
            const auto target = r.spec_target[spec];
            NodeId dst;
            if (r.module_kind[target] == ModuleKind::compute) {
                SelectionContext ctx;
                ctx.source = proc.device;
                ctx.app = proc.app;
                ctx.instructions = s.instructions;
                ctx.bytes = s.bytes;
                ctx.candidates = r.replicas[target];
                ctx.topology = &topo_;
                ctx.routing = &routing_;
                ctx.backlog = backlog_;
                dst = policy_(ctx);
            } else {
                dst = downstream_destination(proc.app, target, proc.device, proc.device);
            }
            const auto id = create_message(proc.app, spec, proc.device, dst, no_message, no_message, proc.device);
            send(id);
        }
        if (reschedule) {
            const double next = clock_ + sample_inter_arrival(config_.arrival, proc.rng);
            schedule(next, EventKind::generate, static_cast<std::int32_t>(process));
        }
    }

    /// Replica for a non-root message: the originating device for sinks that
    /// it hosts, otherwise the nearest replica.
    NodeId downstream_destination(std::size_t app, std::size_t module, NodeId from, NodeId origin) const
    {
        const auto& hosts = resolved_[app].replicas[module];
        if (hosts.empty()) {
            throw std::runtime_error("module " + log_.apps[app].modules[module].name + " of " + log_.apps[app].name +
                                     " has no replica");
        }
        if (resolved_[app].module_kind[module] == ModuleKind::sink &&
            std::binary_search(hosts.begin(), hosts.end(), origin)) {
            return origin;
        }
        NodeId best = hosts.front();
        for (auto h : hosts) {
            const auto hk = std::pair{h == from ? 0 : routing_.hops(from, h), h == from ? 0.0 : routing_.propagation(from, h)};
            const auto bk = std::pair{best == from ? 0 : routing_.hops(from, best),
                                      best == from ? 0.0 : routing_.propagation(from, best)};
            if (hk < bk) best = h;
        }
        return best;
    }

    void send(MessageId id)
    {
        auto& m = log_.messages[id];
        if (m.hop_count == 0) {
            reach_destination(id);
        } else {
            traverse_link(id);
        }
    }

    static std::size_t half_index(const Link& link, NodeId from) noexcept
    {
        return static_cast<std::size_t>(link.id) * 2 + (from == link.a ? 0 : 1);
    }

    /// Queue the message on the directed half of its next link.
    void traverse_link(MessageId id)
    {
        auto& m = log_.messages[id];
        const auto& path = routing_.path(m.source, m.destination);
        const auto& link = topo_.link(path.links[m.hops_done]);
        const auto half = half_index(link, path.nodes[m.hops_done]);
        log_.hops[m.hop_offset + m.hops_done].queue_enter = clock_;
        auto& res = links_[half];
        if (res.current == no_message) {
            start_transmission(half, id);
        } else {
            m.state = MessageState::link_queued;
            res.queue.push_back(id);
        }
    }

    void start_transmission(std::size_t half, MessageId id)
    {
        auto& m = log_.messages[id];
        const auto& link = topo_.link(static_cast<LinkId>(half / 2));
        links_[half].current = id;
        m.state = MessageState::transmitting;
        log_.hops[m.hop_offset + m.hops_done].tx_start = clock_;
        schedule(clock_ + m.bytes / link.bw, EventKind::link_free, static_cast<std::int32_t>(half), id);
    }

    void finish_transmission(std::size_t half)
    {
        auto& res = links_[half];
        const auto id = res.current;
        auto& m = log_.messages[id];
        const auto& link = topo_.link(static_cast<LinkId>(half / 2));
        log_.hops[m.hop_offset + m.hops_done].tx_end = clock_;
        m.state = MessageState::propagating;
        schedule(clock_ + link.pr, EventKind::arrive, static_cast<std::int32_t>(half), id);
        res.current = no_message;
        if (!res.queue.empty()) {
            const auto next = res.queue.front();
            res.queue.pop_front();
            start_transmission(half, next);
        }
    }

    void arrive(MessageId id)
    {
        auto& m = log_.messages[id];
        log_.hops[m.hop_offset + m.hops_done].arrive = clock_;
        ++m.hops_done;
        if (m.hops_done < m.hop_count) {
            traverse_link(id);
        } else {
            reach_destination(id);
        }
    }

    void reach_destination(MessageId id)
    {
        auto& m = log_.messages[id];
        m.delivered = clock_;
        if (m.served_at_node) {
            serve_at_node(id);
        } else {
            complete(id);
        }
    }

    void complete(MessageId id)
    {
        auto& m = log_.messages[id];
        m.state = MessageState::completed;
        ++log_.completed[{m.app, m.spec}];
    }

    /// FCFS single-server queue at the destination node.
    void serve_at_node(MessageId id)
    {
        auto& m = log_.messages[id];
        const auto node = m.destination;
        m.node_enter = clock_;
        backlog_[static_cast<std::size_t>(node)] += m.instructions;
        auto& res = nodes_[static_cast<std::size_t>(node)];
        if (res.current == no_message) {
            start_service(node, id);
        } else {
            m.state = MessageState::node_queued;
            res.queue.push_back(id);
        }
    }

    void start_service(NodeId node, MessageId id)
    {
        auto& m = log_.messages[id];
        nodes_[static_cast<std::size_t>(node)].current = id;
        m.state = MessageState::in_service;
        m.service_start = clock_;
        double duration = m.instructions / topo_.node(node).ipt;
        if (config_.service == ServiceModel::exponential) {
            duration = std::exponential_distribution<double>(1.0 / duration)(service_rng_);
        }
        schedule(clock_ + duration, EventKind::service_done, node, id);
    }

    void finish_service(NodeId node)
    {
        auto& res = nodes_[static_cast<std::size_t>(node)];
        const auto id = res.current;
        res.current = no_message;
        {
            auto& m = log_.messages[id];
            m.service_end = clock_;
            backlog_[static_cast<std::size_t>(node)] -= m.instructions;
            complete(id);
        }
        emit_triggered(id, node);
        if (!res.queue.empty()) {
            const auto next = res.queue.front();
            res.queue.pop_front();
            start_service(node, next);
        }
    }

    void emit_triggered(MessageId parent, NodeId node)
    {
        const auto app = log_.messages[parent].app;
        const auto spec = log_.messages[parent].spec;
        const auto root = log_.messages[parent].root;
        const auto origin = log_.messages[parent].origin;
        const auto& r = resolved_[app];
        for (auto out : r.outbound[r.spec_target[spec]]) {
            if (!triggered(log_.apps[app].messages[out].trigger_fraction)) continue;
            const auto dst = downstream_destination(app, r.spec_target[out], node, origin);
            send(create_message(app, out, node, dst, parent, root, origin));
        }
    }

    const Topology& topo_;
    const Routing& routing_;
    const Placement& placement_;
    Policy& policy_;
    EngineConfig config_;

    std::vector<ResolvedApp> resolved_;
    std::vector<Process> processes_;
    std::vector<Resource> links_;  // index = link * 2 + direction (0: a->b)
    std::vector<Resource> nodes_;
    std::vector<double> backlog_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    std::uint64_t sequence_ = 0;
    double clock_ = 0;
    Rng trigger_rng_;
    Rng service_rng_;
    MetricsLog log_;
};

/// Convenience wrapper: one complete run.
inline MetricsLog run(const Topology& topo, const Routing& routing, const std::vector<Application>& apps,
                      const Placement& placement, Policy& policy, const EngineConfig& config)
{
    Simulator sim(topo, routing, apps, placement, policy, config);
    return sim.run();
}

} // namespace fogsim
