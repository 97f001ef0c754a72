#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fogsim/policies.hpp"
#include "fogsim/topology.hpp"
#include "fogsim/workload.hpp"

namespace fogsim {

using MessageId = std::uint32_t;
inline constexpr MessageId no_message = std::numeric_limits<MessageId>::max();
inline constexpr double unset_time = std::numeric_limits<double>::quiet_NaN();

inline bool is_set(double t) noexcept { return !std::isnan(t); }

enum class MessageState : std::uint8_t { link_queued, transmitting, propagating, node_queued, in_service, completed };

/// One link traversal of one message.
struct HopRecord {
    LinkId link = -1;
    double queue_enter = unset_time;
    double tx_start = unset_time;
    double tx_end = unset_time;
    double arrive = unset_time;
};

/// Lifecycle of one message. Hop details live in MetricsLog::hops at
/// [hop_offset, hop_offset + hop_count).
struct MessageRecord {
    MessageId id = 0;
    MessageId root = 0;             ///< Sensor message that started the chain
    MessageId parent = no_message;  ///< message whose service emitted this one
    std::uint16_t app = 0;
    std::uint16_t spec = 0;
    NodeId source = -1;
    NodeId destination = -1;
    NodeId origin = -1;  ///< IoT device that generated the root message
    double bytes = 0;
    double instructions = 0;
    double created = unset_time;
    double delivered = unset_time;  ///< arrival at destination node
    double node_enter = unset_time;
    double service_start = unset_time;
    double service_end = unset_time;
    std::uint32_t hop_offset = 0;
    std::uint16_t hop_count = 0;
    std::uint16_t hops_done = 0;
    MessageState state = MessageState::link_queued;
    bool served_at_node = false;  ///< destination module is a compute module
};

/// Message counts per (app, spec) in each state at the end of a run.
struct StateCounts {
    std::uint64_t link_waiting = 0;
    std::uint64_t transmitting = 0;
    std::uint64_t propagating = 0;
    std::uint64_t node_waiting = 0;
    std::uint64_t in_service = 0;

    std::uint64_t in_flight() const noexcept
    {
        return link_waiting + transmitting + propagating + node_waiting + in_service;
    }

    StateCounts& operator+=(const StateCounts& o) noexcept
    {
        link_waiting += o.link_waiting;
        transmitting += o.transmitting;
        propagating += o.propagating;
        node_waiting += o.node_waiting;
        in_service += o.in_service;
        return *this;
    }

    friend bool operator==(const StateCounts&, const StateCounts&) = default;
};

/// What was still inside the system when the clock stopped. Counted by
/// walking the resource queues and pending events, independently of the
/// per-message state flags.
struct DrainReport {
    StateCounts total;
    std::map<std::pair<std::uint16_t, std::uint16_t>, StateCounts> by_type;

    friend bool operator==(const DrainReport&, const DrainReport&) = default;
};

using TypeKey = std::pair<std::uint16_t, std::uint16_t>;  ///< (app, spec)

/// Canonical output of one simulation run.
struct MetricsLog {
    double duration = 0;
    std::vector<Application> apps;
    std::vector<MessageRecord> messages;
    std::vector<HopRecord> hops;
    std::map<TypeKey, std::uint64_t> generated;
    std::map<TypeKey, std::uint64_t> completed;
    DrainReport drain;
    PolicyStats policy;
    std::uint64_t events = 0;
    std::uint64_t event_hash = 0;

    std::span<const HopRecord> hops_of(const MessageRecord& m) const
    {
        return {hops.data() + m.hop_offset, m.hop_count};
    }

    const MessageSpec& spec_of(const MessageRecord& m) const { return apps[m.app].messages[m.spec]; }
};

} // namespace fogsim
