#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fogsim/engine.hpp"
#include "fogsim/io.hpp"
#include "fogsim/metrics.hpp"
#include "fogsim/policies.hpp"
#include "fogsim/topology.hpp"
#include "fogsim/workload.hpp"

namespace fogsim {

enum class Scenario { generic, as_inspired };

inline std::string_view to_string(Scenario s) { return s == Scenario::generic ? "generic" : "as"; }

inline Scenario parse_scenario(std::string_view s)
{
    if (s == "generic") return Scenario::generic;
    if (s == "as" || s == "as_inspired") return Scenario::as_inspired;
    throw std::invalid_argument("unknown scenario: " + std::string(s));
}

struct ExperimentConfig {
    Scenario scenario = Scenario::generic;
    std::vector<PolicyKind> policies{all_policies.begin(), all_policies.end()};
    std::vector<double> durations{1e4};
    std::uint64_t seed = 1;        ///< master seed
    std::size_t seed_count = 10;   ///< runs use seed indices 0..seed_count-1
    double arrival_scale = 100;
    std::vector<double> weights;   ///< empty = uniform
    electre::ThresholdRule thresholds;
    double discrimination = electre::default_discrimination;
    std::vector<AppTier> tiers = default_tiers();
    TwoLoopFractions fractions;
    std::size_t as_nodes = 32;
    bool drr_per_app = true;
    ServiceModel service = ServiceModel::deterministic;
    std::string out_dir = "results";
    bool write_messages = true;
    bool dump_decisions = false;
    bool dump_events = false;
    double bucket = 0;             ///< 0 disables the bucketed view
    std::size_t threads = 0;       ///< 0 = hardware concurrency

    void validate() const
    {
        if (policies.empty()) throw std::invalid_argument("config: policies must not be empty");
        if (durations.empty()) throw std::invalid_argument("config: durations must not be empty");
        if (seed_count == 0) throw std::invalid_argument("config: seed_count must be positive");
        if (arrival_scale < 1) throw std::invalid_argument("config: arrival_scale must be >= 1");
        for (double d : durations) {
            if (!(d > 0)) throw std::invalid_argument("config: durations must be positive");
        }
        if (!weights.empty()) {
            if (weights.size() != CriteriaVector::size) throw std::invalid_argument("config: weights needs 5 entries");
            double sum = 0;
            for (double w : weights) sum += w;
            if (std::fabs(sum - 1) > 1e-9) throw std::invalid_argument("config: weights must sum to 1");
        }
        if (tiers.empty()) throw std::invalid_argument("config: tiers must not be empty");
    }
};

inline json to_json(const ExperimentConfig& c)
{
    json policies = json::array();
    for (auto p : c.policies) policies.push_back(to_string(p));
    json tiers = json::array();
    for (const auto& t : c.tiers) tiers.push_back({{"instructions", t.instructions}, {"bytes", t.bytes}});
    return {{"scenario", to_string(c.scenario)},
            {"policies", policies},
            {"durations", c.durations},
            {"seed", c.seed},
            {"seed_count", c.seed_count},
            {"arrival_scale", c.arrival_scale},
            {"weights", c.weights},
            {"thresholds",
             {{"indifference_percentile", c.thresholds.indifference_percentile},
              {"indifference_divisor", c.thresholds.indifference_divisor},
              {"preference_percentile", c.thresholds.preference_percentile},
              {"veto_percentile", c.thresholds.veto_percentile}}},
            {"discrimination", c.discrimination},
            {"tiers", tiers},
            {"trigger_fractions",
             {{"fog_down", c.fractions.fog_down}, {"fog_up", c.fractions.fog_up}, {"cloud", c.fractions.cloud}}},
            {"as_nodes", c.as_nodes},
            {"drr_per_app", c.drr_per_app},
            {"service_model", to_string(c.service)},
            {"out_dir", c.out_dir},
            {"write_messages", c.write_messages},
            {"dump_decisions", c.dump_decisions},
            {"dump_events", c.dump_events},
            {"bucket", c.bucket},
            {"threads", c.threads}};
}

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<std::string_view> known, const std::string& where)
{
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw std::invalid_argument("config: unknown key '" + where + key + "'");
        }
    }
}

} // namespace detail

/// Missing keys keep their defaults; unknown keys are rejected by name.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig c = {})
{
    detail::reject_unknown(j,
                           {"scenario", "policies", "durations", "seed", "seed_count", "arrival_scale", "weights",
                            "thresholds", "discrimination", "tiers", "trigger_fractions", "as_nodes", "drr_per_app",
                            "service_model", "out_dir", "write_messages", "dump_decisions", "dump_events", "bucket",
                            "threads"},
                           "");
    try {
        if (j.contains("scenario")) c.scenario = parse_scenario(j["scenario"].get<std::string>());
        if (j.contains("policies")) {
            c.policies.clear();
            for (const auto& p : j["policies"]) c.policies.push_back(parse_policy(p.get<std::string>()));
        }
        if (j.contains("durations")) c.durations = j["durations"].get<std::vector<double>>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("seed_count")) c.seed_count = j["seed_count"].get<std::size_t>();
        if (j.contains("arrival_scale")) c.arrival_scale = j["arrival_scale"].get<double>();
        if (j.contains("weights")) c.weights = j["weights"].get<std::vector<double>>();
        if (j.contains("thresholds")) {
            const auto& t = j["thresholds"];
            detail::reject_unknown(t, {"indifference_percentile", "indifference_divisor", "preference_percentile",
                                       "veto_percentile"}, "thresholds.");
            c.thresholds.indifference_percentile = t.value("indifference_percentile", c.thresholds.indifference_percentile);
            c.thresholds.indifference_divisor = t.value("indifference_divisor", c.thresholds.indifference_divisor);
            c.thresholds.preference_percentile = t.value("preference_percentile", c.thresholds.preference_percentile);
            c.thresholds.veto_percentile = t.value("veto_percentile", c.thresholds.veto_percentile);
        }
        if (j.contains("discrimination")) c.discrimination = j["discrimination"].get<double>();
        if (j.contains("tiers")) {
            c.tiers.clear();
            for (const auto& t : j["tiers"]) {
                detail::reject_unknown(t, {"instructions", "bytes"}, "tiers[].");
                c.tiers.push_back({t.at("instructions").get<double>(), t.at("bytes").get<double>()});
            }
        }
        if (j.contains("trigger_fractions")) {
            const auto& f = j["trigger_fractions"];
            detail::reject_unknown(f, {"fog_down", "fog_up", "cloud"}, "trigger_fractions.");
            c.fractions.fog_down = f.value("fog_down", c.fractions.fog_down);
            c.fractions.fog_up = f.value("fog_up", c.fractions.fog_up);
            c.fractions.cloud = f.value("cloud", c.fractions.cloud);
        }
        if (j.contains("as_nodes")) c.as_nodes = j["as_nodes"].get<std::size_t>();
        if (j.contains("drr_per_app")) c.drr_per_app = j["drr_per_app"].get<bool>();
        if (j.contains("service_model")) c.service = parse_service_model(j["service_model"].get<std::string>());
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("write_messages")) c.write_messages = j["write_messages"].get<bool>();
        if (j.contains("dump_decisions")) c.dump_decisions = j["dump_decisions"].get<bool>();
        if (j.contains("dump_events")) c.dump_events = j["dump_events"].get<bool>();
        if (j.contains("bucket")) c.bucket = j["bucket"].get<double>();
        if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

/// Seed of the run with the given index. Independent of policy and
/// duration, so every policy sees the same arrivals and topology.
inline std::uint64_t run_seed(std::uint64_t master, std::uint64_t seed_index)
{
    return derive_seed(master, {stream::run, seed_index});
}

inline std::uint64_t topology_seed(std::uint64_t master, std::uint64_t seed_index)
{
    return derive_seed(master, {stream::topology, seed_index});
}

struct ScenarioInstance {
    Topology topology;
    Routing routing;
    Suite suite;
};

inline ScenarioInstance build_scenario(const ExperimentConfig& c, std::uint64_t seed_index)
{
    ScenarioInstance s;
    if (c.scenario == Scenario::generic) {
        s.topology = build_generic_topology();
        s.suite = build_single_loop_suite(s.topology, c.tiers);
    } else {
        s.topology = generate_as_topology(topology_seed(c.seed, seed_index), c.as_nodes);
        s.suite = build_two_loop_suite(s.topology, c.tiers, c.fractions);
    }
    s.routing = Routing(s.topology);
    return s;
}

struct RunTask {
    PolicyKind policy;
    double duration;
    std::uint64_t seed_index;
};

inline std::string run_id(const ExperimentConfig& c, const RunTask& t)
{
    std::ostringstream id;
    id << to_string(c.scenario) << '_' << to_string(t.policy) << "_d" << static_cast<std::uint64_t>(t.duration) << "_s"
       << t.seed_index;
    return id.str();
}

inline electre::Options electre_options(const ExperimentConfig& c)
{
    electre::Options o;
    o.weights = c.weights;
    o.rule = c.thresholds;
    o.discrimination = c.discrimination;
    return o;
}

struct RunOutput {
    RunSummary summary;
    std::optional<MetricsLog> log;
};

/// One run. Writes its files under `c.out_dir` unless `write` is false.
inline RunOutput run_one(const ExperimentConfig& c, const RunTask& t, bool write = true, bool keep_log = false)
{
    const auto scenario = build_scenario(c, t.seed_index);
    const auto seed = run_seed(c.seed, t.seed_index);
    RunMeta meta{run_id(c, t), std::string(to_string(c.scenario)), std::string(to_string(t.policy)), t.duration,
                 t.seed_index, seed};
    const std::filesystem::path dir(c.out_dir);
    if (write) std::filesystem::create_directories(dir);

    Policy policy(t.policy, derive_seed(seed, {stream::policy}), electre_options(c), c.drr_per_app);
    std::ofstream decisions, events;
    if (write && c.dump_decisions) {
        decisions.open(dir / (meta.run_id + ".decisions.jsonl"));
        decisions << std::setprecision(17);
        policy.dump_decisions_to(&decisions);
    }
    EngineConfig ec;
    ec.duration = t.duration;
    ec.seed = seed;
    ec.arrival = ArrivalProcess{c.arrival_scale, 1.0};
    ec.service = c.service;
    if (write && c.dump_events) {
        events.open(dir / (meta.run_id + ".events.jsonl"));
        events << std::setprecision(17);
        ec.event_dump = &events;
    }
    auto log = run(scenario.topology, scenario.routing, scenario.suite.apps, scenario.suite.placement, policy, ec);
    RunOutput out{summarize(log, meta), std::nullopt};
    if (write) {
        if (c.write_messages) export_messages_csv(log, meta, dir / (meta.run_id + ".csv"));
        export_summary_json(out.summary, dir / (meta.run_id + ".summary.json"));
        if (c.bucket > 0) export_buckets_csv(log, c.bucket, dir / (meta.run_id + ".buckets.csv"));
    }
    if (keep_log) out.log = std::move(log);
    return out;
}

inline std::vector<RunTask> enumerate_tasks(const ExperimentConfig& c)
{
    std::vector<RunTask> tasks;
    for (double d : c.durations) {
        for (std::uint64_t s = 0; s < c.seed_count; ++s) {
            for (auto p : c.policies) tasks.push_back({p, d, s});
        }
    }
    return tasks;
}

/// Runs the cartesian product of (duration, seed, policy) on a worker pool.
/// Results come back in task order whatever the execution order.
inline std::vector<RunSummary> run_experiment(const ExperimentConfig& c, bool write = true)
{
    c.validate();
    const auto tasks = enumerate_tasks(c);
    if (write) {
        std::filesystem::create_directories(c.out_dir);
        write_json_file(to_json(c), std::filesystem::path(c.out_dir) / "config.json");
    }
    std::vector<RunSummary> results(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const auto i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                results[i] = run_one(c, tasks[i], write).summary;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = tasks.size();
            }
        }
    };
    std::size_t threads = c.threads ? c.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, tasks.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

// --- Comparison -------------------------------------------------------------

/// The handful of per-run numbers the comparison table needs.
struct RunDigest {
    RunMeta meta;
    std::optional<double> transfer_rate;
    std::optional<double> loop_delay;
    double latency = 0;
    double waiting = 0;
    double total_response = 0;
    double link_waiting = 0;
    double utilization = 0;  ///< mean over nodes that served messages
};

inline RunDigest digest(const RunSummary& s)
{
    RunDigest d;
    d.meta = s.meta;
    d.transfer_rate = s.mean_loop_transfer_rate;
    d.loop_delay = s.mean_loop_execution_delay;
    d.latency = s.latency.mean;
    d.waiting = s.waiting.mean;
    d.total_response = s.total_response.mean;
    d.link_waiting = static_cast<double>(s.saturation.link_waiting);
    double u = 0;
    for (const auto& n : s.nodes) u += n.utilization;
    d.utilization = s.nodes.empty() ? 0 : u / static_cast<double>(s.nodes.size());
    return d;
}

inline RunDigest digest_from_json(const json& j)
{
    RunDigest d;
    const auto& m = j.at("meta");
    d.meta = {m.at("run_id").get<std::string>(), m.at("scenario").get<std::string>(), m.at("policy").get<std::string>(),
              m.at("duration").get<double>(), m.at("seed_index").get<std::uint64_t>(), m.at("seed").get<std::uint64_t>()};
    auto opt = [](const json& v) { return v.is_null() ? std::nullopt : std::optional(v.get<double>()); };
    d.transfer_rate = opt(j.at("mean_loop_transfer_rate"));
    d.loop_delay = opt(j.at("mean_loop_execution_delay"));
    d.latency = j.at("latency").at("mean").get<double>();
    d.waiting = j.at("waiting").at("mean").get<double>();
    d.total_response = j.at("total_response").at("mean").get<double>();
    d.link_waiting = j.at("saturation").at("link_waiting").get<double>();
    double u = 0;
    for (const auto& n : j.at("nodes")) u += n.at("utilization").get<double>();
    d.utilization = j.at("nodes").empty() ? 0 : u / static_cast<double>(j.at("nodes").size());
    return d;
}

/// Reads every `*.summary.json` under `dir`.
inline std::vector<RunDigest> load_digests(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.size() > 13 && name.ends_with(".summary.json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<RunDigest> out;
    for (const auto& f : files) out.push_back(digest_from_json(read_json_file(f)));
    return out;
}

struct MeanStd {
    double mean = 0;
    double std = 0;
    std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs)
{
    MeanStd r;
    r.n = xs.size();
    if (xs.empty()) return r;
    for (double x : xs) r.mean += x;
    r.mean /= static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - r.mean) * (x - r.mean);
        r.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return r;
}

struct ComparisonRow {
    std::string scenario;
    double duration = 0;
    std::string policy;
    MeanStd transfer_rate, loop_delay, latency, waiting, total_response, link_waiting, utilization;
};

struct Comparison {
    std::vector<ComparisonRow> rows;
    /// (scenario, duration, policy a, policy b) -> (rate_a - rate_b) / rate_b
    std::map<std::tuple<std::string, double, std::string, std::string>, double> improvement;
};

inline double relative_improvement(double a, double b) { return (a - b) / b; }

inline Comparison compare(const std::vector<RunDigest>& runs)
{
    std::map<std::tuple<std::string, double, std::string>, std::vector<const RunDigest*>> groups;
    for (const auto& r : runs) groups[{r.meta.scenario, r.meta.duration, r.meta.policy}].push_back(&r);

    Comparison cmp;
    for (const auto& [key, members] : groups) {
        ComparisonRow row;
        std::tie(row.scenario, row.duration, row.policy) = key;
        std::vector<double> rate, delay, lat, wait, total, sat, util;
        for (const auto* r : members) {
            if (r->transfer_rate) rate.push_back(*r->transfer_rate);
            if (r->loop_delay) delay.push_back(*r->loop_delay);
            lat.push_back(r->latency);
            wait.push_back(r->waiting);
            total.push_back(r->total_response);
            sat.push_back(r->link_waiting);
            util.push_back(r->utilization);
        }
        row.transfer_rate = mean_std(rate);
        row.loop_delay = mean_std(delay);
        row.latency = mean_std(lat);
        row.waiting = mean_std(wait);
        row.total_response = mean_std(total);
        row.link_waiting = mean_std(sat);
        row.utilization = mean_std(util);
        cmp.rows.push_back(std::move(row));
    }
    for (const auto& a : cmp.rows) {
        for (const auto& b : cmp.rows) {
            if (a.scenario != b.scenario || a.duration != b.duration || a.policy == b.policy) continue;
            if (a.transfer_rate.n == 0 || b.transfer_rate.n == 0 || b.transfer_rate.mean == 0) continue;
            cmp.improvement[{a.scenario, a.duration, a.policy, b.policy}] =
                relative_improvement(a.transfer_rate.mean, b.transfer_rate.mean);
        }
    }
    return cmp;
}

inline std::string duration_label(double d)
{
    std::ostringstream s;
    if (d == std::floor(d) && d < 1e18) {
        s << static_cast<std::uint64_t>(d);
    } else {
        s << d;
    }
    return s.str();
}

inline void print_comparison(const Comparison& cmp, std::ostream& out)
{
    auto cell = [](const MeanStd& m) {
        std::ostringstream s;
        s << std::setprecision(6) << m.mean << " ± " << std::setprecision(3) << m.std;
        return s.str();
    };
    out << "scenario,duration,policy,runs,loop_transfer_rate,loop_execution_delay,latency,waiting,total_response,"
           "link_waiting,utilization\n";
    for (const auto& r : cmp.rows) {
        out << r.scenario << ',' << duration_label(r.duration) << ',' << r.policy << ',' << r.latency.n << ',' << cell(r.transfer_rate)
            << ',' << cell(r.loop_delay) << ',' << cell(r.latency) << ',' << cell(r.waiting) << ','
            << cell(r.total_response) << ',' << cell(r.link_waiting) << ',' << cell(r.utilization) << '\n';
    }
    out << "\nscenario,duration,policy,versus,transfer_rate_improvement\n";
    for (const auto& [key, v] : cmp.improvement) {
        const auto& [sc, d, a, b] = key;
        std::ostringstream pct;
        pct << std::setprecision(4) << v * 100;
        out << sc << ',' << duration_label(d) << ',' << a << ',' << b << ',' << pct.str() << "%\n";
    }
}

} // namespace fogsim
