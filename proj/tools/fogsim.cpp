#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fogsim/harness.hpp"

using namespace fogsim;

namespace {

struct SimulateArgs {
    std::string config;
    std::string scenario = "generic";
    std::string policy = "all";
    std::vector<double> durations{1e4};
    std::size_t seeds = 10;
    std::uint64_t seed = 1;
    std::string out = "results";
    bool dump_decisions = false;
    bool dump_events = false;
    bool no_messages = false;
    double bucket = 0;
    double scale = 100;
    std::size_t threads = 0;
    std::string service = "deterministic";
};

ExperimentConfig build_config(const SimulateArgs& a, const CLI::App& cmd)
{
    ExperimentConfig c;
    if (!a.config.empty()) c = config_from_json(read_json_file(a.config));
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    if (given("--scenario")) c.scenario = parse_scenario(a.scenario);
    if (given("--policy")) {
        c.policies.clear();
        if (a.policy == "all") {
            c.policies.assign(all_policies.begin(), all_policies.end());
        } else {
            c.policies.push_back(parse_policy(a.policy));
        }
    }
    if (given("--duration")) c.durations = a.durations;
    if (given("--seeds")) c.seed_count = a.seeds;
    if (given("--seed")) c.seed = a.seed;
    if (given("--out")) c.out_dir = a.out;
    if (given("--dump-decisions")) c.dump_decisions = true;
    if (given("--dump-events")) c.dump_events = true;
    if (given("--no-messages")) c.write_messages = false;
    if (given("--bucket")) c.bucket = a.bucket;
    if (given("--scale")) c.arrival_scale = a.scale;
    if (given("--threads")) c.threads = a.threads;
    if (given("--service")) c.service = parse_service_model(a.service);
    c.validate();
    return c;
}

int simulate(const SimulateArgs& a, const CLI::App& cmd)
{
    const auto config = build_config(a, cmd);
    const auto results = run_experiment(config);
    std::cout << "wrote " << results.size() << " runs to " << config.out_dir << "\n\n";
    std::vector<RunDigest> digests;
    for (const auto& r : results) digests.push_back(digest(r));
    print_comparison(compare(digests), std::cout);
    return 0;
}

int compare_dir(const std::string& dir, const std::string& out)
{
    const auto cmp = compare(load_digests(dir));
    print_comparison(cmp, std::cout);
    const auto path = out.empty() ? std::filesystem::path(dir) / "compare.csv" : std::filesystem::path(out);
    std::ofstream file(path);
    if (!file) throw std::runtime_error("cannot write " + path.string());
    print_comparison(cmp, file);
    return 0;
}

json topology_report(const Topology& topo, const std::vector<std::int64_t>& centrality)
{
    auto j = to_json(topo);
    for (std::size_t i = 0; i < centrality.size(); ++i) j["nodes"][i]["centrality"] = centrality[i];
    return j;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Discrete-event fog network simulator with multi-criteria service selection"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "run a sweep of policies, durations and seeds");
    simulate_cmd->add_option("--config", sim.config, "JSON experiment config; flags override its values")
        ->check(CLI::ExistingFile);
    simulate_cmd->add_option("--scenario", sim.scenario, "generic | as")->check(CLI::IsMember({"generic", "as"}));
    simulate_cmd->add_option("--policy", sim.policy, "random | drr | nearest | fastest | electre | all")
        ->check(CLI::IsMember({"random", "drr", "nearest", "fastest", "electre", "all"}));
    simulate_cmd->add_option("--duration", sim.durations, "simulated time steps (repeatable)");
    simulate_cmd->add_option("--seeds", sim.seeds, "number of seeds per policy and duration")->check(CLI::PositiveNumber);
    simulate_cmd->add_option("--seed", sim.seed, "master seed");
    simulate_cmd->add_option("--out", sim.out, "output directory");
    simulate_cmd->add_flag("--dump-decisions", sim.dump_decisions, "write one JSON line per ELECTRE decision");
    simulate_cmd->add_flag("--dump-events", sim.dump_events, "write one JSON line per processed event");
    simulate_cmd->add_flag("--no-messages", sim.no_messages, "skip the per-message CSV");
    simulate_cmd->add_option("--bucket", sim.bucket, "width of the bucketed completion view (0 disables)");
    simulate_cmd->add_option("--scale", sim.scale, "mean inter-arrival time");
    simulate_cmd->add_option("--threads", sim.threads, "worker threads (0 = all cores)");
    simulate_cmd->add_option("--service", sim.service, "deterministic | exponential")
        ->check(CLI::IsMember({"deterministic", "exponential"}));

    std::string compare_in, compare_out;
    auto* compare_cmd = app.add_subcommand("compare", "summarize a results directory");
    compare_cmd->add_option("--in", compare_in, "directory holding *.summary.json files")->required();
    compare_cmd->add_option("--out", compare_out, "CSV path (default <in>/compare.csv)");

    auto* topo_cmd = app.add_subcommand("topo", "inspect or export topologies");
    topo_cmd->require_subcommand(1);
    std::string gen_scenario = "as", gen_out;
    std::uint64_t gen_seed = 1;
    std::size_t gen_nodes = 32;
    auto* gen_cmd = topo_cmd->add_subcommand("gen", "generate a topology as JSON");
    gen_cmd->add_option("--scenario", gen_scenario, "generic | as")->check(CLI::IsMember({"generic", "as"}));
    gen_cmd->add_option("--seed", gen_seed, "topology seed");
    gen_cmd->add_option("--nodes", gen_nodes, "graph size before the cloud is added");
    gen_cmd->add_option("--out", gen_out, "output file (default stdout)");
    std::string show_in;
    auto* show_cmd = topo_cmd->add_subcommand("show", "print nodes, links and centrality of a topology file");
    show_cmd->add_option("file", show_in, "topology JSON")->required()->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*simulate_cmd) return simulate(sim, *simulate_cmd);
        if (*compare_cmd) return compare_dir(compare_in, compare_out);
        if (*gen_cmd) {
            json j;
            if (gen_scenario == "generic") {
                const auto topo = build_generic_topology();
                j = topology_report(topo, betweenness_centrality(topo));
            } else {
                const auto g = generate_as_topology_detailed(gen_seed, AsParameters{.target_nodes = gen_nodes});
                j = topology_report(g.topology, g.centrality);
            }
            if (gen_out.empty()) {
                std::cout << j.dump(2) << '\n';
            } else {
                write_json_file(j, gen_out);
            }
            return 0;
        }
        if (*show_cmd) {
            auto j = read_json_file(show_in);
            for (auto& n : j["nodes"]) n.erase("centrality");
            const auto topo = topology_from_json(j);
            const auto centrality = betweenness_centrality(topo);
            std::cout << "nodes " << topo.node_count() << ", links " << topo.links().size() << '\n';
            for (const auto& n : topo.nodes()) {
                std::cout << "  " << n.id << ' ' << to_string(n.kind) << " ipt=" << n.ipt
                          << " centrality=" << centrality[n.id] << " degree=" << topo.neighbors(n.id).size() << '\n';
            }
            for (const auto& l : topo.links()) {
                std::cout << "  link " << l.id << ": " << l.a << " - " << l.b << " bw=" << l.bw << " pr=" << l.pr
                          << '\n';
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
