#include "tdsim/cli.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "tdsim/config.hpp"
#include "tdsim/mapping.hpp"

namespace tdsim {

namespace {

/// Bad flag values detected after CLI11 accepted the command line.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Logger {
    std::ostream& err;
    bool verbose = false;

    void info(const std::string& msg) const {
        if (verbose) err << "[tdsim] " << msg << '\n';
    }
};

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
        throw UsageError(source + ": expected an unsigned integer seed, got '" + text + "'");
    }
    return v;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const AppConfig& config) {
    if (flag) return *flag;
    if (const char* env = std::getenv(kSeedEnvVar); env != nullptr && *env != '\0') {
        return parse_seed(env, kSeedEnvVar);
    }
    return config.seed;
}

BackendKind backend_from_string(const std::string& name) {
    if (name == "full") return BackendKind::FullNode;
    if (name == "light") return BackendKind::LightClient;
    throw UsageError("unknown backend '" + name + "' (expected full|light)");
}

TriggerMode mode_from_string(const std::string& name) {
    if (name == "pessimistic") return TriggerMode::Pessimistic;
    if (name == "probabilistic") return TriggerMode::Probabilistic;
    throw UsageError("unknown trigger mode '" + name + "' (expected pessimistic|probabilistic)");
}

AttackKind attack_arg(const std::string& name) {
    try {
        return attack_from_string(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

ImplementationPreset preset_arg(const std::string& name, const AppConfig& config) {
    try {
        return config.apply_overrides(preset_by_name(name));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

/// "start:stop[:step]" or a single value; inclusive.
std::vector<long> expand_range(const std::string& spec, const std::string& flag) {
    std::vector<long> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
        long v = 0;
        const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
            throw UsageError(flag + ": malformed range '" + spec + "'");
        }
        parts.push_back(v);
    }
    if (parts.empty() || parts.size() > 3) throw UsageError(flag + ": expected start:stop[:step]");
    if (parts.size() == 1) return parts;
    const long step = parts.size() == 3 ? parts[2] : 1;
    if (step <= 0 || parts[1] < parts[0]) throw UsageError(flag + ": range must be increasing with a positive step");
    std::vector<long> out;
    for (long v = parts[0]; v <= parts[1]; v += step) out.push_back(v);
    return out;
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

AppConfig load_app_config(const std::string& path) {
    if (path.empty()) return {};
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
    try {
        return load_config(in);
    } catch (const ConfigError& e) {
        throw UsageError(path + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------

struct EclipseArgs {
    std::optional<long> na, nh;
    std::optional<int> c;
    std::string na_range, nh_range, c_range;
    bool without_replacement = false;
    std::optional<std::uint64_t> seed;
};

int cmd_eclipse_prob(const EclipseArgs& a, const AppConfig& config, std::ostream& out) {
    (void)resolve_seed(a.seed, config);  // closed form: accepted for uniformity
    const long na = a.na.value_or(config.pool.attacker_nodes);
    const long nh = a.nh.value_or(config.pool.honest_nodes);
    const int c = a.c.value_or(config.pool.outbound_count);
    auto prob = [&](const SybilPool& pool) {
        try {
            return a.without_replacement ? eclipse_probability_without_replacement(pool) : eclipse_probability(pool);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    };

    const bool sweep = !a.na_range.empty() || !a.nh_range.empty() || !a.c_range.empty();
    if (!sweep) {
        out << fmt("%.4f", prob(SybilPool{na, nh, c, 0.0})) << '\n';
        return 0;
    }
    const auto nas = a.na_range.empty() ? std::vector<long>{na} : expand_range(a.na_range, "--na-range");
    const auto nhs = a.nh_range.empty() ? std::vector<long>{nh} : expand_range(a.nh_range, "--nh-range");
    const auto cs = a.c_range.empty() ? std::vector<long>{c} : expand_range(a.c_range, "--c-range");
    out << "na,nh,c,probability\n";
    for (long x : nas) {
        for (long y : nhs) {
            for (long z : cs) {
                out << x << ',' << y << ',' << z << ',' << fmt("%.6f", prob(SybilPool{x, y, static_cast<int>(z), 0.0}))
                    << '\n';
            }
        }
    }
    return 0;
}

struct DilateArgs {
    std::optional<Height> lead;
    std::string attack;
    std::string impl = "c-lightning";
    std::string backend = "full";
    std::optional<SimTime> delay;
    bool withhold = false;
    std::string mode;
    std::optional<double> poisoning;
    std::optional<std::uint64_t> seed;
};

int cmd_dilate(const DilateArgs& a, AppConfig config, std::ostream& out, const Logger& log) {
    const BackendKind backend = backend_from_string(a.backend);
    if (!a.mode.empty()) config.trigger_mode = mode_from_string(a.mode);
    if (a.poisoning) config.pool.addrman_poisoning = *a.poisoning;

    Height lead = 144;
    if (a.lead) {
        lead = *a.lead;
    } else if (!a.attack.empty()) {
        lead = target_lead(config.scenario(attack_arg(a.attack), preset_arg(a.impl, config), backend));
    }

    DilationStrategy strategy = DilationStrategy::withhold_all(lead);
    if (a.delay) {
        strategy = DilationStrategy::spaced(*a.delay, lead);
    } else if (backend == BackendKind::FullNode && !a.withhold) {
        strategy = DilationStrategy::spaced(config.per_block_delay, lead);
    }
    const DilationPolicies policies = config.policies();
    try {
        strategy.validate();
        policies.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const std::uint64_t seed = resolve_seed(a.seed, config);
    log.info("dilate lead=" + std::to_string(lead) + " seed=" + std::to_string(seed));
    RandomSource rng(seed);
    std::vector<TraceRecord> trace;
    const DilationOutcome outcome = run_dilation(strategy, backend, policies, rng, &trace);

    out << "# time event victim_height network_height lead\n" << format_trace(trace);
    out << "# outcome=" << (outcome.succeeded() ? std::string_view("success") : to_string(*outcome.failure))
        << " elapsed_hours=" << fmt("%.4f", static_cast<double>(outcome.elapsed) / kHour)
        << " lead=" << outcome.achieved_lead << " de_eclipse_attempts=" << outcome.de_eclipse_attempts << '\n';
    return 0;
}

struct ScenarioArgs {
    std::string attack = "a1";
    std::string impl = "c-lightning";
    std::string backend = "light";
    std::optional<SimTime> delay;
    std::optional<Height> forced_lead;
    bool trace = false;
    bool table_leads = false;
    std::optional<std::uint64_t> seed;
};

int cmd_scenario(const ScenarioArgs& a, AppConfig config, std::ostream& out, const Logger& log) {
    if (a.delay) config.per_block_delay = *a.delay;
    if (a.table_leads) config.lead_convention = LeadConvention::TableColumns;
    const ScenarioConfig sc = config.scenario(attack_arg(a.attack), preset_arg(a.impl, config),
                                              backend_from_string(a.backend));
    try {
        sc.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const std::uint64_t seed = resolve_seed(a.seed, config);
    ScenarioResult result;
    if (a.forced_lead) {
        if (*a.forced_lead < 0) throw UsageError("--forced-lead must be >= 0");
        log.info("protocol only, lead " + std::to_string(*a.forced_lead));
        result.lead = *a.forced_lead;
        result.protocol = run_protocol(sc, result.lead);
        result.success = result.protocol.success;
        result.stolen = result.protocol.stolen;
        result.failure_cause = result.protocol.failure;
    } else {
        log.info("scenario seed=" + std::to_string(seed));
        RandomSource rng(seed);
        result = run_scenario(sc, rng);
    }
    out << describe(sc, result, a.trace);
    return 0;
}

struct ExperimentArgs {
    std::string attack = "all";
    std::optional<long> trials;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format;
    bool serial = false;
    bool table_leads = false;
};

int cmd_experiment(const ExperimentArgs& a, AppConfig config, std::ostream& out, const Logger& log) {
    if (a.trials) config.trials = *a.trials;
    if (a.table_leads) config.lead_convention = LeadConvention::TableColumns;
    config.seed = resolve_seed(a.seed, config);
    const std::string path = a.out.empty() ? config.out : a.out;
    OutputFormat format = config.format;
    if (!a.format.empty()) {
        try {
            format = format_from_string(a.format);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    std::optional<AttackKind> only;
    if (a.attack != "all") only = attack_arg(a.attack);

    // Seeds index the full plan, so a single-attack run reproduces its rows
    // of the all-attack table.
    const ExperimentPlan plan = config.plan({AttackKind::A1, AttackKind::A2, AttackKind::A3});
    try {
        config.validate();
        plan.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    const auto cells = plan.cells();
    const Execution exec = a.serial ? Execution::Serial : Execution::Parallel;
    std::vector<CellSummary> results;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (only && cells[i].attack != *only) continue;
        log.info("cell " + std::to_string(i + 1) + "/" + std::to_string(cells.size()) + " " +
                 std::string(to_string(cells[i].attack)) + " " + cells[i].implementation + " " +
                 std::string(to_string(cells[i].backend)));
        results.push_back(run_cell(cells[i], plan, plan.base_seed + i, exec));
    }

    if (path.empty() || path == "-") {
        out << (format == OutputFormat::Csv ? to_csv(results) : to_json(results));
    } else {
        emit(results, format, path);
        log.info("wrote " + std::to_string(results.size()) + " rows to " + path);
    }
    return 0;
}

struct MapArgs {
    std::string bitcoin;
    std::string lightning;
    std::string out;
    long trials = 0;
    std::optional<std::uint64_t> seed;
};

NodeList read_node_list(const std::string& path, std::ostream& err) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read node list '" + path + "'");
    NodeList list = parse_node_list(in);
    for (const auto& issue : list.issues) err << path << ':' << issue.line << ": " << issue.message << '\n';
    return list;
}

int cmd_map(const MapArgs& a, const AppConfig& config, std::ostream& out, std::ostream& err) {
    const NodeList btc = read_node_list(a.bitcoin, err);
    const NodeList ln = read_node_list(a.lightning, err);
    const MatchReport report = correlate_by_ip(btc.records, ln.records);
    const std::string csv = match_report_csv(report);
    if (a.out.empty()) {
        out << csv;
    } else {
        std::ofstream file(a.out, std::ios::binary | std::ios::trunc);
        if (!file || !(file << csv).flush()) throw std::runtime_error("cannot write '" + a.out + "'");
    }
    out << "# matches=" << report.matches << " pairs=" << report.pairs.size() << " bitcoin=" << report.bitcoin_total
        << " lightning=" << report.lightning_total << " skipped=" << btc.issues.size() + ln.issues.size() << '\n';
    if (a.trials > 0) {
        const std::uint64_t seed = resolve_seed(a.seed, config);
        const double direct = first_spy_direct_probability(config.pool);
        const double simulated = simulate_origin_inference(config.pool, a.trials, seed);
        out << "# first_spy direct=" << fmt("%.4f", direct) << " simulated=" << fmt("%.4f", simulated) << '\n';
    }
    return 0;
}

}  // namespace

int parse_and_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Time-dilation attack simulator for Lightning channels", "tdsim"};
    app.fallthrough();
    app.require_subcommand(1);

    std::string config_path;
    bool verbose = false;
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_flag("-v,--verbose", verbose, "progress messages on stderr");

    EclipseArgs ea;
    auto* eclipse = app.add_subcommand("eclipse-prob", "probability that every outbound slot is a Sybil");
    eclipse->add_option("--na", ea.na, "attacker nodes");
    eclipse->add_option("--nh", ea.nh, "honest nodes");
    eclipse->add_option("--c", ea.c, "outbound connections");
    eclipse->add_option("--na-range", ea.na_range, "sweep attacker nodes, start:stop[:step]");
    eclipse->add_option("--nh-range", ea.nh_range, "sweep honest nodes, start:stop[:step]");
    eclipse->add_option("--c-range", ea.c_range, "sweep outbound connections, start:stop[:step]");
    eclipse->add_flag("--without-replacement", ea.without_replacement, "distinct peers per slot");
    eclipse->add_option("--seed", ea.seed, "RNG seed");

    DilateArgs da;
    auto* dilate = app.add_subcommand("dilate", "single dilation trial with an event trace");
    dilate->add_option("--lead", da.lead, "target lead in blocks (default 144)");
    dilate->add_option("--attack", da.attack, "derive the lead from an attack: a1|a2|a3");
    dilate->add_option("--impl", da.impl, "implementation preset for --attack");
    dilate->add_option("--backend", da.backend, "full|light");
    dilate->add_option("--delay", da.delay, "per-block delay in seconds");
    dilate->add_flag("--withhold", da.withhold, "withhold every block even on a full node");
    dilate->add_option("--mode", da.mode, "pessimistic|probabilistic");
    dilate->add_option("--poisoning", da.poisoning, "address-manager poisoning in [0,1]");
    dilate->add_option("--seed", da.seed, "RNG seed");

    ScenarioArgs sa;
    auto* scenario = app.add_subcommand("scenario", "one end-to-end attack");
    scenario->add_option("--attack", sa.attack, "a1|a2|a3");
    scenario->add_option("--impl", sa.impl, "implementation preset");
    scenario->add_option("--backend", sa.backend, "full|light");
    scenario->add_option("--delay", sa.delay, "full-node per-block delay in seconds");
    scenario->add_option("--forced-lead", sa.forced_lead, "skip dilation and play the protocol at this lead");
    scenario->add_flag("--trace", sa.trace, "print the step timeline");
    scenario->add_flag("--table-leads", sa.table_leads, "A2/A3 leads without the extra block");
    scenario->add_option("--seed", sa.seed, "RNG seed");

    ExperimentArgs xa;
    auto* experiment = app.add_subcommand("experiment", "Monte-Carlo tables over every preset and backend");
    experiment->add_option("--attack", xa.attack, "a1|a2|a3|all");
    experiment->add_option("--trials", xa.trials, "trials per cell");
    experiment->add_option("--seed", xa.seed, "base seed; cell i uses seed + i");
    experiment->add_option("--out", xa.out, "output file (default stdout)");
    experiment->add_option("--format", xa.format, "csv|json");
    experiment->add_flag("--serial", xa.serial, "run trials on one thread");
    experiment->add_flag("--table-leads", xa.table_leads, "A2/A3 leads without the extra block");

    MapArgs ma;
    auto* map = app.add_subcommand("map", "match Bitcoin and Lightning nodes by address");
    map->add_option("--bitcoin", ma.bitcoin, "id,endpoint list of Bitcoin nodes")->required();
    map->add_option("--lightning", ma.lightning, "id,endpoint list of Lightning nodes")->required();
    map->add_option("--out", ma.out, "match CSV (default stdout)");
    map->add_option("--trials", ma.trials, "also estimate first-spy origin inference");
    map->add_option("--seed", ma.seed, "RNG seed");

    if (args.empty()) {
        err << app.help();
        return 1;
    }
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    const Logger log{err, verbose};
    try {
        const AppConfig config = load_app_config(config_path);
        if (eclipse->parsed()) return cmd_eclipse_prob(ea, config, out);
        if (dilate->parsed()) return cmd_dilate(da, config, out, log);
        if (scenario->parsed()) return cmd_scenario(sa, config, out, log);
        if (experiment->parsed()) return cmd_experiment(xa, config, out, log);
        if (map->parsed()) return cmd_map(ma, config, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    err << app.help();
    return 1;
}

}  // namespace tdsim
