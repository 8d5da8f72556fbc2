#include "tdsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace tdsim {

namespace {

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
    Int out{};
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': expected an integer, got '" + value + "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != value.size() || value.empty() || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "off" || value == "no") return false;
    throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "stale_threshold", "stale_retry_interval", "stale_enabled", "ibd_enabled", "ibd_lag_threshold",
        "per_block_delay", "trigger_mode", "attacker_nodes", "honest_nodes", "outbound_count",
        "addrman_poisoning", "max_blocks", "trials", "seed", "capacity", "reserve", "max_inflight",
        "htlc_amount", "final_delta", "lead_convention", "csv_delta", "cltv_delta", "timeout_policy", "out",
        "format",
    };
    return keys;
}

void AppConfig::set(const std::string& key, const std::string& value) {
    if (key == "stale_threshold") stale.threshold = parse_int<SimTime>(key, value);
    else if (key == "stale_retry_interval") stale.retry_interval = parse_int<SimTime>(key, value);
    else if (key == "stale_enabled") stale.enabled = parse_bool(key, value);
    else if (key == "ibd_enabled") ibd.enabled = parse_bool(key, value);
    else if (key == "ibd_lag_threshold") ibd.lag_threshold = parse_int<SimTime>(key, value);
    else if (key == "per_block_delay") per_block_delay = parse_int<SimTime>(key, value);
    else if (key == "trigger_mode") {
        if (value == "pessimistic") trigger_mode = TriggerMode::Pessimistic;
        else if (value == "probabilistic") trigger_mode = TriggerMode::Probabilistic;
        else throw ConfigError("config key 'trigger_mode': expected pessimistic|probabilistic");
    } else if (key == "attacker_nodes") pool.attacker_nodes = parse_int<long>(key, value);
    else if (key == "honest_nodes") pool.honest_nodes = parse_int<long>(key, value);
    else if (key == "outbound_count") pool.outbound_count = parse_int<int>(key, value);
    else if (key == "addrman_poisoning") pool.addrman_poisoning = parse_double(key, value);
    else if (key == "max_blocks") max_blocks = parse_int<int>(key, value);
    else if (key == "trials") trials = parse_int<long>(key, value);
    else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
    else if (key == "capacity") capacity = parse_int<Satoshi>(key, value);
    else if (key == "reserve") reserve_fraction = parse_double(key, value);
    else if (key == "max_inflight") max_inflight = parse_int<Satoshi>(key, value);
    else if (key == "htlc_amount") htlc_amount = parse_int<Satoshi>(key, value);
    else if (key == "final_delta") final_delta = parse_int<Height>(key, value);
    else if (key == "lead_convention") {
        if (value == "attack-text") lead_convention = LeadConvention::AttackText;
        else if (value == "table") lead_convention = LeadConvention::TableColumns;
        else throw ConfigError("config key 'lead_convention': expected attack-text|table");
    } else if (key == "csv_delta") csv_delta = parse_int<Height>(key, value);
    else if (key == "cltv_delta") cltv_delta = parse_int<Height>(key, value);
    else if (key == "timeout_policy") timeout_policy = parse_int<Height>(key, value);
    else if (key == "out") out = value;
    else if (key == "format") {
        try {
            format = format_from_string(value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config key 'format': ") + e.what());
        }
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

void AppConfig::validate() const {
    try {
        policies().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (per_block_delay < 0) throw ConfigError("per_block_delay must be >= 0");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (capacity <= 0) throw ConfigError("capacity must be positive");
    if (reserve_fraction < 0.0 || reserve_fraction > 1.0) throw ConfigError("reserve must lie in [0, 1]");
    if (final_delta < 1) throw ConfigError("final_delta must be >= 1");
    for (const auto& v : {csv_delta, cltv_delta, timeout_policy}) {
        if (v && *v < 1) throw ConfigError("timelock overrides must be >= 1");
    }
}

ImplementationPreset AppConfig::apply_overrides(ImplementationPreset preset) const {
    if (csv_delta) {
        preset.csv_delta = *csv_delta;
        preset.csv_delta_max.reset();
    }
    if (cltv_delta) preset.cltv_delta = *cltv_delta;
    if (timeout_policy) preset.timeout_policy = *timeout_policy;
    return preset;
}

DilationPolicies AppConfig::policies() const {
    DilationPolicies p;
    p.stale = stale;
    p.ibd = ibd;
    p.pool = pool;
    p.mode = trigger_mode;
    p.max_blocks = max_blocks;
    return p;
}

ScenarioConfig AppConfig::scenario(AttackKind kind, const ImplementationPreset& preset, BackendKind backend) const {
    ScenarioConfig c = ScenarioConfig::make(kind, apply_overrides(preset), backend);
    if (backend == BackendKind::FullNode) c.per_block_delay = per_block_delay;
    c.policies = policies();
    c.channel_capacity = capacity;
    c.reserve = static_cast<Satoshi>(std::llround(static_cast<double>(capacity) * reserve_fraction));
    c.max_inflight = max_inflight;
    c.htlc_amount = htlc_amount;
    c.final_delta = final_delta;
    c.lead_convention = lead_convention;
    return c;
}

ExperimentPlan AppConfig::plan(std::vector<AttackKind> attacks) const {
    ExperimentPlan p;
    p.attacks = std::move(attacks);
    p.presets.clear();
    for (const auto& preset : default_presets()) p.presets.push_back(apply_overrides(preset));
    p.trials_per_cell = trials;
    p.base_seed = seed;
    p.base = scenario(AttackKind::A1, p.presets.front(), BackendKind::LightClient);
    p.full_node_delay = per_block_delay;
    return p;
}

AppConfig load_config(std::istream& in) {
    AppConfig config;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        try {
            config.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    config.validate();
    return config;
}

AppConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    return load_config(in);
}

}  // namespace tdsim
