#pragma once

// Plain-text `key = value` configuration shared by every subcommand.

#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdsim/experiments.hpp"

namespace tdsim {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct AppConfig {
    StaleTipPolicy stale;
    IbdPolicy ibd;
    SybilPool pool{500, 50, 8, 0.0};
    TriggerMode trigger_mode = TriggerMode::Pessimistic;
    SimTime per_block_delay = kDefaultPerBlockDelay;
    int max_blocks = 10'000;
    long trials = 10'000;
    std::uint64_t seed = 42;
    Satoshi capacity = kDefaultCapacity;
    double reserve_fraction = kDefaultReserveFraction;
    Satoshi max_inflight = 0;
    Satoshi htlc_amount = 0;
    Height final_delta = kDefaultFinalDelta;
    LeadConvention lead_convention = LeadConvention::AttackText;
    std::optional<Height> csv_delta;
    std::optional<Height> cltv_delta;
    std::optional<Height> timeout_policy;
    std::string out;
    OutputFormat format = OutputFormat::Csv;

    /// Applies one key. Unknown keys and unparsable values throw ConfigError.
    void set(const std::string& key, const std::string& value);
    void validate() const;

    [[nodiscard]] ImplementationPreset apply_overrides(ImplementationPreset preset) const;
    [[nodiscard]] DilationPolicies policies() const;
    [[nodiscard]] ScenarioConfig scenario(AttackKind kind, const ImplementationPreset& preset,
                                          BackendKind backend) const;
    [[nodiscard]] ExperimentPlan plan(std::vector<AttackKind> attacks) const;
};

/// Every key accepted by AppConfig::set, in documentation order.
const std::vector<std::string>& config_keys();

AppConfig load_config(std::istream& in);
AppConfig load_config_file(const std::string& path);

}  // namespace tdsim
