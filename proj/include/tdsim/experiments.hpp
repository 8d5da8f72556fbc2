#pragma once

// Monte-Carlo harness: per-cell scenario trials, failure-rate sweeps over
// the per-block delay, and CSV/JSON emission.
//
// Every trial owns a generator seeded with mix_seed(cell_seed, trial_index),
// so the OpenMP kernels and their serial references produce identical
// per-trial results regardless of thread count or scheduling.

#include <span>
#include <string>
#include <vector>

#include "tdsim/scenarios.hpp"

namespace tdsim {

enum class Execution : std::uint8_t { Serial, Parallel };

struct CellSpec {
    AttackKind attack = AttackKind::A1;
    ImplementationPreset preset;
    /// Row label; ranged csv presets get one row per bound.
    std::string implementation;
    BackendKind backend = BackendKind::LightClient;
};

struct ExperimentPlan {
    std::vector<AttackKind> attacks{AttackKind::A1, AttackKind::A2, AttackKind::A3};
    std::vector<ImplementationPreset> presets = default_presets();
    std::vector<BackendKind> backends{BackendKind::LightClient, BackendKind::FullNode};
    long trials_per_cell = 10'000;
    std::uint64_t base_seed = 42;
    /// Shared scenario parameters; kind, preset and backend are set per cell.
    ScenarioConfig base;
    SimTime full_node_delay = kDefaultPerBlockDelay;

    /// Cells in emission order; cell i runs with seed base_seed + i.
    [[nodiscard]] std::vector<CellSpec> cells() const;
    void validate() const;
};

struct CellSummary {
    AttackKind attack = AttackKind::A1;
    std::string implementation;
    BackendKind backend = BackendKind::LightClient;
    Height target_lead = 0;
    long trials = 0;
    long successes = 0;
    /// Over successful trials; NaN when none succeeded.
    double mean_hours = 0.0;
    double p5_hours = 0.0;
    double p95_hours = 0.0;
    double std_error_hours = 0.0;
    double failure_rate = 0.0;
    std::uint64_t seed = 0;
};

ScenarioConfig cell_config(const CellSpec& cell, const ExperimentPlan& plan);

CellSummary run_cell(const CellSpec& cell, const ExperimentPlan& plan, std::uint64_t cell_seed,
                     Execution execution = Execution::Parallel);

/// Every preset x backend cell of one attack, seeded as in the full plan.
std::vector<CellSummary> run_table(AttackKind attack, const ExperimentPlan& plan,
                                   Execution execution = Execution::Parallel);

std::vector<CellSummary> run_plan(const ExperimentPlan& plan, Execution execution = Execution::Parallel);

struct SweepPoint {
    SimTime delay = 0;
    double failure_rate = 0.0;
    long trials = 0;
};

/// Full-node dilation failure rate per delay. Every delay reuses the same
/// per-trial seeds, so the rates are comparable trial by trial.
std::vector<SweepPoint> failure_sweep(std::span<const SimTime> delays, Height target_lead, long trials,
                                      std::uint64_t seed, const DilationPolicies& policies = {},
                                      Execution execution = Execution::Parallel);

enum class OutputFormat : std::uint8_t { Csv, Json };

OutputFormat format_from_string(std::string_view name);

/// Columns: attack, implementation, backend, trials, mean_hours, p5_hours,
/// p95_hours, failure_rate, seed. Floats carry four decimals.
std::string to_csv(const std::vector<CellSummary>& results);
std::string to_json(const std::vector<CellSummary>& results);

/// Writes results to `path`. Throws std::runtime_error if the file cannot
/// be written and std::invalid_argument for an empty result set.
void emit(const std::vector<CellSummary>& results, OutputFormat format, const std::string& path);

}  // namespace tdsim
