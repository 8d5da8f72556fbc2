#include "tdsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace tdsim {

std::vector<CellSpec> ExperimentPlan::cells() const {
    std::vector<CellSpec> out;
    for (AttackKind attack : attacks) {
        for (const auto& preset : presets) {
            std::vector<std::pair<ImplementationPreset, std::string>> variants{{preset, preset.name}};
            if (attack == AttackKind::A1 && preset.csv_delta_max && *preset.csv_delta_max != preset.csv_delta) {
                ImplementationPreset upper = preset;
                upper.csv_delta = *preset.csv_delta_max;
                variants.emplace_back(upper, preset.name + "-csv" + std::to_string(upper.csv_delta));
            }
            for (const auto& [p, label] : variants) {
                for (BackendKind backend : backends) out.push_back(CellSpec{attack, p, label, backend});
            }
        }
    }
    return out;
}

void ExperimentPlan::validate() const {
    if (trials_per_cell < 1) throw std::invalid_argument("trials per cell must be >= 1");
    if (attacks.empty() || presets.empty() || backends.empty()) throw std::invalid_argument("empty experiment plan");
    if (full_node_delay < 0) throw std::invalid_argument("full-node delay must be >= 0");
    base.validate();
}

ScenarioConfig cell_config(const CellSpec& cell, const ExperimentPlan& plan) {
    ScenarioConfig c = plan.base;
    c.kind = cell.attack;
    c.preset = cell.preset;
    c.backend = cell.backend;
    c.per_block_delay = cell.backend == BackendKind::FullNode ? std::optional<SimTime>(plan.full_node_delay)
                                                              : std::nullopt;
    return c;
}

namespace {

struct TrialRecord {
    bool success = false;
    SimTime elapsed = 0;
    std::string error;
};

template <typename Trial>
std::vector<TrialRecord> run_trials(long trials, std::uint64_t seed, Execution execution, const Trial& trial) {
    std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
    auto one = [&](long i) {
        auto& rec = records[static_cast<std::size_t>(i)];
        try {
            RandomSource rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
            trial(rng, rec);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    };
    if (execution == Execution::Serial) {
        for (long i = 0; i < trials; ++i) one(i);
    } else {
#pragma omp parallel for schedule(dynamic, 64)
        for (long i = 0; i < trials; ++i) one(i);
    }
    for (long i = 0; i < trials; ++i) {
        const auto& rec = records[static_cast<std::size_t>(i)];
        if (!rec.error.empty()) {
            throw std::runtime_error("trial " + std::to_string(i) + " (seed " + std::to_string(seed) +
                                     ") failed: " + rec.error);
        }
    }
    return records;
}

double nearest_rank(const std::vector<double>& sorted, double pct) {
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

}  // namespace

CellSummary run_cell(const CellSpec& cell, const ExperimentPlan& plan, std::uint64_t cell_seed, Execution execution) {
    plan.validate();
    const ScenarioConfig config = cell_config(cell, plan);
    std::vector<TrialRecord> records;
    try {
        records = run_trials(plan.trials_per_cell, cell_seed, execution, [&](RandomSource& rng, TrialRecord& rec) {
            const ScenarioResult r = run_scenario(config, rng);
            rec.success = r.success;
            rec.elapsed = r.dilation.elapsed;
        });
    } catch (const std::exception& e) {
        throw std::runtime_error("cell " + std::string(to_string(cell.attack)) + "/" + cell.implementation + "/" +
                                 std::string(to_string(cell.backend)) + ": " + e.what());
    }

    CellSummary s;
    s.attack = cell.attack;
    s.implementation = cell.implementation;
    s.backend = cell.backend;
    s.target_lead = target_lead(config);
    s.trials = plan.trials_per_cell;
    s.seed = cell_seed;

    std::vector<double> hours;
    hours.reserve(records.size());
    for (const auto& r : records) {
        if (r.success) hours.push_back(static_cast<double>(r.elapsed) / static_cast<double>(kHour));
    }
    std::sort(hours.begin(), hours.end());
    s.successes = static_cast<long>(hours.size());
    s.failure_rate = static_cast<double>(s.trials - s.successes) / static_cast<double>(s.trials);
    if (hours.empty()) {
        s.mean_hours = s.p5_hours = s.p95_hours = s.std_error_hours = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    const double n = static_cast<double>(hours.size());
    s.mean_hours = std::accumulate(hours.begin(), hours.end(), 0.0) / n;
    double ss = 0.0;
    for (double h : hours) ss += (h - s.mean_hours) * (h - s.mean_hours);
    s.std_error_hours = hours.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
    s.p5_hours = nearest_rank(hours, 5.0);
    s.p95_hours = nearest_rank(hours, 95.0);
    return s;
}

std::vector<CellSummary> run_table(AttackKind attack, const ExperimentPlan& plan, Execution execution) {
    std::vector<CellSummary> out;
    const auto cells = plan.cells();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].attack != attack) continue;
        out.push_back(run_cell(cells[i], plan, plan.base_seed + i, execution));
    }
    return out;
}

std::vector<CellSummary> run_plan(const ExperimentPlan& plan, Execution execution) {
    std::vector<CellSummary> out;
    const auto cells = plan.cells();
    out.reserve(cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) out.push_back(run_cell(cells[i], plan, plan.base_seed + i, execution));
    return out;
}

std::vector<SweepPoint> failure_sweep(std::span<const SimTime> delays, Height target_lead, long trials,
                                      std::uint64_t seed, const DilationPolicies& policies, Execution execution) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    std::vector<SweepPoint> out;
    for (SimTime delay : delays) {
        if (delay >= policies.stale.threshold) {
            throw std::invalid_argument("sweep delays must stay below the stale-tip threshold");
        }
        const DilationStrategy strategy = DilationStrategy::spaced(delay, target_lead);
        const auto records = run_trials(trials, seed, execution, [&](RandomSource& rng, TrialRecord& rec) {
            const auto outcome = run_dilation(strategy, BackendKind::FullNode, policies, rng);
            rec.success = outcome.succeeded();
            rec.elapsed = outcome.elapsed;
        });
        const auto failures = std::count_if(records.begin(), records.end(), [](const TrialRecord& r) { return !r.success; });
        out.push_back({delay, static_cast<double>(failures) / static_cast<double>(trials), trials});
    }
    return out;
}

OutputFormat format_from_string(std::string_view name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw std::invalid_argument("unknown output format '" + std::string(name) + "'");
}

namespace {

std::string fixed4(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string json_number(double v) { return std::isnan(v) ? "null" : fixed4(v); }

}  // namespace

std::string to_csv(const std::vector<CellSummary>& results) {
    std::ostringstream out;
    out << "attack,implementation,backend,trials,mean_hours,p5_hours,p95_hours,failure_rate,seed\n";
    for (const auto& r : results) {
        out << to_string(r.attack) << ',' << r.implementation << ',' << to_string(r.backend) << ',' << r.trials << ','
            << fixed4(r.mean_hours) << ',' << fixed4(r.p5_hours) << ',' << fixed4(r.p95_hours) << ','
            << fixed4(r.failure_rate) << ',' << r.seed << '\n';
    }
    return out.str();
}

std::string to_json(const std::vector<CellSummary>& results) {
    using nlohmann::json;
    std::ostringstream out;
    out << "[\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        out << "  {\"attack\": " << json(std::string(to_string(r.attack))).dump()
            << ", \"implementation\": " << json(r.implementation).dump()
            << ", \"backend\": " << json(std::string(to_string(r.backend))).dump() << ", \"trials\": " << r.trials
            << ", \"mean_hours\": " << json_number(r.mean_hours) << ", \"p5_hours\": " << json_number(r.p5_hours)
            << ", \"p95_hours\": " << json_number(r.p95_hours)
            << ", \"failure_rate\": " << json_number(r.failure_rate) << ", \"seed\": " << r.seed << '}'
            << (i + 1 < results.size() ? "," : "") << '\n';
    }
    out << "]\n";
    return out.str();
}

void emit(const std::vector<CellSummary>& results, OutputFormat format, const std::string& path) {
    if (results.empty()) throw std::invalid_argument("nothing to emit");
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
    file << (format == OutputFormat::Csv ? to_csv(results) : to_json(results));
    if (!file.flush()) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace tdsim
