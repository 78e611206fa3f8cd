#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "blob/calibration.hpp"
#include "blob/config.hpp"

namespace blob {

struct RunResult {
    MethodKind method = MethodKind::blob;
    std::uint64_t seed = 0;
    std::string task;
    Shift shift = Shift::none;
    std::size_t n_samples = 0;
    bool ok = false;
    std::string error;  // set when !ok
    CalibrationReport report;
    double wall_time = 0.0;  // seconds, training plus evaluation
};

struct AggregateRow {
    MethodKind method = MethodKind::blob;
    std::size_t n_samples = 0;
    std::size_t runs = 0;
    double acc_mean = 0.0, acc_std = 0.0;
    double ece_mean = 0.0, ece_std = 0.0;
    double nll_mean = 0.0, nll_std = 0.0;
};

// Prediction seed for one run.
std::uint64_t predict_seed(std::uint64_t seed) noexcept;

// Trains `method` on the task drawn with `seed` and evaluates it for every N
// in `n_samples` (deterministic methods: N = 0 only). Failures are returned as
// rows with ok = false.
std::vector<RunResult> run_cell(const ExperimentConfig& config, MethodKind method,
                                std::uint64_t seed);

// methods × seeds cells, in config order.
std::vector<RunResult> run_suite(const ExperimentConfig& config);

// Mean and sample standard deviation over seeds for each (method, N).
std::vector<AggregateRow> aggregate(const std::vector<RunResult>& results);

// Outputs carry no timing so reruns are byte-identical; wall times go to
// write_timing_csv.
void write_results_csv(std::ostream& out, const std::vector<RunResult>& results);
void write_results_json(std::ostream& out, const std::vector<RunResult>& results);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_timing_csv(std::ostream& out, const std::vector<RunResult>& results);

} // namespace blob
