#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "blob/matrix.hpp"

namespace blob {

struct ReliabilityBin {
    double lo = 0.0;  // bin covers (lo, hi]; the first bin also holds confidence 0
    double hi = 0.0;
    std::size_t count = 0;
    double mean_conf = 0.0;
    double mean_acc = 0.0;
};

struct NllResult {
    double mean = 0.0;
    double sum = 0.0;
    std::size_t clamped = 0;  // true-label probabilities raised to the 1e-12 floor
};

struct CalibrationReport {
    double acc = 0.0;
    double ece = 0.0;
    double nll = 0.0;
    double nll_sum = 0.0;
    std::size_t nll_clamped = 0;
    std::size_t n = 0;
    std::vector<ReliabilityBin> bins;
};

inline constexpr double kProbFloor = 1e-12;

// Top-label confidence binning with equal-width, right-inclusive bins.
std::vector<ReliabilityBin> reliability_bins(const Matrix& probs, const std::vector<int>& labels,
                                             std::size_t n_bins = 15);
double ece_from_bins(const std::vector<ReliabilityBin>& bins);

NllResult nll(const Matrix& probs, const std::vector<int>& labels);
double accuracy(const Matrix& probs, const std::vector<int>& labels);

// probs is examples × classes, each row summing to 1 within 1e-9.
CalibrationReport calibration_report(const Matrix& probs, const std::vector<int>& labels,
                                     std::size_t n_bins = 15);

void write_report_json(std::ostream& out, const CalibrationReport& report);
void write_reliability_csv(std::ostream& out, const CalibrationReport& report);
// Gnuplot two-column data: mean confidence, mean accuracy (non-empty bins only).
void write_reliability_dat(std::ostream& out, const CalibrationReport& report);

} // namespace blob
