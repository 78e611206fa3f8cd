#include "blob/calibration.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace blob {

namespace {

void check_inputs(const Matrix& probs, const std::vector<int>& labels)
{
    if (probs.rows() == 0 || labels.empty())
        throw std::invalid_argument("calibration: empty input");
    if (probs.rows() != labels.size())
        throw DimensionError("calibration: " + std::to_string(probs.rows()) +
                             " probability rows for " + std::to_string(labels.size()) + " labels");
    const auto classes = static_cast<int>(probs.cols());
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (labels[i] < 0 || labels[i] >= classes)
            throw std::invalid_argument("calibration: label out of range at row " +
                                        std::to_string(i));
        double s = 0.0;
        for (std::size_t c = 0; c < probs.cols(); ++c) {
            const double p = probs(i, c);
            if (!(p >= 0.0) || p > 1.0 + 1e-9)
                throw std::invalid_argument("calibration: invalid probability at row " +
                                            std::to_string(i));
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-9)
            throw std::invalid_argument("calibration: row " + std::to_string(i) +
                                        " does not sum to 1");
    }
}

// Lowest index wins ties.
std::size_t argmax_row(const Matrix& probs, std::size_t i)
{
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.cols(); ++c)
        if (probs(i, c) > probs(i, best))
            best = c;
    return best;
}

} // namespace

std::vector<ReliabilityBin> reliability_bins(const Matrix& probs, const std::vector<int>& labels,
                                             std::size_t n_bins)
{
    check_inputs(probs, labels);
    if (n_bins == 0)
        throw std::invalid_argument("reliability_bins: need at least one bin");

    std::vector<ReliabilityBin> bins(n_bins);
    const auto nb = static_cast<double>(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        bins[k].lo = static_cast<double>(k) / nb;
        bins[k].hi = static_cast<double>(k + 1) / nb;
    }
    std::vector<double> conf_sum(n_bins, 0.0);
    std::vector<double> hit_sum(n_bins, 0.0);
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        const std::size_t pred = argmax_row(probs, i);
        const double conf = probs(i, pred);
        std::size_t k = 0;
        while (k + 1 < n_bins && conf > bins[k].hi)
            ++k;
        ++bins[k].count;
        conf_sum[k] += conf;
        hit_sum[k] += static_cast<int>(pred) == labels[i] ? 1.0 : 0.0;
    }
    for (std::size_t k = 0; k < n_bins; ++k) {
        if (bins[k].count == 0)
            continue;
        const auto c = static_cast<double>(bins[k].count);
        bins[k].mean_conf = conf_sum[k] / c;
        bins[k].mean_acc = hit_sum[k] / c;
    }
    return bins;
}

double ece_from_bins(const std::vector<ReliabilityBin>& bins)
{
    std::size_t n = 0;
    for (const auto& b : bins)
        n += b.count;
    if (n == 0)
        throw std::invalid_argument("ece_from_bins: no examples");
    double ece = 0.0;
    for (const auto& b : bins)
        if (b.count > 0)
            ece += static_cast<double>(b.count) / static_cast<double>(n) *
                   std::abs(b.mean_acc - b.mean_conf);
    return ece;
}

NllResult nll(const Matrix& probs, const std::vector<int>& labels)
{
    check_inputs(probs, labels);
    NllResult r;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        double p = probs(i, static_cast<std::size_t>(labels[i]));
        if (p < kProbFloor) {
            p = kProbFloor;
            ++r.clamped;
        }
        r.sum -= std::log(p);
    }
    r.mean = r.sum / static_cast<double>(probs.rows());
    return r;
}

double accuracy(const Matrix& probs, const std::vector<int>& labels)
{
    check_inputs(probs, labels);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probs.rows(); ++i)
        if (static_cast<int>(argmax_row(probs, i)) == labels[i])
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(probs.rows());
}

CalibrationReport calibration_report(const Matrix& probs, const std::vector<int>& labels,
                                     std::size_t n_bins)
{
    CalibrationReport r;
    r.bins = reliability_bins(probs, labels, n_bins);
    r.ece = ece_from_bins(r.bins);
    r.acc = accuracy(probs, labels);
    const NllResult l = nll(probs, labels);
    r.nll = l.mean;
    r.nll_sum = l.sum;
    r.nll_clamped = l.clamped;
    r.n = probs.rows();
    return r;
}

void write_report_json(std::ostream& out, const CalibrationReport& report)
{
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : report.bins)
        bins.push_back({{"lo", b.lo},
                        {"hi", b.hi},
                        {"count", b.count},
                        {"mean_conf", b.mean_conf},
                        {"mean_acc", b.mean_acc}});
    const nlohmann::json j = {{"acc", report.acc},           {"ece", report.ece},
                              {"nll", report.nll},           {"nll_sum", report.nll_sum},
                              {"nll_clamped", report.nll_clamped}, {"n", report.n},
                              {"bins", bins}};
    out << j.dump(2) << '\n';
}

void write_reliability_csv(std::ostream& out, const CalibrationReport& report)
{
    out << "lo,hi,count,mean_conf,mean_acc\n";
    char buf[160];
    for (const auto& b : report.bins) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu,%.17g,%.17g\n", b.lo, b.hi, b.count,
                      b.mean_conf, b.mean_acc);
        out << buf;
    }
}

void write_reliability_dat(std::ostream& out, const CalibrationReport& report)
{
    out << "# mean_conf mean_acc\n";
    char buf[80];
    for (const auto& b : report.bins) {
        if (b.count == 0)
            continue;
        std::snprintf(buf, sizeof buf, "%.17g %.17g\n", b.mean_conf, b.mean_acc);
        out << buf;
    }
}

} // namespace blob
