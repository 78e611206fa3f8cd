#include "blob/suite.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>

#include <json.hpp>

namespace blob {

namespace {

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void mean_std(const std::vector<double>& xs, double& mean, double& sd)
{
    mean = 0.0;
    for (double x : xs)
        mean += x;
    mean /= static_cast<double>(xs.size());
    sd = 0.0;
    if (xs.size() < 2)
        return;
    for (double x : xs)
        sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(xs.size() - 1));
}

// CSV fields are plain; errors may contain commas or quotes.
std::string csv_quote(const std::string& s)
{
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    return out + "\"";
}

} // namespace

std::uint64_t predict_seed(std::uint64_t seed) noexcept
{
    return derive_seed(seed, kStreamPredict);
}

std::vector<RunResult> run_cell(const ExperimentConfig& config, MethodKind method,
                                std::uint64_t seed)
{
    const auto start = std::chrono::steady_clock::now();
    std::vector<std::size_t> ns{0};
    if (is_sampling_method(method))
        ns = config.n_samples;

    std::vector<RunResult> rows;
    for (std::size_t n : ns) {
        RunResult r;
        r.method = method;
        r.seed = seed;
        r.task = std::string(to_string(config.task.generator));
        r.shift = config.task.shift;
        r.n_samples = n;
        rows.push_back(std::move(r));
    }
    try {
        const TaskData data = generate_task(config.task, seed);
        TrainConfig train = config.train;
        train.seed = seed;
        const TrainedModel model =
            train_baseline(config.spec_for(method), data.train, train, config.gamma);
        for (auto& r : rows) {
            const Matrix probs =
                predict_baseline(model, data.test.x, r.n_samples, predict_seed(seed));
            r.report = calibration_report(probs, data.test.y);
            r.ok = true;
        }
    } catch (const std::exception& e) {
        for (auto& r : rows) {
            r.ok = false;
            r.error = e.what();
        }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (auto& r : rows)
        r.wall_time = elapsed;
    return rows;
}

std::vector<RunResult> run_suite(const ExperimentConfig& config)
{
    std::vector<RunResult> all;
    for (MethodKind m : config.methods)
        for (std::uint64_t s : config.seeds)
            for (auto& r : run_cell(config, m, s))
                all.push_back(std::move(r));
    return all;
}

std::vector<AggregateRow> aggregate(const std::vector<RunResult>& results)
{
    std::vector<std::pair<MethodKind, std::size_t>> order;
    std::map<std::pair<MethodKind, std::size_t>, std::vector<const RunResult*>> groups;
    for (const auto& r : results) {
        if (!r.ok)
            continue;
        const auto key = std::make_pair(r.method, r.n_samples);
        if (!groups.contains(key))
            order.push_back(key);
        groups[key].push_back(&r);
    }
    std::vector<AggregateRow> rows;
    for (const auto& key : order) {
        const auto& g = groups[key];
        std::vector<double> acc, ece, nll;
        for (const auto* r : g) {
            acc.push_back(r->report.acc);
            ece.push_back(r->report.ece);
            nll.push_back(r->report.nll);
        }
        AggregateRow row;
        row.method = key.first;
        row.n_samples = key.second;
        row.runs = g.size();
        mean_std(acc, row.acc_mean, row.acc_std);
        mean_std(ece, row.ece_mean, row.ece_std);
        mean_std(nll, row.nll_mean, row.nll_std);
        rows.push_back(row);
    }
    return rows;
}

void write_results_csv(std::ostream& out, const std::vector<RunResult>& results)
{
    out << "method,seed,task,shift,n_samples,status,acc,ece,nll,nll_sum,nll_clamped,n,error\n";
    for (const auto& r : results) {
        out << to_string(r.method) << ',' << r.seed << ',' << r.task << ',' << to_string(r.shift)
            << ',' << r.n_samples << ',' << (r.ok ? "ok" : "failed") << ',';
        if (r.ok)
            out << fmt(r.report.acc) << ',' << fmt(r.report.ece) << ',' << fmt(r.report.nll) << ','
                << fmt(r.report.nll_sum) << ',' << r.report.nll_clamped << ',' << r.report.n
                << ",\n";
        else
            out << ",,,,,," << csv_quote(r.error) << '\n';
    }
}

void write_results_json(std::ostream& out, const std::vector<RunResult>& results)
{
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : results) {
        nlohmann::json j = {{"method", to_string(r.method)},
                            {"seed", r.seed},
                            {"task", r.task},
                            {"shift", to_string(r.shift)},
                            {"n_samples", r.n_samples},
                            {"status", r.ok ? "ok" : "failed"}};
        if (r.ok) {
            j["acc"] = r.report.acc;
            j["ece"] = r.report.ece;
            j["nll"] = r.report.nll;
            j["nll_sum"] = r.report.nll_sum;
            j["nll_clamped"] = r.report.nll_clamped;
            j["n"] = r.report.n;
        } else {
            j["error"] = r.error;
        }
        rows.push_back(std::move(j));
    }
    out << rows.dump(2) << '\n';
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows)
{
    out << "method,n_samples,runs,acc_mean,acc_std,ece_mean,ece_std,nll_mean,nll_std\n";
    for (const auto& r : rows)
        out << to_string(r.method) << ',' << r.n_samples << ',' << r.runs << ','
            << fmt(r.acc_mean) << ',' << fmt(r.acc_std) << ',' << fmt(r.ece_mean) << ','
            << fmt(r.ece_std) << ',' << fmt(r.nll_mean) << ',' << fmt(r.nll_std) << '\n';
}

void write_timing_csv(std::ostream& out, const std::vector<RunResult>& results)
{
    out << "method,seed,n_samples,wall_time\n";
    for (const auto& r : results)
        out << to_string(r.method) << ',' << r.seed << ',' << r.n_samples << ','
            << fmt(r.wall_time) << '\n';
}

} // namespace blob
