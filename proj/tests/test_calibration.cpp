#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "blob/calibration.hpp"
#include "blob/random.hpp"

using namespace blob;

namespace {

// Two-class rows with the given top-class confidence on class 0.
Matrix binary_rows(const std::vector<double>& conf)
{
    Matrix p(conf.size(), 2);
    for (std::size_t i = 0; i < conf.size(); ++i) {
        p(i, 0) = conf[i];
        p(i, 1) = 1.0 - conf[i];
    }
    return p;
}

} // namespace

TEST_CASE("hand-binned ECE")
{
    const Matrix p = binary_rows({0.6, 0.6, 0.9, 0.9});
    const std::vector<int> y{0, 1, 0, 0};
    const CalibrationReport r = calibration_report(p, y);
    CHECK(std::abs(r.ece - 0.10) <= 1e-15);
    CHECK(r.acc == 0.75);
    REQUIRE(r.bins.size() == 15);
    CHECK(r.bins[8].count == 2);
    CHECK(r.bins[8].mean_acc == 0.5);
    CHECK(r.bins[13].count == 2);
    CHECK(r.bins[13].mean_acc == 1.0);
    std::size_t total = 0;
    for (const auto& b : r.bins)
        total += b.count;
    CHECK(total == 4);
    CHECK(ece_from_bins(r.bins) == r.ece);
}

TEST_CASE("ECE edge cases")
{
    CHECK(calibration_report(binary_rows({1.0, 1.0, 1.0}), {0, 0, 0}).ece == 0.0);

    // Confidence 0 lands in the first bin; 1/15 is right-inclusive.
    Matrix p(2, 16, 1.0 / 16);
    const auto bins = reliability_bins(p, {0, 3});
    CHECK(bins[0].count == 2);
    const auto edge = reliability_bins(binary_rows({8.0 / 15}), {0});
    CHECK(edge[7].count == 1);

    CHECK_THROWS(calibration_report(Matrix(0, 2), {}));
    CHECK_THROWS(calibration_report(binary_rows({0.5}), {2}));
    Matrix bad = binary_rows({0.5});
    bad(0, 0) = 0.6;
    CHECK_THROWS(calibration_report(bad, {0}));
}

TEST_CASE("uniform predictions")
{
    for (std::size_t c : {2u, 3u, 10u}) {
        Matrix p(50, c, 1.0 / static_cast<double>(c));
        std::vector<int> y;
        for (std::size_t i = 0; i < 50; ++i)
            y.push_back(static_cast<int>(i % c));
        CHECK(std::abs(nll(p, y).mean - std::log(static_cast<double>(c))) <= 1e-12);
    }

    // Confidence 1/C with uniform labels is calibrated in expectation.
    Rng rng(3);
    const std::size_t n = 100000, c = 4;
    Matrix p(n, c, 0.25);
    std::vector<int> y(n);
    for (auto& v : y)
        v = static_cast<int>(rng.next_u64() % c);
    CHECK(calibration_report(p, y).ece <= 3.0 * std::sqrt(0.25 * 0.75 / n));
}

TEST_CASE("NLL")
{
    Matrix p(2, 2);
    p(0, 0) = 0.5;
    p(0, 1) = 0.5;
    p(1, 0) = 0.75;
    p(1, 1) = 0.25;
    const NllResult r = nll(p, {0, 1});
    CHECK(r.mean == doctest::Approx(1.5 * std::numbers::ln2).epsilon(1e-14));
    CHECK(r.sum == doctest::Approx(3.0 * std::numbers::ln2).epsilon(1e-14));
    CHECK(r.clamped == 0);

    CHECK(nll(binary_rows({1.0, 1.0}), {0, 0}).mean == 0.0);

    const NllResult z = nll(binary_rows({1.0}), {1});
    CHECK(z.clamped == 1);
    CHECK(z.mean == doctest::Approx(-std::log(kProbFloor)));

    // Mass moved toward the true label lowers NLL.
    CHECK(nll(binary_rows({0.7}), {0}).mean < nll(binary_rows({0.6}), {0}).mean);
}

TEST_CASE("accuracy")
{
    CHECK(accuracy(binary_rows({0.9, 0.8}), {0, 0}) == 1.0);
    CHECK(accuracy(binary_rows({0.9, 0.8}), {1, 1}) == 0.0);
    CHECK(accuracy(binary_rows({0.9, 0.8, 0.7, 0.2}), {0, 0, 0, 0}) == 0.75);
    CHECK(accuracy(binary_rows({0.5}), {0}) == 1.0);
}

TEST_CASE("metrics are permutation invariant")
{
    Rng rng(5);
    const std::size_t n = 200;
    Matrix p(n, 3);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < 3; ++k)
            s += p(i, k) = rng.uniform(0.01, 1.0);
        for (std::size_t k = 0; k < 3; ++k)
            p(i, k) /= s;
        y[i] = static_cast<int>(i % 3);
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i)
        perm[i] = (i * 37) % n;
    Matrix q(n, 3);
    std::vector<int> yq(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < 3; ++k)
            q(i, k) = p(perm[i], k);
        yq[i] = y[perm[i]];
    }
    const CalibrationReport a = calibration_report(p, y);
    const CalibrationReport b = calibration_report(q, yq);
    CHECK(a.acc == b.acc);
    CHECK(a.ece == doctest::Approx(b.ece).epsilon(1e-12));
    CHECK(a.nll == doctest::Approx(b.nll).epsilon(1e-12));
    CHECK(ece_from_bins(a.bins) == a.ece);
}

TEST_CASE("calibrated stream")
{
    Rng rng(7);
    const std::size_t n = 100000;
    Matrix p(n, 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = rng.uniform(0.5, 1.0);
        p(i, 0) = c;
        p(i, 1) = 1.0 - c;
        y[i] = rng.uniform(0.0, 1.0) < c ? 0 : 1;
    }
    const CalibrationReport r = calibration_report(p, y);
    CHECK(r.ece <= 0.02);
    CHECK(r.ece >= 0.0);
}

TEST_CASE("serialization")
{
    const CalibrationReport r = calibration_report(binary_rows({0.6, 0.6, 0.9, 0.9}), {0, 1, 0, 0});
    std::ostringstream js;
    write_report_json(js, r);
    const auto j = nlohmann::json::parse(js.str());
    CHECK(j.at("ece").get<double>() == r.ece);
    CHECK(j.at("n").get<std::size_t>() == 4);
    CHECK(j.at("bins").size() == 15);

    std::ostringstream csv;
    write_reliability_csv(csv, r);
    std::size_t lines = 0;
    for (char ch : csv.str())
        lines += ch == '\n';
    CHECK(lines == 16);

    std::ostringstream dat;
    write_reliability_dat(dat, r);
    lines = 0;
    for (char ch : dat.str())
        lines += ch == '\n';
    CHECK(lines >= 2);
}
