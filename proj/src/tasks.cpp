#include "blob/tasks.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "blob/random.hpp"

namespace blob {

namespace {

constexpr std::uint64_t kTrainStream = 0x7472;
constexpr std::uint64_t kTestStream = 0x7465;

void draw_core(const TaskSpec& spec, int label, Rng& rng, double& x0, double& x1)
{
    const double pi = std::numbers::pi;
    switch (spec.generator) {
    case Generator::gauss_blobs: {
        if (spec.n_classes == 2) {
            x0 = (label == 0 ? -0.5 : 0.5) * spec.separation;
            x1 = 0.0;
        } else {
            // Means on a circle with neighbouring means `separation` apart.
            const double k = static_cast<double>(spec.n_classes);
            const double radius = spec.separation / (2.0 * std::sin(pi / k));
            const double angle = 2.0 * pi * label / k;
            x0 = radius * std::cos(angle);
            x1 = radius * std::sin(angle);
        }
        x0 += spec.noise_scale * rng.gaussian();
        x1 += spec.noise_scale * rng.gaussian();
        return;
    }
    case Generator::two_moons_like: {
        const double t = rng.uniform(0.0, pi);
        if (label == 0) {
            x0 = std::cos(t);
            x1 = std::sin(t);
        } else {
            x0 = 1.0 - std::cos(t);
            x1 = 0.5 - std::sin(t);
        }
        x0 = spec.separation * 0.5 * x0 + spec.noise_scale * rng.gaussian();
        x1 = spec.separation * 0.5 * x1 + spec.noise_scale * rng.gaussian();
        return;
    }
    case Generator::ring_vs_disk: {
        const double angle = rng.uniform(0.0, 2.0 * pi);
        const double r = label == 0 ? std::sqrt(rng.uniform(0.0, 1.0))
                                    : rng.uniform(1.0, 1.5) + 0.5;
        x0 = spec.separation * r * std::cos(angle) + spec.noise_scale * rng.gaussian();
        x1 = spec.separation * r * std::sin(angle) + spec.noise_scale * rng.gaussian();
        return;
    }
    }
}

Dataset draw(const TaskSpec& spec, std::size_t count, Rng& rng, bool shifted)
{
    Dataset d;
    d.n_classes = spec.n_classes;
    d.x = Matrix(count, spec.input_dim);
    d.y.resize(count);
    const ShiftTransform tf = shift_transform(shifted ? spec.shift : Shift::none);
    const double theta = tf.angle_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    for (std::size_t i = 0; i < count; ++i) {
        const int label = static_cast<int>(i % spec.n_classes);
        double x0 = 0.0;
        double x1 = 0.0;
        draw_core(spec, label, rng, x0, x1);
        d.x(i, 0) = c * x0 - s * x1;
        d.x(i, 1) = s * x0 + c * x1 + tf.translation * spec.separation;
        for (std::size_t j = 2; j < spec.input_dim; ++j)
            d.x(i, j) = spec.noise_scale * rng.gaussian();
        d.y[i] = label;
    }
    return d;
}

} // namespace

Generator parse_generator(std::string_view name)
{
    if (name == "gauss_blobs")
        return Generator::gauss_blobs;
    if (name == "two_moons_like")
        return Generator::two_moons_like;
    if (name == "ring_vs_disk")
        return Generator::ring_vs_disk;
    throw std::invalid_argument("unknown generator '" + std::string(name) + "'");
}

std::string_view to_string(Generator g) noexcept
{
    switch (g) {
    case Generator::gauss_blobs:
        return "gauss_blobs";
    case Generator::two_moons_like:
        return "two_moons_like";
    case Generator::ring_vs_disk:
        return "ring_vs_disk";
    }
    return "?";
}

Shift parse_shift(std::string_view name)
{
    if (name == "none")
        return Shift::none;
    if (name == "small")
        return Shift::small;
    if (name == "large")
        return Shift::large;
    throw std::invalid_argument("unknown shift '" + std::string(name) + "'");
}

std::string_view to_string(Shift s) noexcept
{
    switch (s) {
    case Shift::none:
        return "none";
    case Shift::small:
        return "small";
    case Shift::large:
        return "large";
    }
    return "?";
}

ShiftTransform shift_transform(Shift s) noexcept
{
    switch (s) {
    case Shift::none:
        return {0.0, 0.0};
    case Shift::small:
        return {15.0, 0.25};
    case Shift::large:
        return {45.0, 0.75};
    }
    return {};
}

void TaskSpec::validate() const
{
    if (n_train == 0 || n_test == 0)
        throw std::invalid_argument("task: n_train and n_test must be positive");
    if (n_classes < 2)
        throw std::invalid_argument("task: need at least 2 classes");
    if (input_dim < 2)
        throw std::invalid_argument("task: input_dim must be at least 2");
    if (generator != Generator::gauss_blobs && n_classes != 2)
        throw std::invalid_argument("task: " + std::string(to_string(generator)) +
                                    " is a 2-class generator");
    if (!(noise_scale >= 0.0) || !(separation > 0.0))
        throw std::invalid_argument("task: noise_scale must be >= 0 and separation > 0");
}

TaskData generate_task(const TaskSpec& spec, std::uint64_t seed)
{
    spec.validate();
    Rng train_rng(derive_seed(seed, kTrainStream));
    Rng test_rng(derive_seed(seed, kTestStream));
    return {draw(spec, spec.n_train, train_rng, false), draw(spec, spec.n_test, test_rng, true)};
}

void write_dataset_csv(std::ostream& out, const Dataset& data)
{
    out << "label";
    for (std::size_t j = 0; j < data.input_dim(); ++j)
        out << ",x" << j;
    out << '\n';
    char buf[40];
    for (std::size_t i = 0; i < data.size(); ++i) {
        out << data.y[i];
        for (std::size_t j = 0; j < data.input_dim(); ++j) {
            std::snprintf(buf, sizeof buf, ",%.17g", data.x(i, j));
            out << buf;
        }
        out << '\n';
    }
}

} // namespace blob
