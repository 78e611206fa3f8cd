#pragma once

#include <cstdint>
#include <iosfwd>
#include <string_view>

#include "blob/dataset.hpp"

namespace blob {

enum class Generator { gauss_blobs, two_moons_like, ring_vs_disk };
enum class Shift { none, small, large };

Generator parse_generator(std::string_view name);
std::string_view to_string(Generator g) noexcept;
Shift parse_shift(std::string_view name);
std::string_view to_string(Shift s) noexcept;

// Test-set shift: rotate the (x0, x1) plane about the origin, then translate x1
// by a multiple of the class separation.
//   small  15 degrees, 0.25 separation
//   large  45 degrees, 0.75 separation
struct ShiftTransform {
    double angle_deg = 0.0;
    double translation = 0.0;
};
ShiftTransform shift_transform(Shift s) noexcept;

struct TaskSpec {
    Generator generator = Generator::gauss_blobs;
    std::size_t n_train = 500;
    std::size_t n_test = 2000;
    std::size_t n_classes = 2;
    std::size_t input_dim = 6;
    double noise_scale = 1.0;
    double separation = 2.0;  // distance between class means (moons/rings: radius scale)
    Shift shift = Shift::none;

    void validate() const;
};

struct TaskData {
    Dataset train;
    Dataset test;
};

// Labels cycle through the classes; dims past the first two are pure noise.
// Train and test come from separate seed streams.
TaskData generate_task(const TaskSpec& spec, std::uint64_t seed);

// One example per line: label then features, comma separated.
void write_dataset_csv(std::ostream& out, const Dataset& data);

} // namespace blob
