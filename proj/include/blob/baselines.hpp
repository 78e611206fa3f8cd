#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "blob/trainer.hpp"

namespace blob {

enum class MethodKind { mle, map, mc_dropout, ensemble, bbb, blob };

MethodKind parse_method(std::string_view name);
std::string_view to_string(MethodKind kind) noexcept;

// True for methods whose predictions depend on the number of inference samples.
bool is_sampling_method(MethodKind kind) noexcept;

struct BaselineSpec {
    MethodKind kind = MethodKind::blob;
    double weight_decay = 1e-5;
    double dropout_p = 0.1;
    std::size_t n_members = 3;
    std::size_t n_eval_samples = 10;
    MethodSpec method;  // trainer-level knobs; filled by for_kind

    static BaselineSpec for_kind(MethodKind kind);
};

struct TrainedModel {
    BaselineSpec spec;
    std::vector<SmallNet> members;  // one entry except for ensembles
    std::vector<TrainResult> logs;
};

// Member k of an ensemble trains with seed derive_seed(seed, k), member 0 with
// the base seed itself, so a one-member ensemble is the MLE model.
TrainedModel train_baseline(const BaselineSpec& spec, const Dataset& data,
                            const TrainConfig& config, double gamma = 8.0);

// Rows of `inputs` are examples; returns examples × classes probabilities.
//   mle, map    softmax of the mean network (n_samples ignored)
//   ensemble    softmax of the members' mean logits
//   mc_dropout  mean of n_samples dropout passes (0: dropout off)
//   bbb, blob   mean of n_samples posterior passes (0: posterior mean)
Matrix predict_baseline(const TrainedModel& model, const Matrix& inputs, std::size_t n_samples,
                        std::uint64_t seed);

} // namespace blob
