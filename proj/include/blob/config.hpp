#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "blob/baselines.hpp"
#include "blob/tasks.hpp"
#include "blob/trainer.hpp"

namespace blob {

// Ablation overrides; they apply to the blob method only.
struct Ablation {
    std::optional<KlMode> kl_mode;
    std::optional<ParamMap> param_map;
    std::optional<Sampling> sampling;
    std::optional<bool> bayes_b;
    std::optional<double> b_std_scale;

    void apply_to(MethodSpec& method) const;
};

struct ExperimentConfig {
    TaskSpec task;
    TrainConfig train;
    double gamma = 8.0;
    BaselineSpec baseline_defaults;  // weight_decay, dropout_p, n_members, n_eval_samples
    Ablation ablation;

    std::vector<MethodKind> methods{MethodKind::mle,      MethodKind::map, MethodKind::mc_dropout,
                                    MethodKind::ensemble, MethodKind::bbb, MethodKind::blob};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::vector<std::size_t> n_samples{0, 5, 10};

    // Baseline spec for `kind` carrying this config's hyperparameters and,
    // for blob, the ablation overrides.
    BaselineSpec spec_for(MethodKind kind) const;
};

// INI-style text: [section] headers, key = value lines, '#' or ';' comments.
// Unknown sections or keys are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

// Every key with its current value, in the same format parse_config reads.
void write_config(std::ostream& out, const ExperimentConfig& config);

} // namespace blob
