#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "blob/dataset.hpp"
#include "blob/kl.hpp"
#include "blob/network.hpp"
#include "blob/schedule.hpp"

namespace blob {

struct TrainConfig {
    double sigma_p = 0.2;
    double epsilon = 0.05;  // G ~ U(epsilon / sqrt(2), epsilon)
    std::size_t k_train_samples = 1;
    double lr_likelihood = 1e-2;
    double lr_kl = 2e-3;
    std::size_t steps = 3000;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    std::size_t hidden_dim = 32;
    std::size_t rank = 2;  // capped per layer at min(m, n) - 1
    double warmup_ratio = 0.06;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

// Everything that distinguishes one training method from another at the
// trainer level. The default is BLoB.
struct MethodSpec {
    bool variational = true;  // false: deterministic LoRA, G unused
    ParamMap std_map = ParamMap::square;
    Sampling sampling = Sampling::flipout;
    KlMode kl_mode = KlMode::blob_ascending;
    bool bayesian_b = false;  // ablation without asymmetric Bayesianization
    double b_std_scale = 0.01;
    double dropout_p = 0.0;
    double weight_decay = 0.0;  // L2 penalty (wd/2)||theta||^2, deterministic methods only
    bool freeze_std = false;    // hold G fixed (test knob)
    bool use_kl = true;         // false: KL weight pinned at 0

    ForwardOptions train_forward() const;
    ForwardOptions eval_forward() const;
};

class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t step, const std::string& what)
        : std::runtime_error("training diverged at step " + std::to_string(step) + ": " + what),
          step_(step)
    {
    }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

// Stream tags for derive_seed.
enum SeedStream : std::uint64_t {
    kStreamBackbone = 1,
    kStreamInitMean = 2,
    kStreamInitStd = 3,
    kStreamInitStdB = 4,
    kStreamShuffle = 5,
    kStreamNoise = 6,
    kStreamPredict = 7,
    kStreamData = 8,
};

// G ~ U(eps/sqrt(2), eps), M ~ U(-sqrt(6/n), sqrt(6/n)), B = 0. `layer` selects
// an independent stream per adapter. Throws DimensionError unless r < min(m, n).
VariationalAdapter init_adapter(std::size_t m, std::size_t n, std::size_t r,
                                const TrainConfig& config, std::size_t layer = 0);

// Frozen random tanh backbone input -> hidden -> classes with an adapter on
// each layer, initialized for `method` (softplus maps get G re-expressed so
// the initial Omega matches the square map's).
SmallNet make_net(std::size_t input_dim, std::size_t n_classes, const TrainConfig& config,
                  const MethodSpec& method = {});

struct ElboResult {
    double loss = 0.0;        // likelihood + kl_weight * kl
    double likelihood = 0.0;  // mean cross-entropy averaged over K samples
    double kl = 0.0;          // complexity term (true KL; L2 penalty for MAP)
    double kl_weight = 0.0;
    double accuracy = 0.0;    // batch accuracy, averaged over K samples
    NetGrads likelihood_grads;
    NetGrads kl_grads;        // gradient of the unweighted complexity term

    NetGrads total_grads() const;
};

ElboResult elbo_minibatch(const SmallNet& net, const Matrix& x, const std::vector<int>& labels,
                          const TrainConfig& config, const MethodSpec& method, double kl_weight,
                          Rng& noise);
ElboResult elbo_minibatch(const SmallNet& net, const Matrix& x, const std::vector<int>& labels,
                          const TrainConfig& config, const MethodSpec& method, double kl_weight,
                          std::uint64_t seed);

struct StepLog {
    std::size_t step = 0;
    double likelihood_loss = 0.0;
    double kl_value = 0.0;
    double kl_weight = 0.0;
    double train_acc = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<StepLog> log;
};

// Multiplier for the linear warm-up / linear decay learning-rate schedule.
double lr_multiplier(std::size_t step, std::size_t total_steps, double warmup_ratio);

// Runs config.steps minibatch updates in place. Likelihood gradients go through
// AdamW; the weighted KL gradient of M and G goes through plain SGD at lr_kl.
TrainResult train(SmallNet& net, const Dataset& data, const TrainConfig& config,
                  const MethodSpec& method, const KlSchedule& schedule);

// Rows of `inputs` are examples. N = 0 uses the mean network; N >= 1 averages
// N per-pass softmax outputs drawn with `opts`. Returns examples × classes.
Matrix predict(const SmallNet& net, const Matrix& inputs, std::size_t n_samples,
               std::uint64_t seed, const ForwardOptions& opts = {Sampling::flipout, 0.0, 0.01});

void write_trajectory_csv(std::ostream& out, const TrainResult& result);

} // namespace blob
