#pragma once

#include <iosfwd>
#include <string_view>
#include <vector>

#include "blob/adapter.hpp"
#include "blob/kl.hpp"
#include "blob/matrix.hpp"
#include "blob/random.hpp"

namespace blob {

// How A (and B, when Bayesianized) is drawn in a forward pass.
//   mean    - posterior mean, no noise
//   flipout - per-example sign-flipped perturbations of one noise draw
//   shared  - one sampled A for the whole batch
enum class Sampling { mean, flipout, shared };

Sampling parse_sampling(std::string_view name);
std::string_view to_string(Sampling s) noexcept;

// Frozen dense layer plus its adapter. Hidden layers apply tanh; the last
// layer emits logits.
struct AdaptedLayer {
    VariationalAdapter adapter;
    Matrix bias;  // m×1, frozen
    Matrix g_b;   // m×r std parameters on B; empty unless B is Bayesianized

    bool bayesian_b() const noexcept { return !g_b.empty(); }
    friend bool operator==(const AdaptedLayer&, const AdaptedLayer&) = default;
};

// Desk-scale stand-in for a pre-trained model: a frozen tanh MLP whose dense
// layers all carry low-rank adapters.
struct SmallNet {
    std::vector<AdaptedLayer> layers;

    std::size_t input_dim() const { return layers.front().adapter.n(); }
    std::size_t n_classes() const { return layers.back().adapter.m(); }
    friend bool operator==(const SmallNet&, const SmallNet&) = default;
};

struct ForwardOptions {
    Sampling sampling = Sampling::mean;
    double dropout_p = 0.0;     // inverted dropout on adapter-path inputs
    double b_std_scale = 0.01;  // Omega_B = scale * map(G_B)
};

struct LayerTape {
    Matrix input;         // n×b layer input
    Matrix adapter_in;    // input after dropout
    Matrix dropout_mask;  // n×b, entries 0 or 1/(1-p); empty without dropout
    Matrix v;             // r×b, M H + perturbation
    Matrix b_used;        // B, or the sampled B
    Matrix noise_omega;   // E∘Omega; empty on the mean path
    FlipoutMasks masks;   // empty on the mean path
    Matrix e_b;           // noise on B; empty unless B is Bayesianized and sampled
    Matrix pre;           // m×b pre-activation
    Matrix out;           // m×b activation
};

struct NetTape {
    std::vector<LayerTape> layers;
};

struct LayerGrads {
    Matrix mean_a;
    Matrix g;
    Matrix b;
    Matrix g_b;

    void add_scaled(const LayerGrads& other, double s);
};

using NetGrads = std::vector<LayerGrads>;

NetGrads zero_grads(const SmallNet& net);
void add_scaled(NetGrads& into, const NetGrads& other, double s);

// x is input_dim × batch; returns n_classes × batch logits. Randomness is drawn
// from `rng` in a fixed order (per layer: E, S, T, E_B, dropout), so a fixed
// seed reproduces the same noise. `rng` may be null only on a noise-free pass.
Matrix net_forward(const SmallNet& net, const Matrix& x, const ForwardOptions& opts, Rng* rng,
                   NetTape* tape = nullptr);

// Reverse pass from d(loss)/d(logits) to adapter parameters.
NetGrads net_backward(const SmallNet& net, const NetTape& tape, const Matrix& dlogits,
                      const ForwardOptions& opts);

// Column-wise softmax of a classes × batch matrix.
Matrix softmax_columns(const Matrix& logits);

struct CrossEntropy {
    double loss = 0.0;  // mean over the batch
    double accuracy = 0.0;
    Matrix dlogits;     // gradient of the mean loss
};

CrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// KL of every adapter's q(A) (and q(B) when Bayesianized) against the prior.
double net_kl(const SmallNet& net, const PriorSpec& prior, double b_std_scale);
NetGrads net_kl_grads(const SmallNet& net, const PriorSpec& prior, double b_std_scale);

// Net file: magic/version header, then one adapter record plus bias per layer.
void write_net(std::ostream& out, const SmallNet& net);
SmallNet read_net(std::istream& in);

} // namespace blob
