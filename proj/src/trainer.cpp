#include "blob/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace blob {

namespace {

struct Moments {
    NetGrads first;
    NetGrads second;
};

void adam_tensor(Matrix& param, const Matrix& grad, Matrix& m, Matrix& v, double lr,
                 std::size_t t, const TrainConfig& cfg)
{
    const double c1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < param.size(); ++k) {
        const double g = grad.data()[k];
        double& mk = m.data()[k];
        double& vk = v.data()[k];
        mk = cfg.adam_beta1 * mk + (1.0 - cfg.adam_beta1) * g;
        vk = cfg.adam_beta2 * vk + (1.0 - cfg.adam_beta2) * g * g;
        param.data()[k] -= lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps);
    }
}

// Deterministic methods: (1/2)(||M||^2 + ||B||^2) over all adapters.
double l2_penalty(const SmallNet& net)
{
    double s = 0.0;
    for (const auto& layer : net.layers)
        s += 0.5 * (frobenius_sq(layer.adapter.mean_a) + frobenius_sq(layer.adapter.b));
    return s;
}

NetGrads l2_penalty_grads(const SmallNet& net)
{
    NetGrads grads = zero_grads(net);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        grads[l].mean_a = net.layers[l].adapter.mean_a;
        grads[l].b = net.layers[l].adapter.b;
    }
    return grads;
}

void require_positive_std(const SmallNet& net, const MethodSpec& method)
{
    for (const auto& layer : net.layers) {
        for (double v : layer.adapter.g.data())
            if (apply(method.std_map, v) == 0.0)
                throw std::domain_error("elbo: G has a zero entry (log G undefined)");
        for (double v : layer.g_b.data())
            if (apply(method.std_map, v) == 0.0)
                throw std::domain_error("elbo: G_B has a zero entry (log G undefined)");
    }
}

} // namespace

void TrainConfig::validate() const
{
    if (!(sigma_p > 0.0) || !(epsilon > 0.0) || k_train_samples == 0 || !(lr_likelihood > 0.0) ||
        !(lr_kl > 0.0) || batch_size == 0 || hidden_dim == 0 || rank == 0)
        throw std::invalid_argument("TrainConfig: all sizes and rates must be positive");
    if (warmup_ratio < 0.0 || warmup_ratio >= 1.0)
        throw std::invalid_argument("TrainConfig: warmup_ratio must be in [0, 1)");
}

ForwardOptions MethodSpec::train_forward() const
{
    return {variational ? sampling : Sampling::mean, dropout_p, b_std_scale};
}

ForwardOptions MethodSpec::eval_forward() const
{
    return train_forward();
}

VariationalAdapter init_adapter(std::size_t m, std::size_t n, std::size_t r,
                                const TrainConfig& config, std::size_t layer)
{
    if (r == 0 || r >= m || r >= n)
        throw DimensionError("init_adapter: rank " + std::to_string(r) +
                             " must satisfy 0 < r < min(" + std::to_string(m) + ", " +
                             std::to_string(n) + ")");
    Rng mean_rng(derive_seed(derive_seed(config.seed, kStreamInitMean), layer));
    Rng std_rng(derive_seed(derive_seed(config.seed, kStreamInitStd), layer));
    const double bound = std::sqrt(6.0 / static_cast<double>(n));
    Matrix g = std_rng.uniform(r, n, config.epsilon / std::sqrt(2.0), config.epsilon);
    Matrix mean_a = mean_rng.uniform(r, n, -bound, bound);
    return VariationalAdapter(Matrix(m, n), Matrix(m, r), std::move(mean_a), std::move(g));
}

SmallNet make_net(std::size_t input_dim, std::size_t n_classes, const TrainConfig& config,
                  const MethodSpec& method)
{
    config.validate();
    if (n_classes < 2 || input_dim < 2)
        throw std::invalid_argument("make_net: need at least 2 inputs and 2 classes");
    Rng backbone(derive_seed(config.seed, kStreamBackbone));
    const std::size_t widths[] = {input_dim, config.hidden_dim, n_classes};

    SmallNet net;
    for (std::size_t l = 0; l < 2; ++l) {
        const std::size_t n = widths[l];
        const std::size_t m = widths[l + 1];
        const std::size_t r = std::min(config.rank, std::min(m, n) - 1);
        VariationalAdapter ad = init_adapter(m, n, r, config, l);
        ad.w0 = scale(backbone.gaussian(m, n), 1.0 / std::sqrt(static_cast<double>(n)));
        AdaptedLayer layer{std::move(ad), scale(backbone.gaussian(m, 1), 0.1), Matrix()};

        if (method.std_map == ParamMap::softplus) {
            // Same initial Omega as the square map: rho = softplus^-1(G^2).
            for (double& v : layer.adapter.g.data())
                v = inverse(ParamMap::softplus, v * v);
            layer.adapter.std_map = ParamMap::softplus;
        }
        if (method.bayesian_b) {
            Rng std_b(derive_seed(derive_seed(config.seed, kStreamInitStdB), l));
            layer.g_b = std_b.uniform(m, r, config.epsilon / std::sqrt(2.0), config.epsilon);
            if (method.std_map == ParamMap::softplus)
                for (double& v : layer.g_b.data())
                    v = inverse(ParamMap::softplus, v * v);
        }
        net.layers.push_back(std::move(layer));
    }
    return net;
}

NetGrads ElboResult::total_grads() const
{
    NetGrads total = likelihood_grads;
    add_scaled(total, kl_grads, kl_weight);
    return total;
}

ElboResult elbo_minibatch(const SmallNet& net, const Matrix& x, const std::vector<int>& labels,
                          const TrainConfig& config, const MethodSpec& method, double kl_weight,
                          Rng& noise)
{
    if (labels.empty() || x.cols() != labels.size())
        throw std::invalid_argument("elbo: batch is empty or labels do not match inputs");
    if (kl_weight < 0.0)
        throw std::invalid_argument("elbo: negative KL weight");
    const PriorSpec prior(config.sigma_p);
    const ForwardOptions opts = method.train_forward();
    if (method.variational)
        require_positive_std(net, method);

    ElboResult res;
    res.kl_weight = kl_weight;
    res.likelihood_grads = zero_grads(net);
    const std::size_t k_samples = opts.sampling == Sampling::mean && opts.dropout_p == 0.0
                                      ? 1
                                      : config.k_train_samples;
    const double inv_k = 1.0 / static_cast<double>(k_samples);
    for (std::size_t k = 0; k < k_samples; ++k) {
        NetTape tape;
        const Matrix logits = net_forward(net, x, opts, &noise, &tape);
        const CrossEntropy ce = softmax_cross_entropy(logits, labels);
        res.likelihood += ce.loss * inv_k;
        res.accuracy += ce.accuracy * inv_k;
        add_scaled(res.likelihood_grads, net_backward(net, tape, ce.dlogits, opts), inv_k);
    }

    if (method.variational) {
        res.kl = net_kl(net, prior, method.b_std_scale);
        res.kl_grads = net_kl_grads(net, prior, method.b_std_scale);
    } else {
        res.kl = l2_penalty(net);
        res.kl_grads = l2_penalty_grads(net);
    }
    res.loss = res.likelihood + kl_weight * res.kl;

    if (!std::isfinite(res.likelihood))
        throw NonFiniteError("elbo: likelihood term is non-finite");
    if (!std::isfinite(res.kl))
        throw NonFiniteError("elbo: KL term is non-finite");
    return res;
}

ElboResult elbo_minibatch(const SmallNet& net, const Matrix& x, const std::vector<int>& labels,
                          const TrainConfig& config, const MethodSpec& method, double kl_weight,
                          std::uint64_t seed)
{
    Rng noise(seed);
    return elbo_minibatch(net, x, labels, config, method, kl_weight, noise);
}

double lr_multiplier(std::size_t step, std::size_t total_steps, double warmup_ratio)
{
    // Linear warm-up then linear decay to zero; `step` is 1-based.
    const auto warmup =
        static_cast<std::size_t>(std::ceil(warmup_ratio * static_cast<double>(total_steps)));
    const std::size_t s = step - 1;
    if (s < warmup)
        return static_cast<double>(s + 1) / static_cast<double>(warmup);
    if (total_steps <= warmup)
        return 1.0;
    if (s >= total_steps)
        return 0.0;
    return static_cast<double>(total_steps - s) / static_cast<double>(total_steps - warmup);
}

TrainResult train(SmallNet& net, const Dataset& data, const TrainConfig& config,
                  const MethodSpec& method, const KlSchedule& schedule)
{
    config.validate();
    data.validate();
    if (data.input_dim() != net.input_dim() || data.n_classes != net.n_classes())
        throw DimensionError("train: dataset does not match the network");

    Rng shuffle(derive_seed(config.seed, kStreamShuffle));
    Rng noise(derive_seed(config.seed, kStreamNoise));
    Moments adam{zero_grads(net), zero_grads(net)};

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t cursor = order.size();

    TrainResult result;
    result.log.reserve(config.steps);
    for (std::size_t step = 1; step <= config.steps; ++step) {
        if (cursor >= order.size()) {
            std::shuffle(order.begin(), order.end(), shuffle.engine());
            cursor = 0;
        }
        const std::size_t end = std::min(order.size(), cursor + config.batch_size);
        const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                           order.begin() + static_cast<std::ptrdiff_t>(end));
        cursor = end;

        double kl_weight = method.weight_decay;
        if (method.variational)
            kl_weight = method.use_kl ? kl_weight_at(schedule, step) : 0.0;
        ElboResult res;
        try {
            res = elbo_minibatch(net, data.columns(idx), data.labels(idx), config, method,
                                 kl_weight, noise);
        } catch (const NonFiniteError& e) {
            throw TrainingDiverged(step, e.what());
        }

        const double mult = lr_multiplier(step, config.steps, config.warmup_ratio);
        const double lr = config.lr_likelihood * mult;
        const double lr_kl = config.lr_kl * mult * kl_weight;

        NetGrads adam_grads = res.likelihood_grads;
        if (!method.variational && kl_weight > 0.0)
            add_scaled(adam_grads, res.kl_grads, kl_weight);

        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            AdaptedLayer& layer = net.layers[l];
            VariationalAdapter& ad = layer.adapter;
            const LayerGrads& g = adam_grads[l];
            LayerGrads& m1 = adam.first[l];
            LayerGrads& m2 = adam.second[l];
            adam_tensor(ad.mean_a, g.mean_a, m1.mean_a, m2.mean_a, lr, step, config);
            adam_tensor(ad.b, g.b, m1.b, m2.b, lr, step, config);
            if (method.variational && !method.freeze_std) {
                adam_tensor(ad.g, g.g, m1.g, m2.g, lr, step, config);
                if (layer.bayesian_b())
                    adam_tensor(layer.g_b, g.g_b, m1.g_b, m2.g_b, lr, step, config);
            }

            if (method.variational && lr_kl > 0.0) {
                const LayerGrads& k = res.kl_grads[l];
                axpy(ad.mean_a, -lr_kl, k.mean_a);
                if (!method.freeze_std)
                    axpy(ad.g, -lr_kl, k.g);
                if (layer.bayesian_b()) {
                    axpy(ad.b, -lr_kl, k.b);
                    if (!method.freeze_std)
                        axpy(layer.g_b, -lr_kl, k.g_b);
                }
            }
        }

        result.log.push_back(
            {step, res.likelihood, res.kl, kl_weight, res.accuracy, res.loss});
    }
    return result;
}

Matrix predict(const SmallNet& net, const Matrix& inputs, std::size_t n_samples,
               std::uint64_t seed, const ForwardOptions& opts)
{
    const Matrix x = transpose(inputs);
    if (n_samples == 0)
        return transpose(softmax_columns(net_forward(net, x, ForwardOptions{}, nullptr)));

    Rng rng(seed);
    Matrix acc(net.n_classes(), x.cols());
    for (std::size_t s = 0; s < n_samples; ++s)
        axpy(acc, 1.0, softmax_columns(net_forward(net, x, opts, &rng)));
    return transpose(scale(acc, 1.0 / static_cast<double>(n_samples)));
}

void write_trajectory_csv(std::ostream& out, const TrainResult& result)
{
    out << "step,likelihood_loss,kl_value,kl_weight,train_acc\n";
    char buf[256];
    for (const auto& s : result.log) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", s.step, s.likelihood_loss,
                      s.kl_value, s.kl_weight, s.train_acc);
        out << buf;
    }
}

} // namespace blob
