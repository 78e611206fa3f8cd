#include "blob/network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <string>

namespace blob {

namespace {

constexpr const char* kNetMagic = "BLOB-NET";
constexpr int kNetVersion = 1;

Matrix map_derivative(ParamMap map, const Matrix& g)
{
    Matrix out(g.rows(), g.cols());
    for (std::size_t k = 0; k < g.size(); ++k)
        out.data()[k] = derivative(map, g.data()[k]);
    return out;
}

Matrix omega_b(const AdaptedLayer& layer, double scale_factor)
{
    Matrix out(layer.g_b.rows(), layer.g_b.cols());
    for (std::size_t k = 0; k < out.size(); ++k)
        out.data()[k] = scale_factor * apply(layer.adapter.std_map, layer.g_b.data()[k]);
    return out;
}

void add_bias(Matrix& z, const Matrix& bias)
{
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j)
            z(i, j) += bias(i, 0);
}

} // namespace

Sampling parse_sampling(std::string_view name)
{
    if (name == "mean")
        return Sampling::mean;
    if (name == "flipout")
        return Sampling::flipout;
    if (name == "shared")
        return Sampling::shared;
    throw std::invalid_argument("unknown sampling scheme '" + std::string(name) + "'");
}

std::string_view to_string(Sampling s) noexcept
{
    switch (s) {
    case Sampling::mean:
        return "mean";
    case Sampling::flipout:
        return "flipout";
    case Sampling::shared:
        return "shared";
    }
    return "?";
}

void LayerGrads::add_scaled(const LayerGrads& other, double s)
{
    axpy(mean_a, s, other.mean_a);
    axpy(g, s, other.g);
    axpy(b, s, other.b);
    if (!g_b.empty())
        axpy(g_b, s, other.g_b);
}

NetGrads zero_grads(const SmallNet& net)
{
    NetGrads grads;
    grads.reserve(net.layers.size());
    for (const auto& layer : net.layers) {
        const auto& a = layer.adapter;
        grads.push_back({Matrix(a.rank(), a.n()), Matrix(a.rank(), a.n()), Matrix(a.m(), a.rank()),
                         layer.bayesian_b() ? Matrix(a.m(), a.rank()) : Matrix()});
    }
    return grads;
}

void add_scaled(NetGrads& into, const NetGrads& other, double s)
{
    for (std::size_t l = 0; l < into.size(); ++l)
        into[l].add_scaled(other[l], s);
}

Matrix net_forward(const SmallNet& net, const Matrix& x, const ForwardOptions& opts, Rng* rng,
                   NetTape* tape)
{
    if (x.rows() != net.input_dim())
        throw DimensionError("net_forward: input has " + std::to_string(x.rows()) +
                             " features, net expects " + std::to_string(net.input_dim()));
    if (x.cols() == 0)
        throw DimensionError("net_forward: empty batch");
    const bool noisy = opts.sampling != Sampling::mean;
    const bool dropout = opts.dropout_p > 0.0;
    if ((noisy || dropout) && rng == nullptr)
        throw std::invalid_argument("net_forward: stochastic pass needs an Rng");
    if (opts.dropout_p < 0.0 || opts.dropout_p >= 1.0)
        throw std::invalid_argument("net_forward: dropout_p must be in [0, 1)");

    if (tape)
        tape->layers.assign(net.layers.size(), LayerTape{});

    Matrix h = x;
    const std::size_t batch = x.cols();
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const AdaptedLayer& layer = net.layers[l];
        const VariationalAdapter& ad = layer.adapter;
        LayerTape t;

        Matrix adapter_in = h;
        Matrix e_b;
        FlipoutMasks masks;
        Matrix noise_omega;
        if (noisy) {
            masks = opts.sampling == Sampling::flipout
                        ? FlipoutMasks::sample(*rng, ad.n(), batch, ad.rank())
                        : FlipoutMasks::shared(rng->gaussian(ad.rank(), ad.n()), batch);
            noise_omega = hadamard(masks.e, ad.omega());
            if (layer.bayesian_b())
                e_b = rng->gaussian(ad.m(), ad.rank());
        }
        if (dropout) {
            const double keep = 1.0 - opts.dropout_p;
            Matrix mask(h.rows(), h.cols());
            for (double& v : mask.data())
                v = rng->uniform(0.0, 1.0) < keep ? 1.0 / keep : 0.0;
            adapter_in = hadamard(h, mask);
            t.dropout_mask = std::move(mask);
        }

        Matrix v = matmul(ad.mean_a, adapter_in);
        if (noisy)
            axpy(v, 1.0, flipout_perturbation(noise_omega, adapter_in, masks.s, masks.t));
        Matrix b_used = ad.b;
        if (!e_b.empty())
            axpy(b_used, 1.0, hadamard(omega_b(layer, opts.b_std_scale), e_b));

        Matrix pre = add(matmul(ad.w0, h), matmul(b_used, v));
        add_bias(pre, layer.bias);

        const bool last = l + 1 == net.layers.size();
        Matrix out = pre;
        if (!last)
            for (double& z : out.data())
                z = std::tanh(z);

        if (tape) {
            t.input = std::move(h);
            t.adapter_in = std::move(adapter_in);
            t.v = std::move(v);
            t.b_used = std::move(b_used);
            t.noise_omega = std::move(noise_omega);
            t.masks = std::move(masks);
            t.e_b = std::move(e_b);
            t.pre = std::move(pre);
            t.out = out;
            tape->layers[l] = std::move(t);
        }
        h = std::move(out);
    }
    return h;
}

NetGrads net_backward(const SmallNet& net, const NetTape& tape, const Matrix& dlogits,
                      const ForwardOptions& opts)
{
    if (tape.layers.size() != net.layers.size())
        throw std::invalid_argument("net_backward: tape does not match the network");

    NetGrads grads = zero_grads(net);
    Matrix d_out = dlogits;
    for (std::size_t l = net.layers.size(); l-- > 0;) {
        const AdaptedLayer& layer = net.layers[l];
        const VariationalAdapter& ad = layer.adapter;
        const LayerTape& t = tape.layers[l];
        LayerGrads& g = grads[l];

        Matrix d_pre = d_out;
        if (l + 1 != net.layers.size())
            for (std::size_t k = 0; k < d_pre.size(); ++k) {
                const double y = t.out.data()[k];
                d_pre.data()[k] *= 1.0 - y * y;
            }

        g.b = matmul(d_pre, transpose(t.v));
        const Matrix dv = matmul(transpose(t.b_used), d_pre);
        g.mean_a = matmul(dv, transpose(t.adapter_in));
        Matrix d_adapter_in = matmul(transpose(ad.mean_a), dv);

        if (!t.noise_omega.empty()) {
            // v += [(E∘Omega)(H∘S)]∘T^T
            Matrix dp = dv;
            for (std::size_t k = 0; k < dp.rows(); ++k)
                for (std::size_t j = 0; j < dp.cols(); ++j)
                    dp(k, j) *= t.masks.t(j, k);
            const Matrix hs = hadamard(t.adapter_in, t.masks.s);
            const Matrix d_omega = hadamard(matmul(dp, transpose(hs)), t.masks.e);
            g.g = hadamard(d_omega, map_derivative(ad.std_map, ad.g));
            axpy(d_adapter_in, 1.0,
                 hadamard(matmul(transpose(t.noise_omega), dp), t.masks.s));
        }
        if (!t.e_b.empty()) {
            Matrix d_gb = hadamard(g.b, t.e_b);
            g.g_b = hadamard(d_gb, scale(map_derivative(ad.std_map, layer.g_b), opts.b_std_scale));
        }

        if (l == 0)
            break;
        Matrix d_in = matmul(transpose(ad.w0), d_pre);
        if (!t.dropout_mask.empty())
            d_adapter_in = hadamard(d_adapter_in, t.dropout_mask);
        axpy(d_in, 1.0, d_adapter_in);
        d_out = std::move(d_in);
    }
    return grads;
}

Matrix softmax_columns(const Matrix& logits)
{
    Matrix p(logits.rows(), logits.cols());
    for (std::size_t j = 0; j < logits.cols(); ++j) {
        double mx = logits(0, j);
        for (std::size_t i = 1; i < logits.rows(); ++i)
            mx = std::max(mx, logits(i, j));
        double z = 0.0;
        for (std::size_t i = 0; i < logits.rows(); ++i) {
            p(i, j) = std::exp(logits(i, j) - mx);
            z += p(i, j);
        }
        for (std::size_t i = 0; i < logits.rows(); ++i)
            p(i, j) /= z;
    }
    return p;
}

CrossEntropy softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels)
{
    if (labels.size() != logits.cols())
        throw DimensionError("softmax_cross_entropy: label count mismatch");
    CrossEntropy ce;
    const double inv_b = 1.0 / static_cast<double>(labels.size());
    ce.dlogits = Matrix(logits.rows(), logits.cols());
    std::size_t correct = 0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
        double mx = logits(0, j);
        std::size_t arg = 0;
        for (std::size_t i = 1; i < logits.rows(); ++i)
            if (logits(i, j) > mx) {
                mx = logits(i, j);
                arg = i;
            }
        double z = 0.0;
        for (std::size_t i = 0; i < logits.rows(); ++i)
            z += std::exp(logits(i, j) - mx);
        const double log_z = mx + std::log(z);
        const auto y = static_cast<std::size_t>(labels[j]);
        ce.loss += (log_z - logits(y, j)) * inv_b;
        for (std::size_t i = 0; i < logits.rows(); ++i)
            ce.dlogits(i, j) = (std::exp(logits(i, j) - log_z) - (i == y ? 1.0 : 0.0)) * inv_b;
        if (arg == y)
            ++correct;
    }
    ce.accuracy = static_cast<double>(correct) * inv_b;
    return ce;
}

double net_kl(const SmallNet& net, const PriorSpec& prior, double b_std_scale)
{
    double kl = 0.0;
    for (const auto& layer : net.layers) {
        kl += kl_diag_gaussian(layer.adapter.mean_a, layer.adapter.omega(), prior);
        if (layer.bayesian_b())
            kl += kl_diag_gaussian(layer.adapter.b, omega_b(layer, b_std_scale), prior);
    }
    return kl;
}

NetGrads net_kl_grads(const SmallNet& net, const PriorSpec& prior, double b_std_scale)
{
    const double var_p = prior.sigma_p * prior.sigma_p;
    // d/dOmega [-log Omega + Omega^2 / (2 sigma_p^2)] = Omega / sigma_p^2 - 1 / Omega
    auto d_omega = [var_p](double om) { return om / var_p - 1.0 / om; };

    NetGrads grads = zero_grads(net);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const AdaptedLayer& layer = net.layers[l];
        const VariationalAdapter& ad = layer.adapter;
        LayerGrads& g = grads[l];
        g.mean_a = scale(ad.mean_a, 1.0 / var_p);
        for (std::size_t k = 0; k < ad.g.size(); ++k) {
            const double rho = ad.g.data()[k];
            g.g.data()[k] = d_omega(apply(ad.std_map, rho)) * derivative(ad.std_map, rho);
        }
        if (layer.bayesian_b()) {
            g.b = scale(ad.b, 1.0 / var_p);
            for (std::size_t k = 0; k < layer.g_b.size(); ++k) {
                const double rho = layer.g_b.data()[k];
                const double om = b_std_scale * apply(ad.std_map, rho);
                g.g_b.data()[k] = d_omega(om) * b_std_scale * derivative(ad.std_map, rho);
            }
        }
    }
    return grads;
}

void write_net(std::ostream& out, const SmallNet& net)
{
    out << kNetMagic << ' ' << kNetVersion << '\n';
    out << "layers " << net.layers.size() << '\n';
    for (const auto& layer : net.layers) {
        write_adapter(out, layer.adapter);
        write_matrix(out, "bias", layer.bias);
        write_matrix(out, "g_b", layer.g_b);
    }
}

SmallNet read_net(std::istream& in)
{
    std::string tok;
    int version = 0;
    if (!(in >> tok) || tok != kNetMagic || !(in >> version) || version != kNetVersion)
        throw std::runtime_error("net record: bad header");
    std::size_t n_layers = 0;
    if (!(in >> tok) || tok != "layers" || !(in >> n_layers) || n_layers == 0)
        throw std::runtime_error("net record: bad layer count");
    SmallNet net;
    for (std::size_t l = 0; l < n_layers; ++l) {
        AdaptedLayer layer;
        layer.adapter = read_adapter(in);
        layer.bias = read_matrix(in, "bias");
        layer.g_b = read_matrix(in, "g_b");
        if (layer.bias.rows() != layer.adapter.m() || layer.bias.cols() != 1)
            throw std::runtime_error("net record: bias shape mismatch");
        if (l > 0 && layer.adapter.n() != net.layers.back().adapter.m())
            throw std::runtime_error("net record: layer widths do not chain");
        net.layers.push_back(std::move(layer));
    }
    return net;
}

} // namespace blob
