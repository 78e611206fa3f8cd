#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "blob/baselines.hpp"
#include "blob/tasks.hpp"
#include "blob/trainer.hpp"

using namespace blob;

namespace {

TrainConfig small_config()
{
    TrainConfig c;
    c.hidden_dim = 4;
    c.rank = 2;
    c.sigma_p = 0.2;
    return c;
}

Dataset toy_data(std::size_t n, std::size_t dim, std::size_t classes, std::uint64_t seed)
{
    Rng rng(seed);
    Dataset d;
    d.n_classes = classes;
    d.x = rng.gaussian(n, dim);
    for (std::size_t i = 0; i < n; ++i)
        d.y.push_back(static_cast<int>(i % classes));
    return d;
}

double test_cross_entropy(const Matrix& logits, const std::vector<int>& y)
{
    double loss = 0.0;
    for (std::size_t j = 0; j < logits.cols(); ++j) {
        double mx = -INFINITY;
        for (std::size_t c = 0; c < logits.rows(); ++c)
            mx = std::max(mx, logits(c, j));
        double z = 0.0;
        for (std::size_t c = 0; c < logits.rows(); ++c)
            z += std::exp(logits(c, j) - mx);
        loss += -(logits(static_cast<std::size_t>(y[j]), j) - mx - std::log(z));
    }
    return loss / static_cast<double>(logits.cols());
}

// Per-entry complexity term on A with constants dropped.
double line10_kl(const SmallNet& net, double sp)
{
    double s = 0.0;
    for (const auto& layer : net.layers) {
        for (double m : layer.adapter.mean_a.data())
            s += m * m / (2 * sp * sp);
        for (double g : layer.adapter.g.data())
            s += std::pow(g, 4) / (2 * sp * sp) - 2.0 * std::log(std::abs(g));
    }
    return s;
}

} // namespace

TEST_CASE("init_adapter")
{
    TrainConfig c;
    c.epsilon = 0.05;
    const VariationalAdapter ad = init_adapter(5, 6, 2, c);
    for (double g : ad.g.data())
        CHECK((g >= 0.05 / std::sqrt(2.0) && g <= 0.05));
    for (double m : ad.mean_a.data())
        CHECK((m >= -1.0 && m <= 1.0));
    CHECK(ad.b == Matrix(5, 2));
    CHECK(init_adapter(5, 6, 2, c) == ad);
    CHECK_FALSE(init_adapter(5, 6, 2, c, 1) == ad);
    CHECK_THROWS_AS(init_adapter(3, 6, 3, c), DimensionError);
}

TEST_CASE("make_net")
{
    const TrainConfig c = small_config();
    const SmallNet net = make_net(6, 3, c);
    REQUIRE(net.layers.size() == 2);
    CHECK(net.input_dim() == 6);
    CHECK(net.n_classes() == 3);
    CHECK(net.layers[0].adapter.rank() == 2);
    CHECK(net.layers[1].adapter.rank() == 2);

    MethodSpec bbb;
    bbb.std_map = ParamMap::softplus;
    const SmallNet soft = make_net(6, 3, c, bbb);
    for (std::size_t l = 0; l < 2; ++l) {
        const Matrix a = net.layers[l].adapter.omega();
        const Matrix b = soft.layers[l].adapter.omega();
        for (std::size_t k = 0; k < a.size(); ++k)
            CHECK(b.data()[k] == doctest::Approx(a.data()[k]).epsilon(1e-12));
    }
}

TEST_CASE("ELBO with the KL off and no noise is the mean-network cross-entropy")
{
    TrainConfig c = small_config();
    SmallNet net = make_net(6, 3, c);
    for (auto& layer : net.layers)
        for (double& g : layer.adapter.g.data())
            g = 1e-9;
    const Dataset d = toy_data(10, 6, 3, 1);
    const Matrix x = d.all_columns();
    const ElboResult r = elbo_minibatch(net, x, d.y, c, MethodSpec{}, 0.0, std::uint64_t{3});
    const double ce = test_cross_entropy(net_forward(net, x, ForwardOptions{}, nullptr), d.y);
    CHECK(r.loss == doctest::Approx(ce).epsilon(1e-12));
    CHECK(r.kl_weight == 0.0);
}

TEST_CASE("ELBO decomposition and KL gradient per G entry")
{
    const TrainConfig c = small_config();
    const SmallNet net = make_net(6, 3, c);
    const Dataset d = toy_data(8, 6, 3, 2);
    const ElboResult r = elbo_minibatch(net, d.all_columns(), d.y, c, MethodSpec{}, 0.37, std::uint64_t{4});
    CHECK(r.loss == r.likelihood + 0.37 * r.kl);

    for (std::size_t l = 0; l < 2; ++l) {
        const Matrix& g = net.layers[l].adapter.g;
        for (std::size_t k = 0; k < g.size(); ++k) {
            const double gv = g.data()[k];
            const double want = 2 * std::pow(gv, 3) / (c.sigma_p * c.sigma_p) - 2.0 / gv;
            CHECK(r.kl_grads[l].g.data()[k] == doctest::Approx(want).epsilon(1e-12));
        }
    }
}

TEST_CASE("ELBO rejects degenerate input")
{
    const TrainConfig c = small_config();
    SmallNet net = make_net(6, 3, c);
    const Dataset d = toy_data(4, 6, 3, 3);
    CHECK_THROWS_AS(elbo_minibatch(net, Matrix(6, 0), {}, c, MethodSpec{}, 0.1, std::uint64_t{1}),
                    std::invalid_argument);
    net.layers[0].adapter.g(0, 0) = 0.0;
    CHECK_THROWS_AS(elbo_minibatch(net, d.all_columns(), d.y, c, MethodSpec{}, 0.1, std::uint64_t{1}),
                    std::domain_error);
}

TEST_CASE("gradients match central differences")
{
    const double h = 1e-5;
    const double lambda = 0.3;
    struct Variant {
        MethodSpec method;
        const char* name;
    };
    MethodSpec bayes_b;
    bayes_b.bayesian_b = true;
    MethodSpec softplus;
    softplus.std_map = ParamMap::softplus;
    softplus.sampling = Sampling::shared;
    MethodSpec dropout;
    dropout.variational = false;
    dropout.dropout_p = 0.2;
    for (const auto& [method, name] : {Variant{MethodSpec{}, "blob"}, Variant{bayes_b, "bayes_b"},
                                       Variant{softplus, "softplus"}, Variant{dropout, "dropout"}}) {
        CAPTURE(name);
        const TrainConfig c = small_config();
        SmallNet net = make_net(6, 3, c, method);
        Rng rng(11);
        for (auto& layer : net.layers) {
            layer.adapter.b = rng.gaussian(layer.adapter.m(), layer.adapter.rank());
            if (method.std_map == ParamMap::square)
                layer.adapter.g = rng.uniform(layer.adapter.rank(), layer.adapter.n(), 0.3, 0.7);
            if (!layer.g_b.empty())
                layer.g_b = rng.uniform(layer.g_b.rows(), layer.g_b.cols(), 0.3, 0.7);
        }
        const Dataset d = toy_data(5, 6, 3, 12);
        const Matrix x = d.all_columns();
        auto loss = [&](const SmallNet& n) {
            return elbo_minibatch(n, x, d.y, c, method, lambda, std::uint64_t{99}).loss;
        };
        const NetGrads grads =
            elbo_minibatch(net, x, d.y, c, method, lambda, std::uint64_t{99}).total_grads();

        auto check_tensor = [&](auto member, auto grad_member) {
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                Matrix& p = member(net.layers[l]);
                const Matrix& g = grad_member(grads[l]);
                double diff = 0.0, norm = 0.0;
                for (std::size_t k = 0; k < p.size(); ++k) {
                    const double keep = p.data()[k];
                    p.data()[k] = keep + h;
                    const double up = loss(net);
                    p.data()[k] = keep - h;
                    const double down = loss(net);
                    p.data()[k] = keep;
                    const double fd = (up - down) / (2 * h);
                    diff += (fd - g.data()[k]) * (fd - g.data()[k]);
                    norm += fd * fd;
                }
                if (norm > 0.0)
                    CHECK(std::sqrt(diff / norm) <= 1e-5);
            }
        };
        check_tensor([](AdaptedLayer& l) -> Matrix& { return l.adapter.mean_a; },
                     [](const LayerGrads& g) -> const Matrix& { return g.mean_a; });
        check_tensor([](AdaptedLayer& l) -> Matrix& { return l.adapter.b; },
                     [](const LayerGrads& g) -> const Matrix& { return g.b; });
        if (method.variational)
            check_tensor([](AdaptedLayer& l) -> Matrix& { return l.adapter.g; },
                         [](const LayerGrads& g) -> const Matrix& { return g.g; });
        if (method.bayesian_b)
            check_tensor([](AdaptedLayer& l) -> Matrix& { return l.g_b; },
                         [](const LayerGrads& g) -> const Matrix& { return g.g_b; });
    }
}

TEST_CASE("line-10 objective has the same gradient as the full KL")
{
    const TrainConfig c = small_config();
    SmallNet net = make_net(6, 3, c);
    const double h = 1e-6;
    const NetGrads kg = net_kl_grads(net, PriorSpec(c.sigma_p), 0.01);
    Matrix& g = net.layers[1].adapter.g;
    const double keep = g(0, 1);
    g(0, 1) = keep + h;
    const double up = line10_kl(net, c.sigma_p);
    g(0, 1) = keep - h;
    const double down = line10_kl(net, c.sigma_p);
    g(0, 1) = keep;
    CHECK(kg[1].g(0, 1) == doctest::Approx((up - down) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("KL schedule")
{
    KlSchedule s;
    s.mode = KlMode::uniform;
    s.n_minibatches = 100;
    for (std::size_t i : {1u, 50u, 100u, 250u})
        CHECK(kl_weight_at(s, i) == doctest::Approx(0.01).epsilon(1e-15));

    s.mode = KlMode::blob_ascending;
    s.n_minibatches = 3;
    CHECK(kl_weight_at(s, 1) == doctest::Approx(2.0 / 14).epsilon(1e-15));
    CHECK(kl_weight_at(s, 2) == doctest::Approx(4.0 / 14).epsilon(1e-15));
    CHECK(kl_weight_at(s, 3) == doctest::Approx(8.0 / 14).epsilon(1e-15));
    CHECK(kl_weight_at(s, 4) == kl_weight_at(s, 3));
    s.mode = KlMode::blob_literal;
    CHECK(kl_weight_at(s, 3) == doctest::Approx(8.0 / 7).epsilon(1e-15));
    s.mode = KlMode::blundell;
    CHECK(kl_weight_at(s, 1) == doctest::Approx(4.0 / 7).epsilon(1e-15));

    CHECK(pseudo_rescaled_length(640, 8.0) ==
          doctest::Approx(100.0 * std::pow(640.0, std::numbers::pi / 8.0)).epsilon(1e-14));
    const KlSchedule ds = KlSchedule::for_dataset(640, 32, KlMode::blob_ascending);
    CHECK(ds.rescaled_len == 1264);
    CHECK(ds.n_minibatches == 40);
    CHECK_THROWS(kl_weight_at(ds, 0));
}

TEST_CASE("KL schedule sums to one and ascends")
{
    for (std::size_t m : {1u, 5u, 40u, 200u, 1500u})
        for (KlMode mode : {KlMode::uniform, KlMode::blundell, KlMode::blob_ascending}) {
            KlSchedule s;
            s.mode = mode;
            s.n_minibatches = m;
            double total = 0.0;
            for (std::size_t i = 1; i <= m; ++i) {
                const double w = kl_weight_at(s, i);
                CHECK((w >= 0.0 && w <= 1.0));
                total += w;
                if (mode == KlMode::blob_ascending && i > 1 && m < 1000)
                    CHECK(w > kl_weight_at(s, i - 1));
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
        }
    CHECK(parse_kl_mode("blob") == KlMode::blob_ascending);
    CHECK_THROWS(parse_kl_mode("cyclic"));
}

TEST_CASE("learning-rate multiplier")
{
    CHECK(lr_multiplier(1, 100, 0.06) == doctest::Approx(1.0 / 6));
    CHECK(lr_multiplier(6, 100, 0.06) == doctest::Approx(1.0));
    CHECK(lr_multiplier(7, 100, 0.06) == doctest::Approx(94.0 / 94));
    CHECK(lr_multiplier(100, 100, 0.06) == doctest::Approx(1.0 / 94));
    CHECK(lr_multiplier(101, 100, 0.06) == 0.0);
    CHECK(lr_multiplier(1, 100, 0.0) == 1.0);
}

TEST_CASE("train: zero steps, determinism, frozen backbone")
{
    TaskSpec t;
    t.n_train = 100;
    t.n_test = 10;
    const TaskData data = generate_task(t, 1);
    TrainConfig c;
    c.steps = 0;
    const KlSchedule s = KlSchedule::for_dataset(100, c.batch_size, KlMode::blob_ascending);
    SmallNet net = make_net(t.input_dim, 2, c);
    const SmallNet before = net;
    CHECK(train(net, data.train, c, MethodSpec{}, s).log.empty());
    CHECK(net == before);

    c.steps = 150;
    SmallNet a = before, b = before;
    const TrainResult ra = train(a, data.train, c, MethodSpec{}, s);
    const TrainResult rb = train(b, data.train, c, MethodSpec{}, s);
    CHECK(a == b);
    std::ostringstream ca, cb;
    write_trajectory_csv(ca, ra);
    write_trajectory_csv(cb, rb);
    CHECK(ca.str() == cb.str());
    CHECK(ca.str().rfind("step,likelihood_loss,kl_value,kl_weight,train_acc\n", 0) == 0);

    for (std::size_t l = 0; l < 2; ++l) {
        CHECK(a.layers[l].adapter.w0 == before.layers[l].adapter.w0);
        CHECK(a.layers[l].bias == before.layers[l].bias);
        CHECK_FALSE(a.layers[l].adapter.mean_a == before.layers[l].adapter.mean_a);
    }
    for (const auto& step : ra.log)
        CHECK(step.loss == step.likelihood_loss + step.kl_weight * step.kl_value);
}

TEST_CASE("train fits separable blobs")
{
    TaskSpec t;
    t.n_train = 200;
    t.n_test = 10;
    t.input_dim = 2;
    t.separation = 6.0;
    const TaskData data = generate_task(t, 2);
    TrainConfig c;
    c.steps = 2000;
    const KlSchedule s = KlSchedule::for_dataset(200, c.batch_size, KlMode::blob_ascending);
    SmallNet net = make_net(2, 2, c);
    train(net, data.train, c, MethodSpec{}, s);
    const Matrix p = predict(net, data.train.x, 0, 1);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < p.rows(); ++i)
        hits += (p(i, 1) > p(i, 0)) == (data.train.y[i] == 1);
    CHECK(static_cast<double>(hits) / 200.0 >= 0.95);
}

TEST_CASE("BLoB with the KL off and G near zero follows the MLE trajectory")
{
    TaskSpec t;
    t.n_train = 120;
    t.n_test = 10;
    const TaskData data = generate_task(t, 3);
    TrainConfig c;
    c.steps = 300;
    const KlSchedule s = KlSchedule::for_dataset(120, c.batch_size, KlMode::blob_ascending);

    const MethodSpec mle = BaselineSpec::for_kind(MethodKind::mle).method;
    MethodSpec blob;
    blob.use_kl = false;
    blob.freeze_std = true;
    SmallNet a = make_net(t.input_dim, 2, c, mle);
    SmallNet b = make_net(t.input_dim, 2, c, blob);
    for (auto& layer : b.layers)
        for (double& g : layer.adapter.g.data())
            g = 1e-6;
    const TrainResult ra = train(a, data.train, c, mle, s);
    const TrainResult rb = train(b, data.train, c, blob, s);
    for (std::size_t l = 0; l < 2; ++l) {
        for (std::size_t k = 0; k < a.layers[l].adapter.mean_a.size(); ++k)
            CHECK(std::abs(a.layers[l].adapter.mean_a.data()[k] -
                           b.layers[l].adapter.mean_a.data()[k]) <= 1e-10);
        for (std::size_t k = 0; k < a.layers[l].adapter.b.size(); ++k)
            CHECK(std::abs(a.layers[l].adapter.b.data()[k] - b.layers[l].adapter.b.data()[k]) <=
                  1e-10);
    }
    for (std::size_t i = 0; i < ra.log.size(); ++i)
        CHECK(std::abs(ra.log[i].likelihood_loss - rb.log[i].likelihood_loss) <= 1e-10);
}

TEST_CASE("divergence aborts with the step index")
{
    Dataset d;
    d.n_classes = 2;
    d.x = Matrix(4, 3);
    d.x(2, 1) = std::numeric_limits<double>::quiet_NaN();
    d.y = {0, 1, 0, 1};
    TrainConfig c;
    c.steps = 5;
    c.batch_size = 4;
    SmallNet net = make_net(3, 2, c);
    const KlSchedule s = KlSchedule::for_dataset(4, 4, KlMode::blob_ascending);
    try {
        train(net, d, c, MethodSpec{}, s);
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(e.step() == 1);
        CHECK(std::string(e.what()).find("likelihood") != std::string::npos);
    }
}

TEST_CASE("predict")
{
    TrainConfig c = small_config();
    SmallNet net = make_net(6, 3, c);
    Rng rng(20);
    for (auto& layer : net.layers)
        layer.adapter.b = rng.gaussian(layer.adapter.m(), layer.adapter.rank());
    const Matrix x = rng.gaussian(7, 6);
    for (std::size_t n : {0u, 1u, 10u}) {
        const Matrix p = predict(net, x, n, 5);
        REQUIRE(p.rows() == 7);
        for (std::size_t i = 0; i < 7; ++i) {
            double s = 0.0;
            for (std::size_t k = 0; k < 3; ++k)
                s += p(i, k);
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
    CHECK(predict(net, x, 10, 5) == predict(net, x, 10, 5));
    CHECK_FALSE(predict(net, x, 10, 5) == predict(net, x, 10, 6));

    for (auto& layer : net.layers)
        for (double& g : layer.adapter.g.data())
            g = 1e-8;
    const Matrix p0 = predict(net, x, 0, 1);
    const Matrix pn = predict(net, x, 200, 1);
    for (std::size_t k = 0; k < p0.size(); ++k)
        CHECK(std::abs(p0.data()[k] - pn.data()[k]) <= 1e-12);
}

TEST_CASE("net record round-trips")
{
    MethodSpec m;
    m.bayesian_b = true;
    const SmallNet net = make_net(6, 3, small_config(), m);
    std::stringstream ss;
    write_net(ss, net);
    CHECK(read_net(ss) == net);
}
