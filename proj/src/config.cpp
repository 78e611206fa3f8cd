#include "blob/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace blob {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string key_error(const std::string& key, const std::string& value, const char* what)
{
    return "config: " + key + " = '" + value + "': " + what;
}

double to_double(const std::string& key, const std::string& v)
{
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::invalid_argument(key_error(key, v, "expected a number"));
    return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw std::invalid_argument(key_error(key, v, "expected a non-negative integer"));
    return out;
}

bool to_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1" || v == "yes")
        return true;
    if (v == "false" || v == "0" || v == "no")
        return false;
    throw std::invalid_argument(key_error(key, v, "expected true or false"));
}

std::vector<std::string> split_list(const std::string& v)
{
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

template <class Parse>
auto wrap(const std::string& key, const std::string& v, Parse parse)
{
    try {
        return parse(v);
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(key_error(key, v, e.what()));
    }
}

using Setter = std::function<void(ExperimentConfig&, const std::string& key, const std::string&)>;

const std::map<std::string, Setter>& setters()
{
    static const std::map<std::string, Setter> table = {
        {"task.generator",
         [](auto& c, auto& k, auto& v) { c.task.generator = wrap(k, v, parse_generator); }},
        {"task.n_train", [](auto& c, auto& k, auto& v) { c.task.n_train = to_u64(k, v); }},
        {"task.n_test", [](auto& c, auto& k, auto& v) { c.task.n_test = to_u64(k, v); }},
        {"task.n_classes", [](auto& c, auto& k, auto& v) { c.task.n_classes = to_u64(k, v); }},
        {"task.input_dim", [](auto& c, auto& k, auto& v) { c.task.input_dim = to_u64(k, v); }},
        {"task.noise_scale",
         [](auto& c, auto& k, auto& v) { c.task.noise_scale = to_double(k, v); }},
        {"task.separation",
         [](auto& c, auto& k, auto& v) { c.task.separation = to_double(k, v); }},
        {"task.shift", [](auto& c, auto& k, auto& v) { c.task.shift = wrap(k, v, parse_shift); }},

        {"train.sigma_p", [](auto& c, auto& k, auto& v) { c.train.sigma_p = to_double(k, v); }},
        {"train.epsilon", [](auto& c, auto& k, auto& v) { c.train.epsilon = to_double(k, v); }},
        {"train.k_train_samples",
         [](auto& c, auto& k, auto& v) { c.train.k_train_samples = to_u64(k, v); }},
        {"train.lr_likelihood",
         [](auto& c, auto& k, auto& v) { c.train.lr_likelihood = to_double(k, v); }},
        {"train.lr_kl", [](auto& c, auto& k, auto& v) { c.train.lr_kl = to_double(k, v); }},
        {"train.steps", [](auto& c, auto& k, auto& v) { c.train.steps = to_u64(k, v); }},
        {"train.batch_size", [](auto& c, auto& k, auto& v) { c.train.batch_size = to_u64(k, v); }},
        {"train.seed", [](auto& c, auto& k, auto& v) { c.train.seed = to_u64(k, v); }},
        {"train.hidden_dim", [](auto& c, auto& k, auto& v) { c.train.hidden_dim = to_u64(k, v); }},
        {"train.rank", [](auto& c, auto& k, auto& v) { c.train.rank = to_u64(k, v); }},
        {"train.warmup_ratio",
         [](auto& c, auto& k, auto& v) { c.train.warmup_ratio = to_double(k, v); }},
        {"train.adam_beta1",
         [](auto& c, auto& k, auto& v) { c.train.adam_beta1 = to_double(k, v); }},
        {"train.adam_beta2",
         [](auto& c, auto& k, auto& v) { c.train.adam_beta2 = to_double(k, v); }},
        {"train.adam_eps", [](auto& c, auto& k, auto& v) { c.train.adam_eps = to_double(k, v); }},

        {"schedule.gamma", [](auto& c, auto& k, auto& v) { c.gamma = to_double(k, v); }},

        {"baselines.weight_decay",
         [](auto& c, auto& k, auto& v) { c.baseline_defaults.weight_decay = to_double(k, v); }},
        {"baselines.dropout_p",
         [](auto& c, auto& k, auto& v) { c.baseline_defaults.dropout_p = to_double(k, v); }},
        {"baselines.n_members",
         [](auto& c, auto& k, auto& v) { c.baseline_defaults.n_members = to_u64(k, v); }},
        {"baselines.n_eval_samples",
         [](auto& c, auto& k, auto& v) { c.baseline_defaults.n_eval_samples = to_u64(k, v); }},

        {"ablation.kl_mode",
         [](auto& c, auto& k, auto& v) { c.ablation.kl_mode = wrap(k, v, parse_kl_mode); }},
        {"ablation.param_map",
         [](auto& c, auto& k, auto& v) { c.ablation.param_map = wrap(k, v, parse_param_map); }},
        {"ablation.sampling",
         [](auto& c, auto& k, auto& v) { c.ablation.sampling = wrap(k, v, parse_sampling); }},
        {"ablation.bayes_b", [](auto& c, auto& k, auto& v) { c.ablation.bayes_b = to_bool(k, v); }},
        {"ablation.b_std_scale",
         [](auto& c, auto& k, auto& v) { c.ablation.b_std_scale = to_double(k, v); }},

        {"suite.methods",
         [](auto& c, auto& k, auto& v) {
             c.methods.clear();
             for (const auto& item : split_list(v))
                 c.methods.push_back(wrap(k, item, parse_method));
         }},
        {"suite.seeds",
         [](auto& c, auto& k, auto& v) {
             c.seeds.clear();
             for (const auto& item : split_list(v))
                 c.seeds.push_back(to_u64(k, item));
         }},
        {"suite.n_samples",
         [](auto& c, auto& k, auto& v) {
             c.n_samples.clear();
             for (const auto& item : split_list(v))
                 c.n_samples.push_back(to_u64(k, item));
         }},
    };
    return table;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void Ablation::apply_to(MethodSpec& method) const
{
    if (kl_mode)
        method.kl_mode = *kl_mode;
    if (param_map)
        method.std_map = *param_map;
    if (sampling)
        method.sampling = *sampling;
    if (bayes_b)
        method.bayesian_b = *bayes_b;
    if (b_std_scale)
        method.b_std_scale = *b_std_scale;
}

BaselineSpec ExperimentConfig::spec_for(MethodKind kind) const
{
    BaselineSpec spec = BaselineSpec::for_kind(kind);
    spec.weight_decay = baseline_defaults.weight_decay;
    spec.dropout_p = baseline_defaults.dropout_p;
    spec.n_members = baseline_defaults.n_members;
    spec.n_eval_samples = baseline_defaults.n_eval_samples;
    if (kind == MethodKind::blob)
        ablation.apply_to(spec.method);
    return spec;
}

ExperimentConfig parse_config(std::istream& in)
{
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    ExperimentConfig config;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        if (body.empty())
            throw std::invalid_argument("config: key '" + section + "' outside a section");
        for (const auto& [key, value] : body) {
            const std::string full = section + "." + key;
            const auto it = table.find(full);
            if (it == table.end())
                throw std::invalid_argument("config: unknown key '" + full + "'");
            it->second(config, full, trim(value.data()));
        }
    }
    config.task.validate();
    config.train.validate();
    if (config.methods.empty() || config.seeds.empty() || config.n_samples.empty())
        throw std::invalid_argument("config: suite lists must not be empty");
    return config;
}

ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("config: cannot open '" + path + "'");
    return parse_config(in);
}

void write_config(std::ostream& out, const ExperimentConfig& c)
{
    out << "[task]\n"
        << "generator = " << to_string(c.task.generator) << '\n'
        << "n_train = " << c.task.n_train << '\n'
        << "n_test = " << c.task.n_test << '\n'
        << "n_classes = " << c.task.n_classes << '\n'
        << "input_dim = " << c.task.input_dim << '\n'
        << "noise_scale = " << fmt(c.task.noise_scale) << '\n'
        << "separation = " << fmt(c.task.separation) << '\n'
        << "shift = " << to_string(c.task.shift) << "\n\n";
    out << "[train]\n"
        << "sigma_p = " << fmt(c.train.sigma_p) << '\n'
        << "epsilon = " << fmt(c.train.epsilon) << '\n'
        << "k_train_samples = " << c.train.k_train_samples << '\n'
        << "lr_likelihood = " << fmt(c.train.lr_likelihood) << '\n'
        << "lr_kl = " << fmt(c.train.lr_kl) << '\n'
        << "steps = " << c.train.steps << '\n'
        << "batch_size = " << c.train.batch_size << '\n'
        << "seed = " << c.train.seed << '\n'
        << "hidden_dim = " << c.train.hidden_dim << '\n'
        << "rank = " << c.train.rank << '\n'
        << "warmup_ratio = " << fmt(c.train.warmup_ratio) << '\n'
        << "adam_beta1 = " << fmt(c.train.adam_beta1) << '\n'
        << "adam_beta2 = " << fmt(c.train.adam_beta2) << '\n'
        << "adam_eps = " << fmt(c.train.adam_eps) << "\n\n";
    out << "[schedule]\n"
        << "gamma = " << fmt(c.gamma) << "\n\n";
    out << "[baselines]\n"
        << "weight_decay = " << fmt(c.baseline_defaults.weight_decay) << '\n'
        << "dropout_p = " << fmt(c.baseline_defaults.dropout_p) << '\n'
        << "n_members = " << c.baseline_defaults.n_members << '\n'
        << "n_eval_samples = " << c.baseline_defaults.n_eval_samples << "\n\n";

    const MethodSpec blob = c.spec_for(MethodKind::blob).method;
    out << "[ablation]\n"
        << "kl_mode = " << to_string(blob.kl_mode) << '\n'
        << "param_map = " << to_string(blob.std_map) << '\n'
        << "sampling = " << to_string(blob.sampling) << '\n'
        << "bayes_b = " << (blob.bayesian_b ? "true" : "false") << '\n'
        << "b_std_scale = " << fmt(blob.b_std_scale) << "\n\n";

    auto join = [&](const auto& items, auto&& show) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i)
            s += (i ? ", " : "") + show(items[i]);
        return s;
    };
    out << "[suite]\n"
        << "methods = "
        << join(c.methods, [](MethodKind k) { return std::string(to_string(k)); }) << '\n'
        << "seeds = " << join(c.seeds, [](std::uint64_t s) { return std::to_string(s); }) << '\n'
        << "n_samples = "
        << join(c.n_samples, [](std::size_t n) { return std::to_string(n); }) << '\n';
}

} // namespace blob
