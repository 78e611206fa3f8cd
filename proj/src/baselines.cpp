#include "blob/baselines.hpp"

#include <stdexcept>
#include <string>

namespace blob {

MethodKind parse_method(std::string_view name)
{
    if (name == "mle")
        return MethodKind::mle;
    if (name == "map")
        return MethodKind::map;
    if (name == "mcd" || name == "mc_dropout")
        return MethodKind::mc_dropout;
    if (name == "ens" || name == "ensemble")
        return MethodKind::ensemble;
    if (name == "bbb")
        return MethodKind::bbb;
    if (name == "blob")
        return MethodKind::blob;
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

std::string_view to_string(MethodKind kind) noexcept
{
    switch (kind) {
    case MethodKind::mle:
        return "mle";
    case MethodKind::map:
        return "map";
    case MethodKind::mc_dropout:
        return "mcd";
    case MethodKind::ensemble:
        return "ens";
    case MethodKind::bbb:
        return "bbb";
    case MethodKind::blob:
        return "blob";
    }
    return "?";
}

bool is_sampling_method(MethodKind kind) noexcept
{
    return kind == MethodKind::mc_dropout || kind == MethodKind::bbb || kind == MethodKind::blob;
}

BaselineSpec BaselineSpec::for_kind(MethodKind kind)
{
    BaselineSpec spec;
    spec.kind = kind;
    MethodSpec& m = spec.method;
    switch (kind) {
    case MethodKind::mle:
    case MethodKind::ensemble:
        m.variational = false;
        break;
    case MethodKind::map:
        m.variational = false;
        m.weight_decay = spec.weight_decay;
        break;
    case MethodKind::mc_dropout:
        m.variational = false;
        m.dropout_p = spec.dropout_p;
        break;
    case MethodKind::bbb:
        m.std_map = ParamMap::softplus;
        m.kl_mode = KlMode::uniform;
        m.sampling = Sampling::shared;
        break;
    case MethodKind::blob:
        break;
    }
    return spec;
}

TrainedModel train_baseline(const BaselineSpec& spec, const Dataset& data,
                            const TrainConfig& config, double gamma)
{
    data.validate();
    const std::size_t members = spec.kind == MethodKind::ensemble ? spec.n_members : 1;
    if (members == 0)
        throw std::invalid_argument("train_baseline: ensemble needs at least one member");

    const KlSchedule schedule =
        KlSchedule::for_dataset(data.size(), config.batch_size, spec.method.kl_mode, gamma);
    TrainedModel model;
    model.spec = spec;
    MethodSpec& method = model.spec.method;
    if (spec.kind == MethodKind::map)
        method.weight_decay = spec.weight_decay;
    if (spec.kind == MethodKind::mc_dropout)
        method.dropout_p = spec.dropout_p;
    for (std::size_t k = 0; k < members; ++k) {
        TrainConfig member = config;
        if (k > 0)
            member.seed = derive_seed(config.seed, k);
        SmallNet net = make_net(data.input_dim(), data.n_classes, member, method);
        model.logs.push_back(train(net, data, member, method, schedule));
        model.members.push_back(std::move(net));
    }
    return model;
}

Matrix predict_baseline(const TrainedModel& model, const Matrix& inputs, std::size_t n_samples,
                        std::uint64_t seed)
{
    if (model.members.empty())
        throw std::invalid_argument("predict_baseline: model has no members");
    switch (model.spec.kind) {
    case MethodKind::mle:
    case MethodKind::map:
        return predict(model.members.front(), inputs, 0, seed);
    case MethodKind::ensemble: {
        const Matrix x = transpose(inputs);
        const SmallNet& first = model.members.front();
        Matrix logits(first.n_classes(), x.cols());
        for (const auto& net : model.members)
            axpy(logits, 1.0, net_forward(net, x, ForwardOptions{}, nullptr));
        const double inv = 1.0 / static_cast<double>(model.members.size());
        return transpose(softmax_columns(scale(logits, inv)));
    }
    case MethodKind::mc_dropout:
    case MethodKind::bbb:
    case MethodKind::blob:
        return predict(model.members.front(), inputs, n_samples, seed,
                       model.spec.method.eval_forward());
    }
    return {};
}

} // namespace blob
