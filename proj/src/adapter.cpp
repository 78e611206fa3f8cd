#include "blob/adapter.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

namespace blob {

namespace {

constexpr const char* kAdapterMagic = "BLOB-ADAPTER";
constexpr int kAdapterVersion = 1;

void require_batch(const Matrix& h, std::size_t n, const char* op)
{
    if (h.rows() != n)
        throw DimensionError(std::string(op) + ": input has " + std::to_string(h.rows()) +
                             " rows, adapter expects " + std::to_string(n));
    if (h.cols() == 0)
        throw DimensionError(std::string(op) + ": empty batch");
}

void expect_token(std::istream& in, const std::string& want)
{
    std::string got;
    if (!(in >> got) || got != want)
        throw std::runtime_error("adapter record: expected '" + want + "', got '" + got + "'");
}

} // namespace

VariationalAdapter::VariationalAdapter(Matrix w0_, Matrix b_, Matrix mean_a_, Matrix g_,
                                       ParamMap std_map_)
    : w0(std::move(w0_)), b(std::move(b_)), mean_a(std::move(mean_a_)), g(std::move(g_)),
      std_map(std_map_)
{
    validate();
}

Matrix VariationalAdapter::omega() const
{
    Matrix out(g.rows(), g.cols());
    auto src = g.data();
    auto dst = out.data();
    for (std::size_t k = 0; k < src.size(); ++k)
        dst[k] = apply(std_map, src[k]);
    return out;
}

void VariationalAdapter::validate() const
{
    const std::size_t r = mean_a.rows();
    if (b.rows() != m() || b.cols() != r)
        throw DimensionError("adapter: B is " + shape_string(b) + ", expected " +
                             std::to_string(m()) + "x" + std::to_string(r));
    if (mean_a.cols() != n())
        throw DimensionError("adapter: M is " + shape_string(mean_a) + ", expected r x " +
                             std::to_string(n()));
    if (!g.same_shape(mean_a))
        throw DimensionError("adapter: G is " + shape_string(g) + ", M is " +
                             shape_string(mean_a));
    if (r == 0 || r >= m() || r >= n())
        throw DimensionError("adapter: rank " + std::to_string(r) + " must satisfy 0 < r < min(" +
                             std::to_string(m()) + ", " + std::to_string(n()) + ")");
}

FlipoutMasks FlipoutMasks::sample(Rng& rng, std::size_t n, std::size_t batch, std::size_t rank)
{
    FlipoutMasks masks;
    masks.e = rng.gaussian(rank, n);
    masks.s = rng.rademacher(n, batch);
    masks.t = rng.rademacher(batch, rank);
    return masks;
}

FlipoutMasks FlipoutMasks::shared(Matrix e, std::size_t batch)
{
    FlipoutMasks masks;
    masks.s = Matrix(e.cols(), batch, 1.0);
    masks.t = Matrix(batch, e.rows(), 1.0);
    masks.e = std::move(e);
    return masks;
}

Matrix flipout_perturbation(const Matrix& noise_omega, const Matrix& h, const Matrix& s,
                            const Matrix& t)
{
    if (t.rows() != h.cols() || t.cols() != noise_omega.rows())
        throw DimensionError("flipout: T is " + shape_string(t) + ", expected " +
                             std::to_string(h.cols()) + "x" + std::to_string(noise_omega.rows()));
    Matrix p = matmul(noise_omega, hadamard(h, s));
    for (std::size_t k = 0; k < p.rows(); ++k)
        for (std::size_t j = 0; j < p.cols(); ++j)
            p(k, j) *= t(j, k);
    return p;
}

Matrix forward_mean(const VariationalAdapter& adapter, const Matrix& h)
{
    require_batch(h, adapter.n(), "forward_mean");
    return add(matmul(adapter.w0, h), matmul(adapter.b, matmul(adapter.mean_a, h)));
}

Matrix sample_a(const VariationalAdapter& adapter, const Matrix& noise)
{
    return add(adapter.mean_a, hadamard(adapter.omega(), noise));
}

Matrix forward_flipout(const VariationalAdapter& adapter, const Matrix& h,
                       const FlipoutMasks& masks)
{
    require_batch(h, adapter.n(), "forward_flipout");
    if (!masks.e.same_shape(adapter.mean_a) || !masks.s.same_shape(h))
        throw DimensionError("forward_flipout: masks do not match adapter/batch shapes");
    Matrix v = matmul(adapter.mean_a, h);
    axpy(v, 1.0, flipout_perturbation(hadamard(masks.e, adapter.omega()), h, masks.s, masks.t));
    return add(matmul(adapter.w0, h), matmul(adapter.b, v));
}

Matrix forward_naive_shared(const VariationalAdapter& adapter, const Matrix& h,
                            const Matrix& noise)
{
    require_batch(h, adapter.n(), "forward_naive_shared");
    if (!noise.same_shape(adapter.mean_a))
        throw DimensionError("forward_naive_shared: noise is " + shape_string(noise));
    return add(matmul(adapter.w0, h), matmul(adapter.b, matmul(sample_a(adapter, noise), h)));
}

void write_matrix(std::ostream& out, const char* name, const Matrix& a)
{
    out << name << ' ' << a.rows() << ' ' << a.cols();
    char buf[64];
    for (double v : a.data()) {
        auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
        out << ' ' << std::string_view(buf, static_cast<std::size_t>(res.ptr - buf));
    }
    out << '\n';
}

Matrix read_matrix(std::istream& in, const char* name)
{
    expect_token(in, name);
    std::size_t rows = 0;
    std::size_t cols = 0;
    if (!(in >> rows >> cols))
        throw std::runtime_error(std::string("adapter record: bad shape for ") + name);
    std::vector<double> data(rows * cols);
    std::string tok;
    for (double& v : data) {
        if (!(in >> tok))
            throw std::runtime_error(std::string("adapter record: truncated ") + name);
        // to_chars(hex) omits the 0x prefix; accept a leading sign.
        std::string_view sv = tok;
        bool neg = false;
        if (!sv.empty() && sv.front() == '-') {
            neg = true;
            sv.remove_prefix(1);
        }
        auto res = std::from_chars(sv.data(), sv.data() + sv.size(), v, std::chars_format::hex);
        if (res.ec != std::errc() || res.ptr != sv.data() + sv.size())
            throw std::runtime_error(std::string("adapter record: bad value '") + tok + "' in " +
                                     name);
        if (neg)
            v = -v;
    }
    return Matrix(rows, cols, std::move(data));
}

void write_adapter(std::ostream& out, const VariationalAdapter& adapter)
{
    out << kAdapterMagic << ' ' << kAdapterVersion << '\n';
    out << "map " << to_string(adapter.std_map) << '\n';
    out << "dims " << adapter.m() << ' ' << adapter.n() << ' ' << adapter.rank() << '\n';
    write_matrix(out, "w0", adapter.w0);
    write_matrix(out, "b", adapter.b);
    write_matrix(out, "mean_a", adapter.mean_a);
    write_matrix(out, "g", adapter.g);
}

VariationalAdapter read_adapter(std::istream& in)
{
    expect_token(in, kAdapterMagic);
    int version = 0;
    if (!(in >> version) || version != kAdapterVersion)
        throw std::runtime_error("adapter record: unsupported version " + std::to_string(version));
    expect_token(in, "map");
    std::string map_name;
    in >> map_name;
    const ParamMap map = parse_param_map(map_name);
    expect_token(in, "dims");
    std::size_t m = 0, n = 0, r = 0;
    if (!(in >> m >> n >> r))
        throw std::runtime_error("adapter record: bad dims");
    Matrix w0 = read_matrix(in, "w0");
    Matrix b = read_matrix(in, "b");
    Matrix mean_a = read_matrix(in, "mean_a");
    Matrix g = read_matrix(in, "g");
    VariationalAdapter adapter(std::move(w0), std::move(b), std::move(mean_a), std::move(g), map);
    if (adapter.m() != m || adapter.n() != n || adapter.rank() != r)
        throw std::runtime_error("adapter record: dims header disagrees with matrices");
    return adapter;
}

} // namespace blob
