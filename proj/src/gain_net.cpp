#include "dae/gain_net.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>

namespace dae::net
{
namespace
{
constexpr int kHiddenLayers = kLayers - 1;
constexpr double kSoftSlope = 5;
constexpr double kSoftCenter = 0.5;

// tanh from one vectorized exp; the scalar libm tanh dominated the profile.
// The absolute error is a few ulp of 1, which is what the layers see.
template <typename In, typename Out>
void tanh_into(const In& x, Out& out)
{
        out = (-2 * x.array().abs()).exp().matrix();
        out = (x.array().sign() * (1 - out.array()) / (1 + out.array())).matrix();
}

int layer_inputs(const InputMode mode, const int layer)
{
        return layer == 0 ? input_size(mode) : kLayerWidths[layer - 1];
}

// Input features of one residual and their derivative with respect to it.
template <typename Value, typename Slope>
void input_features(const InputMode mode, const double r, Value&& x, Slope&& dx)
{
        if (mode == InputMode::raw)
        {
                x(0) = r / kResidualScale;
                dx(0) = 1 / kResidualScale;
                return;
        }

        double base = 0;
        double base_slope = 0;
        if (mode == InputMode::signed_powers)
        {
                base = clamp_residual(r);
                base_slope = std::abs(r) >= kResidualFloor ? 1 : 0;
        }
        else
        {
                base = std::max(std::abs(r), kResidualFloor);
                base_slope = std::abs(r) >= kResidualFloor ? (r < 0 ? -1 : 1) : 0;
        }

        base /= kResidualScale;
        base_slope /= kResidualScale;
        const AugmentedInput u = augment(base);
        for (int i = 0; i < kAugmentedSize; ++i)
        {
                const int power = kLowestPower + i;
                x(i) = u(i);
                // d(b^p)/db = p * b^(p-1) = p * u(i) / b
                dx(i) = power == 0 ? 0.0 : power * u(i) / base * base_slope;
        }
}

void check_finite(const bool finite)
{
        if (!finite)
        {
                throw Error(ErrorKind::non_finite_activation, "gain network produced a non-finite activation");
        }
}

template <int In, int Out>
Eigen::Matrix<double, Out, 1> dense(const DenseLayer& layer, const Eigen::Matrix<double, In, 1>& a)
{
        using Weight = Eigen::Matrix<double, Out, In>;
        using Bias = Eigen::Matrix<double, Out, 1>;
        Bias z = Eigen::Map<const Weight>(layer.weight.data()) * a + Eigen::Map<const Bias>(layer.bias.data());
        check_finite(z.allFinite());
        return z;
}

template <int N>
Eigen::Matrix<double, N, 1> hidden(const Eigen::Matrix<double, N, 1>& z)
{
        Eigen::Matrix<double, N, 1> a;
        tanh_into(z, a);
        return a;
}

template <int In>
double axis_forward(const AxisNet& net, const InputMode mode, const double r)
{
        Eigen::Matrix<double, In, 1> x;
        Eigen::Matrix<double, In, 1> unused;
        input_features(mode, r, x, unused);
        const auto a1 = hidden(dense<In, kLayerWidths[0]>(net.layers[0], x));
        const auto a2 = hidden(dense<kLayerWidths[0], kLayerWidths[1]>(net.layers[1], a1));
        const auto a3 = hidden(dense<kLayerWidths[1], kLayerWidths[2]>(net.layers[2], a2));
        const auto a4 = hidden(dense<kLayerWidths[2], kLayerWidths[3]>(net.layers[3], a3));
        return soft_threshold(dense<kLayerWidths[3], kLayerWidths[4]>(net.layers[4], a4)(0));
}

struct AxisBatch
{
        Eigen::MatrixXd input;
        Eigen::MatrixXd input_slope;
        std::array<Eigen::MatrixXd, kLayers> pre;
        std::array<Eigen::MatrixXd, kHiddenLayers> act;
};

AxisBatch run_batch(const AxisNet& net, const InputMode mode, const Eigen::VectorXd& residuals)
{
        const Eigen::Index n = residuals.size();
        AxisBatch b;
        b.input.resize(input_size(mode), n);
        b.input_slope.resize(input_size(mode), n);
        for (Eigen::Index i = 0; i < n; ++i)
        {
                input_features(mode, residuals(i), b.input.col(i), b.input_slope.col(i));
        }

        for (int l = 0; l < kLayers; ++l)
        {
                const DenseLayer& layer = net.layers[l];
                const Eigen::MatrixXd& in = l == 0 ? b.input : b.act[l - 1];
                b.pre[l].noalias() = layer.weight * in;
                b.pre[l].colwise() += layer.bias;
                check_finite(b.pre[l].allFinite());
                if (l < kHiddenLayers)
                {
                        tanh_into(b.pre[l], b.act[l]);
                }
        }
        return b;
}

Eigen::RowVectorXd output_slope(const AxisBatch& b)
{
        return b.pre[kLayers - 1].unaryExpr([](double x) { return soft_threshold_slope(x); });
}

// Reverse pass of one axis; returns d(sum upstream * K)/dr per sample.
Eigen::RowVectorXd axis_backward(const AxisNet& net, const AxisBatch& b, const Eigen::VectorXd& upstream,
                                 AxisNet& gradients)
{
        Eigen::MatrixXd delta = upstream.transpose().cwiseProduct(output_slope(b));
        for (int l = kLayers - 1; l >= 0; --l)
        {
                const Eigen::MatrixXd& in = l == 0 ? b.input : b.act[l - 1];
                gradients.layers[l].weight.noalias() += delta * in.transpose();
                gradients.layers[l].bias += delta.rowwise().sum();
                Eigen::MatrixXd back = net.layers[l].weight.transpose() * delta;
                if (l > 0)
                {
                        delta = back.cwiseProduct((1.0 - b.act[l - 1].array().square()).matrix());
                }
                else
                {
                        return back.cwiseProduct(b.input_slope).colwise().sum();
                }
        }
        return {};
}

template <typename F>
void for_each_tensor(const GainNetParams& p, F&& f)
{
        for (const AxisNet& axis : p.axes)
        {
                for (const DenseLayer& layer : axis.layers)
                {
                        f(layer.weight);
                        f(layer.bias);
                }
        }
}

template <typename F>
void for_each_tensor(GainNetParams& p, F&& f)
{
        for (AxisNet& axis : p.axes)
        {
                for (DenseLayer& layer : axis.layers)
                {
                        f(layer.weight);
                        f(layer.bias);
                }
        }
}

void write_bytes(std::ostream& out, const void* data, const std::size_t size)
{
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

template <typename U>
void write_le(std::ostream& out, U value)
{
        static_assert(std::is_unsigned_v<U>);
        std::array<unsigned char, sizeof(U)> bytes;
        for (std::size_t i = 0; i < sizeof(U); ++i)
        {
                bytes[i] = static_cast<unsigned char>(value >> (8 * i));
        }
        write_bytes(out, bytes.data(), bytes.size());
}

template <typename U>
U read_le(std::istream& in)
{
        std::array<unsigned char, sizeof(U)> bytes;
        if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
        {
                throw Error(ErrorKind::format_error, "truncated parameter stream");
        }
        U value = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i)
        {
                value |= static_cast<U>(bytes[i]) << (8 * i);
        }
        return value;
}
}

int input_size(const InputMode mode)
{
        return mode == InputMode::raw ? 1 : kAugmentedSize;
}

double clamp_residual(const double r)
{
        if (std::abs(r) >= kResidualFloor)
        {
                return r;
        }
        return r < 0 ? -kResidualFloor : kResidualFloor;
}

AugmentedInput augment(const double r)
{
        const double b = clamp_residual(r);
        const double b2 = b * b;
        AugmentedInput u;
        u << 1 / (b2 * b), 1 / b2, 1 / b, 1, b, b2, b2 * b, b2 * b2, b2 * b2 * b;
        return u;
}

double soft_threshold(const double x)
{
        return std::tanh((x - kSoftCenter) * kSoftSlope) * 0.5 + 0.5;
}

double soft_threshold_slope(const double x)
{
        const double t = std::tanh((x - kSoftCenter) * kSoftSlope);
        return 0.5 * kSoftSlope * (1 - t * t);
}

Eigen::Index GainNetParams::size() const
{
        Eigen::Index n = 0;
        for_each_tensor(*this, [&](const auto& t) { n += t.size(); });
        return n;
}

bool GainNetParams::all_finite() const
{
        bool finite = true;
        for_each_tensor(*this, [&](const auto& t) { finite = finite && t.allFinite(); });
        return finite;
}

GainNetParams zero_params(const InputMode mode)
{
        GainNetParams p;
        p.input_mode = mode;
        for (AxisNet& axis : p.axes)
        {
                for (int l = 0; l < kLayers; ++l)
                {
                        axis.layers[l].weight = Eigen::MatrixXd::Zero(kLayerWidths[l], layer_inputs(mode, l));
                        axis.layers[l].bias = Eigen::VectorXd::Zero(kLayerWidths[l]);
                }
        }
        return p;
}

GainNetParams init_params(const std::uint64_t seed, const InputMode mode)
{
        GainNetParams p = zero_params(mode);
        std::mt19937_64 engine(seed);
        for (AxisNet& axis : p.axes)
        {
                for (DenseLayer& layer : axis.layers)
                {
                        const double limit = 1 / std::sqrt(static_cast<double>(layer.weight.cols()));
                        std::uniform_real_distribution<double> uniform(-limit, limit);
                        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
                        {
                                for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
                                {
                                        layer.weight(i, j) = uniform(engine);
                                }
                        }
                }
                axis.layers[kLayers - 1].weight *= kInitOutputScale;
                axis.layers[kLayers - 1].bias.setConstant(0.5);
        }
        return p;
}

GainMatrix<double> forward(const GainNetParams& params, const Vec3& residual)
{
        GainMatrix<double> k;
        for (int i = 0; i < kAxes; ++i)
        {
                k.diagonal(i) = params.input_mode == InputMode::raw
                                        ? axis_forward<1>(params.axes[i], params.input_mode, residual(i))
                                        : axis_forward<kAugmentedSize>(params.axes[i], params.input_mode, residual(i));
        }
        return k;
}

BackwardResult backward(const GainNetParams& params, const Vec3& residual, const Vec3& upstream)
{
        BackwardResult result{zero_params(params.input_mode), Vec3::Zero()};
        for (int i = 0; i < kAxes; ++i)
        {
                const AxisBatch b = run_batch(params.axes[i], params.input_mode, Eigen::VectorXd::Constant(1, residual(i)));
                result.residual_gradient(i) = axis_backward(params.axes[i], b, Eigen::VectorXd::Constant(1, upstream(i)),
                                                            result.param_gradients.axes[i])(0);
        }
        return result;
}

Eigen::VectorXd gain_slopes(const GainNetParams& params, const int axis, const Eigen::VectorXd& residuals)
{
        const AxisNet& net = params.axes.at(axis);
        const AxisBatch b = run_batch(net, params.input_mode, residuals);

        Eigen::MatrixXd tangent = net.layers[0].weight * b.input_slope;
        for (int l = 0; l < kHiddenLayers; ++l)
        {
                tangent = tangent.cwiseProduct((1.0 - b.act[l].array().square()).matrix());
                tangent = net.layers[l + 1].weight * tangent;
        }
        return tangent.cwiseProduct(output_slope(b)).transpose();
}

void accumulate_gradients(const GainNetParams& params, const int axis, const Eigen::VectorXd& residuals,
                          const Eigen::VectorXd& upstream, GainNetParams& gradients)
{
        const AxisNet& net = params.axes.at(axis);
        const AxisBatch b = run_batch(net, params.input_mode, residuals);
        (void)axis_backward(net, b, upstream, gradients.axes.at(axis));
}

Eigen::VectorXd flatten(const GainNetParams& params)
{
        Eigen::VectorXd v(params.size());
        Eigen::Index offset = 0;
        for_each_tensor(params,
                        [&](const auto& t)
                        {
                                v.segment(offset, t.size()) = t.reshaped();
                                offset += t.size();
                        });
        return v;
}

GainNetParams unflatten(const Eigen::VectorXd& values, const InputMode mode)
{
        GainNetParams p = zero_params(mode);
        if (values.size() != p.size())
        {
                throw Error(ErrorKind::invalid_argument, "parameter vector has the wrong length");
        }
        Eigen::Index offset = 0;
        for_each_tensor(p,
                        [&](auto& t)
                        {
                                t.reshaped() = values.segment(offset, t.size());
                                offset += t.size();
                        });
        return p;
}

void axpy(const double alpha, const GainNetParams& x, GainNetParams& y)
{
        for (int a = 0; a < kAxes; ++a)
        {
                for (int l = 0; l < kLayers; ++l)
                {
                        y.axes[a].layers[l].weight += alpha * x.axes[a].layers[l].weight;
                        y.axes[a].layers[l].bias += alpha * x.axes[a].layers[l].bias;
                }
        }
}

double squared_norm(const GainNetParams& params)
{
        double s = 0;
        for_each_tensor(params, [&](const auto& t) { s += t.squaredNorm(); });
        return s;
}

void save_params(const GainNetParams& params, std::ostream& out)
{
        write_bytes(out, kParamsMagic.data(), kParamsMagic.size());
        write_le<std::uint8_t>(out, kParamsVersion);
        write_le<std::uint8_t>(out, static_cast<std::uint8_t>(params.input_mode));
        write_le<std::uint8_t>(out, kAxes);
        write_le<std::uint8_t>(out, kLayers);
        for (const AxisNet& axis : params.axes)
        {
                for (const DenseLayer& layer : axis.layers)
                {
                        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weight.cols()));
                        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(layer.weight.rows()));
                }
        }
        for (const AxisNet& axis : params.axes)
        {
                for (const DenseLayer& layer : axis.layers)
                {
                        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
                        {
                                for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
                                {
                                        write_le(out, std::bit_cast<std::uint64_t>(layer.weight(i, j)));
                                }
                        }
                        for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
                        {
                                write_le(out, std::bit_cast<std::uint64_t>(layer.bias(i)));
                        }
                }
        }
        if (!out)
        {
                throw Error(ErrorKind::format_error, "failed to write parameter stream");
        }
}

GainNetParams load_params(std::istream& in)
{
        std::array<char, 8> magic{};
        if (!in.read(magic.data(), magic.size()))
        {
                throw Error(ErrorKind::format_error, "truncated parameter stream");
        }
        if (magic != kParamsMagic)
        {
                throw Error(ErrorKind::format_error, "bad magic");
        }
        const auto version = read_le<std::uint8_t>(in);
        if (version != kParamsVersion)
        {
                throw Error(ErrorKind::format_error, "unsupported version " + std::to_string(version));
        }
        const auto mode_byte = read_le<std::uint8_t>(in);
        if (mode_byte > static_cast<std::uint8_t>(InputMode::raw))
        {
                throw Error(ErrorKind::format_error, "unknown input mode " + std::to_string(mode_byte));
        }
        const auto mode = static_cast<InputMode>(mode_byte);
        if (read_le<std::uint8_t>(in) != kAxes || read_le<std::uint8_t>(in) != kLayers)
        {
                throw Error(ErrorKind::format_error, "unexpected axis or layer count");
        }

        GainNetParams p = zero_params(mode);
        for (const AxisNet& axis : p.axes)
        {
                for (const DenseLayer& layer : axis.layers)
                {
                        const auto inputs = read_le<std::uint32_t>(in);
                        const auto outputs = read_le<std::uint32_t>(in);
                        if (inputs != layer.weight.cols() || outputs != layer.weight.rows())
                        {
                                throw Error(ErrorKind::format_error, "layer shape mismatch");
                        }
                }
        }
        for (AxisNet& axis : p.axes)
        {
                for (DenseLayer& layer : axis.layers)
                {
                        for (Eigen::Index i = 0; i < layer.weight.rows(); ++i)
                        {
                                for (Eigen::Index j = 0; j < layer.weight.cols(); ++j)
                                {
                                        layer.weight(i, j) = std::bit_cast<double>(read_le<std::uint64_t>(in));
                                }
                        }
                        for (Eigen::Index i = 0; i < layer.bias.size(); ++i)
                        {
                                layer.bias(i) = std::bit_cast<double>(read_le<std::uint64_t>(in));
                        }
                }
        }
        if (in.peek() != std::char_traits<char>::eof())
        {
                throw Error(ErrorKind::format_error, "trailing bytes after parameters");
        }
        return p;
}

void save_params(const GainNetParams& params, const std::filesystem::path& path)
{
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out)
        {
                throw Error(ErrorKind::format_error, "cannot open " + path.string() + " for writing");
        }
        save_params(params, out);
}

GainNetParams load_params(const std::filesystem::path& path)
{
        std::ifstream in(path, std::ios::binary);
        if (!in)
        {
                throw Error(ErrorKind::format_error, "cannot open " + path.string());
        }
        return load_params(in);
}
}
