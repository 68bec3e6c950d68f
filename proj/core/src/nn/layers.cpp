#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "taso/error.hpp"
#include "taso/nn.hpp"

namespace taso::nn {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

std::size_t batch_of(const Tensor& t) {
    if (t.rank() == 0) throw ContractError("tensor has no batch axis");
    return t.extent(0);
}

Shape with_batch(std::size_t n, const Shape& sample) {
    Shape s{n};
    s.insert(s.end(), sample.begin(), sample.end());
    return s;
}

Shape sample_shape(const Tensor& t) { return Shape(t.shape().begin() + 1, t.shape().end()); }

void fill_uniform(Tensor& t, double limit, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& v : t.values()) v = dist(rng);
}

double init_limit(Init init, double fan_in, double fan_out) {
    return init == Init::he_uniform ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
}

struct ConvGeometry {
    std::size_t c, h, w, oh, ow, k, stride, pad;
    std::size_t patch() const { return c * k * k; }
    std::size_t positions() const { return oh * ow; }
};

ConvGeometry geometry_of(const Conv2dOptions& o, const Shape& sample) {
    const std::size_t h = sample[1], w = sample[2];
    return {o.in_channels, h, w, (h + 2 * o.padding - o.kernel) / o.stride + 1,
            (w + 2 * o.padding - o.kernel) / o.stride + 1, o.kernel, o.stride, o.padding};
}

// cols is [C*K*K, N*OH*OW]: column (n, oy, ox) holds the receptive field of that output.
void im2col(const Tensor& input, const ConvGeometry& g, std::span<double> cols) {
    const std::size_t n = batch_of(input);
    const std::size_t width = n * g.positions();
    const double* x = input.data();
    for (std::size_t c = 0; c < g.c; ++c) {
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                double* row = cols.data() + ((c * g.k + ky) * g.k + kx) * width;
                for (std::size_t b = 0; b < n; ++b) {
                    const double* plane = x + (b * g.c + c) * g.h * g.w;
                    double* dst = row + b * g.positions();
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        for (std::size_t ox = 0; ox < g.ow; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                                      static_cast<std::ptrdiff_t>(g.pad);
                            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<std::ptrdiff_t>(g.h) &&
                                                ix < static_cast<std::ptrdiff_t>(g.w);
                            dst[oy * g.ow + ox] = inside ? plane[iy * g.w + ix] : 0.0;
                        }
                    }
                }
            }
        }
    }
}

void col2im(std::span<const double> cols, const ConvGeometry& g, Tensor& grad_input) {
    const std::size_t n = batch_of(grad_input);
    const std::size_t width = n * g.positions();
    double* dx = grad_input.data();
    for (std::size_t c = 0; c < g.c; ++c) {
        for (std::size_t ky = 0; ky < g.k; ++ky) {
            for (std::size_t kx = 0; kx < g.k; ++kx) {
                const double* row = cols.data() + ((c * g.k + ky) * g.k + kx) * width;
                for (std::size_t b = 0; b < n; ++b) {
                    double* plane = dx + (b * g.c + c) * g.h * g.w;
                    const double* src = row + b * g.positions();
                    for (std::size_t oy = 0; oy < g.oh; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                                                  static_cast<std::ptrdiff_t>(g.pad);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.h)) continue;
                        for (std::size_t ox = 0; ox < g.ow; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                                                      static_cast<std::ptrdiff_t>(g.pad);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.w)) continue;
                            plane[iy * g.w + ix] += src[oy * g.ow + ox];
                        }
                    }
                }
            }
        }
    }
}

}  // namespace

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::dense: return "dense";
        case LayerKind::conv2d: return "conv2d";
        case LayerKind::maxpool2d: return "maxpool2d";
        case LayerKind::relu: return "relu";
        case LayerKind::tanh: return "tanh";
        case LayerKind::flatten: return "flatten";
    }
    return "unknown";
}

// ---- Dense ----

Dense::Dense(std::size_t in_features, std::size_t out_features) : in_(in_features), out_(out_features) {
    if (in_ == 0 || out_ == 0) throw ConfigError("dense layer widths must be positive");
    params_ = {Tensor({out_, in_}), Tensor({out_})};
    grads_ = {Tensor({out_, in_}), Tensor({out_})};
}

Shape Dense::output_shape(const Shape& input) const {
    if (input.size() != 1 || input[0] != in_) {
        throw ConfigError("dense layer expects [" + std::to_string(in_) + "], got " + to_string(input));
    }
    return {out_};
}

Tensor Dense::forward(const Tensor& input, LayerCache*) const {
    const std::size_t n = batch_of(input);
    Tensor out({n, out_});
    ConstMatrixMap x(input.data(), n, in_);
    ConstMatrixMap w(params_[0].data(), out_, in_);
    ConstVectorMap b(params_[1].data(), out_);
    MatrixMap y(out.data(), n, out_);
    y.noalias() = x * w.transpose();
    y.rowwise() += b.transpose();
    return out;
}

Tensor Dense::backward(const Tensor& input, const Tensor&, const Tensor& grad_output, const LayerCache&,
                       bool need_input_grad) {
    const std::size_t n = batch_of(input);
    ConstMatrixMap x(input.data(), n, in_);
    ConstMatrixMap dy(grad_output.data(), n, out_);
    MatrixMap dw(grads_[0].data(), out_, in_);
    Eigen::Map<Eigen::VectorXd> db(grads_[1].data(), out_);
    dw.noalias() = dy.transpose() * x;
    db.setZero();
    for (std::size_t i = 0; i < n; ++i) db += dy.row(Eigen::Index(i)).transpose();
    if (!need_input_grad) return Tensor({0});
    Tensor dx(input.shape());
    MatrixMap dxm(dx.data(), n, in_);
    ConstMatrixMap w(params_[0].data(), out_, in_);
    dxm.noalias() = dy * w;
    return dx;
}

void Dense::initialize(Init init, std::mt19937_64& rng) {
    fill_uniform(params_[0], init_limit(init, double(in_), double(out_)), rng);
    params_[1].fill(0.0);
}

// ---- Conv2d ----

Conv2d::Conv2d(Conv2dOptions options) : opt_(options) {
    if (opt_.in_channels == 0 || opt_.out_channels == 0 || opt_.kernel == 0 || opt_.stride == 0) {
        throw ConfigError("conv2d channels, kernel and stride must be positive");
    }
    const Shape w{opt_.out_channels, opt_.in_channels, opt_.kernel, opt_.kernel};
    params_ = {Tensor(w), Tensor({opt_.out_channels})};
    grads_ = {Tensor(w), Tensor({opt_.out_channels})};
}

Shape Conv2d::output_shape(const Shape& input) const {
    if (input.size() != 3 || input[0] != opt_.in_channels) {
        throw ConfigError("conv2d expects [" + std::to_string(opt_.in_channels) + ",H,W], got " +
                          to_string(input));
    }
    if (input[1] + 2 * opt_.padding < opt_.kernel || input[2] + 2 * opt_.padding < opt_.kernel) {
        throw ConfigError("conv2d kernel larger than padded input " + to_string(input));
    }
    const auto g = geometry_of(opt_, input);
    return {opt_.out_channels, g.oh, g.ow};
}

Tensor Conv2d::forward(const Tensor& input, LayerCache* cache) const {
    const std::size_t n = batch_of(input);
    const auto g = geometry_of(opt_, sample_shape(input));
    const std::size_t width = n * g.positions();

    Tensor cols({g.patch(), width});
    im2col(input, g, cols.values());

    const std::size_t oc = opt_.out_channels;
    RowMatrix prod(oc, width);
    ConstMatrixMap w(params_[0].data(), oc, g.patch());
    prod.noalias() = w * ConstMatrixMap(cols.data(), g.patch(), width);

    Tensor out({n, oc, g.oh, g.ow});
    const double* bias = params_[1].data();
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            const double* src = prod.data() + o * width + b * g.positions();
            double* dst = out.data() + (b * oc + o) * g.positions();
            for (std::size_t p = 0; p < g.positions(); ++p) dst[p] = src[p] + bias[o];
        }
    }
    if (cache) cache->aux = std::move(cols);
    return out;
}

Tensor Conv2d::backward(const Tensor& input, const Tensor&, const Tensor& grad_output, const LayerCache& cache,
                        bool need_input_grad) {
    const std::size_t n = batch_of(input);
    const auto g = geometry_of(opt_, sample_shape(input));
    const std::size_t width = n * g.positions();
    const std::size_t oc = opt_.out_channels;
    if (cache.aux.size() != g.patch() * width) throw ContractError("conv2d backward without forward cache");

    RowMatrix dy(oc, width);
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t o = 0; o < oc; ++o) {
            const double* src = grad_output.data() + (b * oc + o) * g.positions();
            std::copy(src, src + g.positions(), dy.data() + o * width + b * g.positions());
        }
    }
    ConstMatrixMap cols(cache.aux.data(), g.patch(), width);
    MatrixMap dw(grads_[0].data(), oc, g.patch());
    dw.noalias() = dy * cols.transpose();
    Eigen::Map<Eigen::VectorXd>(grads_[1].data(), oc) = dy.rowwise().sum();

    if (!need_input_grad) return Tensor({0});
    RowMatrix dcols(g.patch(), width);
    dcols.noalias() = ConstMatrixMap(params_[0].data(), oc, g.patch()).transpose() * dy;
    Tensor dx(input.shape());
    col2im(std::span<const double>(dcols.data(), dcols.size()), g, dx);
    return dx;
}

void Conv2d::initialize(Init init, std::mt19937_64& rng) {
    const double area = double(opt_.kernel * opt_.kernel);
    fill_uniform(params_[0], init_limit(init, opt_.in_channels * area, opt_.out_channels * area), rng);
    params_[1].fill(0.0);
}

// ---- MaxPool2d ----

MaxPool2d::MaxPool2d(std::size_t kernel, std::size_t stride) : kernel_(kernel), stride_(stride ? stride : kernel) {
    if (kernel_ == 0) throw ConfigError("maxpool2d kernel must be positive");
}

Shape MaxPool2d::output_shape(const Shape& input) const {
    if (input.size() != 3 || input[1] < kernel_ || input[2] < kernel_) {
        throw ConfigError("maxpool2d expects [C,H,W] with H,W >= kernel, got " + to_string(input));
    }
    return {input[0], (input[1] - kernel_) / stride_ + 1, (input[2] - kernel_) / stride_ + 1};
}

Tensor MaxPool2d::forward(const Tensor& input, LayerCache* cache) const {
    const std::size_t n = batch_of(input);
    const Shape in = sample_shape(input);
    const Shape out_shape = output_shape(in);
    const std::size_t c = in[0], h = in[1], w = in[2], oh = out_shape[1], ow = out_shape[2];
    Tensor out(with_batch(n, out_shape));
    if (cache) cache->indices.assign(out.size(), 0);

    std::size_t o = 0;
    for (std::size_t plane = 0; plane < n * c; ++plane) {
        const std::size_t base = plane * h * w;
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox, ++o) {
                std::size_t best = base + oy * stride_ * w + ox * stride_;
                for (std::size_t ky = 0; ky < kernel_; ++ky) {
                    for (std::size_t kx = 0; kx < kernel_; ++kx) {
                        const std::size_t idx = base + (oy * stride_ + ky) * w + ox * stride_ + kx;
                        if (input[idx] > input[best]) best = idx;
                    }
                }
                out[o] = input[best];
                if (cache) cache->indices[o] = best;
            }
        }
    }
    return out;
}

Tensor MaxPool2d::backward(const Tensor& input, const Tensor& output, const Tensor& grad_output,
                           const LayerCache& cache, bool need_input_grad) {
    if (!need_input_grad) return Tensor({0});
    if (cache.indices.size() != output.size()) throw ContractError("maxpool2d backward without forward cache");
    Tensor dx(input.shape());
    for (std::size_t o = 0; o < grad_output.size(); ++o) dx[cache.indices[o]] += grad_output[o];
    return dx;
}

// ---- elementwise ----

Tensor Relu::forward(const Tensor& input, LayerCache*) const {
    Tensor out = input;
    for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor Relu::backward(const Tensor& input, const Tensor&, const Tensor& grad_output, const LayerCache&,
                      bool need_input_grad) {
    if (!need_input_grad) return Tensor({0});
    Tensor dx = grad_output;
    for (std::size_t i = 0; i < dx.size(); ++i) {
        if (!(input[i] > 0.0)) dx[i] = 0.0;
    }
    return dx;
}

Tensor Tanh::forward(const Tensor& input, LayerCache*) const {
    Tensor out = input;
    for (double& v : out.values()) v = std::tanh(v);
    return out;
}

Tensor Tanh::backward(const Tensor&, const Tensor& output, const Tensor& grad_output, const LayerCache&,
                      bool need_input_grad) {
    if (!need_input_grad) return Tensor({0});
    Tensor dx = grad_output;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= 1.0 - output[i] * output[i];
    return dx;
}

Shape Flatten::output_shape(const Shape& input) const { return {element_count(input)}; }

Tensor Flatten::forward(const Tensor& input, LayerCache*) const {
    const std::size_t n = batch_of(input);
    return input.reshaped({n, input.size() / std::max<std::size_t>(n, 1)});
}

Tensor Flatten::backward(const Tensor& input, const Tensor&, const Tensor& grad_output, const LayerCache&,
                         bool need_input_grad) {
    if (!need_input_grad) return Tensor({0});
    return grad_output.reshaped(input.shape());
}

}  // namespace taso::nn
