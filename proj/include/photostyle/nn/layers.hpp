#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "photostyle/core/rng.hpp"
#include "photostyle/core/tensor.hpp"

namespace photostyle {

// Layers keep parameters and gradients; per-call state lives in external
// cache objects handed back into backward(). That makes weight sharing
// (the Siamese twins apply one parameter set twice per step) and gradient
// accumulation explicit instead of hidden in layer state.

struct ParamTensor {
    std::string name;
    Tensor value;
    Tensor grad;

    explicit ParamTensor(std::string n = {}, std::vector<int> shape = {})
        : name(std::move(n)), value(shape), grad(shape) {}

    void zero_grad() { grad.fill(0.0); }
    std::size_t size() const { return value.size(); }
};

inline void he_normal_init(Tensor& t, int fan_in, Rng& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / std::max(1, fan_in)));
    for (auto& v : t.vec()) v = dist(rng);
}

// ---------------------------------------------------------------------------
// 2-D convolution (NCHW), im2col + GEMM.

class Conv2d {
    std::string name_;
    int in_ch_ = 0, out_ch_ = 0, ksize_ = 0, stride_ = 1, pad_ = 0;

public:
    Conv2d() = default;
    Conv2d(std::string name, int in_ch, int out_ch, int ksize, int stride, int pad)
        : name_(std::move(name)), in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize),
          stride_(stride), pad_(pad),
          weight(name_ + ".weight", {out_ch, in_ch, ksize, ksize}),
          bias(name_ + ".bias", {out_ch}) {}

    void init(Rng& rng) {
        he_normal_init(weight.value, in_ch_ * ksize_ * ksize_, rng);
        bias.value.fill(0.0);
    }

    int out_extent(int in) const { return (in + 2 * pad_ - ksize_) / stride_ + 1; }
    int in_channels() const { return in_ch_; }
    int out_channels() const { return out_ch_; }
    int ksize() const { return ksize_; }
    int stride() const { return stride_; }

    struct Cache {
        Tensor x;
    };

    Tensor forward(const Tensor& x, Cache* cache) const {
        check_input(x);
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int ho = out_extent(h), wo = out_extent(w);
        if (ho <= 0 || wo <= 0)
            throw ValidationError(name_ + ": input " + x.shape_str() + " too small for kernel");
        Tensor y({n, out_ch_, ho, wo});
        const int cols = ho * wo;
        const int rows = in_ch_ * ksize_ * ksize_;
        MatrixRM patch(rows, cols);
        ConstMatMap wmat(weight.value.data(), out_ch_, rows);
        for (int i = 0; i < n; ++i) {
            im2col(x, i, patch);
            MatMap yi(y.data() + static_cast<std::size_t>(i) * out_ch_ * cols, out_ch_, cols);
            yi.noalias() = wmat * patch;
            yi.colwise() += ConstVecMap(bias.value.data(), out_ch_);
        }
        if (cache) cache->x = x;
        return y;
    }

    Tensor backward(const Tensor& gy, const Cache& cache) {
        const Tensor& x = cache.x;
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int ho = out_extent(h), wo = out_extent(w);
        const int cols = ho * wo;
        const int rows = in_ch_ * ksize_ * ksize_;
        Tensor gx(x.shape());
        MatrixRM patch(rows, cols);
        MatrixRM gpatch(rows, cols);
        ConstMatMap wmat(weight.value.data(), out_ch_, rows);
        MatMap gwmat(weight.grad.data(), out_ch_, rows);
        VecMap gbias(bias.grad.data(), out_ch_);
        for (int i = 0; i < n; ++i) {
            ConstMatMap gyi(gy.data() + static_cast<std::size_t>(i) * out_ch_ * cols, out_ch_,
                            cols);
            im2col(x, i, patch);
            gwmat.noalias() += gyi * patch.transpose();
            gbias += gyi.rowwise().sum();
            gpatch.noalias() = wmat.transpose() * gyi;
            col2im_add(gpatch, i, gx);
        }
        return gx;
    }

    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    std::int64_t param_count() const {
        return static_cast<std::int64_t>(weight.size() + bias.size());
    }

    ParamTensor weight;
    ParamTensor bias;

private:
    void check_input(const Tensor& x) const {
        if (x.ndim() != 4 || x.dim(1) != in_ch_)
            throw ValidationError(name_ + ": expected (N," + std::to_string(in_ch_) +
                                  ",H,W), got " + x.shape_str());
    }

    void im2col(const Tensor& x, int image, MatrixRM& patch) const {
        const int h = x.dim(2), w = x.dim(3);
        const int ho = out_extent(h), wo = out_extent(w);
        const double* xbase =
            x.data() + static_cast<std::size_t>(image) * in_ch_ * h * w;
        for (int c = 0; c < in_ch_; ++c) {
            for (int ki = 0; ki < ksize_; ++ki) {
                for (int kj = 0; kj < ksize_; ++kj) {
                    const int row = (c * ksize_ + ki) * ksize_ + kj;
                    double* prow = patch.data() + static_cast<std::size_t>(row) * ho * wo;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + ki;
                        if (iy < 0 || iy >= h) {
                            for (int ox = 0; ox < wo; ++ox) prow[oy * wo + ox] = 0.0;
                            continue;
                        }
                        const double* xrow = xbase + (static_cast<std::size_t>(c) * h + iy) * w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride_ - pad_ + kj;
                            prow[oy * wo + ox] = (ix >= 0 && ix < w) ? xrow[ix] : 0.0;
                        }
                    }
                }
            }
        }
    }

    void col2im_add(const MatrixRM& gpatch, int image, Tensor& gx) const {
        const int h = gx.dim(2), w = gx.dim(3);
        const int ho = out_extent(h), wo = out_extent(w);
        double* xbase = gx.data() + static_cast<std::size_t>(image) * in_ch_ * h * w;
        for (int c = 0; c < in_ch_; ++c) {
            for (int ki = 0; ki < ksize_; ++ki) {
                for (int kj = 0; kj < ksize_; ++kj) {
                    const int row = (c * ksize_ + ki) * ksize_ + kj;
                    const double* prow = gpatch.data() + static_cast<std::size_t>(row) * ho * wo;
                    for (int oy = 0; oy < ho; ++oy) {
                        const int iy = oy * stride_ - pad_ + ki;
                        if (iy < 0 || iy >= h) continue;
                        double* xrow = xbase + (static_cast<std::size_t>(c) * h + iy) * w;
                        for (int ox = 0; ox < wo; ++ox) {
                            const int ix = ox * stride_ - pad_ + kj;
                            if (ix >= 0 && ix < w) xrow[ix] += prow[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
};

namespace detail {

inline double* plane_ptr(Tensor& t, int image, int channel, int plane) {
    return t.data() + (static_cast<std::size_t>(image) * t.dim(1) + channel) * plane;
}

inline const double* plane_ptr(const Tensor& t, int image, int channel, int plane) {
    return t.data() + (static_cast<std::size_t>(image) * t.dim(1) + channel) * plane;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Batch normalization over (N,H,W) per channel. Training mode normalizes by
// batch statistics and updates running estimates; evaluation mode uses the
// running estimates only.

class BatchNorm2d {
    std::string name_;
    int channels_ = 0;
    double eps_ = 1e-5;
    double momentum_ = 0.1;

public:
    BatchNorm2d() = default;
    BatchNorm2d(std::string name, int channels, double eps = 1e-5, double momentum = 0.1)
        : name_(std::move(name)), channels_(channels), eps_(eps), momentum_(momentum),
          gamma(name_ + ".gamma", {channels}), beta(name_ + ".beta", {channels}),
          running_mean({channels}), running_var({channels}) {
        gamma.value.fill(1.0);
        running_var.fill(1.0);
    }

    struct Cache {
        Tensor xhat;
        std::vector<double> invstd;
        int count = 0;
    };

    Tensor forward(const Tensor& x, Cache* cache, bool train) {
        if (x.ndim() != 4 || x.dim(1) != channels_)
            throw ValidationError(name_ + ": expected (N," + std::to_string(channels_) +
                                  ",H,W), got " + x.shape_str());
        const int n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const int plane = h * w;
        const int count = n * plane;
        Tensor y(x.shape());
        Tensor xhat;
        if (cache) xhat = Tensor(x.shape());
        std::vector<double> invstd(static_cast<std::size_t>(channels_));
        for (int c = 0; c < channels_; ++c) {
            double mean, var;
            if (train) {
                double sum = 0.0, sq = 0.0;
                for (int i = 0; i < n; ++i) {
                    const double* p = detail::plane_ptr(x, i, c, plane);
                    for (int j = 0; j < plane; ++j) {
                        sum += p[j];
                        sq += p[j] * p[j];
                    }
                }
                mean = sum / count;
                var = sq / count - mean * mean;
                if (var < 0.0) var = 0.0;
                running_mean[static_cast<std::size_t>(c)] =
                    (1.0 - momentum_) * running_mean[static_cast<std::size_t>(c)] +
                    momentum_ * mean;
                running_var[static_cast<std::size_t>(c)] =
                    (1.0 - momentum_) * running_var[static_cast<std::size_t>(c)] +
                    momentum_ * var;
            } else {
                mean = running_mean[static_cast<std::size_t>(c)];
                var = running_var[static_cast<std::size_t>(c)];
            }
            const double istd = 1.0 / std::sqrt(var + eps_);
            invstd[static_cast<std::size_t>(c)] = istd;
            const double g = gamma.value[static_cast<std::size_t>(c)];
            const double b = beta.value[static_cast<std::size_t>(c)];
            for (int i = 0; i < n; ++i) {
                const double* p = detail::plane_ptr(x, i, c, plane);
                double* q = detail::plane_ptr(y, i, c, plane);
                double* xh = cache ? detail::plane_ptr(xhat, i, c, plane) : nullptr;
                for (int j = 0; j < plane; ++j) {
                    const double v = (p[j] - mean) * istd;
                    if (xh) xh[j] = v;
                    q[j] = g * v + b;
                }
            }
        }
        if (cache) {
            cache->xhat = std::move(xhat);
            cache->invstd = std::move(invstd);
            cache->count = count;
        }
        return y;
    }

    // Training-mode gradient (batch statistics participate).
    Tensor backward(const Tensor& gy, const Cache& cache) {
        const int n = gy.dim(0), h = gy.dim(2), w = gy.dim(3);
        const int plane = h * w;
        const double m = static_cast<double>(cache.count);
        Tensor gx(gy.shape());
        for (int c = 0; c < channels_; ++c) {
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (int i = 0; i < n; ++i) {
                const double* g = detail::plane_ptr(gy, i, c, plane);
                const double* xh = detail::plane_ptr(cache.xhat, i, c, plane);
                for (int j = 0; j < plane; ++j) {
                    sum_gy += g[j];
                    sum_gy_xhat += g[j] * xh[j];
                }
            }
            beta.grad[static_cast<std::size_t>(c)] += sum_gy;
            gamma.grad[static_cast<std::size_t>(c)] += sum_gy_xhat;
            const double gval = gamma.value[static_cast<std::size_t>(c)];
            const double istd = cache.invstd[static_cast<std::size_t>(c)];
            const double k = gval * istd / m;
            for (int i = 0; i < n; ++i) {
                const double* g = detail::plane_ptr(gy, i, c, plane);
                const double* xh = detail::plane_ptr(cache.xhat, i, c, plane);
                double* out = detail::plane_ptr(gx, i, c, plane);
                for (int j = 0; j < plane; ++j)
                    out[j] = k * (m * g[j] - sum_gy - xh[j] * sum_gy_xhat);
            }
        }
        return gx;
    }

    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&gamma);
        out.push_back(&beta);
    }

    std::int64_t param_count() const { return 2 * channels_; }
    int channels() const { return channels_; }

    ParamTensor gamma;
    ParamTensor beta;
    Tensor running_mean;
    Tensor running_var;
};

// ---------------------------------------------------------------------------
// Elementwise activation.

enum class Activation { relu, tanh };

inline std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

inline Activation activation_from_string(const std::string& s) {
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation: " + s);
}

struct ActivationLayer {
    Activation kind = Activation::relu;

    struct Cache {
        Tensor ref;  // input for relu, output for tanh
    };

    Tensor forward(const Tensor& x, Cache* cache) const {
        Tensor y(x.shape());
        if (kind == Activation::relu) {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
            if (cache) cache->ref = x;
        } else {
            for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
            if (cache) cache->ref = y;
        }
        return y;
    }

    Tensor backward(const Tensor& gy, const Cache& cache) const {
        Tensor gx(gy.shape());
        if (kind == Activation::relu) {
            for (std::size_t i = 0; i < gy.size(); ++i)
                gx[i] = cache.ref[i] > 0.0 ? gy[i] : 0.0;
        } else {
            for (std::size_t i = 0; i < gy.size(); ++i)
                gx[i] = gy[i] * (1.0 - cache.ref[i] * cache.ref[i]);
        }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// Fully connected layer on (N, in) matrices.

class Linear {
    std::string name_;
    int in_dim_ = 0, out_dim_ = 0;

public:
    Linear() = default;
    Linear(std::string name, int in_dim, int out_dim)
        : name_(std::move(name)), in_dim_(in_dim), out_dim_(out_dim),
          weight(name_ + ".weight", {out_dim, in_dim}), bias(name_ + ".bias", {out_dim}) {}

    void init(Rng& rng) {
        he_normal_init(weight.value, in_dim_, rng);
        bias.value.fill(0.0);
    }

    struct Cache {
        Tensor x;
    };

    Tensor forward(const Tensor& x, Cache* cache) const {
        if (x.ndim() != 2 || x.dim(1) != in_dim_)
            throw ValidationError(name_ + ": expected (N," + std::to_string(in_dim_) +
                                  "), got " + x.shape_str());
        const int n = x.dim(0);
        Tensor y({n, out_dim_});
        y.mat2().noalias() = x.mat2() * weight.value.mat2().transpose();
        y.mat2().rowwise() += ConstVecMap(bias.value.data(), out_dim_).transpose();
        if (cache) cache->x = x;
        return y;
    }

    Tensor backward(const Tensor& gy, const Cache& cache) {
        const int n = gy.dim(0);
        weight.grad.mat2().noalias() += gy.mat2().transpose() * cache.x.mat2();
        VecMap(bias.grad.data(), out_dim_) += gy.mat2().colwise().sum().transpose();
        Tensor gx({n, in_dim_});
        gx.mat2().noalias() = gy.mat2() * weight.value.mat2();
        return gx;
    }

    void collect(std::vector<ParamTensor*>& out) {
        out.push_back(&weight);
        out.push_back(&bias);
    }

    std::int64_t param_count() const {
        return static_cast<std::int64_t>(weight.size() + bias.size());
    }
    int in_dim() const { return in_dim_; }
    int out_dim() const { return out_dim_; }

    ParamTensor weight;
    ParamTensor bias;
};

// ---------------------------------------------------------------------------
// Global average pooling (N,C,H,W) -> (N,C).

struct GlobalAvgPool {
    struct Cache {
        int h = 0, w = 0;
    };

    Tensor forward(const Tensor& x, Cache* cache) const {
        const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        Tensor y({n, c});
        const double inv = 1.0 / (h * w);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) {
                const double* p = x.data() + (static_cast<std::size_t>(i) * c + j) * h * w;
                double s = 0.0;
                for (int k = 0; k < h * w; ++k) s += p[k];
                y.at2(i, j) = s * inv;
            }
        if (cache) {
            cache->h = h;
            cache->w = w;
        }
        return y;
    }

    Tensor backward(const Tensor& gy, const Cache& cache) const {
        const int n = gy.dim(0), c = gy.dim(1);
        Tensor gx({n, c, cache.h, cache.w});
        const double inv = 1.0 / (cache.h * cache.w);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < c; ++j) {
                const double g = gy.at2(i, j) * inv;
                double* p = gx.data() +
                            (static_cast<std::size_t>(i) * c + j) * cache.h * cache.w;
                for (int k = 0; k < cache.h * cache.w; ++k) p[k] = g;
            }
        return gx;
    }
};

// ---------------------------------------------------------------------------
// Softmax cross-entropy on logits.

struct SoftmaxXent {
    // Returns mean loss; fills probs (N,K) if requested.
    static double loss(const Tensor& logits, const std::vector<int>& labels, Tensor* probs) {
        const int n = logits.dim(0), k = logits.dim(1);
        if (static_cast<int>(labels.size()) != n)
            throw ValidationError("cross-entropy: label count does not match batch");
        Tensor p({n, k});
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const double* row = logits.data() + static_cast<std::size_t>(i) * k;
            double mx = row[0];
            for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
            double z = 0.0;
            for (int j = 0; j < k; ++j) z += std::exp(row[j] - mx);
            const double logz = std::log(z) + mx;
            for (int j = 0; j < k; ++j)
                p.at2(i, j) = std::exp(row[j] - logz);
            const int y = labels[static_cast<std::size_t>(i)];
            if (y < 0 || y >= k) throw ValidationError("cross-entropy: label out of range");
            total += logz - row[y];
        }
        if (probs) *probs = std::move(p);
        return total / n;
    }

    // d(mean loss)/dlogits.
    static Tensor grad(const Tensor& probs, const std::vector<int>& labels) {
        const int n = probs.dim(0), k = probs.dim(1);
        Tensor g = probs;
        const double inv = 1.0 / n;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < k; ++j) g.at2(i, j) *= inv;
            g.at2(i, labels[static_cast<std::size_t>(i)]) -= inv;
        }
        return g;
    }
};

}  // namespace photostyle
