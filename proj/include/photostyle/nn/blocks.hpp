#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "photostyle/nn/layers.hpp"

namespace photostyle {

// One residual transform: conv -> norm -> activation -> conv. This is the F
// of a residual block and the per-branch T_i of an aggregated block.
class BranchTransform {
public:
    BranchTransform() = default;
    BranchTransform(std::string name, int in_ch, int mid_ch, int out_ch, int stride,
                    Activation act)
        : conv1(name + ".conv1", in_ch, mid_ch, 3, stride, 1),
          norm(name + ".norm", mid_ch),
          conv2(name + ".conv2", mid_ch, out_ch, 3, 1, 1) {
        act_.kind = act;
    }

    void init(Rng& rng) {
        conv1.init(rng);
        conv2.init(rng);
    }

    struct Cache {
        Conv2d::Cache c1;
        BatchNorm2d::Cache bn;
        ActivationLayer::Cache act;
        Conv2d::Cache c2;
    };

    Tensor forward(const Tensor& x, Cache* cache, bool train) {
        Tensor h = conv1.forward(x, cache ? &cache->c1 : nullptr);
        h = norm.forward(h, cache ? &cache->bn : nullptr, train);
        h = act_.forward(h, cache ? &cache->act : nullptr);
        return conv2.forward(h, cache ? &cache->c2 : nullptr);
    }

    Tensor backward(const Tensor& gy, const Cache& cache) {
        Tensor g = conv2.backward(gy, cache.c2);
        g = act_.backward(g, cache.act);
        g = norm.backward(g, cache.bn);
        return conv1.backward(g, cache.c1);
    }

    void collect(std::vector<ParamTensor*>& out) {
        conv1.collect(out);
        norm.collect(out);
        conv2.collect(out);
    }

    std::int64_t param_count() const {
        return conv1.param_count() + norm.param_count() + conv2.param_count();
    }

    Conv2d conv1;
    BatchNorm2d norm;
    Conv2d conv2;

private:
    ActivationLayer act_;
};

// Residual block with C parallel branches summed onto the skip path:
//   out = shortcut(x) + sum_i T_i(x).
// The shortcut is the identity when shapes agree and a strided 1x1
// projection otherwise. C = 1 is the plain residual block.
class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(std::string name, int in_ch, int out_ch, int mid_ch, int stride,
                  int cardinality, Activation act)
        : name_(std::move(name)) {
        if (cardinality < 1) throw ValidationError(name_ + ": cardinality must be >= 1");
        for (int i = 0; i < cardinality; ++i)
            branches_.emplace_back(name_ + ".branch" + std::to_string(i), in_ch, mid_ch,
                                   out_ch, stride, act);
        if (stride != 1 || in_ch != out_ch)
            projection_.emplace(name_ + ".proj", in_ch, out_ch, 1, stride, 0);
    }

    void init(Rng& rng) {
        for (auto& b : branches_) b.init(rng);
        if (projection_) projection_->init(rng);
    }

    struct Cache {
        std::vector<BranchTransform::Cache> branches;
        Conv2d::Cache proj;
    };

    Tensor forward(const Tensor& x, Cache* cache, bool train) {
        if (cache) cache->branches.resize(branches_.size());
        Tensor skip = projection_ ? projection_->forward(x, cache ? &cache->proj : nullptr)
                                  : x;
        Tensor out = std::move(skip);
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            Tensor t = branches_[i].forward(x, cache ? &cache->branches[i] : nullptr, train);
            if (!t.same_shape(out))
                throw ValidationError(name_ + ": branch output " + t.shape_str() +
                                      " does not match skip " + out.shape_str());
            out.flat() += t.flat();
        }
        return out;
    }

    Tensor backward(const Tensor& gy, const Cache& cache) {
        Tensor gx = projection_ ? projection_->backward(gy, cache.proj) : gy;
        for (std::size_t i = 0; i < branches_.size(); ++i) {
            Tensor g = branches_[i].backward(gy, cache.branches[i]);
            gx.flat() += g.flat();
        }
        return gx;
    }

    void collect(std::vector<ParamTensor*>& out) {
        for (auto& b : branches_) b.collect(out);
        if (projection_) projection_->collect(out);
    }

    std::int64_t param_count() const {
        std::int64_t n = projection_ ? projection_->param_count() : 0;
        for (const auto& b : branches_) n += b.param_count();
        return n;
    }

    int cardinality() const { return static_cast<int>(branches_.size()); }
    std::vector<BranchTransform>& branches() { return branches_; }
    const std::vector<BranchTransform>& branches() const { return branches_; }
    std::optional<Conv2d>& projection() { return projection_; }
    const std::optional<Conv2d>& projection() const { return projection_; }

private:
    std::string name_;
    std::vector<BranchTransform> branches_;
    std::optional<Conv2d> projection_;
};

// Spec-level entry points over a caller-assembled block. The aggregated
// forward is the general path; the residual forward is its single-branch
// case, so their C = 1 agreement is structural.

inline Tensor aggregated_block_forward(ResidualBlock& block, const Tensor& x, int cardinality,
                                       ResidualBlock::Cache* cache = nullptr,
                                       bool train = false) {
    if (block.cardinality() != cardinality)
        throw ValidationError("aggregated block: expected " + std::to_string(cardinality) +
                              " branch parameter sets, block has " +
                              std::to_string(block.cardinality()));
    return block.forward(x, cache, train);
}

inline Tensor residual_block_forward(ResidualBlock& block, const Tensor& x,
                                     ResidualBlock::Cache* cache = nullptr,
                                     bool train = false) {
    return aggregated_block_forward(block, x, 1, cache, train);
}

}  // namespace photostyle
