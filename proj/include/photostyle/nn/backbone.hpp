#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "photostyle/nn/blocks.hpp"

namespace photostyle {

enum class Family { wide_residual, aggregated, compound_scaled };

inline std::string to_string(Family f) {
    switch (f) {
        case Family::wide_residual: return "wide_residual";
        case Family::aggregated: return "aggregated";
        case Family::compound_scaled: return "compound_scaled";
    }
    throw ValidationError("unknown family");
}

inline Family family_from_string(const std::string& s) {
    if (s == "wide_residual") return Family::wide_residual;
    if (s == "aggregated") return Family::aggregated;
    if (s == "compound_scaled") return Family::compound_scaled;
    throw ValidationError("unknown backbone family: " + s);
}

// Shared small-network template: a stem convolution, stage_count stages of
// depth_blocks residual blocks (channel width doubling per stage, spatial
// halving from stage 1 on), then norm/activation, global average pooling and
// a fully connected classifier.
//
// The family picks the block flavor and which knobs mean what:
//   wide_residual   — single-branch blocks, k widens every stage
//   aggregated      — cardinality branches of fixed bottleneck width
//   compound_scaled — single-branch blocks; (depth_blocks, width_factor,
//                     resolution_factor) are the jointly scaled dimensions
struct BackboneConfig {
    Family family = Family::wide_residual;
    int depth_blocks = 1;            // blocks per stage (d)
    double width_factor = 1.0;       // channel multiplier (k / w)
    int cardinality = 1;             // branches per block (C), aggregated only
    double resolution_factor = 1.0;  // input-size multiplier (r)
    int base_channels = 16;
    int num_classes = 10;
    int stage_count = 3;
    int input_channels = 3;
    Activation activation = Activation::relu;

    void validate() const {
        if (depth_blocks < 1) throw ValidationError("backbone: depth_blocks must be >= 1");
        if (!(width_factor > 0.0)) throw ValidationError("backbone: width_factor must be > 0");
        if (cardinality < 1) throw ValidationError("backbone: cardinality must be >= 1");
        if (!(resolution_factor > 0.0))
            throw ValidationError("backbone: resolution_factor must be > 0");
        if (base_channels < 1) throw ValidationError("backbone: base_channels must be >= 1");
        if (num_classes < 2) throw ValidationError("backbone: num_classes must be >= 2");
        if (stage_count < 1) throw ValidationError("backbone: stage_count must be >= 1");
        if (input_channels < 1) throw ValidationError("backbone: input_channels must be >= 1");
    }

    int stage_width(int stage) const {
        const double w = base_channels * width_factor * std::pow(2.0, stage);
        return std::max(1, static_cast<int>(std::lround(w)));
    }

    int block_cardinality() const { return family == Family::aggregated ? cardinality : 1; }

    // Aggregated branches use a fixed quarter-width bottleneck so that cost
    // grows with cardinality; the other families run full-width transforms.
    int branch_mid_width(int stage) const {
        const int w = stage_width(stage);
        return family == Family::aggregated ? std::max(1, w / 4) : w;
    }

    // Side of the input the network is meant to train on, given the corpus
    // base size.
    int scaled_input_extent(int base_extent) const {
        return std::max(1, static_cast<int>(std::lround(base_extent * resolution_factor)));
    }
};

class Backbone {
public:
    explicit Backbone(const BackboneConfig& config, std::uint64_t seed)
        : config_(config) {
        config_.validate();
        const int w0 = config_.stage_width(0);
        stem_ = Conv2d("stem", config_.input_channels, w0, 3, 1, 1);
        int in_ch = w0;
        for (int s = 0; s < config_.stage_count; ++s) {
            const int out_ch = config_.stage_width(s);
            std::vector<ResidualBlock> stage;
            for (int b = 0; b < config_.depth_blocks; ++b) {
                const int stride = (s > 0 && b == 0) ? 2 : 1;
                stage.emplace_back("stage" + std::to_string(s) + ".block" + std::to_string(b),
                                   in_ch, out_ch, config_.branch_mid_width(s), stride,
                                   config_.block_cardinality(), config_.activation);
                in_ch = out_ch;
            }
            stages_.push_back(std::move(stage));
        }
        head_norm_ = BatchNorm2d("head.norm", in_ch);
        head_act_.kind = config_.activation;
        fc_ = Linear("head.fc", in_ch, config_.num_classes);
        init(seed);
    }

    void init(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "backbone-init"));
        stem_.init(rng);
        for (auto& stage : stages_)
            for (auto& block : stage) block.init(rng);
        fc_.init(rng);
    }

    struct Cache {
        Conv2d::Cache stem;
        std::vector<std::vector<ResidualBlock::Cache>> blocks;
        BatchNorm2d::Cache head_bn;
        ActivationLayer::Cache head_act;
        GlobalAvgPool::Cache gap;
        Linear::Cache fc;
    };

    struct Features {
        Tensor logits;       // (N, num_classes)
        Tensor penultimate;  // (N, last stage width) pooled features
    };

    // Forward pass over an image batch (N, C, H, W).
    Features forward(const Tensor& x, Cache* cache, bool train) {
        if (x.ndim() != 4 || x.dim(1) != config_.input_channels)
            throw ValidationError("backbone: expected (N," +
                                  std::to_string(config_.input_channels) + ",H,W), got " +
                                  x.shape_str());
        if (cache) {
            cache->blocks.assign(stages_.size(), {});
            for (std::size_t s = 0; s < stages_.size(); ++s)
                cache->blocks[s].resize(stages_[s].size());
        }
        Tensor h = stem_.forward(x, cache ? &cache->stem : nullptr);
        for (std::size_t s = 0; s < stages_.size(); ++s)
            for (std::size_t b = 0; b < stages_[s].size(); ++b)
                h = stages_[s][b].forward(h, cache ? &cache->blocks[s][b] : nullptr, train);
        h = head_norm_.forward(h, cache ? &cache->head_bn : nullptr, train);
        h = head_act_.forward(h, cache ? &cache->head_act : nullptr);
        Features out;
        out.penultimate = pool_.forward(h, cache ? &cache->gap : nullptr);
        out.logits = fc_.forward(out.penultimate, cache ? &cache->fc : nullptr);
        return out;
    }

    // Gradient of the loss w.r.t. the input batch; parameter gradients
    // accumulate into the ParamTensors.
    Tensor backward(const Tensor& glogits, const Cache& cache) {
        Tensor g = fc_.backward(glogits, cache.fc);
        g = pool_.backward(g, cache.gap);
        g = head_act_.backward(g, cache.head_act);
        g = head_norm_.backward(g, cache.head_bn);
        for (std::size_t s = stages_.size(); s-- > 0;)
            for (std::size_t b = stages_[s].size(); b-- > 0;)
                g = stages_[s][b].backward(g, cache.blocks[s][b]);
        return stem_.backward(g, cache.stem);
    }

    std::vector<ParamTensor*> params() {
        std::vector<ParamTensor*> out;
        stem_.collect(out);
        for (auto& stage : stages_)
            for (auto& block : stage) block.collect(out);
        head_norm_.collect(out);
        fc_.collect(out);
        return out;
    }

    std::int64_t param_count() {
        std::int64_t n = 0;
        for (const auto* p : params()) n += static_cast<std::int64_t>(p->size());
        return n;
    }

    void zero_grad() {
        for (auto* p : params()) p->zero_grad();
    }

    const BackboneConfig& config() const { return config_; }
    int penultimate_dim() const { return fc_.in_dim(); }

    // Normalization running statistics, needed for checkpointing.
    std::vector<std::pair<std::string, Tensor*>> buffers() {
        std::vector<std::pair<std::string, Tensor*>> out;
        int idx = 0;
        for (auto& stage : stages_)
            for (auto& block : stage) {
                for (auto& branch : block.branches()) {
                    const std::string base = "bn" + std::to_string(idx++);
                    out.emplace_back(base + ".running_mean", &branch.norm.running_mean);
                    out.emplace_back(base + ".running_var", &branch.norm.running_var);
                }
            }
        out.emplace_back("head.running_mean", &head_norm_.running_mean);
        out.emplace_back("head.running_var", &head_norm_.running_var);
        return out;
    }

private:
    BackboneConfig config_;
    Conv2d stem_;
    std::vector<std::vector<ResidualBlock>> stages_;
    BatchNorm2d head_norm_;
    ActivationLayer head_act_;
    GlobalAvgPool pool_;
    Linear fc_;
};

}  // namespace photostyle
