#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "photostyle/classifier/classifier.hpp"
#include "photostyle/nn/backbone.hpp"

namespace photostyle {

enum class TapPoint { final_fc_output, penultimate_features };

inline std::string to_string(TapPoint t) {
    return t == TapPoint::final_fc_output ? "final_fc_output" : "penultimate_features";
}

inline TapPoint tap_point_from_string(const std::string& s) {
    if (s == "final_fc_output") return TapPoint::final_fc_output;
    if (s == "penultimate_features") return TapPoint::penultimate_features;
    throw ValidationError("unknown tap point: " + s);
}

struct EmbeddingHeadConfig {
    TapPoint tap_point = TapPoint::final_fc_output;
    std::array<int, 4> head_layer_widths{512, 512, 512, 512};
    int embedding_dim = 512;
    bool freeze_base = true;

    void validate() const {
        for (int w : head_layer_widths)
            if (w < 1) throw ValidationError("embedding head: layer widths must be >= 1");
        if (embedding_dim != head_layer_widths[3])
            throw ValidationError("embedding head: embedding_dim must equal the last layer width");
    }
};

// Twin embedding network: a (usually frozen) trained backbone tapped at the
// class logits or the pooled features, four fully connected layers producing
// the embedding, and a scalar comparison head
//   P(I1, I2) = logistic(w . |N(I1) - N(I2)| + b).
// One parameter set serves both twins; "both inputs" means two forward
// passes through the same layers.
class EmbeddingNetwork {
public:
    EmbeddingNetwork(std::shared_ptr<Backbone> base, EmbeddingHeadConfig cfg,
                     std::uint64_t seed)
        : base_(std::move(base)), cfg_(cfg),
          out_weight("head.out_weight", {cfg.embedding_dim}), out_bias("head.out_bias", {1}) {
        cfg_.validate();
        if (!base_) throw ValidationError("embedding: base backbone is null");
        const int tap = tap_dim();
        const auto& w = cfg_.head_layer_widths;
        layers_[0] = Linear("head.fc0", tap, w[0]);
        layers_[1] = Linear("head.fc1", w[0], w[1]);
        layers_[2] = Linear("head.fc2", w[1], w[2]);
        layers_[3] = Linear("head.fc3", w[2], w[3]);
        act_.kind = Activation::relu;
        init(seed);
    }

    void init(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "embedding-head-init"));
        for (auto& l : layers_) l.init(rng);
        he_normal_init(out_weight.value, cfg_.embedding_dim, rng);
        out_bias.value.fill(0.0);
    }

    int tap_dim() const {
        return cfg_.tap_point == TapPoint::final_fc_output ? base_->config().num_classes
                                                           : base_->penultimate_dim();
    }

    const EmbeddingHeadConfig& config() const { return cfg_; }
    std::shared_ptr<Backbone> base() { return base_; }
    const Backbone& base() const { return *base_; }
    int embedding_dim() const { return cfg_.embedding_dim; }

    struct HeadCache {
        std::array<Linear::Cache, 4> fc;
        std::array<ActivationLayer::Cache, 3> act;
    };

    struct BaseCache {
        Backbone::Cache cache;
    };

    // (N, C, H, W) image batch -> (N, tap_dim) features.
    Tensor tap_features(const Tensor& batch, BaseCache* cache, bool train) {
        auto features = base_->forward(batch, cache ? &cache->cache : nullptr, train);
        return cfg_.tap_point == TapPoint::final_fc_output ? std::move(features.logits)
                                                           : std::move(features.penultimate);
    }

    // (N, tap_dim) -> (N, embedding_dim).
    Tensor head_forward(const Tensor& feats, HeadCache* cache) {
        Tensor h = feats;
        for (int i = 0; i < 4; ++i) {
            h = layers_[static_cast<std::size_t>(i)].forward(
                h, cache ? &cache->fc[static_cast<std::size_t>(i)] : nullptr);
            if (i < 3)
                h = act_.forward(h, cache ? &cache->act[static_cast<std::size_t>(i)] : nullptr);
        }
        return h;
    }

    Tensor head_backward(const Tensor& gy, const HeadCache& cache) {
        Tensor g = gy;
        for (int i = 3; i >= 0; --i) {
            g = layers_[static_cast<std::size_t>(i)].backward(
                g, cache.fc[static_cast<std::size_t>(i)]);
            if (i > 0)
                g = act_.backward(g, cache.act[static_cast<std::size_t>(i - 1)]);
        }
        return g;
    }

    // Wait: activation order — fc then act for first three layers; backward
    // must unwind act before the producing layer's backward. Covered by the
    // ordering above (act i-1 follows fc i-1 in forward).

    // Embeddings for an image batch, evaluation mode.
    Tensor embed_batch(const Tensor& batch) {
        Tensor feats = tap_features(batch, nullptr, false);
        return head_forward(feats, nullptr);
    }

    std::vector<double> embed(const ImageTensor& image) {
        const auto& s = image.data.shape();
        Tensor batch({1, s[0], s[1], s[2]});
        std::copy(image.data.data(), image.data.data() + image.data.size(), batch.data());
        Tensor e = embed_batch(batch);
        if (!e.all_finite()) throw RuntimeError("embed: non-finite embedding");
        return {e.data(), e.data() + e.size()};
    }

    // Scalar comparison: logit and probability from two embeddings.
    double similarity_logit(const double* e1, const double* e2) const {
        const int d = cfg_.embedding_dim;
        double s = out_bias.value[0];
        const double* w = out_weight.value.data();
        for (int j = 0; j < d; ++j) s += w[j] * std::abs(e1[j] - e2[j]);
        return s;
    }

    static double logistic(double s) { return 1.0 / (1.0 + std::exp(-s)); }

    double similarity_from_embeddings(const std::vector<double>& e1,
                                      const std::vector<double>& e2) const {
        if (static_cast<int>(e1.size()) != cfg_.embedding_dim ||
            static_cast<int>(e2.size()) != cfg_.embedding_dim)
            throw ValidationError("similarity: embedding length mismatch");
        return logistic(similarity_logit(e1.data(), e2.data()));
    }

    double similarity(const ImageTensor& i1, const ImageTensor& i2) {
        return similarity_from_embeddings(embed(i1), embed(i2));
    }

    std::vector<ParamTensor*> head_params() {
        std::vector<ParamTensor*> out;
        for (auto& l : layers_) l.collect(out);
        out.push_back(&out_weight);
        out.push_back(&out_bias);
        return out;
    }

    std::vector<ParamTensor*> trainable_params() {
        auto out = head_params();
        if (!cfg_.freeze_base) {
            auto base = base_->params();
            out.insert(out.end(), base.begin(), base.end());
        }
        return out;
    }

    std::array<Linear, 4>& head_layers() { return layers_; }

    ParamTensor out_weight;
    ParamTensor out_bias;

private:
    std::shared_ptr<Backbone> base_;
    EmbeddingHeadConfig cfg_;
    std::array<Linear, 4> layers_;
    ActivationLayer act_;
};

inline EmbeddingNetwork build_embedding_network(const TrainedClassifier& base,
                                                const EmbeddingHeadConfig& cfg,
                                                std::uint64_t seed) {
    if (!base.backbone) throw ValidationError("embedding: base classifier has no backbone");
    return EmbeddingNetwork(base.backbone, cfg, seed);
}

}  // namespace photostyle
