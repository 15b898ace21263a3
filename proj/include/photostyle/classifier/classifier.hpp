#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "photostyle/corpus/manifest.hpp"
#include "photostyle/nn/backbone.hpp"
#include "photostyle/nn/optim.hpp"

namespace photostyle {

// Reference training recipe for the style classifiers. The defaults are the
// published recipe; epochs is routinely overridden for small corpora.
struct TrainHyperparams {
    int epochs = 1;
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 64;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
        if (!(learning_rate >= 0.0)) throw ValidationError("train: learning_rate must be >= 0");
        if (momentum < 0.0 || momentum >= 1.0)
            throw ValidationError("train: momentum must be in [0, 1)");
        if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
    }
};

struct TrainStep {
    int step = 0;
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainHistory {
    std::vector<TrainStep> steps;
    std::vector<double> epoch_mean_loss;
};

// Thrown when the loss leaves the finite range; carries the finite prefix of
// the history so callers can still inspect the run.
class DivergenceError : public RuntimeError {
public:
    DivergenceError(const std::string& msg, TrainHistory history)
        : RuntimeError(msg), history_(std::move(history)) {}
    const TrainHistory& history() const { return history_; }

private:
    TrainHistory history_;
};

struct TrainedClassifier {
    std::shared_ptr<Backbone> backbone;
    BackboneConfig config;
    TrainHyperparams hyperparams;
    TrainHistory history;
    std::vector<StyleLabel> labels;
};

namespace detail {

inline Tensor stack_batch(ImageCache& cache, const ManifestView& view,
                          const std::vector<int>& positions, std::vector<int>* labels) {
    if (positions.empty()) throw ValidationError("batch: empty");
    const ImageTensor& first = cache.get(view.record_index(0));
    const int c = first.data.dim(0), h = first.data.dim(1), w = first.data.dim(2);
    Tensor batch({static_cast<int>(positions.size()), c, h, w});
    if (labels) labels->clear();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const int rec = view.record_index(static_cast<std::size_t>(positions[i]));
        const ImageTensor& img = cache.get(rec);
        require_shape(img.data, {c, h, w}, "batch image");
        std::copy(img.data.data(), img.data.data() + img.data.size(),
                  batch.data() + static_cast<std::size_t>(i) * c * h * w);
        if (labels) labels->push_back(view.record(static_cast<std::size_t>(positions[i])).label);
    }
    return batch;
}

}  // namespace detail

inline TrainedClassifier train_classifier(const BackboneConfig& config,
                                          const ManifestView& train_split,
                                          const TrainHyperparams& hp, ImageCache& cache) {
    config.validate();
    hp.validate();
    if (train_split.empty()) throw ValidationError("train: training split is empty");
    if (config.num_classes != train_split.num_labels())
        throw ValidationError("train: num_classes (" + std::to_string(config.num_classes) +
                              ") does not match manifest label count (" +
                              std::to_string(train_split.num_labels()) + ")");

    TrainedClassifier model;
    model.config = config;
    model.hyperparams = hp;
    model.labels = train_split.manifest().labels;
    model.backbone = std::make_shared<Backbone>(config, derive_seed(hp.seed, "classifier-init"));

    SgdOptimizer opt(model.backbone->params(), hp.learning_rate, hp.momentum);
    Rng shuffle_rng(derive_seed(hp.seed, "classifier-shuffle"));

    std::vector<int> order(train_split.size());
    std::iota(order.begin(), order.end(), 0);

    int step = 0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        int epoch_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += hp.batch_size) {
            const std::size_t end = std::min(order.size(), start + hp.batch_size);
            std::vector<int> positions(order.begin() + static_cast<std::ptrdiff_t>(start),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
            std::vector<int> labels;
            Tensor batch = detail::stack_batch(cache, train_split, positions, &labels);

            Backbone::Cache fwd;
            auto features = model.backbone->forward(batch, &fwd, true);
            Tensor probs;
            const double loss = SoftmaxXent::loss(features.logits, labels, &probs);
            if (!std::isfinite(loss))
                throw DivergenceError("train: loss diverged at step " + std::to_string(step),
                                      model.history);
            opt.zero_grad();
            model.backbone->backward(SoftmaxXent::grad(probs, labels), fwd);
            opt.step();

            model.history.steps.push_back({step, epoch, loss, hp.learning_rate});
            epoch_loss += loss;
            ++epoch_batches;
            ++step;
        }
        model.history.epoch_mean_loss.push_back(epoch_batches ? epoch_loss / epoch_batches
                                                              : 0.0);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct EvalResult {
    double accuracy = 0.0;
    std::map<int, double> per_class_accuracy;
    std::vector<std::vector<std::int64_t>> confusion;  // [true][predicted]
    std::int64_t n = 0;
};

inline EvalResult evaluate_classifier(const TrainedClassifier& model, const ManifestView& split,
                                      ImageCache& cache, int eval_batch = 64) {
    if (split.empty()) throw ValidationError("evaluate: split is empty");
    const int k = model.config.num_classes;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split.record(i).label >= k)
            throw ValidationError("evaluate: split contains label outside model label set");

    EvalResult result;
    result.confusion.assign(static_cast<std::size_t>(k),
                            std::vector<std::int64_t>(static_cast<std::size_t>(k), 0));
    for (std::size_t start = 0; start < split.size();
         start += static_cast<std::size_t>(eval_batch)) {
        const std::size_t end = std::min(split.size(), start + static_cast<std::size_t>(eval_batch));
        std::vector<int> positions;
        for (std::size_t i = start; i < end; ++i) positions.push_back(static_cast<int>(i));
        std::vector<int> labels;
        Tensor batch = detail::stack_batch(cache, split, positions, &labels);
        auto features = model.backbone->forward(batch, nullptr, false);
        for (std::size_t i = 0; i < positions.size(); ++i) {
            const double* row = features.logits.data() + i * static_cast<std::size_t>(k);
            int pred = 0;
            for (int j = 1; j < k; ++j)
                if (row[j] > row[pred]) pred = j;
            ++result.confusion[static_cast<std::size_t>(labels[i])][static_cast<std::size_t>(pred)];
        }
    }

    std::int64_t correct = 0, total = 0;
    for (int t = 0; t < k; ++t) {
        std::int64_t row_total = 0;
        for (int p = 0; p < k; ++p) row_total += result.confusion[t][p];
        if (row_total > 0)
            result.per_class_accuracy[t] =
                static_cast<double>(result.confusion[t][t]) / static_cast<double>(row_total);
        correct += result.confusion[t][t];
        total += row_total;
    }
    result.n = total;
    result.accuracy = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    return result;
}

// Single-image prediction with the full probability vector.
inline std::pair<int, std::vector<double>> classify(const TrainedClassifier& model,
                                                    const ImageTensor& image) {
    const auto& s = image.data.shape();
    if (image.data.ndim() != 3)
        throw ValidationError("classify: expected (C,H,W) image, got " + image.data.shape_str());
    Tensor batch({1, s[0], s[1], s[2]});
    std::copy(image.data.data(), image.data.data() + image.data.size(), batch.data());
    auto features = model.backbone->forward(batch, nullptr, false);
    Tensor probs;
    std::vector<int> dummy{0};
    SoftmaxXent::loss(features.logits, dummy, &probs);
    std::vector<double> p(probs.data(), probs.data() + probs.size());
    const int pred = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    return {pred, p};
}

}  // namespace photostyle
