#pragma once

#include <cstdint>
#include <vector>

#include "photostyle/nn/backbone.hpp"

namespace photostyle {

// Analytic cost model, independent of network construction.
//
// Conventions (fixed so budget comparisons are unambiguous):
//   * flops counts one multiply-accumulate of a convolution or fully
//     connected kernel as 1; normalization, activation and bias adds are
//     excluded.
//   * activation_memory is the peak over layers of (input + output)
//     elements at batch 1, in bytes of double storage.
//   * parameter_count enumerates every learnable (conv/fc weights and
//     biases, normalization scale and shift); running statistics are not
//     learnable and do not count.
struct CostEstimate {
    std::int64_t parameter_count = 0;
    std::int64_t flops = 0;
    std::int64_t activation_memory = 0;
};

namespace detail {

inline int conv_out_extent(int in, int ksize, int stride, int pad) {
    return (in + 2 * pad - ksize) / stride + 1;
}

struct CostWalk {
    std::int64_t params = 0;
    std::int64_t macs = 0;
    std::int64_t peak_pair = 0;  // max (in+out) elements across layers

    void conv(int in_ch, int out_ch, int ksize, int in_h, int in_w, int stride, int pad) {
        const int oh = conv_out_extent(in_h, ksize, stride, pad);
        const int ow = conv_out_extent(in_w, ksize, stride, pad);
        params += static_cast<std::int64_t>(out_ch) * in_ch * ksize * ksize + out_ch;
        macs += static_cast<std::int64_t>(out_ch) * in_ch * ksize * ksize * oh * ow;
        pair(static_cast<std::int64_t>(in_ch) * in_h * in_w,
             static_cast<std::int64_t>(out_ch) * oh * ow);
    }

    void norm(int ch, int h, int w) {
        params += 2 * static_cast<std::int64_t>(ch);
        const std::int64_t n = static_cast<std::int64_t>(ch) * h * w;
        pair(n, n);
    }

    void fc(int in_dim, int out_dim) {
        params += static_cast<std::int64_t>(out_dim) * in_dim + out_dim;
        macs += static_cast<std::int64_t>(out_dim) * in_dim;
        pair(in_dim, out_dim);
    }

    void pair(std::int64_t in_elems, std::int64_t out_elems) {
        peak_pair = std::max(peak_pair, in_elems + out_elems);
    }
};

}  // namespace detail

inline CostEstimate estimate_cost(const BackboneConfig& config, int input_h, int input_w) {
    config.validate();
    if (input_h < 1 || input_w < 1)
        throw ValidationError("estimate_cost: input extent must be >= 1");

    detail::CostWalk walk;
    int h = config.scaled_input_extent(input_h);
    int w = config.scaled_input_extent(input_w);

    const int w0 = config.stage_width(0);
    walk.conv(config.input_channels, w0, 3, h, w, 1, 1);
    int in_ch = w0;
    for (int s = 0; s < config.stage_count; ++s) {
        const int out_ch = config.stage_width(s);
        const int mid = config.branch_mid_width(s);
        const int branches = config.block_cardinality();
        for (int b = 0; b < config.depth_blocks; ++b) {
            const int stride = (s > 0 && b == 0) ? 2 : 1;
            const int oh = detail::conv_out_extent(h, 3, stride, 1);
            const int ow = detail::conv_out_extent(w, 3, stride, 1);
            for (int br = 0; br < branches; ++br) {
                walk.conv(in_ch, mid, 3, h, w, stride, 1);
                walk.norm(mid, oh, ow);
                walk.conv(mid, out_ch, 3, oh, ow, 1, 1);
            }
            if (stride != 1 || in_ch != out_ch)
                walk.conv(in_ch, out_ch, 1, h, w, stride, 0);
            h = oh;
            w = ow;
            in_ch = out_ch;
        }
    }
    walk.norm(in_ch, h, w);
    walk.pair(static_cast<std::int64_t>(in_ch) * h * w, in_ch);  // global average pool
    walk.fc(in_ch, config.num_classes);

    CostEstimate est;
    est.parameter_count = walk.params;
    est.flops = walk.macs;
    est.activation_memory = walk.peak_pair * static_cast<std::int64_t>(sizeof(double));
    return est;
}

// ---------------------------------------------------------------------------
// Budgeted compound-scaling resolver: pick the (d, w, r) candidate that
// maximizes a caller-supplied proxy accuracy subject to memory and flop
// budgets. Grid search over explicit candidates; ties break toward cheaper
// networks (flops, then parameters, then grid order).

struct ScalingCandidate {
    int depth = 1;
    double width = 1.0;
    double resolution = 1.0;
};

struct ScalingBudget {
    std::int64_t target_memory = 0;  // bytes
    std::int64_t target_flops = 0;

    void validate() const {
        if (target_memory <= 0 || target_flops <= 0)
            throw ValidationError("scaling budget: targets must be > 0");
    }
};

struct ScalingAuditEntry {
    ScalingCandidate candidate;
    CostEstimate cost;
    bool feasible = false;
    bool scored = false;
    double score = 0.0;
};

struct ScalingResolution {
    ScalingCandidate chosen;
    CostEstimate chosen_cost;
    double chosen_score = 0.0;
    std::vector<ScalingAuditEntry> audit;
    std::string flop_convention = "1 multiply-accumulate = 1 flop; conv and fc kernels only";
};

inline BackboneConfig apply_scaling(BackboneConfig base, const ScalingCandidate& c) {
    base.family = Family::compound_scaled;
    base.depth_blocks = c.depth;
    base.width_factor = c.width;
    base.resolution_factor = c.resolution;
    return base;
}

template <typename ProxyEvaluator>
ScalingResolution resolve_compound_scaling(const std::vector<ScalingCandidate>& grid,
                                           const ScalingBudget& budget,
                                           const BackboneConfig& base_config, int input_h,
                                           int input_w, ProxyEvaluator&& proxy) {
    if (grid.empty()) throw ValidationError("scaling: candidate grid is empty");
    budget.validate();

    ScalingResolution res;
    res.audit.reserve(grid.size());
    int best = -1;
    int cheapest = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        ScalingAuditEntry entry;
        entry.candidate = grid[i];
        const BackboneConfig cfg = apply_scaling(base_config, grid[i]);
        entry.cost = estimate_cost(cfg, input_h, input_w);
        entry.feasible = entry.cost.activation_memory <= budget.target_memory &&
                         entry.cost.flops <= budget.target_flops;
        if (entry.feasible) {
            entry.score = proxy(grid[i].depth, grid[i].width, grid[i].resolution);
            entry.scored = true;
        }
        res.audit.push_back(entry);

        const auto& ch = res.audit[static_cast<std::size_t>(cheapest)].cost;
        if (entry.cost.flops < ch.flops ||
            (entry.cost.flops == ch.flops &&
             entry.cost.activation_memory < ch.activation_memory))
            cheapest = static_cast<int>(i);

        if (!entry.feasible) continue;
        if (best < 0) {
            best = static_cast<int>(i);
            continue;
        }
        const auto& b = res.audit[static_cast<std::size_t>(best)];
        if (entry.score > b.score ||
            (entry.score == b.score &&
             (entry.cost.flops < b.cost.flops ||
              (entry.cost.flops == b.cost.flops &&
               entry.cost.parameter_count < b.cost.parameter_count))))
            best = static_cast<int>(i);
    }

    if (best < 0) {
        const auto& c = res.audit[static_cast<std::size_t>(cheapest)];
        throw ValidationError(
            "scaling: budget infeasible; minimum-cost candidate (d=" +
            std::to_string(c.candidate.depth) + ", w=" + std::to_string(c.candidate.width) +
            ", r=" + std::to_string(c.candidate.resolution) +
            ") needs flops=" + std::to_string(c.cost.flops) +
            ", memory=" + std::to_string(c.cost.activation_memory));
    }

    const auto& b = res.audit[static_cast<std::size_t>(best)];
    res.chosen = b.candidate;
    res.chosen_cost = b.cost;
    res.chosen_score = b.score;
    return res;
}

}  // namespace photostyle
