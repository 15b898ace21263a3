#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "photostyle/core/error.hpp"
#include "photostyle/corpus/manifest.hpp"
#include "photostyle/nn/backbone.hpp"

namespace photostyle {

// Self-describing JSON checkpoints. Every parameter array is stored with its
// name and shape; loading verifies the stored config reconstructs the exact
// same parameter layout and fails loudly on any mismatch.

inline nlohmann::json backbone_config_to_json(const BackboneConfig& c) {
    return {{"family", to_string(c.family)},
            {"depth_blocks", c.depth_blocks},
            {"width_factor", c.width_factor},
            {"cardinality", c.cardinality},
            {"resolution_factor", c.resolution_factor},
            {"base_channels", c.base_channels},
            {"num_classes", c.num_classes},
            {"stage_count", c.stage_count},
            {"input_channels", c.input_channels},
            {"activation", to_string(c.activation)}};
}

inline BackboneConfig backbone_config_from_json(const nlohmann::json& j) {
    BackboneConfig c;
    c.family = family_from_string(j.at("family").get<std::string>());
    c.depth_blocks = j.at("depth_blocks").get<int>();
    c.width_factor = j.at("width_factor").get<double>();
    c.cardinality = j.at("cardinality").get<int>();
    c.resolution_factor = j.at("resolution_factor").get<double>();
    c.base_channels = j.at("base_channels").get<int>();
    c.num_classes = j.at("num_classes").get<int>();
    c.stage_count = j.at("stage_count").get<int>();
    c.input_channels = j.at("input_channels").get<int>();
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    c.validate();
    return c;
}

namespace detail {

inline nlohmann::json tensor_entry(const std::string& name, const Tensor& t) {
    return {{"name", name}, {"shape", t.shape()}, {"data", t.vec()}};
}

inline void load_tensor_entry(const nlohmann::json& entry, const std::string& name,
                              Tensor& into, const std::string& path) {
    if (entry.at("name").get<std::string>() != name)
        throw ValidationError("checkpoint " + path + ": parameter order mismatch, expected '" +
                              name + "', found '" + entry.at("name").get<std::string>() + "'");
    const auto shape = entry.at("shape").get<std::vector<int>>();
    if (shape != into.shape())
        throw ValidationError("checkpoint " + path + ": shape mismatch for '" + name + "'");
    const auto data = entry.at("data").get<std::vector<double>>();
    if (data.size() != into.size())
        throw ValidationError("checkpoint " + path + ": data size mismatch for '" + name + "'");
    into.vec() = data;
}

}  // namespace detail

inline void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeError("cannot write " + path);
    out << j.dump(2) << '\n';
    if (!out) throw RuntimeError("short write to " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw RuntimeError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline nlohmann::json backbone_state_to_json(Backbone& net, std::uint64_t seed,
                                             const std::vector<StyleLabel>* labels = nullptr) {
    nlohmann::json j;
    j["format"] = "photostyle.checkpoint.v1";
    j["kind"] = "classifier";
    j["config"] = backbone_config_to_json(net.config());
    j["seed"] = seed;
    auto params = nlohmann::json::array();
    for (auto* p : net.params()) params.push_back(detail::tensor_entry(p->name, p->value));
    j["params"] = params;
    auto buffers = nlohmann::json::array();
    for (auto& [name, t] : net.buffers()) buffers.push_back(detail::tensor_entry(name, *t));
    j["buffers"] = buffers;
    if (labels) {
        auto arr = nlohmann::json::array();
        for (const auto& l : *labels) arr.push_back({{"id", l.id}, {"name", l.name}});
        j["labels"] = arr;
    }
    return j;
}

inline void load_backbone_state(Backbone& net, const nlohmann::json& j,
                                const std::string& path) {
    if (j.value("format", "") != "photostyle.checkpoint.v1")
        throw ValidationError("checkpoint " + path + ": unrecognized format");
    const BackboneConfig stored = backbone_config_from_json(j.at("config"));
    const nlohmann::json want = backbone_config_to_json(net.config());
    if (backbone_config_to_json(stored) != want)
        throw ValidationError("checkpoint " + path + ": config mismatch; stored " +
                              j.at("config").dump() + ", requested " + want.dump());
    auto params = net.params();
    const auto& stored_params = j.at("params");
    if (stored_params.size() != params.size())
        throw ValidationError("checkpoint " + path + ": parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i)
        detail::load_tensor_entry(stored_params[i], params[i]->name, params[i]->value, path);
    auto buffers = net.buffers();
    const auto& stored_buffers = j.at("buffers");
    if (stored_buffers.size() != buffers.size())
        throw ValidationError("checkpoint " + path + ": buffer count mismatch");
    for (std::size_t i = 0; i < buffers.size(); ++i)
        detail::load_tensor_entry(stored_buffers[i], buffers[i].first, *buffers[i].second,
                                  path);
}

}  // namespace photostyle
