#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"
#include "msa/errors.hpp"
#include "msa/fusion.hpp"

namespace msa {

using json = nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

json config_to_json(const FusionConfig& cfg) {
    json j;
    j["mode"] = fusion_mode_name(cfg.mode);
    j["order"] = {modality_name(cfg.order[0]), modality_name(cfg.order[1]),
                  modality_name(cfg.order[2])};
    j["d_model"] = cfg.d_model;
    j["heads"] = cfg.heads;
    j["num_classes"] = cfg.num_classes;
    j["input_dim"] = cfg.input_dim;
    return j;
}

FusionConfig config_from_json(const json& j) {
    if (!j.is_object()) {
        throw FormatError("model file: 'config' is not an object");
    }
    static const std::set<std::string> known = {
        "mode", "order", "d_model", "heads", "num_classes", "input_dim"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw FormatError("model file: unknown config field '" + key +
                              "'");
        }
    }
    for (const auto& key : known) {
        if (!j.contains(key)) {
            throw FormatError("model file: missing config field '" + key +
                              "'");
        }
    }
    FusionConfig cfg;
    cfg.mode = fusion_mode_from_name(j["mode"].get<std::string>());
    const auto& order = j["order"];
    if (!order.is_array() || order.size() != 3) {
        throw FormatError("model file: 'order' must list three modalities");
    }
    for (std::size_t i = 0; i < 3; ++i) {
        cfg.order[i] = modality_from_name(order[i].get<std::string>());
    }
    cfg.d_model = j["d_model"].get<std::size_t>();
    cfg.heads = j["heads"].get<std::size_t>();
    cfg.num_classes = j["num_classes"].get<std::size_t>();
    cfg.input_dim = j["input_dim"].get<std::size_t>();
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
    return cfg;
}

}  // namespace

void save_model(const ModelParams& params, const std::filesystem::path& path) {
    json j;
    j["format_version"] = kFormatVersion;
    j["config"] = config_to_json(params.config);
    j["params"] = json::array();
    for (const auto& [name, tensor] : params.named_params()) {
        for (double v : tensor.data()) {
            if (!std::isfinite(v)) {
                throw FormatError("save_model: parameter '" + name +
                                  "' contains a non-finite value");
            }
        }
        json entry;
        entry["name"] = name;
        entry["shape"] = tensor.shape();
        entry["data"] = tensor.data();
        j["params"].push_back(std::move(entry));
    }

    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write model file " + path.string());
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("failed while writing model file " + path.string());
    }
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open model file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError("model file " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("format_version") ||
        !j.contains("config") || !j.contains("params")) {
        throw FormatError(
            "model file: expected fields format_version, config, params");
    }
    if (!j["format_version"].is_number_integer() ||
        j["format_version"].get<int>() != kFormatVersion) {
        throw FormatError("model file: unsupported format_version");
    }

    const FusionConfig cfg = config_from_json(j["config"]);
    ModelParams params = ModelParams::init(cfg, 0);
    auto named = params.named_params();

    const auto& entries = j["params"];
    if (!entries.is_array() || entries.size() != named.size()) {
        throw FormatError("model file: expected " +
                          std::to_string(named.size()) +
                          " parameter tensors, found " +
                          std::to_string(entries.size()));
    }
    for (std::size_t i = 0; i < named.size(); ++i) {
        const auto& entry = entries[i];
        auto& [name, tensor] = named[i];
        if (!entry.is_object() || !entry.contains("name") ||
            !entry.contains("shape") || !entry.contains("data")) {
            throw FormatError("model file: parameter entry " +
                              std::to_string(i) +
                              " must have name, shape, data");
        }
        if (entry["name"].get<std::string>() != name) {
            throw FormatError("model file: parameter " + std::to_string(i) +
                              " is '" + entry["name"].get<std::string>() +
                              "', expected '" + name + "'");
        }
        const auto shape = entry["shape"].get<Shape>();
        if (shape != tensor.shape()) {
            throw FormatError("model file: parameter '" + name + "' shape " +
                              shape_str(shape) + " does not match config (" +
                              shape_str(tensor.shape()) + ")");
        }
        auto values = entry["data"].get<std::vector<double>>();
        if (values.size() != tensor.size()) {
            throw FormatError("model file: parameter '" + name +
                              "' has wrong element count");
        }
        for (double v : values) {
            if (!std::isfinite(v)) {
                throw FormatError("model file: parameter '" + name +
                                  "' contains a non-finite value");
            }
        }
        tensor.data() = std::move(values);
    }
    return params;
}

}  // namespace msa
