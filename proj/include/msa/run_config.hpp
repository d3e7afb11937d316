#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "msa/fusion.hpp"
#include "msa/training.hpp"

namespace msa {

// Everything a train run needs, assembled from an optional `key = value`
// config file plus command-line flags (flags win). The key set is closed;
// anything else is a ConfigError naming the key.
struct RunConfig {
    FusionConfig fusion;
    TrainConfig train;
    double split_fraction = 0.8;
    std::string data;
    std::string model_out = "model.json";
    std::string history_out = "history.csv";
    std::string test_out;  // empty: held-out corpus is not persisted

    void apply(const std::string& key, const std::string& value);
};

// Comma-separated permutation of text,audio,visual.
std::array<Modality, 3> parse_order(const std::string& value);

// One `key = value` line of a config file, with its 1-based line number so
// errors can point back at the source.
struct ConfigLine {
    std::string key;
    std::string value;
    std::size_t lineno = 0;
};

// Line-oriented `key = value` pairs; blank lines and #-comments skipped.
// Keys are validated by RunConfig::apply, not here.
std::vector<ConfigLine> read_config_file(const std::filesystem::path& path);

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

}  // namespace msa
