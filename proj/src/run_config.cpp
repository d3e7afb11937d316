#include "msa/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "msa/errors.hpp"

namespace msa {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    std::size_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + key +
                          "': expected a non-negative integer, got '" + value +
                          "'");
    }
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    double out = 0.0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) {
        throw ConfigError("config key '" + key + "': expected a number, got '" +
                          value + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" +
                      value + "'");
}

}  // namespace

std::array<Modality, 3> parse_order(const std::string& value) {
    std::array<Modality, 3> order{};
    std::stringstream ss(value);
    std::string part;
    std::size_t i = 0;
    while (std::getline(ss, part, ',')) {
        if (i >= 3) {
            throw ConfigError("order '" + value +
                              "': expected exactly three modalities");
        }
        order[i++] = modality_from_name(trim(part));
    }
    if (i != 3 || order[0] == order[1] || order[0] == order[2] ||
        order[1] == order[2]) {
        throw ConfigError("order '" + value +
                          "': expected a permutation of text,audio,visual");
    }
    return order;
}

void RunConfig::apply(const std::string& key, const std::string& value) {
    if (key == "fusion_mode") {
        fusion.mode = fusion_mode_from_name(value);
    } else if (key == "order") {
        fusion.order = parse_order(value);
    } else if (key == "d_model") {
        fusion.d_model = parse_size(key, value);
    } else if (key == "heads") {
        fusion.heads = parse_size(key, value);
    } else if (key == "epochs") {
        train.epochs = parse_size(key, value);
    } else if (key == "learning_rate") {
        train.learning_rate = parse_double(key, value);
    } else if (key == "adam_beta1") {
        train.adam_beta1 = parse_double(key, value);
    } else if (key == "adam_beta2") {
        train.adam_beta2 = parse_double(key, value);
    } else if (key == "adam_epsilon") {
        train.adam_epsilon = parse_double(key, value);
    } else if (key == "seed") {
        train.seed = parse_size(key, value);
    } else if (key == "shuffle_each_epoch") {
        train.shuffle_each_epoch = parse_bool(key, value);
    } else if (key == "split") {
        split_fraction = parse_double(key, value);
        if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
            throw ConfigError("config key 'split': must lie in (0, 1), got '" +
                              value + "'");
        }
    } else if (key == "data") {
        data = value;
    } else if (key == "model_out") {
        model_out = value;
    } else if (key == "history_out") {
        history_out = value;
    } else if (key == "test_out") {
        test_out = value;
    } else {
        throw ConfigError("unknown config key '" + key + "'");
    }
}

std::vector<ConfigLine> read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::vector<ConfigLine> pairs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config file " + path.string() + " line " +
                              std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        pairs.push_back({trim(stripped.substr(0, eq)),
                         trim(stripped.substr(eq + 1)), lineno});
    }
    return pairs;
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
    for (const auto& entry : read_config_file(path)) {
        try {
            cfg.apply(entry.key, entry.value);
        } catch (const ConfigError& e) {
            throw ConfigError("config file " + path.string() + " line " +
                              std::to_string(entry.lineno) + ": " + e.what());
        }
    }
}

}  // namespace msa
