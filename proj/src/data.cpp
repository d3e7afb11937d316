#include "msa/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "msa/errors.hpp"

namespace msa {

using json = nlohmann::ordered_json;

std::size_t Corpus::utterance_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.utterances.size();
    return n;
}

namespace {

std::vector<double> parse_feature_array(const json& j, const char* field,
                                        std::size_t line_no) {
    if (!j.is_array()) {
        throw ParseError("line " + std::to_string(line_no) + ": field '" +
                         field + "' is not an array");
    }
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) {
            throw ParseError("line " + std::to_string(line_no) + ": field '" +
                             field + "' contains a non-numeric entry");
        }
        out.push_back(v.get<double>());
    }
    return out;
}

UtteranceRecord parse_record(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": record is not an object");
    }
    static const std::set<std::string> known = {
        "video_id", "utterance_index", "label", "text", "audio", "visual"};
    for (const auto& [key, _] : j.items()) {
        if (!known.count(key)) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": unknown field '" + key + "'");
        }
    }
    for (const auto& key : known) {
        if (!j.contains(key)) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": missing field '" + key + "'");
        }
    }

    UtteranceRecord r;
    if (!j["video_id"].is_string()) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": 'video_id' is not a string");
    }
    r.video_id = j["video_id"].get<std::string>();
    if (!j["utterance_index"].is_number_integer() ||
        j["utterance_index"].get<std::int64_t>() < 0) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": 'utterance_index' is not a non-negative integer");
    }
    r.utterance_index = j["utterance_index"].get<std::size_t>();
    if (!j["label"].is_number()) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": 'label' is not a number");
    }
    r.label = std::clamp(j["label"].get<double>(), -3.0, 3.0);
    r.text = parse_feature_array(j["text"], "text", line_no);
    r.audio = parse_feature_array(j["audio"], "audio", line_no);
    r.visual = parse_feature_array(j["visual"], "visual", line_no);
    return r;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open corpus file " + path.string());
    }

    Corpus corpus;
    std::vector<std::string> video_order;
    std::map<std::string, std::vector<UtteranceRecord>> by_video;
    std::set<std::pair<std::string, std::size_t>> seen;

    std::string line;
    std::size_t line_no = 0;
    bool dim_known = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        UtteranceRecord r = parse_record(line, line_no);

        if (r.text.size() != r.audio.size() ||
            r.text.size() != r.visual.size()) {
            throw DimensionError(
                "line " + std::to_string(line_no) +
                ": modality feature lengths differ (text " +
                std::to_string(r.text.size()) + ", audio " +
                std::to_string(r.audio.size()) + ", visual " +
                std::to_string(r.visual.size()) + ")");
        }
        if (!dim_known) {
            corpus.feature_dim = r.text.size();
            dim_known = true;
        } else if (r.text.size() != corpus.feature_dim) {
            throw DimensionError("line " + std::to_string(line_no) +
                                 ": feature dimension " +
                                 std::to_string(r.text.size()) +
                                 " differs from corpus dimension " +
                                 std::to_string(corpus.feature_dim));
        }
        if (!seen.insert({r.video_id, r.utterance_index}).second) {
            throw IntegrityError("line " + std::to_string(line_no) +
                                 ": duplicate record for video '" +
                                 r.video_id + "' utterance " +
                                 std::to_string(r.utterance_index));
        }
        if (!by_video.count(r.video_id)) video_order.push_back(r.video_id);
        by_video[r.video_id].push_back(std::move(r));
    }

    for (const std::string& vid : video_order) {
        auto& records = by_video[vid];
        std::sort(records.begin(), records.end(),
                  [](const UtteranceRecord& a, const UtteranceRecord& b) {
                      return a.utterance_index < b.utterance_index;
                  });
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].utterance_index != i) {
                throw IntegrityError(
                    "video '" + vid + "': utterance indices are not " +
                    "contiguous from 0 (found " +
                    std::to_string(records[i].utterance_index) +
                    " at position " + std::to_string(i) + ")");
            }
        }
        corpus.sequences.push_back({vid, std::move(records)});
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write corpus file " + path.string());
    }
    for (const auto& seq : corpus.sequences) {
        for (const auto& r : seq.utterances) {
            json j;
            j["video_id"] = r.video_id;
            j["utterance_index"] = r.utterance_index;
            j["label"] = r.label;
            j["text"] = r.text;
            j["audio"] = r.audio;
            j["visual"] = r.visual;
            out << j.dump() << '\n';
        }
    }
    if (!out) {
        throw IoError("failed while writing corpus file " + path.string());
    }
}

int bin_label(double score) {
    if (std::isnan(score)) {
        throw ContractError("bin_label: score is NaN");
    }
    const double clamped = std::clamp(score, -3.0, 3.0);
    return static_cast<int>(std::lround(clamped)) + 3;
}

std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ContractError("split: train_fraction must be in (0, 1), got " +
                            std::to_string(train_fraction));
    }
    const std::size_t n = corpus.sequences.size();
    if (n < 2) {
        throw ContractError("split: corpus needs at least 2 sequences, has " +
                            std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(n)));
    std::vector<bool> in_train(n, false);
    for (std::size_t i = 0; i < n_train && i < n; ++i) in_train[order[i]] = true;

    Corpus train, test;
    train.feature_dim = test.feature_dim = corpus.feature_dim;
    train.provenance = test.provenance = corpus.provenance;
    for (std::size_t i = 0; i < n; ++i) {
        (in_train[i] ? train : test).sequences.push_back(corpus.sequences[i]);
    }
    return {std::move(train), std::move(test)};
}

namespace {

std::vector<double> unit_anchor(std::size_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (double& x : v) {
        x = gauss(rng);
        norm_sq += x * x;
    }
    const double inv_norm = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv_norm;
    return v;
}

std::vector<double> noisy_copy(const std::vector<double>& base, double sign,
                               double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
        v[i] = sign * base[i] + sigma * gauss(rng);
    }
    return v;
}

std::string synth_video_id(std::size_t index) {
    std::ostringstream s;
    s << "vid" << std::setw(5) << std::setfill('0') << index;
    return s.str();
}

}  // namespace

Corpus synth_generate(SynthMode mode, std::size_t n_videos,
                      std::size_t utterances_per_video,
                      std::size_t feature_dim, double noise_sigma,
                      std::uint64_t seed) {
    if (n_videos == 0 || utterances_per_video == 0 || feature_dim == 0) {
        throw ContractError("synth_generate: sizes must be positive");
    }
    if (noise_sigma < 0.0) {
        throw ContractError("synth_generate: noise_sigma must be >= 0");
    }

    std::mt19937_64 rng(seed);
    Corpus corpus;
    corpus.feature_dim = feature_dim;
    corpus.provenance = mode == SynthMode::easy ? Provenance::synthetic_easy
                                                : Provenance::synthetic_parity;

    // modality order everywhere: text, audio, visual
    constexpr std::size_t kModalities = 3;
    std::vector<std::vector<std::vector<double>>> anchors(kModalities);
    const std::size_t n_anchors = mode == SynthMode::easy ? 7 : 1;
    for (std::size_t m = 0; m < kModalities; ++m) {
        for (std::size_t a = 0; a < n_anchors; ++a) {
            anchors[m].push_back(unit_anchor(feature_dim, rng));
        }
    }

    std::uniform_int_distribution<int> pick_class(0, 6);
    std::uniform_int_distribution<int> pick_bit(0, 1);

    for (std::size_t v = 0; v < n_videos; ++v) {
        SequenceSample seq;
        seq.video_id = synth_video_id(v);
        for (std::size_t t = 0; t < utterances_per_video; ++t) {
            UtteranceRecord r;
            r.video_id = seq.video_id;
            r.utterance_index = t;
            if (mode == SynthMode::easy) {
                const int k = pick_class(rng);
                r.label = static_cast<double>(k - 3);
                r.text = noisy_copy(anchors[0][k], 1.0, noise_sigma, rng);
                r.audio = noisy_copy(anchors[1][k], 1.0, noise_sigma, rng);
                r.visual = noisy_copy(anchors[2][k], 1.0, noise_sigma, rng);
            } else {
                const double s_t = pick_bit(rng) ? 1.0 : -1.0;
                const double s_a = pick_bit(rng) ? 1.0 : -1.0;
                const double s_v = pick_bit(rng) ? 1.0 : -1.0;
                r.label = s_t * s_a * s_v > 0.0 ? 3.0 : -3.0;
                r.text = noisy_copy(anchors[0][0], s_t, noise_sigma, rng);
                r.audio = noisy_copy(anchors[1][0], s_a, noise_sigma, rng);
                r.visual = noisy_copy(anchors[2][0], s_v, noise_sigma, rng);
            }
            seq.utterances.push_back(std::move(r));
        }
        corpus.sequences.push_back(std::move(seq));
    }
    return corpus;
}

}  // namespace msa
