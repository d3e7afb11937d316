#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace msa {

// One utterance: aligned per-modality feature vectors plus a continuous
// sentiment label in [-3, +3].
struct UtteranceRecord {
    std::string video_id;
    std::size_t utterance_index = 0;
    double label = 0.0;
    std::vector<double> text;
    std::vector<double> audio;
    std::vector<double> visual;

    bool operator==(const UtteranceRecord&) const = default;
};

// All utterances of one video, ordered 0..T-1 with no gaps.
struct SequenceSample {
    std::string video_id;
    std::vector<UtteranceRecord> utterances;

    bool operator==(const SequenceSample&) const = default;
};

enum class Provenance { loaded, synthetic_easy, synthetic_parity };

struct Corpus {
    std::size_t feature_dim = 0;
    std::vector<SequenceSample> sequences;
    Provenance provenance = Provenance::loaded;

    std::size_t utterance_count() const;
};

// Reads a line-delimited corpus file: one JSON object per line with exactly
// the fields video_id, utterance_index, label, text, audio, visual. Records
// are grouped by video (in first-appearance order) and sorted by
// utterance_index; labels are clamped to [-3, +3].
Corpus load_corpus(const std::filesystem::path& path);

// Emits the same line format load_corpus reads, with round-trip-exact
// numbers.
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

// Clamp to [-3, +3], round half away from zero, shift to 0..6.
int bin_label(double score);

// Seeded split at video granularity; train receives
// round(train_fraction * #sequences) videos. Disjoint, exhaustive,
// deterministic per seed.
std::pair<Corpus, Corpus> split(const Corpus& corpus, double train_fraction,
                                std::uint64_t seed);

enum class SynthMode { easy, parity };

// Seeded synthetic corpora.
//   easy:   7 unit-norm anchors per modality; each utterance picks a class k,
//           features = anchor + Gaussian noise, label = k - 3.
//   parity: one anchor per modality; features = (+-1) * anchor + noise,
//           label = +3 when the three signs multiply to +1, else -3. No
//           single modality (or pair) carries label information.
Corpus synth_generate(SynthMode mode, std::size_t n_videos,
                      std::size_t utterances_per_video,
                      std::size_t feature_dim, double noise_sigma,
                      std::uint64_t seed);

}  // namespace msa
