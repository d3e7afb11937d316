#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>

namespace msa {

inline constexpr std::size_t kNumClasses = 7;

// rows = true class, columns = predicted class
struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

    std::uint64_t total() const;
    std::uint64_t row_sum(std::size_t c) const;   // true instances of c
    std::uint64_t col_sum(std::size_t c) const;   // predictions of c
};

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::uint64_t support = 0;
};

struct MetricsReport {
    double accuracy = 0.0;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;
    std::array<ClassMetrics, kNumClasses> per_class{};
};

ConfusionMatrix confusion(std::span<const int> preds,
                          std::span<const int> labels);

// Macro averages are unweighted class means. A class with no predictions has
// precision 0; a class with no true instances is excluded from the macro
// recall and F1 means (and from macro precision too unless it was predicted).
MetricsReport report(const ConfusionMatrix& cm);

std::string render_report(const ConfusionMatrix& cm, const MetricsReport& rep);

}  // namespace msa
