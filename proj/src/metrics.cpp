#include "msa/metrics.hpp"

#include <iomanip>
#include <sstream>

#include "msa/errors.hpp"

namespace msa {

std::uint64_t ConfusionMatrix::total() const {
    std::uint64_t sum = 0;
    for (const auto& row : counts)
        for (std::uint64_t c : row) sum += c;
    return sum;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
    std::uint64_t sum = 0;
    for (std::uint64_t v : counts[c]) sum += v;
    return sum;
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const {
    std::uint64_t sum = 0;
    for (const auto& row : counts) sum += row[c];
    return sum;
}

ConfusionMatrix confusion(std::span<const int> preds,
                          std::span<const int> labels) {
    if (preds.empty() || preds.size() != labels.size()) {
        throw ContractError("confusion: " + std::to_string(preds.size()) +
                            " predictions vs " + std::to_string(labels.size()) +
                            " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const int p = preds[i];
        const int l = labels[i];
        if (p < 0 || p >= static_cast<int>(kNumClasses) || l < 0 ||
            l >= static_cast<int>(kNumClasses)) {
            throw IndexError("confusion: class out of range at index " +
                             std::to_string(i) + " (pred " +
                             std::to_string(p) + ", label " +
                             std::to_string(l) + ")");
        }
        ++cm.counts[static_cast<std::size_t>(l)][static_cast<std::size_t>(p)];
    }
    return cm;
}

MetricsReport report(const ConfusionMatrix& cm) {
    const std::uint64_t total = cm.total();
    if (total == 0) {
        throw ContractError("report: empty confusion matrix");
    }

    MetricsReport rep;
    std::uint64_t trace = 0;
    double prec_sum = 0.0, rec_sum = 0.0, f1_sum = 0.0;
    std::size_t prec_n = 0, rec_n = 0;

    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const std::uint64_t tp = cm.counts[c][c];
        const std::uint64_t support = cm.row_sum(c);
        const std::uint64_t predicted = cm.col_sum(c);
        trace += tp;

        ClassMetrics& m = rep.per_class[c];
        m.support = support;
        m.precision = predicted > 0 ? static_cast<double>(tp) /
                                          static_cast<double>(predicted)
                                    : 0.0;
        m.recall = support > 0 ? static_cast<double>(tp) /
                                     static_cast<double>(support)
                               : 0.0;
        m.f1 = (m.precision + m.recall) > 0.0
                   ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                   : 0.0;

        if (support > 0 || predicted > 0) {
            prec_sum += m.precision;
            ++prec_n;
        }
        if (support > 0) {
            rec_sum += m.recall;
            f1_sum += m.f1;
            ++rec_n;
        }
    }

    rep.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    rep.macro_precision = prec_n > 0 ? prec_sum / static_cast<double>(prec_n)
                                     : 0.0;
    rep.macro_recall = rec_n > 0 ? rec_sum / static_cast<double>(rec_n) : 0.0;
    rep.macro_f1 = rec_n > 0 ? f1_sum / static_cast<double>(rec_n) : 0.0;
    return rep;
}

std::string render_report(const ConfusionMatrix& cm,
                          const MetricsReport& rep) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(6);
    out << "Accuracy:          " << rep.accuracy << '\n';
    out << "Precision (macro): " << rep.macro_precision << '\n';
    out << "Recall (macro):    " << rep.macro_recall << '\n';
    out << "F1 Score (macro):  " << rep.macro_f1 << '\n';
    out << '\n';
    out << "class  precision  recall    f1        support\n";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const ClassMetrics& m = rep.per_class[c];
        out << std::left << std::setw(7) << c << std::setw(11) << m.precision
            << std::setw(10) << m.recall << std::setw(10) << m.f1
            << m.support << '\n';
    }
    out << '\n';
    out << "confusion matrix (rows = true class, columns = predicted)\n";
    out << "      ";
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        out << std::right << std::setw(7) << c;
    }
    out << '\n';
    for (std::size_t r = 0; r < kNumClasses; ++r) {
        out << std::left << std::setw(6) << r;
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            out << std::right << std::setw(7) << cm.counts[r][c];
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace msa
