#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "firescope/domain.hpp"
#include "firescope/errors.hpp"

namespace firescope {

/// 3x3 counts indexed [truth][prediction], rows and columns in the fixed
/// order No Damage, Affected, Destroyed.
class ConfusionMatrix {
public:
    void add(AssessmentLabel truth, AssessmentLabel pred, std::int64_t n = 1) {
        counts_[index(truth)][index(pred)] += n;
    }

    std::int64_t at(AssessmentLabel truth, AssessmentLabel pred) const {
        return counts_[index(truth)][index(pred)];
    }

    std::int64_t total() const {
        std::int64_t t = 0;
        for (const auto& row : counts_) {
            for (auto v : row) t += v;
        }
        return t;
    }

    std::int64_t trace() const {
        std::int64_t t = 0;
        for (std::size_t i = 0; i < 3; ++i) t += counts_[i][i];
        return t;
    }

    /// Row sum: how many records truly belong to the class.
    std::int64_t support(AssessmentLabel l) const {
        std::int64_t t = 0;
        for (auto v : counts_[index(l)]) t += v;
        return t;
    }

    /// Column sum: how many records were predicted as the class.
    std::int64_t predicted(AssessmentLabel l) const {
        std::int64_t t = 0;
        for (std::size_t i = 0; i < 3; ++i) t += counts_[i][index(l)];
        return t;
    }

    static std::size_t index(AssessmentLabel l) { return static_cast<std::size_t>(l); }

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::array<std::array<std::int64_t, 3>, 3> counts_{};
};

struct LabelPair {
    AssessmentLabel truth;
    AssessmentLabel pred;
};

inline ConfusionMatrix build_confusion(const std::vector<LabelPair>& pairs) {
    ConfusionMatrix cm;
    for (const auto& p : pairs) cm.add(p.truth, p.pred);
    return cm;
}

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    /// True when a 0/0 convention fired (nothing predicted and/or no support).
    bool degenerate = false;
};

/// Per-class precision TP/(TP+FP), recall TP/(TP+FN) and their harmonic
/// mean. 0/0 is defined as 0 and flagged.
inline ClassMetrics class_metrics(const ConfusionMatrix& cm, AssessmentLabel label) {
    ClassMetrics m;
    const double tp = static_cast<double>(cm.at(label, label));
    const std::int64_t predicted = cm.predicted(label);
    m.support = cm.support(label);
    if (predicted == 0) {
        m.precision = 0.0;
        m.degenerate = true;
    } else {
        m.precision = tp / static_cast<double>(predicted);
    }
    if (m.support == 0) {
        m.recall = 0.0;
        m.degenerate = true;
    } else {
        m.recall = tp / static_cast<double>(m.support);
    }
    m.f1 = (m.precision + m.recall) == 0.0
               ? 0.0
               : 2.0 * m.precision * m.recall / (m.precision + m.recall);
    return m;
}

struct CorrectCount {
    std::int64_t correct = 0;
    std::int64_t total = 0;
};

struct EvaluationReport {
    std::map<AssessmentLabel, ClassMetrics> per_class;
    double accuracy = 0.0;
    double micro_f1 = 0.0;  // equals accuracy for single-label multiclass
    double macro_f1 = 0.0;
    std::map<AssessmentLabel, CorrectCount> pct_correct;
    std::int64_t total = 0;
};

inline EvaluationReport summarize(const ConfusionMatrix& cm) {
    EvaluationReport report;
    report.total = cm.total();
    if (report.total == 0) throw EmptyEvaluation();

    report.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(report.total);

    // Pooled counts: every off-diagonal record is simultaneously one FP and
    // one FN, so micro precision == micro recall == accuracy.
    const double pooled_tp = static_cast<double>(cm.trace());
    const double pooled_fp = static_cast<double>(report.total - cm.trace());
    const double pooled_fn = pooled_fp;
    const double micro_p = pooled_tp / (pooled_tp + pooled_fp);
    const double micro_r = pooled_tp / (pooled_tp + pooled_fn);
    report.micro_f1 =
        (micro_p + micro_r) == 0.0 ? 0.0 : 2.0 * micro_p * micro_r / (micro_p + micro_r);

    double f1_sum = 0.0;
    for (AssessmentLabel l : kAllLabels) {
        const auto m = class_metrics(cm, l);
        f1_sum += m.f1;
        report.per_class[l] = m;
        report.pct_correct[l] = {cm.at(l, l), m.support};
    }
    report.macro_f1 = f1_sum / 3.0;
    return report;
}

// ---------------------------------------------------------------------------
// McNemar paired test
// ---------------------------------------------------------------------------

/// Upper-tail probability of the chi-square distribution with one degree of
/// freedom: P(X >= x) = erfc(sqrt(x/2)).
inline double chi_square_df1_sf(double x) {
    if (x < 0.0) throw Error("chi-square statistic must be >= 0");
    return std::erfc(std::sqrt(x / 2.0));
}

enum class McNemarMethod {
    /// (|b-c|-1)^2 / (b+c) against chi-square df 1.
    ContinuityCorrected,
    /// Two-sided exact binomial on the disagreements; preferable when
    /// b+c < 25, where the chi-square approximation is unreliable.
    ExactBinomial,
};

struct McNemarCells {
    std::int64_t both_correct = 0;       // a
    std::int64_t only_first_correct = 0;   // b
    std::int64_t only_second_correct = 0;  // c
    std::int64_t both_wrong = 0;         // d

    std::int64_t total() const {
        return both_correct + only_first_correct + only_second_correct + both_wrong;
    }
};

struct McNemarResult {
    McNemarCells cells;
    /// Absent when b+c == 0 (no disagreements, nothing to test) and for the
    /// exact method, which has no chi-square statistic.
    std::optional<double> statistic;
    double p_value = 1.0;
    bool degenerate = false;
    McNemarMethod method = McNemarMethod::ContinuityCorrected;
};

namespace detail {

/// Two-sided exact binomial p for disagreement counts: X ~ Bin(b+c, 1/2),
/// p = min(1, 2 P(X <= min(b,c))). Log-space to survive large n.
inline double exact_binomial_p(std::int64_t b, std::int64_t c) {
    const std::int64_t n = b + c;
    if (n == 0) return 1.0;
    const std::int64_t k = std::min(b, c);
    const double log_half_n = static_cast<double>(n) * std::log(0.5);
    double tail = 0.0;
    for (std::int64_t i = 0; i <= k; ++i) {
        const double log_term = std::lgamma(static_cast<double>(n) + 1.0) -
                                std::lgamma(static_cast<double>(i) + 1.0) -
                                std::lgamma(static_cast<double>(n - i) + 1.0) + log_half_n;
        tail += std::exp(log_term);
    }
    return std::min(1.0, 2.0 * tail);
}

}  // namespace detail

/// Test from disagreement counts alone. Symmetric in (b, c); the concordant
/// cells never enter the statistic.
inline McNemarResult mcnemar_from_cells(const McNemarCells& cells,
                                        McNemarMethod method = McNemarMethod::ContinuityCorrected) {
    McNemarResult result;
    result.cells = cells;
    result.method = method;
    const std::int64_t b = cells.only_first_correct;
    const std::int64_t c = cells.only_second_correct;
    if (b + c == 0) {
        // no disagreements: no evidence of differing error rates
        result.degenerate = true;
        result.p_value = 1.0;
        return result;
    }
    if (method == McNemarMethod::ContinuityCorrected) {
        const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
        const double stat = diff * diff / static_cast<double>(b + c);
        result.statistic = stat;
        result.p_value = chi_square_df1_sf(stat);
    } else {
        result.p_value = detail::exact_binomial_p(b, c);
    }
    return result;
}

/// Per-category paired test over aligned prediction lists. Scope restricts
/// to records whose ground truth is the category; a prediction is "correct"
/// when it names that category.
inline McNemarResult mcnemar_category(const std::vector<AssessmentLabel>& truths,
                                      const std::vector<AssessmentLabel>& preds_first,
                                      const std::vector<AssessmentLabel>& preds_second,
                                      AssessmentLabel category,
                                      McNemarMethod method = McNemarMethod::ContinuityCorrected) {
    if (truths.size() != preds_first.size() || truths.size() != preds_second.size()) {
        throw PairingError("prediction lists must align with truths");
    }
    McNemarCells cells;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        if (truths[i] != category) continue;
        const bool first_ok = preds_first[i] == category;
        const bool second_ok = preds_second[i] == category;
        if (first_ok && second_ok) ++cells.both_correct;
        else if (first_ok) ++cells.only_first_correct;
        else if (second_ok) ++cells.only_second_correct;
        else ++cells.both_wrong;
    }
    return mcnemar_from_cells(cells, method);
}

}  // namespace firescope
