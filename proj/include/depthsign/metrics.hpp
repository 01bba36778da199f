#ifndef DEPTHSIGN_METRICS_HPP
#define DEPTHSIGN_METRICS_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <vector>

#include "depthsign/errors.hpp"
#include "depthsign/matrix.hpp"

namespace depthsign {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    std::size_t class_count = 0;
    std::vector<std::uint64_t> counts; // class_count^2, row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::size_t classes)
        : class_count(classes), counts(classes * classes, 0) {}

    std::uint64_t& at(std::size_t true_class, std::size_t predicted) {
        return counts[true_class * class_count + predicted];
    }
    std::uint64_t at(std::size_t true_class, std::size_t predicted) const {
        return counts[true_class * class_count + predicted];
    }

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto v : counts) t += v;
        return t;
    }
};

inline ConfusionMatrix confusion(std::span<const std::size_t> true_labels,
                                 std::span<const std::size_t> pred_labels,
                                 std::size_t class_count) {
    if (true_labels.size() != pred_labels.size())
        throw ParameterError("confusion: " + std::to_string(true_labels.size()) +
                             " true labels vs " + std::to_string(pred_labels.size()) +
                             " predictions");
    ConfusionMatrix cm(class_count);
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        if (true_labels[i] >= class_count || pred_labels[i] >= class_count)
            throw ParameterError("confusion: label out of range at sample " +
                                 std::to_string(i));
        ++cm.at(true_labels[i], pred_labels[i]);
    }
    return cm;
}

struct BinaryCounts {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::uint64_t total() const { return tp + tn + fp + fn; }
};

/// One-vs-rest reduction of a confusion matrix for the given positive class.
inline BinaryCounts binarize(const ConfusionMatrix& cm, std::size_t positive_class) {
    if (positive_class >= cm.class_count)
        throw ParameterError("binarize: class " + std::to_string(positive_class) +
                             " out of range for " + std::to_string(cm.class_count) +
                             " classes");
    BinaryCounts bc;
    bc.tp = cm.at(positive_class, positive_class);
    for (std::size_t j = 0; j < cm.class_count; ++j) {
        if (j == positive_class) continue;
        bc.fn += cm.at(positive_class, j);
        bc.fp += cm.at(j, positive_class);
    }
    bc.tn = cm.total() - bc.tp - bc.fp - bc.fn;
    return bc;
}

/// ACC = (TP + TN) / (TP + FN + FP + TN).
inline double acc(const BinaryCounts& bc) {
    const std::uint64_t total = bc.total();
    if (total == 0) throw UndefinedMetricError("acc: no samples");
    return static_cast<double>(bc.tp + bc.tn) / static_cast<double>(total);
}

/// BER = (FP/(TN+FP) + FN/(FN+TP)) / 2; an empty rate (0/0) contributes 0.
inline double ber(const BinaryCounts& bc) {
    double fp_rate = 0.0, fn_rate = 0.0;
    if (bc.tn + bc.fp > 0)
        fp_rate = static_cast<double>(bc.fp) / static_cast<double>(bc.tn + bc.fp);
    if (bc.fn + bc.tp > 0)
        fn_rate = static_cast<double>(bc.fn) / static_cast<double>(bc.fn + bc.tp);
    return 0.5 * (fp_rate + fn_rate);
}

/// F1 = 2 * precision * recall / (precision + recall); zero when TP = 0.
inline double f1(const BinaryCounts& bc) {
    if (bc.tp + bc.fp + bc.fn == 0)
        throw UndefinedMetricError("f1: no positive samples or predictions");
    if (bc.tp == 0) return 0.0;
    const double precision = static_cast<double>(bc.tp) / static_cast<double>(bc.tp + bc.fp);
    const double recall = static_cast<double>(bc.tp) / static_cast<double>(bc.tp + bc.fn);
    return 2.0 * (precision * recall) / (precision + recall);
}

/// Root-mean-square error of y against d, normalized by the population
/// standard deviation of d.
inline double nrmse(const Matrix& y, const Matrix& d) {
    if (!y.same_shape(d))
        throw ShapeError("nrmse: shapes " + y.shape_str() + " vs " + d.shape_str());
    const std::size_t n = d.size();
    if (n == 0) throw UndefinedMetricError("nrmse: empty inputs");
    double mean = 0.0;
    for (double v : d.data()) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : d.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    const double sigma = std::sqrt(var);
    if (sigma == 0.0) throw UndefinedMetricError("nrmse: targets are constant");
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double diff = y.data()[i] - d.data()[i];
        sq += diff * diff;
    }
    return std::sqrt(sq / static_cast<double>(n)) / sigma;
}

// Macro-averaged one-vs-rest reductions; classes are weighted equally.

inline double macro_acc(const ConfusionMatrix& cm) {
    double total = 0.0;
    for (std::size_t c = 0; c < cm.class_count; ++c) total += acc(binarize(cm, c));
    return total / static_cast<double>(cm.class_count);
}

inline double macro_ber(const ConfusionMatrix& cm) {
    double total = 0.0;
    for (std::size_t c = 0; c < cm.class_count; ++c) total += ber(binarize(cm, c));
    return total / static_cast<double>(cm.class_count);
}

inline double macro_f1(const ConfusionMatrix& cm) {
    double total = 0.0;
    for (std::size_t c = 0; c < cm.class_count; ++c) total += f1(binarize(cm, c));
    return total / static_cast<double>(cm.class_count);
}

// -- Reporting ----------------------------------------------------------------

struct SubjectMetrics {
    double nrmse = 0.0;
    double acc = 0.0;
    double f1 = 0.0;
    double ber = 0.0;
};

/// Per-subject metric rows plus their arithmetic mean.
struct EvalReport {
    std::vector<SubjectMetrics> subjects;
    SubjectMetrics avg;
};

/// Everything needed to score one subject: the confusion matrix of its
/// validation predictions plus the posterior/target matrices for NRMSE.
struct SubjectEval {
    ConfusionMatrix cm;
    Matrix posteriors; // y
    Matrix targets;    // d (one-hot)
};

inline EvalReport report(std::span<const SubjectEval> per_subject) {
    if (per_subject.empty()) throw ParameterError("report: need at least one subject");
    EvalReport rep;
    for (const auto& subject : per_subject) {
        SubjectMetrics m;
        try {
            m.nrmse = nrmse(subject.posteriors, subject.targets);
            m.acc = macro_acc(subject.cm);
            m.f1 = macro_f1(subject.cm);
            m.ber = macro_ber(subject.cm);
        } catch (const UndefinedMetricError& e) {
            throw UndefinedMetricError("subject " + std::to_string(rep.subjects.size() + 1) +
                                       ": " + e.what());
        }
        rep.subjects.push_back(m);
    }
    const double n = static_cast<double>(rep.subjects.size());
    for (const auto& m : rep.subjects) {
        rep.avg.nrmse += m.nrmse;
        rep.avg.acc += m.acc;
        rep.avg.f1 += m.f1;
        rep.avg.ber += m.ber;
    }
    rep.avg.nrmse /= n;
    rep.avg.acc /= n;
    rep.avg.f1 /= n;
    rep.avg.ber /= n;
    return rep;
}

namespace detail {
inline double metric_field(const SubjectMetrics& m, std::size_t row) {
    switch (row) {
        case 0: return m.nrmse;
        case 1: return m.acc;
        case 2: return m.f1;
        default: return m.ber;
    }
}
constexpr const char* kMetricNames[4] = {"NRMSE", "ACC", "F1S", "BER"};
constexpr const char* kMetricCsvNames[4] = {"nrmse", "acc", "f1s", "ber"};
} // namespace detail

/// Aligned metric x subject table, one row per metric, SU columns plus AVG.
inline std::string format_report_table(const EvalReport& rep) {
    std::string out = "Metric";
    char buf[64];
    for (std::size_t s = 0; s < rep.subjects.size(); ++s) {
        std::snprintf(buf, sizeof(buf), "%11s", ("SU" + std::to_string(s + 1)).c_str());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%11s", "AVG");
    out += buf;
    out += "\n";
    for (std::size_t row = 0; row < 4; ++row) {
        std::snprintf(buf, sizeof(buf), "%-6s", detail::kMetricNames[row]);
        out += buf;
        for (const auto& m : rep.subjects) {
            std::snprintf(buf, sizeof(buf), "%11.6f", detail::metric_field(m, row));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), "%11.6f", detail::metric_field(rep.avg, row));
        out += buf;
        out += "\n";
    }
    return out;
}

/// CSV form, full double precision: `metric,su1,...,suN,avg`.
inline std::string report_to_csv(const EvalReport& rep) {
    std::string out = "metric";
    for (std::size_t s = 0; s < rep.subjects.size(); ++s)
        out += ",su" + std::to_string(s + 1);
    out += ",avg\n";
    char buf[64];
    for (std::size_t row = 0; row < 4; ++row) {
        out += detail::kMetricCsvNames[row];
        for (const auto& m : rep.subjects) {
            std::snprintf(buf, sizeof(buf), ",%.17g", detail::metric_field(m, row));
            out += buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g", detail::metric_field(rep.avg, row));
        out += buf;
        out += "\n";
    }
    return out;
}

/// Parse a report CSV back (used by the plot-data command).
inline EvalReport parse_report_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    for (std::size_t pos = 0; pos <= text.size();) {
        const std::size_t end = text.find('\n', pos);
        line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) {
            std::vector<std::string> cells;
            std::size_t cell_start = 0;
            for (std::size_t i = 0; i <= line.size(); ++i) {
                if (i == line.size() || line[i] == ',') {
                    cells.push_back(line.substr(cell_start, i - cell_start));
                    cell_start = i + 1;
                }
            }
            rows.push_back(std::move(cells));
        }
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    if (rows.size() != 5)
        throw FormatError("report csv: expected header plus 4 metric rows, got " +
                          std::to_string(rows.size()));
    const std::size_t columns = rows[0].size();
    if (columns < 3 || rows[0][0] != "metric" || rows[0].back() != "avg")
        throw FormatError("report csv: malformed header");
    const std::size_t n_subjects = columns - 2;

    EvalReport rep;
    rep.subjects.resize(n_subjects);
    for (std::size_t row = 0; row < 4; ++row) {
        const auto& cells = rows[row + 1];
        if (cells.size() != columns || cells[0] != detail::kMetricCsvNames[row])
            throw FormatError("report csv: malformed row for " +
                              std::string(detail::kMetricNames[row]));
        auto parse = [&](const std::string& s) {
            try {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used != s.size()) throw FormatError("report csv: bad number " + s);
                return v;
            } catch (const std::logic_error&) {
                throw FormatError("report csv: bad number " + s);
            }
        };
        for (std::size_t s = 0; s < n_subjects; ++s) {
            const double v = parse(cells[s + 1]);
            switch (row) {
                case 0: rep.subjects[s].nrmse = v; break;
                case 1: rep.subjects[s].acc = v; break;
                case 2: rep.subjects[s].f1 = v; break;
                default: rep.subjects[s].ber = v; break;
            }
        }
        const double v = parse(cells.back());
        switch (row) {
            case 0: rep.avg.nrmse = v; break;
            case 1: rep.avg.acc = v; break;
            case 2: rep.avg.f1 = v; break;
            default: rep.avg.ber = v; break;
        }
    }
    return rep;
}

} // namespace depthsign

#endif // DEPTHSIGN_METRICS_HPP
