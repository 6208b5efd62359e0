#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "argus/threshold.hpp"

namespace argus {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

// Zero denominators yield an empty optional and serialize as "NA"; they are
// never coerced to a number.
struct MetricsReport {
    ConfusionCounts counts;
    std::optional<double> fpr;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

MetricsReport compute_metrics(const ConfusionCounts& counts);

// Positional join of decisions against ground-truth labels (0 benign,
// 1 attack). Throws on length mismatch.
ConfusionCounts count_confusion(const std::vector<Decision>& decisions,
                                const std::vector<int>& labels);

} // namespace argus
