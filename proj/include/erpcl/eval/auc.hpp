#pragma once

#include <cstdint>
#include <span>

namespace erpcl {

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (positive, negative) pairs ranked correctly, ties counting one half.
/// Labels are 0/1; throws MetricError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

}  // namespace erpcl
