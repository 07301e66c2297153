#include "erpcl/eval/auc.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "erpcl/error.hpp"

namespace erpcl {

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw MetricError("auc: scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum of positives, with tied groups sharing the mean rank.
  // Ranks are 1-based; a tie group spanning positions [i, j) has mean rank (i + j + 1) / 2.
  std::uint64_t twice_rank_sum = 0;
  std::uint64_t n_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    std::uint64_t pos_in_group = 0;
    for (std::size_t k = i; k < j; ++k) pos_in_group += labels[order[k]] ? 1 : 0;
    twice_rank_sum += pos_in_group * static_cast<std::uint64_t>(i + j + 1);
    n_pos += pos_in_group;
    i = j;
  }
  const std::uint64_t n_neg = scores.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("auc: both classes must be present");
  // 2U = 2R - n_pos (n_pos + 1)
  const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) * 0.5 / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

}  // namespace erpcl
