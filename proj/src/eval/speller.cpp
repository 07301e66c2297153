#include "erpcl/eval/speller.hpp"

#include <map>

#include "erpcl/error.hpp"

namespace erpcl {

Command speller_decode(std::span<const Flash> flashes, const SpellerLayout& layout) {
  const std::uint32_t n_codes = layout.flashes();
  std::vector<double> sums(n_codes, 0.0);
  std::vector<std::uint32_t> counts(n_codes, 0);
  for (const auto& f : flashes) {
    if (f.code == 0 || f.code > n_codes) {
      throw ProtocolError("speller: flash code " + std::to_string(f.code) + " outside 1.." + std::to_string(n_codes));
    }
    sums[f.code - 1] += f.score;
    counts[f.code - 1] += 1;
  }
  for (std::uint32_t c = 0; c < n_codes; ++c) {
    if (counts[c] == 0) {
      const bool is_row = c < layout.rows;
      throw ProtocolError(std::string("speller: no flash for ") + (is_row ? "row " : "column ") +
                          std::to_string(is_row ? c : c - layout.rows));
    }
  }
  Command cmd;
  for (std::uint32_t r = 1; r < layout.rows; ++r)
    if (sums[r] > sums[cmd.row]) cmd.row = r;
  for (std::uint32_t c = 1; c < layout.cols; ++c)
    if (sums[layout.rows + c] > sums[layout.rows + cmd.col]) cmd.col = c;
  return cmd;
}

std::vector<Selection> group_selections(const Dataset& dataset, const SpellerLayout& layout,
                                        std::uint32_t repetitions) {
  if (repetitions == 0) throw ProtocolError("speller: repetitions must be >= 1");
  const std::uint32_t n_codes = layout.flashes();
  const std::size_t block = static_cast<std::size_t>(n_codes) * repetitions;
  std::vector<Selection> out;
  for (const auto& [subject, idx] : dataset.subject_index()) {
    std::size_t coded = 0;
    for (std::size_t i : idx) coded += dataset.trials[i].stimulus_code != 0 ? 1 : 0;
    if (coded == 0) continue;
    if (coded != idx.size()) {
      throw ProtocolError("speller: subject " + std::to_string(subject) + " mixes coded and uncoded trials");
    }
    if (idx.size() % block != 0) {
      throw ProtocolError("speller: subject " + std::to_string(subject) + " has " + std::to_string(idx.size()) +
                          " trials, not a multiple of " + std::to_string(block));
    }
    for (std::size_t start = 0; start < idx.size(); start += block) {
      Selection sel;
      sel.subject_id = subject;
      std::vector<std::uint32_t> seen(n_codes, 0);
      std::map<std::uint32_t, bool> target_codes;
      for (std::size_t k = start; k < start + block; ++k) {
        const Trial& t = dataset.trials[idx[k]];
        if (t.stimulus_code > n_codes) {
          throw ProtocolError("speller: stimulus code " + std::to_string(t.stimulus_code) + " outside layout");
        }
        seen[t.stimulus_code - 1] += 1;
        if (t.label) target_codes[t.stimulus_code] = true;
        sel.trials.push_back(idx[k]);
      }
      for (std::uint32_t c = 0; c < n_codes; ++c) {
        if (seen[c] != repetitions) {
          throw ProtocolError("speller: subject " + std::to_string(subject) + " selection at trial " +
                              std::to_string(idx[start]) + " flashes code " + std::to_string(c + 1) + " " +
                              std::to_string(seen[c]) + " times");
        }
      }
      int rows = 0;
      int cols = 0;
      for (const auto& [code, _] : target_codes) {
        if (code <= layout.rows) {
          sel.target.row = code - 1;
          ++rows;
        } else {
          sel.target.col = code - layout.rows - 1;
          ++cols;
        }
      }
      if (rows != 1 || cols != 1) {
        throw ProtocolError("speller: selection at trial " + std::to_string(idx[start]) +
                            " lacks exactly one target row and one target column");
      }
      for (std::size_t ti : sel.trials) {
        const Trial& t = dataset.trials[ti];
        const bool target = t.stimulus_code == sel.target.row + 1 || t.stimulus_code == layout.rows + sel.target.col + 1;
        if (target != (t.label == 1)) {
          throw ProtocolError("speller: inconsistent target labels in selection at trial " + std::to_string(idx[start]));
        }
      }
      out.push_back(std::move(sel));
    }
  }
  return out;
}

}  // namespace erpcl
