#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erpcl/data/dataset.hpp"
#include "erpcl/data/synth.hpp"

namespace erpcl {

/// One flash of a row-column speller: code 1..R is row code-1, R+1..R+C is column code-R-1.
struct Flash {
  std::uint32_t code = 0;
  double score = 0.0;
};

struct Command {
  std::uint32_t row = 0;
  std::uint32_t col = 0;

  bool operator==(const Command&) const = default;
};

/// Picks the row and column whose summed flash scores are largest; ties go to the
/// lowest index. Throws ProtocolError if a row or column has no flash or a code is
/// out of range.
Command speller_decode(std::span<const Flash> flashes, const SpellerLayout& layout);

/// One character selection: consecutive trials of a subject covering every flash
/// code `repetitions` times.
struct Selection {
  std::uint32_t subject_id = 0;
  std::vector<std::size_t> trials;
  Command target;
};

/// Splits the speller trials of `dataset` into selections, per subject in file
/// order. Subjects whose trials all have stimulus code 0 contribute nothing.
/// Throws ProtocolError on incomplete blocks, uneven flash coverage, or a block
/// without exactly one target row and one target column.
std::vector<Selection> group_selections(const Dataset& dataset, const SpellerLayout& layout,
                                        std::uint32_t repetitions = 1);

}  // namespace erpcl
