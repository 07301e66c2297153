#include "erpcl/data/dataset.hpp"

#include <algorithm>
#include <set>

#include "erpcl/error.hpp"

namespace erpcl {

std::vector<std::string> Dataset::default_channel_names() {
  return {"Fz", "Cz", "Pz", "P3", "P4", "PO7", "PO8", "Oz"};
}

std::vector<std::uint32_t> Dataset::subjects() const {
  std::set<std::uint32_t> ids;
  for (const auto& t : trials) ids.insert(t.subject_id);
  return {ids.begin(), ids.end()};
}

std::map<std::uint32_t, std::vector<std::size_t>> Dataset::subject_index() const {
  std::map<std::uint32_t, std::vector<std::size_t>> index;
  for (std::size_t i = 0; i < trials.size(); ++i) index[trials[i].subject_id].push_back(i);
  return index;
}

Dataset Dataset::subset(const std::vector<std::uint32_t>& subject_ids) const {
  const std::set<std::uint32_t> keep(subject_ids.begin(), subject_ids.end());
  Dataset out;
  out.n_channels = n_channels;
  out.n_samples = n_samples;
  out.sample_rate = sample_rate;
  out.channel_names = channel_names;
  for (const auto& t : trials)
    if (keep.count(t.subject_id)) out.trials.push_back(t);
  return out;
}

std::size_t Dataset::count_label(std::uint8_t label) const {
  return static_cast<std::size_t>(
      std::count_if(trials.begin(), trials.end(), [&](const Trial& t) { return t.label == label; }));
}

void Dataset::validate() const {
  const std::size_t expect = static_cast<std::size_t>(n_channels) * n_samples;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (trials[i].data.size() != expect) {
      throw ShapeError("trial " + std::to_string(i) + " holds " + std::to_string(trials[i].data.size()) +
                       " samples, header says " + std::to_string(n_channels) + "x" + std::to_string(n_samples));
    }
    if (trials[i].label > 1) throw ConfigError("trial " + std::to_string(i) + " has label outside {0, 1}");
  }
  if (!channel_names.empty() && channel_names.size() != n_channels) {
    throw ConfigError("dataset lists " + std::to_string(channel_names.size()) + " channel names for " +
                      std::to_string(n_channels) + " channels");
  }
}

}  // namespace erpcl
