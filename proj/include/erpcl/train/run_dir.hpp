#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "erpcl/train/trainer.hpp"

namespace erpcl {

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Output directory of one run: config.txt, metrics CSVs and ERPW checkpoints.
class RunDir {
 public:
  /// Creates the directory (and parents) if missing.
  explicit RunDir(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path file(const std::string& name) const { return root_ / name; }

  /// Writes "key = value" lines to config.txt.
  void write_config(const ConfigEntries& entries) const;

  /// Starts `name` with the header "epoch,train_loss,val_metric,seconds".
  void start_metrics(const std::string& name) const;
  void append_metrics(const std::string& name, const EpochRecord& record) const;

  void write_text(const std::string& name, const std::string& text) const;

 private:
  std::filesystem::path root_;
};

/// Parses "key = value" lines; blank lines and lines starting with '#' are skipped.
ConfigEntries parse_config(const std::string& text);

std::string format_metrics_row(const EpochRecord& record);

}  // namespace erpcl
