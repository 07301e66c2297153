#include "erpcl/train/run_dir.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "erpcl/binio.hpp"
#include "erpcl/error.hpp"

namespace erpcl {

RunDir::RunDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw Error("cannot create run directory " + root_.string() + ": " + ec.message());
}

void RunDir::write_config(const ConfigEntries& entries) const {
  std::string text;
  for (const auto& [k, v] : entries) text += k + " = " + v + "\n";
  write_text("config.txt", text);
}

void RunDir::start_metrics(const std::string& name) const { write_text(name, "epoch,train_loss,val_metric,seconds\n"); }

void RunDir::append_metrics(const std::string& name, const EpochRecord& record) const {
  std::ofstream out(file(name), std::ios::app);
  if (!out) throw Error("cannot append to " + file(name).string());
  out << format_metrics_row(record) << '\n';
}

void RunDir::write_text(const std::string& name, const std::string& text) const {
  binio::write_file(file(name).string(), text);
}

ConfigEntries parse_config(const std::string& text) {
  ConfigEntries out;
  std::istringstream in(text);
  std::string line;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config: expected 'key = value'", 0);
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::string format_metrics_row(const EpochRecord& r) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%u,%.8g,%.8g,%.4f", r.epoch, r.train_loss, r.val_metric, r.seconds);
  return buf;
}

}  // namespace erpcl
