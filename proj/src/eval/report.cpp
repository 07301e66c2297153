#include "erpcl/eval/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "erpcl/error.hpp"
#include "erpcl/eval/auc.hpp"
#include "erpcl/eval/speller.hpp"
#include "erpcl/train/trainer.hpp"

namespace erpcl {
namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::pair<double, double> mean_std(std::span<const double> values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    if (std::isfinite(v)) {
      sum += v;
      ++n;
    }
  }
  if (n == 0) return {NAN, NAN};
  const double mean = sum / static_cast<double>(n);
  if (n == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values)
    if (std::isfinite(v)) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1))};
}

EvalReport evaluate_scores(const Dataset& dataset, std::span<const double> scores, const EvalOptions& options) {
  if (dataset.trials.empty()) throw MetricError("evaluate: empty test set");
  if (scores.size() != dataset.trials.size()) throw MetricError("evaluate: one score per trial required");

  EvalReport report;
  report.fingerprint = options.fingerprint;
  report.n_trials = dataset.trials.size();

  const auto selections = group_selections(dataset, options.layout, options.repetitions);
  std::map<std::uint32_t, std::pair<std::size_t, std::size_t>> spelled;  // subject -> (correct, total)
  for (const auto& sel : selections) {
    std::vector<Flash> flashes;
    for (std::size_t ti : sel.trials) flashes.push_back({dataset.trials[ti].stimulus_code, scores[ti]});
    auto& [correct, total] = spelled[sel.subject_id];
    correct += speller_decode(flashes, options.layout) == sel.target ? 1 : 0;
    total += 1;
  }

  std::vector<double> aucs;
  std::vector<double> accs;
  std::size_t pooled_correct = 0;
  for (const auto& [subject, idx] : dataset.subject_index()) {
    SubjectResult r;
    r.subject_id = subject;
    r.n_trials = idx.size();
    std::vector<double> s;
    std::vector<std::uint8_t> l;
    for (std::size_t i : idx) {
      s.push_back(scores[i]);
      l.push_back(dataset.trials[i].label);
    }
    const std::size_t pos = static_cast<std::size_t>(std::count(l.begin(), l.end(), 1));
    r.auc = (pos == 0 || pos == l.size()) ? NAN : auc(s, l);
    auto it = spelled.find(subject);
    if (it != spelled.end()) {
      r.n_selections = it->second.second;
      r.speller_acc = static_cast<double>(it->second.first) / static_cast<double>(it->second.second);
      pooled_correct += it->second.first;
      report.n_selections += r.n_selections;
    } else {
      r.speller_acc = NAN;
    }
    aucs.push_back(r.auc);
    accs.push_back(r.speller_acc);
    report.subjects.push_back(r);
  }
  std::tie(report.auc_mean, report.auc_std) = mean_std(aucs);
  std::tie(report.speller_acc_mean, report.speller_acc_std) = mean_std(accs);
  report.speller_acc = report.n_selections
                           ? static_cast<double>(pooled_correct) / static_cast<double>(report.n_selections)
                           : NAN;
  return report;
}

EvalReport evaluate(const ModelParams<float>& model, const Dataset& dataset, const EvalOptions& options) {
  if (dataset.trials.empty()) throw MetricError("evaluate: empty test set");
  const auto logits = predict_logits(model, dataset);
  return evaluate_scores(dataset, logits, options);
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  os << "fingerprint: " << fingerprint << '\n';
  os << "subjects: " << subjects.size() << '\n';
  os << "n_trials: " << n_trials << '\n';
  os << "auc_mean: " << fmt(auc_mean) << '\n';
  os << "auc_std: " << fmt(auc_std) << '\n';
  os << "n_selections: " << n_selections << '\n';
  os << "speller_acc: " << fmt(speller_acc) << '\n';
  os << "speller_acc_mean: " << fmt(speller_acc_mean) << '\n';
  os << "speller_acc_std: " << fmt(speller_acc_std) << '\n';
  for (const auto& s : subjects) {
    os << "subject." << s.subject_id << ".auc: " << fmt(s.auc) << '\n';
    os << "subject." << s.subject_id << ".speller_acc: " << fmt(s.speller_acc) << '\n';
  }
  return os.str();
}

std::string EvalReport::to_csv() const {
  std::ostringstream os;
  os << "subject_id,auc,n_trials,speller_acc\n";
  for (const auto& s : subjects) os << s.subject_id << ',' << fmt(s.auc) << ',' << s.n_trials << ',' << fmt(s.speller_acc) << '\n';
  return os.str();
}

std::string fingerprint_of(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace erpcl
