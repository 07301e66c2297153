#include "erpcl/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <sstream>

#include "erpcl/binio.hpp"
#include "erpcl/data/erpd.hpp"
#include "erpcl/data/synth.hpp"
#include "erpcl/error.hpp"
#include "erpcl/eval/report.hpp"
#include "erpcl/gradcheck.hpp"
#include "erpcl/log.hpp"
#include "erpcl/model/checkpoint.hpp"
#include "erpcl/rng.hpp"
#include "erpcl/simd/kernels.hpp"
#include "erpcl/train/crossval.hpp"
#include "erpcl/train/run_dir.hpp"

namespace erpcl::cli {
namespace {

struct Settings {
  std::uint64_t seed = 0;
  std::string out;
  std::string data;
  std::string encoder;
  std::string model;
  bool verbose = false;

  // synth
  std::uint32_t subjects = 10;
  std::uint32_t trials = SynthParams{}.trials_per_subject;
  double amplitude_scale = 1.0;
  double noise_std = SynthParams{}.noise_std_uv;
  bool no_speller = false;

  // model
  std::size_t kernels = 8;
  std::size_t branches = 3;

  // contrastive phase
  double temperature = 0.5;
  std::uint32_t n_avg = 3;
  std::uint32_t n_neg = 5;
  double lr = 1e-3;
  double classifier_lr = 5e-4;
  double weight_decay = 0.015;
  std::uint32_t epochs = 100;
  std::uint32_t patience = 30;
  std::size_t batch_size = 64;
  double val_fraction = 0.25;
  std::vector<std::uint32_t> holdout;

  // evaluation
  std::uint32_t repetitions = 1;

  // crossval
  std::uint32_t k = 5;
  std::uint32_t repeats = 2;
  std::uint32_t jobs = 1;
  bool no_pretrain = false;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string join(const std::vector<std::uint32_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

ConfigEntries common_entries(const std::string& command, const Settings& s) {
  return {{"command", command}, {"seed", std::to_string(s.seed)}, {"simd", std::string(simd::isa_name(simd::active_isa()))}};
}

void add_training_entries(ConfigEntries& e, const Settings& s, bool pretrain, bool classifier) {
  e.emplace_back("data", s.data);
  e.emplace_back("holdout", join(s.holdout));
  e.emplace_back("val_fraction", num(s.val_fraction));
  e.emplace_back("epochs", std::to_string(s.epochs));
  e.emplace_back("patience", std::to_string(s.patience));
  e.emplace_back("weight_decay", num(s.weight_decay));
  e.emplace_back("adam_beta1", "0.9");
  e.emplace_back("adam_beta2", "0.999");
  e.emplace_back("adam_eps", "1e-08");
  if (pretrain) {
    e.emplace_back("temperature", num(s.temperature));
    e.emplace_back("n_avg", std::to_string(s.n_avg));
    e.emplace_back("n_neg", std::to_string(s.n_neg));
    e.emplace_back("n_anchor", "1");
    e.emplace_back("lr", num(s.lr));
  }
  if (classifier) {
    e.emplace_back("classifier_lr", num(s.classifier_lr));
    e.emplace_back("batch_size", std::to_string(s.batch_size));
  }
}

void add_model_entries(ConfigEntries& e, const ModelConfig& c) {
  std::string lengths;
  for (std::size_t i = 0; i < c.encoder.kernel_lengths.size(); ++i)
    lengths += (i ? "," : "") + std::to_string(c.encoder.kernel_lengths[i]);
  e.emplace_back("n_channels", std::to_string(c.encoder.n_channels));
  e.emplace_back("n_samples", std::to_string(c.encoder.n_samples));
  e.emplace_back("sample_rate", num(c.encoder.sample_rate));
  e.emplace_back("branches", std::to_string(c.encoder.n_branches()));
  e.emplace_back("kernels", std::to_string(c.encoder.kernels_per_branch));
  e.emplace_back("kernel_lengths", lengths);
  e.emplace_back("projector_pool", std::to_string(c.projector.pool));
  e.emplace_back("projector_kernels", std::to_string(c.projector.kernels_per_branch));
  e.emplace_back("projector_dropout", num(c.projector.dropout));
  e.emplace_back("classifier_filters",
                 std::to_string(c.classifier.filters[0]) + "," + std::to_string(c.classifier.filters[1]));
  e.emplace_back("classifier_kernel_lengths", std::to_string(c.classifier.kernel_lengths[0]) + "," +
                                                  std::to_string(c.classifier.kernel_lengths[1]));
  e.emplace_back("classifier_pool", std::to_string(c.classifier.pool));
}

ModelConfig model_config(const Dataset& ds, const Settings& s) {
  ModelConfig c;
  c.encoder.n_channels = ds.n_channels;
  c.encoder.n_samples = ds.n_samples;
  c.encoder.sample_rate = ds.sample_rate;
  c.encoder.kernels_per_branch = s.kernels;
  c.encoder.kernel_lengths = ModelConfig::octave_kernel_lengths(ds.sample_rate, s.branches);
  c.validate();
  return c;
}

ModelConfig geometry_of(const Dataset& ds) {
  ModelConfig c;
  c.encoder.n_channels = ds.n_channels;
  c.encoder.n_samples = ds.n_samples;
  c.encoder.sample_rate = ds.sample_rate;
  return c;
}

TrainPlan make_plan(const Settings& s, double lr) {
  TrainPlan p;
  p.max_epochs = s.epochs;
  p.patience = s.patience;
  p.seed = s.seed;
  p.adam.lr = lr;
  p.adam.weight_decay = s.weight_decay;
  p.validate();
  return p;
}

std::vector<std::uint32_t> without(const std::vector<std::uint32_t>& all, const std::vector<std::uint32_t>& drop) {
  std::vector<std::uint32_t> out;
  for (auto s : all)
    if (std::find(drop.begin(), drop.end(), s) == drop.end()) out.push_back(s);
  return out;
}

EpochCallback metrics_writer(const RunDir& dir, const std::string& file, const char* phase) {
  dir.start_metrics(file);
  return [&dir, file, phase](const EpochRecord& r) {
    dir.append_metrics(file, r);
    log::info(std::string(phase) + " epoch " + std::to_string(r.epoch) + " loss " + num(r.train_loss) + " val " +
              num(r.val_metric));
  };
}

std::string history_summary(const char* phase, const TrainHistory& h) {
  std::ostringstream os;
  os << phase << ".epochs: " << (h.epochs.empty() ? 0 : h.epochs.back().epoch) << '\n';
  os << phase << ".best_epoch: " << h.best_epoch << '\n';
  os << phase << ".best_metric: " << num(h.best_metric) << '\n';
  os << phase << ".stop_reason: " << h.stop_reason << '\n';
  return os.str();
}

std::string fingerprint_file(const RunDir& dir) { return fingerprint_of(binio::read_file(dir.file("config.txt").string())); }

int cmd_synth(const Settings& s) {
  RunDir dir(s.out);
  SynthParams p;
  p.n_subjects = s.subjects;
  p.trials_per_subject = s.trials;
  p.amplitude_scale = s.amplitude_scale;
  p.noise_std_uv = s.noise_std;
  p.speller = !s.no_speller;
  auto e = common_entries("synth", s);
  e.emplace_back("subjects", std::to_string(p.n_subjects));
  e.emplace_back("trials_per_subject", std::to_string(p.trials_per_subject));
  e.emplace_back("speller", p.speller ? "true" : "false");
  e.emplace_back("layout", std::to_string(p.layout.rows) + "x" + std::to_string(p.layout.cols));
  e.emplace_back("target_ratio", num(p.target_ratio));
  e.emplace_back("n_channels", std::to_string(p.n_channels));
  e.emplace_back("n_samples", std::to_string(p.n_samples));
  e.emplace_back("sample_rate", num(p.sample_rate));
  e.emplace_back("latency_ms", num(p.latency_min_ms) + "-" + num(p.latency_max_ms));
  e.emplace_back("amplitude_uv", num(p.amplitude_min_uv) + "-" + num(p.amplitude_max_uv));
  e.emplace_back("amplitude_scale", num(p.amplitude_scale));
  e.emplace_back("bump_sigma_ms", num(p.bump_sigma_ms));
  e.emplace_back("spatial_jitter", num(p.spatial_jitter));
  e.emplace_back("ar_coeff", num(p.ar_coeff));
  e.emplace_back("noise_std_uv", num(p.noise_std_uv));
  e.emplace_back("noise_scale", num(p.noise_scale_min) + "-" + num(p.noise_scale_max));
  e.emplace_back("shared_noise_fraction", num(p.shared_noise_fraction));
  dir.write_config(e);
  p.validate();
  const Dataset ds = synth_generate(p, s.seed);
  const auto path = dir.file("dataset.erpd").string();
  save_erpd(ds, path);
  std::cout << "wrote " << ds.trials.size() << " trials of " << ds.subjects().size() << " subjects to " << path << '\n';
  return 0;
}

int cmd_pretrain(const Settings& s) {
  RunDir dir(s.out);
  const Dataset ds = load_erpd(s.data);
  const ModelConfig config = model_config(ds, s);
  auto e = common_entries("pretrain", s);
  add_training_entries(e, s, true, false);
  add_model_entries(e, config);
  dir.write_config(e);

  const auto [train_ids, val_ids] = split_validation(without(ds.subjects(), s.holdout), s.val_fraction, s.seed);
  if (val_ids.size() < 2)
    throw ConfigError("pretrain: validation needs at least 2 subjects, got " + std::to_string(val_ids.size()) +
                      "; raise --val-fraction or add subjects");
  PretrainOptions opt;
  opt.sampler = {s.n_avg, s.n_neg, 1};
  opt.loss.temperature = s.temperature;
  opt.plan = make_plan(s, s.lr);
  opt.on_epoch = metrics_writer(dir, "metrics_pretrain.csv", "pretrain");
  auto result = pretrain_contrastive(ds.subset(train_ids), ds.subset(val_ids),
                                     init_params<float>(config, derive_seed(s.seed, 1)), opt);
  write_checkpoint(dir.file("encoder.erpw").string(), make_checkpoint(result.params, {"encoder.", "projector."}));
  const auto summary = history_summary("pretrain", result.history);
  dir.write_text("summary.txt", summary);
  std::cout << summary;
  return result.history.diverged ? 2 : 0;
}

int cmd_train(const Settings& s) {
  RunDir dir(s.out);
  const Dataset ds = load_erpd(s.data);
  const Checkpoint ckpt = read_checkpoint(s.encoder);
  const ModelConfig config = infer_config(ckpt, geometry_of(ds));
  auto e = common_entries("train", s);
  e.emplace_back("encoder", s.encoder);
  add_training_entries(e, s, false, true);
  add_model_entries(e, config);
  dir.write_config(e);

  auto params = init_params<float>(config, derive_seed(s.seed, 1));
  apply_checkpoint(ckpt, params);
  const auto [train_ids, val_ids] = split_validation(without(ds.subjects(), s.holdout), s.val_fraction, s.seed);
  ClassifierOptions opt;
  opt.plan = make_plan(s, s.classifier_lr);
  opt.batch_size = s.batch_size;
  opt.on_epoch = metrics_writer(dir, "metrics_classifier.csv", "classifier");
  auto result = train_classifier(params, ds.subset(train_ids), ds.subset(val_ids), opt);
  write_checkpoint(dir.file("model.erpw").string(), make_checkpoint(result.params));
  const auto summary = history_summary("classifier", result.history);
  dir.write_text("summary.txt", summary);
  std::cout << summary;
  return result.history.diverged ? 2 : 0;
}

int cmd_eval(const Settings& s) {
  RunDir dir(s.out);
  const Dataset ds = load_erpd(s.data);
  const Checkpoint ckpt = read_checkpoint(s.model);
  const ModelConfig config = infer_config(ckpt, geometry_of(ds));
  auto e = common_entries("eval", s);
  e.emplace_back("model", s.model);
  e.emplace_back("data", s.data);
  e.emplace_back("repetitions", std::to_string(s.repetitions));
  add_model_entries(e, config);
  dir.write_config(e);

  if (!ckpt.has_prefix("classifier.")) throw ConfigError("--model checkpoint has no classifier weights");
  auto params = init_params<float>(config, derive_seed(s.seed, 1));
  apply_checkpoint(ckpt, params);
  EvalOptions opt;
  opt.repetitions = s.repetitions;
  opt.fingerprint = fingerprint_file(dir);
  const auto report = evaluate(params, ds, opt);
  dir.write_text("report.txt", report.to_text());
  dir.write_text("report.csv", report.to_csv());
  std::cout << report.to_text();
  return 0;
}

int cmd_crossval(const Settings& s) {
  RunDir dir(s.out);
  const Dataset ds = load_erpd(s.data);
  CrossvalOptions opt;
  opt.k = s.k;
  opt.repeats = s.repeats;
  opt.holdout = s.holdout;
  opt.seed = s.seed;
  opt.jobs = s.jobs;
  opt.model = model_config(ds, s);
  opt.pretrain = !s.no_pretrain;
  opt.pretrain_options.sampler = {s.n_avg, s.n_neg, 1};
  opt.pretrain_options.loss.temperature = s.temperature;
  opt.pretrain_options.plan = make_plan(s, s.lr);
  opt.classifier_options.plan = make_plan(s, s.classifier_lr);
  opt.classifier_options.batch_size = s.batch_size;
  opt.eval.repetitions = s.repetitions;

  auto e = common_entries("crossval", s);
  e.emplace_back("k", std::to_string(s.k));
  e.emplace_back("repeats", std::to_string(s.repeats));
  e.emplace_back("jobs", std::to_string(s.jobs));
  e.emplace_back("pretrain", opt.pretrain ? "true" : "false");
  e.emplace_back("repetitions", std::to_string(s.repetitions));
  add_training_entries(e, s, true, true);
  add_model_entries(e, opt.model);
  dir.write_config(e);
  opt.eval.fingerprint = fingerprint_file(dir);
  opt.on_fold = [](const FoldAssignment& f, const EvalReport& r) {
    log::info("repeat " + std::to_string(f.repeat) + " fold " + std::to_string(f.fold) + " auc " + num(r.auc_mean));
  };

  const auto plan = crossval_plan(ds.subjects(), opt.k, opt.repeats, opt.holdout, opt.seed);
  const auto reports = crossval(ds, opt);

  std::ostringstream csv;
  csv << "repeat,fold,subject_id,auc,n_trials,speller_acc\n";
  std::map<std::uint32_t, std::vector<double>> per_subject;
  std::vector<double> fold_means;
  for (std::size_t i = 0; i < reports.size(); ++i) {
    fold_means.push_back(reports[i].auc_mean);
    for (const auto& r : reports[i].subjects) {
      csv << plan[i].repeat << ',' << plan[i].fold << ',' << r.subject_id << ',' << num(r.auc) << ',' << r.n_trials
          << ',' << num(r.speller_acc) << '\n';
      per_subject[r.subject_id].push_back(r.auc);
    }
  }
  std::ostringstream text;
  const auto [m, sd] = mean_std(fold_means);
  text << "fingerprint: " << opt.eval.fingerprint << '\n';
  text << "folds: " << reports.size() << '\n';
  text << "auc_mean: " << num(m) << '\n';
  text << "auc_std: " << num(sd) << '\n';
  for (const auto& [subject, aucs] : per_subject) {
    const auto [sm, ssd] = mean_std(aucs);
    text << "subject." << subject << ".evaluations: " << aucs.size() << '\n';
    text << "subject." << subject << ".auc_mean: " << num(sm) << '\n';
    text << "subject." << subject << ".auc_std: " << num(ssd) << '\n';
  }
  dir.write_text("crossval.csv", csv.str());
  dir.write_text("report.txt", text.str());
  std::cout << text.str();
  return 0;
}

int cmd_gradcheck(const Settings& s) {
  std::optional<RunDir> dir;
  if (!s.out.empty()) {
    dir.emplace(s.out);
    auto e = common_entries("gradcheck", s);
    e.emplace_back("step", "0.001");
    e.emplace_back("tolerance", "0.0001");
    dir->write_config(e);
  }
  const auto results = gradcheck_suite(s.seed);
  const auto table = format_gradcheck_table(results);
  std::cout << table;
  if (dir) dir->write_text("gradcheck.txt", table);
  const bool ok = std::all_of(results.begin(), results.end(), [](const GradcheckResult& r) { return r.passed; });
  std::cout << (ok ? "all gradient checks passed\n" : "gradient check FAILED\n");
  return ok ? 0 : 2;
}

void add_seed_out(CLI::App* app, Settings& s, bool out_required) {
  app->add_option("--seed", s.seed, "Random seed")->capture_default_str();
  auto* out = app->add_option("--out", s.out, "Output directory");
  if (out_required) out->required();
  app->add_flag("-v,--verbose", s.verbose, "Log progress");
}

void add_model_flags(CLI::App* app, Settings& s) {
  app->add_option("--kernels", s.kernels, "Temporal kernels per encoder branch")->capture_default_str()->check(CLI::PositiveNumber);
  app->add_option("--branches", s.branches, "Encoder branches (kernel lengths fs/2, fs/4, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_split_flags(CLI::App* app, Settings& s) {
  app->add_option("--data", s.data, "ERPD dataset")->required()->check(CLI::ExistingFile);
  app->add_option("--val-fraction", s.val_fraction, "Fraction of training subjects used for validation")
      ->capture_default_str();
  app->add_option("--holdout", s.holdout, "Subject ids excluded from training")->delimiter(',');
}

void add_plan_flags(CLI::App* app, Settings& s) {
  app->add_option("--epochs", s.epochs, "Maximum epochs")->capture_default_str();
  app->add_option("--patience", s.patience, "Epochs without improvement before stopping")->capture_default_str();
  app->add_option("--weight-decay", s.weight_decay, "L2 weight decay")->capture_default_str();
}

void add_contrastive_flags(CLI::App* app, Settings& s) {
  app->add_option("--temperature", s.temperature, "Contrastive temperature")->capture_default_str();
  app->add_option("--n-avg", s.n_avg, "Trials averaged per sample")->capture_default_str();
  app->add_option("--n-neg", s.n_neg, "Non-ERP samples per subject")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv) {
  Settings s;
  CLI::App app{"Contrastive ERP encoder: synthetic data, training, evaluation", "erpcl"};
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Generate a synthetic ERPD dataset");
  add_seed_out(synth, s, true);
  synth->add_option("--subjects", s.subjects, "Number of subjects")->capture_default_str();
  synth->add_option("--trials", s.trials, "Trials per subject")->capture_default_str();
  synth->add_option("--amplitude-scale", s.amplitude_scale, "ERP amplitude multiplier (0 = null data)")
      ->capture_default_str();
  synth->add_option("--noise-std", s.noise_std, "Background noise standard deviation (uV)")->capture_default_str();
  synth->add_flag("--no-speller", s.no_speller, "Independent oddball trials instead of speller selections");

  auto* pretrain = app.add_subcommand("pretrain", "Contrastive pretraining of encoder and projector");
  add_seed_out(pretrain, s, true);
  add_split_flags(pretrain, s);
  add_model_flags(pretrain, s);
  add_plan_flags(pretrain, s);
  add_contrastive_flags(pretrain, s);
  pretrain->add_option("--lr", s.lr, "Adam learning rate")->capture_default_str();

  auto* train = app.add_subcommand("train", "Train the classifier on a frozen encoder");
  add_seed_out(train, s, true);
  add_split_flags(train, s);
  add_plan_flags(train, s);
  train->add_option("--encoder", s.encoder, "Encoder checkpoint (ERPW) from pretrain")->required();
  train->add_option("--lr", s.classifier_lr, "Adam learning rate")->capture_default_str();
  train->add_option("--batch-size", s.batch_size, "Trials per mini-batch")->capture_default_str();

  auto* eval = app.add_subcommand("eval", "Evaluate a trained model on a test set");
  add_seed_out(eval, s, true);
  eval->add_option("--data", s.data, "ERPD test set")->required()->check(CLI::ExistingFile);
  eval->add_option("--model", s.model, "Model checkpoint (ERPW) from train")->required();
  eval->add_option("--repetitions", s.repetitions, "Flash repetitions per speller selection")->capture_default_str();

  auto* cv = app.add_subcommand("crossval", "Cross-subject cross-validation");
  add_seed_out(cv, s, true);
  cv->add_option("--data", s.data, "ERPD dataset")->required()->check(CLI::ExistingFile);
  cv->add_option("--holdout", s.holdout, "Test subject ids, never trained on")->delimiter(',');
  cv->add_option("--k", s.k, "Folds")->capture_default_str();
  cv->add_option("--repeats", s.repeats, "Repeats")->capture_default_str();
  cv->add_option("--jobs", s.jobs, "Folds run concurrently")->capture_default_str()->check(CLI::PositiveNumber);
  cv->add_flag("--no-pretrain", s.no_pretrain, "Use a randomly initialized frozen encoder");
  cv->add_option("--lr", s.lr, "Contrastive learning rate")->capture_default_str();
  cv->add_option("--classifier-lr", s.classifier_lr, "Classifier learning rate")->capture_default_str();
  cv->add_option("--batch-size", s.batch_size, "Classifier mini-batch size")->capture_default_str();
  cv->add_option("--repetitions", s.repetitions, "Flash repetitions per speller selection")->capture_default_str();
  add_model_flags(cv, s);
  add_plan_flags(cv, s);
  add_contrastive_flags(cv, s);

  auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_seed_out(gc, s, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (s.verbose) log::set_min_level(log::Level::info);
  try {
    if (*synth) return cmd_synth(s);
    if (*pretrain) return cmd_pretrain(s);
    if (*train) return cmd_train(s);
    if (*eval) return cmd_eval(s);
    if (*cv) return cmd_crossval(s);
    if (*gc) return cmd_gradcheck(s);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace erpcl::cli
