#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "erpcl/binio.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string output;
};

Outcome run_cli(const std::string& args) {
  const auto log = fs::path("erpcl_cli_test.log");
  const std::string cmd = std::string("\"") + ERPCL_CLI_PATH + "\" " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  o.output = ss.str();
  return o;
}

std::string slurp(const fs::path& p) { return erpcl::binio::read_file(p.string()); }

}  // namespace

TEST_CASE("cli end to end") {
  const fs::path root = "erpcl_cli_runs";
  fs::remove_all(root);
  const auto d = [&](const char* name) { return (root / name).string(); };

  SUBCASE("synth is reproducible") {
    REQUIRE(run_cli("synth --subjects 3 --trials 24 --seed 4 --out " + d("a")).code == 0);
    REQUIRE(run_cli("synth --subjects 3 --trials 24 --seed 4 --out " + d("b")).code == 0);
    CHECK(slurp(root / "a" / "dataset.erpd") == slurp(root / "b" / "dataset.erpd"));
    CHECK(slurp(root / "a" / "config.txt").find("seed = 4") != std::string::npos);
  }

  SUBCASE("pretrain, train and eval chain through checkpoints") {
    REQUIRE(run_cli("synth --subjects 7 --trials 24 --seed 1 --out " + d("data")).code == 0);
    const auto data = (root / "data" / "dataset.erpd").string();
    const auto pre = run_cli("pretrain --data " + data + " --holdout 7 --epochs 2 --patience 1 --seed 1 --out " + d("pre"));
    REQUIRE_MESSAGE(pre.code == 0, pre.output);
    CHECK(fs::exists(root / "pre" / "encoder.erpw"));
    CHECK(slurp(root / "pre" / "metrics_pretrain.csv").rfind("epoch,train_loss,val_metric,seconds\n", 0) == 0);

    const auto enc = (root / "pre" / "encoder.erpw").string();
    const auto tr = run_cli("train --data " + data + " --holdout 7 --encoder " + enc +
                            " --epochs 2 --patience 1 --seed 1 --out " + d("train"));
    REQUIRE_MESSAGE(tr.code == 0, tr.output);
    const auto model = (root / "train" / "model.erpw").string();

    const auto ev = run_cli("eval --data " + data + " --model " + model + " --out " + d("eval"));
    REQUIRE_MESSAGE(ev.code == 0, ev.output);
    CHECK(ev.output.find("auc_mean:") != std::string::npos);
    REQUIRE(run_cli("eval --data " + data + " --model " + model + " --out " + d("eval2")).code == 0);
    CHECK(slurp(root / "eval" / "report.txt") == slurp(root / "eval2" / "report.txt"));

    // An encoder-only checkpoint is not a model.
    CHECK(run_cli("eval --data " + data + " --model " + enc + " --out " + d("bad")).code == 1);
  }

  SUBCASE("usage errors exit 1") {
    const auto missing = run_cli("train --data nowhere.erpd --out " + d("x"));
    CHECK(missing.code == 1);
    REQUIRE(run_cli("synth --subjects 3 --trials 24 --out " + d("data")).code == 0);
    const auto no_enc = run_cli("train --data " + (root / "data" / "dataset.erpd").string() + " --out " + d("x"));
    CHECK(no_enc.code == 1);
    CHECK(no_enc.output.find("--encoder") != std::string::npos);
    CHECK(run_cli("synth --bogus --out " + d("x")).code == 1);
    CHECK(run_cli("").code == 1);
  }

  SUBCASE("too few validation subjects is a configuration error") {
    REQUIRE(run_cli("synth --subjects 4 --trials 24 --out " + d("data")).code == 0);
    const auto r = run_cli("pretrain --data " + (root / "data" / "dataset.erpd").string() + " --out " + d("x"));
    CHECK(r.code == 1);
    CHECK(r.output.find("--val-fraction") != std::string::npos);
  }

  SUBCASE("corrupt input exits 2 with a diagnostic") {
    fs::create_directories(root);
    std::ofstream(root / "junk.erpd") << "not a dataset";
    const auto r = run_cli("pretrain --data " + (root / "junk.erpd").string() + " --out " + d("x"));
    CHECK(r.code == 2);
    CHECK(r.output.find("offset") != std::string::npos);
  }

  SUBCASE("gradcheck passes") {
    const auto r = run_cli("gradcheck");
    CHECK(r.code == 0);
    CHECK(r.output.find("all gradient checks passed") != std::string::npos);
  }

  fs::remove_all(root);
}
