#include <doctest.h>

#include <cmath>

#include "erpcl/error.hpp"
#include "erpcl/model/checkpoint.hpp"
#include "erpcl/model/networks.hpp"
#include "erpcl/rng.hpp"

using namespace erpcl;

namespace {

Tensor<float> random_input(Rng& rng, const ModelConfig& c) {
  std::vector<float> v(c.encoder.n_channels * c.encoder.n_samples);
  for (auto& x : v) x = static_cast<float>(rng.normal());
  return Tensor<float>::from({c.encoder.n_channels, c.encoder.n_samples}, v);
}

}  // namespace

TEST_CASE("default config maps 8x128 -> 24x128 -> 768 -> scalar") {
  const ModelConfig c;
  REQUIRE_NOTHROW(c.validate());
  CHECK(c.encoder.kernel_lengths == std::vector<std::size_t>{64, 32, 16});
  CHECK(c.projector_kernel_lengths() == std::vector<std::size_t>{16, 8, 4});
  CHECK(c.embedding_dim() == 768);

  auto params = init_params<float>(c, 1);
  Rng rng(2);
  Tape<float> tape;
  std::vector<Tensor<float>> h;
  for (int i = 0; i < 3; ++i) {
    auto x = random_input(rng, c);
    CHECK(x.shape() == Shape{8, 128});
    h.push_back(encoder_forward(tape, params, x));
    CHECK(h.back().shape() == Shape{24, 128});
  }
  std::mt19937_64 drop(3);
  for (auto mode : {ForwardMode::train(drop), ForwardMode::eval()}) {
    auto z = projector_forward(tape, params, h, mode);
    REQUIRE(z.size() == 3);
    for (const auto& e : z) CHECK(e.shape() == Shape{768});
  }
  auto logit = classifier_forward(tape, params, h[0]);
  CHECK(logit.shape() == Shape{});
  CHECK(std::isfinite(logit.item()));
}

TEST_CASE("parameter count of the default model") {
  // Encoder: sum_b (8*P_b + 8*8) for P = 64, 32, 16.
  const std::size_t encoder = (8 * 64 + 64) + (8 * 32 + 64) + (8 * 16 + 64);
  // Projector: 8*(P_b/4) temporal + 8*24 spatial + 2*256 batch-norm affine, per branch.
  const std::size_t projector = (8 * 16 + 8 * 8 + 8 * 4) + 3 * (8 * 24) + 3 * (2 * 8 * 32);
  // Classifier: 16x24x16 + 16, 8x16x8 + 8, 256 + 1.
  const std::size_t classifier = 16 * 24 * 16 + 16 + 8 * 16 * 8 + 8 + 8 * 32 + 1;
  auto params = init_params<float>(ModelConfig{}, 0);
  CHECK(params.parameter_count() == encoder + projector + classifier);
}

TEST_CASE("config validation") {
  ModelConfig c;
  c.classifier.filters = {8, 16};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.encoder.kernel_lengths = {};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ModelConfig{};
  c.projector.dropout = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(ModelConfig::octave_kernel_lengths(128.0, 4) == std::vector<std::size_t>{64, 32, 16, 8});
  CHECK_NOTHROW(ModelConfig::reduced().validate());
}

TEST_CASE("initialization is deterministic and bounded by fan-in") {
  const ModelConfig c;
  auto a = init_params<float>(c, 9), b = init_params<float>(c, 9), d = init_params<float>(c, 10);
  const auto pa = a.all_params(), pb = b.all_params(), pd = d.all_params();
  bool any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pb[i].tensor.data().begin()));
    any_diff |= !std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pd[i].tensor.data().begin());
  }
  CHECK(any_diff);
  // Encoder branch 0 temporal kernels: fan-in 64.
  for (float v : a.encoder[0].temporal.data()) CHECK(std::abs(v) <= 1.0f / 8.0f);
  for (float v : a.projector[0].bn_gamma.data()) CHECK(v == 1.0f);
}

TEST_CASE("projector batch statistics need two samples") {
  const ModelConfig c = ModelConfig::reduced();
  auto params = init_params<float>(c, 1);
  Rng rng(4);
  Tape<float> tape;
  std::vector<Tensor<float>> h{encoder_forward(tape, params, random_input(rng, c))};
  std::mt19937_64 drop(1);
  CHECK_THROWS_AS(projector_forward(tape, params, h, ForwardMode::train(drop)), DegenerateError);
  CHECK_NOTHROW(projector_forward(tape, params, h, ForwardMode::eval()));
  CHECK_NOTHROW(projector_forward(tape, params, h, ForwardMode{Phase::train_frozen_norm, &drop}));
}

TEST_CASE("encoder is linear in its input") {
  const ModelConfig c = ModelConfig::reduced();
  auto params = init_params<float>(c, 5);
  Rng rng(6);
  auto x = random_input(rng, c), y = random_input(rng, c);
  std::vector<float> sum(x.numel());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.0f * x.at(i) - y.at(i);
  Tape<float> tape;
  auto hx = encoder_forward(tape, params, x), hy = encoder_forward(tape, params, y);
  auto hs = encoder_forward(tape, params, Tensor<float>::from(x.shape(), sum));
  for (std::size_t i = 0; i < hs.numel(); ++i) CHECK(hs.at(i) == doctest::Approx(2.0f * hx.at(i) - hy.at(i)).epsilon(1e-4));
}

TEST_CASE("checkpoint round trip is byte exact") {
  auto params = init_params<float>(ModelConfig{}, 3);
  params.projector[1].bn.running_mean[5] = 0.25f;
  const auto ck = make_checkpoint(params);
  const auto bytes = encode_checkpoint(ck);
  const auto back = decode_checkpoint(bytes);
  CHECK(encode_checkpoint(back) == bytes);

  auto other = init_params<float>(ModelConfig{}, 4);
  CHECK(apply_checkpoint(back, other) == ck.entries.size());
  CHECK(encode_checkpoint(make_checkpoint(other)) == bytes);
  CHECK(other.projector[1].bn.running_mean[5] == 0.25f);
}

TEST_CASE("checkpoint prefixes and config inference") {
  ModelConfig c;
  c.encoder.kernels_per_branch = 4;
  c.encoder.kernel_lengths = {32, 16};
  auto params = init_params<float>(c, 3);
  const auto enc = make_checkpoint(params, {"encoder."});
  CHECK(enc.has_prefix("encoder."));
  CHECK_FALSE(enc.has_prefix("classifier."));
  const auto inferred = infer_config(make_checkpoint(params), ModelConfig{});
  CHECK(inferred.encoder.kernels_per_branch == 4);
  CHECK(inferred.encoder.kernel_lengths == c.encoder.kernel_lengths);
  CHECK(inferred.classifier.filters == c.classifier.filters);

  auto wrong = init_params<float>(ModelConfig{}, 3);
  CHECK_THROWS_AS(apply_checkpoint(enc, wrong), ShapeError);
}

TEST_CASE("corrupted checkpoints are rejected with a byte offset") {
  const auto bytes = encode_checkpoint(make_checkpoint(init_params<float>(ModelConfig::reduced(), 1)));
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);
  auto bad_version = bytes;
  bad_version[4] = 9;
  try {
    decode_checkpoint(bad_version);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() == 4);
  }
  try {
    decode_checkpoint(std::string_view(bytes).substr(0, bytes.size() - 3));
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(e.offset() > 12);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x"), FormatError);
}
