#include "erpcl/model/networks.hpp"

#include "erpcl/error.hpp"

namespace erpcl {

template <class T>
Tensor<T> encoder_forward(Tape<T>& tape, const ModelParams<T>& params, const Tensor<T>& x) {
  const auto& e = params.config.encoder;
  if (x.rank() != 2 || x.dim(0) != e.n_channels || x.dim(1) != e.n_samples) {
    throw ShapeError("encoder_forward: expected input [" + std::to_string(e.n_channels) + "x" +
                     std::to_string(e.n_samples) + "], got " + shape_str(x.shape()));
  }
  std::vector<Tensor<T>> branches;
  branches.reserve(params.encoder.size());
  for (const auto& br : params.encoder) {
    auto filtered = ops::conv1d_same(tape, x, br.temporal);
    branches.push_back(ops::grouped_collapse(tape, filtered, br.spatial));
  }
  return ops::concat_rows(tape, branches);
}

template <class T>
std::vector<Tensor<T>> projector_forward(Tape<T>& tape, ModelParams<T>& params, const std::vector<Tensor<T>>& h,
                                         ForwardMode mode) {
  const auto& cfg = params.config;
  const std::size_t maps = cfg.encoder.n_maps();
  const std::size_t batch = h.size();
  if (batch == 0) throw ShapeError("projector_forward: empty batch");
  const double rate = mode.phase == Phase::eval ? 0.0 : cfg.projector.dropout;
  if (rate > 0.0 && mode.rng == nullptr) throw ConfigError("projector_forward: dropout needs an rng");
  const auto norm_mode = mode.phase == Phase::train ? ops::NormMode::batch : ops::NormMode::running;

  std::vector<Tensor<T>> pooled;
  pooled.reserve(batch);
  for (const auto& x : h) {
    if (x.rank() != 2 || x.dim(0) != maps || x.dim(1) != cfg.encoder.n_samples) {
      throw ShapeError("projector_forward: expected encoder output [" + std::to_string(maps) + "x" +
                       std::to_string(cfg.encoder.n_samples) + "], got " + shape_str(x.shape()));
    }
    pooled.push_back(ops::avg_pool_time(tape, x, cfg.projector.pool));
  }

  // per_sample[i] collects the flattened branch outputs of sample i.
  std::vector<std::vector<Tensor<T>>> per_sample(batch);
  for (auto& br : params.projector) {
    std::vector<Tensor<T>> rows;
    rows.reserve(batch);
    for (const auto& x : pooled) {
      auto filtered = ops::conv1d_same(tape, x, br.temporal);
      rows.push_back(ops::flatten(tape, ops::grouped_collapse(tape, filtered, br.spatial)));
    }
    auto z = ops::batch_norm(tape, ops::stack(tape, rows), br.bn_gamma, br.bn_beta, br.bn, norm_mode);
    z = ops::elu(tape, z);
    if (rate > 0.0) z = ops::dropout(tape, z, rate, *mode.rng);
    for (std::size_t i = 0; i < batch; ++i) per_sample[i].push_back(ops::select(tape, z, i));
  }

  std::vector<Tensor<T>> out;
  out.reserve(batch);
  for (auto& parts : per_sample) out.push_back(ops::concat_rows(tape, parts));
  return out;
}

template <class T>
Tensor<T> classifier_forward(Tape<T>& tape, const ModelParams<T>& params, const Tensor<T>& h) {
  const auto& cfg = params.config;
  const auto& c = params.classifier;
  if (h.rank() != 2 || h.dim(0) != cfg.encoder.n_maps() || h.dim(1) != cfg.encoder.n_samples) {
    throw ShapeError("classifier_forward: expected encoder output [" + std::to_string(cfg.encoder.n_maps()) + "x" +
                     std::to_string(cfg.encoder.n_samples) + "], got " + shape_str(h.shape()));
  }
  auto z = ops::conv1d(tape, h, c.conv1_w, c.conv1_b);
  z = ops::avg_pool_time(tape, ops::elu(tape, z), cfg.classifier.pool);
  z = ops::conv1d(tape, z, c.conv2_w, c.conv2_b);
  z = ops::avg_pool_time(tape, ops::elu(tape, z), cfg.classifier.pool);
  auto logit = ops::dense(tape, ops::flatten(tape, z), c.dense_w, c.dense_b);
  return ops::reshape(tape, logit, Shape{});
}

template Tensor<float> encoder_forward(Tape<float>&, const ModelParams<float>&, const Tensor<float>&);
template Tensor<double> encoder_forward(Tape<double>&, const ModelParams<double>&, const Tensor<double>&);
template std::vector<Tensor<float>> projector_forward(Tape<float>&, ModelParams<float>&,
                                                      const std::vector<Tensor<float>>&, ForwardMode);
template std::vector<Tensor<double>> projector_forward(Tape<double>&, ModelParams<double>&,
                                                       const std::vector<Tensor<double>>&, ForwardMode);
template Tensor<float> classifier_forward(Tape<float>&, const ModelParams<float>&, const Tensor<float>&);
template Tensor<double> classifier_forward(Tape<double>&, const ModelParams<double>&, const Tensor<double>&);

}  // namespace erpcl
