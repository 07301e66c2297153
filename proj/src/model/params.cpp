#include "erpcl/model/params.hpp"

#include <cmath>
#include <random>

#include "erpcl/error.hpp"

namespace erpcl {
namespace {

template <class T>
Tensor<T> uniform_tensor(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<T> data(shape_numel(shape));
  for (auto& v : data) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    v = static_cast<T>((2.0 * u - 1.0) * bound);
  }
  return Tensor<T>::from(std::move(shape), std::move(data), true);
}

}  // namespace

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::encoder_params() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t b = 0; b < encoder.size(); ++b) {
    const std::string p = "encoder.b" + std::to_string(b) + ".";
    out.push_back({p + "temporal", encoder[b].temporal});
    out.push_back({p + "spatial", encoder[b].spatial});
  }
  return out;
}

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::projector_params() const {
  std::vector<NamedTensor<T>> out;
  for (std::size_t b = 0; b < projector.size(); ++b) {
    const std::string p = "projector.b" + std::to_string(b) + ".";
    out.push_back({p + "temporal", projector[b].temporal});
    out.push_back({p + "spatial", projector[b].spatial});
    out.push_back({p + "bn.gamma", projector[b].bn_gamma});
    out.push_back({p + "bn.beta", projector[b].bn_beta});
  }
  return out;
}

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::classifier_params() const {
  const auto& c = classifier;
  return {{"classifier.conv1.weight", c.conv1_w}, {"classifier.conv1.bias", c.conv1_b},
          {"classifier.conv2.weight", c.conv2_w}, {"classifier.conv2.bias", c.conv2_b},
          {"classifier.dense.weight", c.dense_w}, {"classifier.dense.bias", c.dense_b}};
}

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::all_params() const {
  auto out = encoder_params();
  for (auto& e : projector_params()) out.push_back(std::move(e));
  for (auto& e : classifier_params()) out.push_back(std::move(e));
  return out;
}

template <class T>
std::vector<NamedTensor<T>> ModelParams<T>::state_entries() const {
  auto out = all_params();
  for (std::size_t b = 0; b < projector.size(); ++b) {
    const std::string p = "projector.b" + std::to_string(b) + ".bn.";
    const auto& bn = projector[b].bn;
    out.push_back({p + "running_mean", Tensor<T>::from({bn.running_mean.size()}, bn.running_mean)});
    out.push_back({p + "running_var", Tensor<T>::from({bn.running_var.size()}, bn.running_var)});
  }
  return out;
}

template <class T>
std::size_t ModelParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : all_params()) n += e.tensor.numel();
  return n;
}

template <class T>
void ModelParams<T>::set_trainable(const std::vector<NamedTensor<T>>& group, bool on) const {
  for (auto e : group) e.tensor.set_requires_grad(on);
}

template <class T>
void ModelParams<T>::zero_grad() const {
  for (auto e : all_params()) e.tensor.zero_grad();
}

template <class T>
ModelParams<T> ModelParams<T>::clone() const {
  auto dup = [](const Tensor<T>& t) {
    auto c = t.clone();
    c.set_requires_grad(t.requires_grad());
    return c;
  };
  ModelParams out;
  out.config = config;
  for (const auto& b : encoder) out.encoder.push_back({dup(b.temporal), dup(b.spatial)});
  for (const auto& b : projector) {
    out.projector.push_back({dup(b.temporal), dup(b.spatial), dup(b.bn_gamma), dup(b.bn_beta), b.bn});
  }
  const auto& c = classifier;
  out.classifier = {dup(c.conv1_w), dup(c.conv1_b), dup(c.conv2_w), dup(c.conv2_b), dup(c.dense_w), dup(c.dense_b)};
  return out;
}

template <class T>
void ModelParams<T>::assign_from(const ModelParams& other) {
  auto dst = all_params();
  const auto src = other.all_params();
  if (dst.size() != src.size()) throw ShapeError("assign_from: parameter layouts differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].tensor.shape() != src[i].tensor.shape()) {
      throw ShapeError("assign_from: " + dst[i].name + " has shape " + shape_str(dst[i].tensor.shape()) +
                       ", source has " + shape_str(src[i].tensor.shape()));
    }
    auto d = dst[i].tensor.mutable_data();
    const auto s = src[i].tensor.data();
    std::copy(s.begin(), s.end(), d.begin());
  }
  for (std::size_t b = 0; b < projector.size(); ++b) projector[b].bn = other.projector[b].bn;
}

template <class T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  ModelParams<T> p;
  p.config = config;
  const auto& e = config.encoder;
  const std::size_t maps = e.n_maps();

  for (std::size_t len : e.kernel_lengths) {
    EncoderBranch<T> br;
    br.temporal = uniform_tensor<T>({e.kernels_per_branch, len}, len, rng);
    br.spatial = uniform_tensor<T>({e.kernels_per_branch, e.n_channels}, e.n_channels, rng);
    p.encoder.push_back(std::move(br));
  }

  const std::size_t pk = config.projector.kernels_per_branch;
  const std::size_t bn_features = pk * config.projector_time();
  for (std::size_t len : config.projector_kernel_lengths()) {
    ProjectorBranch<T> br;
    br.temporal = uniform_tensor<T>({pk, len}, len, rng);
    br.spatial = uniform_tensor<T>({pk, maps}, maps, rng);
    br.bn_gamma = Tensor<T>::full({bn_features}, T(1), true);
    br.bn_beta = Tensor<T>::full({bn_features}, T(0), true);
    br.bn = ops::BatchNormState<T>::init(bn_features);
    p.projector.push_back(std::move(br));
  }

  const auto& c = config.classifier;
  auto& cp = p.classifier;
  const std::size_t fan1 = maps * c.kernel_lengths[0];
  const std::size_t fan2 = c.filters[0] * c.kernel_lengths[1];
  const std::size_t dense_in = c.filters[1] * config.classifier_time();
  cp.conv1_w = uniform_tensor<T>({c.filters[0], maps, c.kernel_lengths[0]}, fan1, rng);
  cp.conv1_b = uniform_tensor<T>({c.filters[0]}, fan1, rng);
  cp.conv2_w = uniform_tensor<T>({c.filters[1], c.filters[0], c.kernel_lengths[1]}, fan2, rng);
  cp.conv2_b = uniform_tensor<T>({c.filters[1]}, fan2, rng);
  cp.dense_w = uniform_tensor<T>({dense_in, 1}, dense_in, rng);
  cp.dense_b = uniform_tensor<T>({1}, dense_in, rng);
  return p;
}

template struct ModelParams<float>;
template struct ModelParams<double>;
template ModelParams<float> init_params<float>(const ModelConfig&, std::uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, std::uint64_t);

}  // namespace erpcl
