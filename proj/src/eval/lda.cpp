#include "erpcl/eval/lda.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "erpcl/error.hpp"

namespace erpcl {

double LdaModel::score(std::span<const double> x) const {
  if (x.size() != w.size()) throw ShapeError("lda: feature length mismatch");
  double s = b;
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
  return s;
}

LdaModel lda_fit(std::span<const double> features, std::size_t dim, std::span<const std::uint8_t> labels,
                 double shrinkage) {
  if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw ConfigError("lda: shrinkage must lie in [0, 1]");
  if (dim == 0 || features.size() != dim * labels.size()) throw ShapeError("lda: features must be n x dim");
  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> X(features.data(), n, d);

  Eigen::VectorXd mean[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  std::size_t count[2] = {0, 0};
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)] ? 1 : 0;
    mean[c] += X.row(i).transpose();
    ++count[c];
  }
  if (count[0] == 0 || count[1] == 0) throw DegenerateError("lda: both classes are required");
  mean[0] /= static_cast<double>(count[0]);
  mean[1] /= static_cast<double>(count[1]);

  Eigen::MatrixXd centered(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    centered.row(i) = X.row(i) - mean[labels[static_cast<std::size_t>(i)] ? 1 : 0].transpose();
  const double dof = std::max<double>(1.0, static_cast<double>(n) - 2.0);
  Eigen::MatrixXd sigma = (centered.transpose() * centered) / dof;
  const double nu = sigma.trace() / static_cast<double>(d);
  Eigen::MatrixXd S = (1.0 - shrinkage) * sigma;
  S.diagonal().array() += shrinkage * nu;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  const auto& ev = eig.eigenvalues();
  const double top = std::max(std::abs(ev.maxCoeff()), 1e-300);
  if (ev.minCoeff() <= top * 1e-10) {
    if (shrinkage == 0.0) throw DegenerateError("lda: singular covariance; use shrinkage > 0");
    throw DegenerateError("lda: singular covariance");
  }
  const Eigen::VectorXd diff = mean[1] - mean[0];
  const Eigen::VectorXd w = eig.eigenvectors() * (eig.eigenvalues().cwiseInverse().asDiagonal() *
                                                  (eig.eigenvectors().transpose() * diff));
  LdaModel model;
  model.w.assign(w.data(), w.data() + d);
  model.b = -0.5 * w.dot(mean[0] + mean[1]);
  return model;
}

std::vector<double> lda_features(const Trial& trial, std::uint32_t n_channels, std::uint32_t n_samples,
                                 std::uint32_t decimate) {
  if (decimate == 0) throw ConfigError("lda: decimate must be >= 1");
  if (trial.data.size() != static_cast<std::size_t>(n_channels) * n_samples) throw ShapeError("lda: trial size mismatch");
  const std::uint32_t windows = n_samples / decimate;
  if (windows == 0) throw ShapeError("lda: decimate exceeds trial length");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_channels) * windows);
  for (std::uint32_t c = 0; c < n_channels; ++c) {
    const float* row = trial.data.data() + static_cast<std::size_t>(c) * n_samples;
    for (std::uint32_t w = 0; w < windows; ++w) {
      double s = 0.0;
      for (std::uint32_t k = 0; k < decimate; ++k) s += row[w * decimate + k];
      out.push_back(s / decimate);
    }
  }
  return out;
}

std::vector<double> lda_baseline(const Dataset& train, const Dataset& test, const LdaOptions& options) {
  if (train.n_channels != test.n_channels || train.n_samples != test.n_samples)
    throw ShapeError("lda: train and test geometry differ");
  std::vector<double> features;
  std::vector<std::uint8_t> labels;
  std::size_t dim = 0;
  for (const auto& t : train.trials) {
    auto f = lda_features(t, train.n_channels, train.n_samples, options.decimate);
    dim = f.size();
    features.insert(features.end(), f.begin(), f.end());
    labels.push_back(t.label);
  }
  const LdaModel model = lda_fit(features, dim, labels, options.shrinkage);
  std::vector<double> scores;
  scores.reserve(test.trials.size());
  for (const auto& t : test.trials) scores.push_back(model.score(lda_features(t, test.n_channels, test.n_samples, options.decimate)));
  return scores;
}

}  // namespace erpcl
