#include "erpcl/contrastive/loss.hpp"

#include "erpcl/error.hpp"

namespace erpcl::contrastive {

void LossConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
}

template <class T>
Tensor<T> ntxent_per_anchor(Tape<T>& tape, const Tensor<T>& anchor, std::span<const Candidate<T>> candidates,
                            double temperature) {
  if (candidates.empty()) throw ConfigError("ntxent_per_anchor: no candidates");
  std::size_t positive = candidates.size();
  std::size_t n_pos = 0;
  std::vector<Tensor<T>> sims;
  sims.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i].positive) {
      positive = i;
      ++n_pos;
    }
    sims.push_back(ops::cosine_sim(tape, anchor, candidates[i].embedding));
  }
  if (n_pos != 1) {
    throw ConfigError("ntxent_per_anchor: expected exactly one positive candidate, got " + std::to_string(n_pos));
  }
  return ops::softmax_xent(tape, ops::stack(tape, sims), positive, temperature);
}

namespace {

template <class T>
void add_terms(Tape<T>& tape, const std::vector<LabeledEmbedding<T>>& anchors,
               const std::vector<LabeledEmbedding<T>>& others, double tau, std::vector<Tensor<T>>& terms) {
  std::vector<Candidate<T>> candidates;
  for (const auto& pos : others) {
    if (!pos.erp) continue;
    candidates.clear();
    candidates.push_back({pos.embedding, true});
    for (const auto& o : others)
      if (!o.erp) candidates.push_back({o.embedding, false});
    for (const auto& a : anchors) {
      if (!a.erp) continue;
      terms.push_back(ntxent_per_anchor<T>(tape, a.embedding, candidates, tau));
    }
  }
}

template <class T>
bool has_erp(const std::vector<LabeledEmbedding<T>>& xs) {
  for (const auto& x : xs)
    if (x.erp) return true;
  return false;
}

}  // namespace

template <class T>
Tensor<T> batch_loss(Tape<T>& tape, const PairEmbeddings<T>& batch, const LossConfig& config) {
  config.validate();
  if (!has_erp(batch.a) || !has_erp(batch.b)) {
    throw SamplingError("batch_loss: each subject of the pair needs at least one ERP embedding");
  }
  std::vector<Tensor<T>> terms;
  add_terms(tape, batch.a, batch.b, config.temperature, terms);
  add_terms(tape, batch.b, batch.a, config.temperature, terms);
  return ops::sum(tape, ops::stack(tape, terms));
}

template Tensor<float> ntxent_per_anchor(Tape<float>&, const Tensor<float>&, std::span<const Candidate<float>>, double);
template Tensor<double> ntxent_per_anchor(Tape<double>&, const Tensor<double>&, std::span<const Candidate<double>>,
                                          double);
template Tensor<float> batch_loss(Tape<float>&, const PairEmbeddings<float>&, const LossConfig&);
template Tensor<double> batch_loss(Tape<double>&, const PairEmbeddings<double>&, const LossConfig&);

}  // namespace erpcl::contrastive
