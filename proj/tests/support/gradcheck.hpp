#pragma once

// Central finite-difference check of fusion_net::backward, shared by the unit
// and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "llm3dti/fusion_net.hpp"
#include "llm3dti/random.hpp"

namespace gradcheck {

using namespace llm3dti;

struct Fixture {
  ModelInputs inputs;
  ModelParams params;
  std::vector<PairRows> batch;
  std::vector<double> y;
};

inline std::vector<std::string> make_ids(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// Random inputs for 4 drugs and 4 proteins, a batch of distinct pairs with
// both labels present.
inline Fixture make_fixture(std::uint64_t seed, const ModelDims& dims, std::size_t batch) {
  RandomStream s(seed);
  Fixture f;
  const std::size_t n = std::max<std::size_t>(4, batch);
  f.inputs.drugs = EntityIndex(make_ids("D", n));
  f.inputs.proteins = EntityIndex(make_ids("P", n));
  f.inputs.drug_struct = s.gaussian_matrix(n, dims.drug_struct);
  f.inputs.protein_struct = s.gaussian_matrix(n, dims.protein_struct);
  f.inputs.drug_text = s.gaussian_matrix(n, dims.text);
  f.inputs.protein_text = s.gaussian_matrix(n, dims.text);
  RandomStream init = s.derive("init");
  f.params = init_params(init, dims);
  // Non-zero biases so their gradients are exercised away from the init point.
  for (auto& t : f.params.tensors())
    for (auto& v : t.value->data()) v += 0.1 * s.gaussian();
  const auto perm = s.permutation(n);
  for (std::size_t i = 0; i < batch; ++i) {
    f.batch.push_back({i, perm[i]});
    f.y.push_back(i % 2 == 0 ? 1.0 : 0.0);
  }
  return f;
}

inline double loss_at(const Fixture& f, const LossSpec& spec, const ForwardOptions& opts) {
  const auto acts = forward(f.batch, f.inputs, f.params, opts);
  return loss(acts.probs, f.y, spec);
}

struct TensorError {
  std::string name;
  double rel_error = 0.0;
  double analytic_norm = 0.0;
};

// Relative error ‖a − n‖ / max(‖a‖, ‖n‖) per tensor; zero when both vanish.
inline std::vector<TensorError> check(Fixture f, const LossSpec& spec,
                                      const ForwardOptions& opts = {}, double step = 1e-5) {
  const auto acts = forward(f.batch, f.inputs, f.params, opts);
  const Gradients g = backward(acts, f.y, f.params, spec);
  const auto analytic = g.params.tensors();
  auto tensors = f.params.tensors();
  std::vector<TensorError> out;
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    auto values = tensors[t].value->data();
    const auto grad = analytic[t].value->data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double orig = values[k];
      values[k] = orig + step;
      const double up = loss_at(f, spec, opts);
      values[k] = orig - step;
      const double down = loss_at(f, spec, opts);
      values[k] = orig;
      const double numeric = (up - down) / (2.0 * step);
      diff2 += (grad[k] - numeric) * (grad[k] - numeric);
      a2 += grad[k] * grad[k];
      n2 += numeric * numeric;
    }
    const double denom = std::sqrt(std::max(a2, n2));
    out.push_back({tensors[t].name, denom < 1e-12 ? 0.0 : std::sqrt(diff2) / denom, std::sqrt(a2)});
  }
  return out;
}

inline double worst(const std::vector<TensorError>& errs) {
  double w = 0.0;
  for (const auto& e : errs) w = std::max(w, e.rel_error);
  return w;
}

}  // namespace gradcheck
