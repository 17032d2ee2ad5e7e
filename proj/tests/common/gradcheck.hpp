// Copyright 2026 The cdg Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Central finite-difference checks of the training-loss gradients.

#ifndef CDG_TESTS_GRADCHECK_HPP_
#define CDG_TESTS_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cdg/model.hpp"

namespace cdg::testing {

struct ParamBlock {
  std::string name;
  double* data;
  Eigen::Index size;
  bool baseline;
};

inline std::vector<ParamBlock> absa_params(AbsaModel& m) {
  std::vector<ParamBlock> out = {
      {"encoder.W1", m.encoder.W1.data(), m.encoder.W1.size(), false},
      {"encoder.W2", m.encoder.W2.data(), m.encoder.W2.size(), false},
      {"aspect.W", m.aspect_head.W.data(), m.aspect_head.W.size(), false},
      {"aspect.b", m.aspect_head.b.data(), 3, false},
      {"knowledge.W", m.knowledge_head.W.data(), m.knowledge_head.W.size(), false},
      {"knowledge.b", m.knowledge_head.b.data(), 3, false},
  };
  if (auto* h = std::get_if<LinearHead>(&m.review_head)) {
    out.push_back({"review.W", h->W.data(), h->W.size(), false});
    out.push_back({"review.b", h->b.data(), 3, false});
  } else {
    auto& bd = std::get<BackdoorHead>(m.review_head);
    out.push_back({"backdoor.W", bd.weights.data(), bd.weights.size(), false});
  }
  if (m.baselines) {
    out.push_back({"baseline.c_a", m.baselines->c_a.data(), 3, true});
    out.push_back({"baseline.c_r", m.baselines->c_r.data(), 3, true});
    out.push_back({"baseline.c_k", m.baselines->c_k.data(), 3, true});
  }
  return out;
}

struct GradCheck {
  // max over entries of |analytic - numeric| / max(|analytic|, |numeric|, floor)
  double max_rel = 0.0;
  std::size_t entries = 0;
};

inline constexpr double kFdStep = 1e-5;
// Entries whose true gradient is this small are compared in absolute terms;
// the central difference cannot resolve them better than ~1e-10.
inline constexpr double kRelFloor = 1e-6;

inline void accumulate(GradCheck& r, double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kRelFloor});
  r.max_rel = std::max(r.max_rel, std::abs(analytic - numeric) / denom);
  ++r.entries;
}

// A small model with every parameter (including mu and the baselines) drawn
// at random, so no term sits at a special point.
inline AbsaModel random_absa_model(std::mt19937_64& rng, bool ct, TrainConfig& cfg) {
  cfg.hidden = 5;
  cfg.d_rep = 4;
  cfg.strata_K = 2;
  cfg.seed = rng();
  std::normal_distribution<double> nd(0.0, 0.7);
  std::uniform_real_distribution<double> w(0.3, 1.5);
  cfg.branch_loss_weights = {w(rng), w(rng), w(rng), w(rng)};
  cfg.counterfactual_weight = w(rng);
  AbsaModel m = init_absa_model(6, cfg, ct);
  for (auto& p : absa_params(m)) {
    for (Eigen::Index i = 0; i < p.size; ++i) p.data[i] = nd(rng);
  }
  if (ct) {
    auto& bd = std::get<BackdoorHead>(m.review_head);
    for (Eigen::Index i = 0; i < bd.mu.size(); ++i) bd.mu[i] = nd(rng);
  }
  return m;
}

inline std::vector<AbsaInputs> random_inputs(std::mt19937_64& rng, std::size_t n, Eigen::Index dim) {
  std::normal_distribution<double> nd(0.0, 1.0);
  auto vec = [&] {
    Vector v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = nd(rng);
    return v;
  };
  std::vector<AbsaInputs> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({vec(), vec(), vec(), vec()});
  return out;
}

inline std::vector<Label> random_labels(std::mt19937_64& rng, std::size_t n) {
  std::vector<Label> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(label_from_index(static_cast<int>(rng() % 3)));
  return out;
}

// The joint loss is checked against every non-baseline parameter and the
// consistency loss against the baselines, which are its only trainable
// inputs.
inline GradCheck check_absa_gradient(AbsaModel m, const std::vector<AbsaInputs>& xs,
                                     const std::vector<Label>& ys, const TrainConfig& cfg) {
  AbsaModel grad;
  absa_loss(m, xs, ys, cfg, &grad);
  auto model_blocks = absa_params(m);
  const auto grad_blocks = absa_params(grad);
  GradCheck r;
  for (std::size_t b = 0; b < model_blocks.size(); ++b) {
    const ParamBlock& p = model_blocks[b];
    for (Eigen::Index i = 0; i < p.size; ++i) {
      const double saved = p.data[i];
      auto part = [&](const AbsaLossParts& l) { return p.baseline ? l.consistency : l.joint; };
      p.data[i] = saved + kFdStep;
      const double up = part(absa_loss(m, xs, ys, cfg, nullptr));
      p.data[i] = saved - kFdStep;
      const double down = part(absa_loss(m, xs, ys, cfg, nullptr));
      p.data[i] = saved;
      accumulate(r, grad_blocks[b].data[i], (up - down) / (2 * kFdStep));
    }
  }
  return r;
}

inline GradCheck check_classifier_gradient(ClassifierParams p, const std::vector<Vector>& xs,
                                           const std::vector<Label>& ys) {
  ClassifierParams g;
  classifier_loss(p, xs, ys, &g);
  GradCheck r;
  auto probe = [&](double* data, const double* gdata, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double saved = data[i];
      data[i] = saved + kFdStep;
      const double up = classifier_loss(p, xs, ys, nullptr);
      data[i] = saved - kFdStep;
      const double down = classifier_loss(p, xs, ys, nullptr);
      data[i] = saved;
      accumulate(r, gdata[i], (up - down) / (2 * kFdStep));
    }
  };
  probe(p.W.data(), g.W.data(), p.W.size());
  probe(p.b.data(), g.b.data(), 3);
  return r;
}

}  // namespace cdg::testing

#endif  // CDG_TESTS_GRADCHECK_HPP_
