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

// Causal inference core for aspect-level sentiment.
//
// The causal graph is fixed: a contextual confounder C influences the review
// R and the label L; the aspect A and review R feed a fused knowledge node K;
// A, R and K all point to L. Two interventions are applied:
//
//   * Backdoor adjustment on C -> R -> L. The review representation r is cut
//     into K equal strata; each stratum and the matching stratum of a
//     running training-set mean are unit-normalized, and the class score is
//
//       zeta_r'[c] = (tau / K) * sum_k  w_ck / (|w_ck| + eps) . (r_k/|r_k| - mu_k/|mu_k|)
//
//   * Counterfactual contrast on the direct A -> L path. Each branch has a
//     learned constant "void input" output (the baseline). With the fused
//     score L(a, r, k) = zeta_k + tanh(zeta_a) + tanh(zeta_r'):
//
//       TE    = L(a, r, k)   - L(a*, r*, k*)
//       NDE_a = L(a, r*, k*) - L(a*, r*, k*)
//       NDE_r = L(a*, r, k*) - L(a*, r*, k*)
//       TIE   = L(a, r, k) - L(a*, r, k*) - L(a, r*, k*) + L(a*, r*, k*)
//
//     and TIE = TE - NDE_a - NDE_r. Because the fusion is additive, TIE
//     reduces to zeta_k - c_k exactly; the four-term form is still evaluated
//     so that a different fusion can be dropped in.

#ifndef CDG_CAUSAL_HPP_
#define CDG_CAUSAL_HPP_

#include <cstddef>

#include "cdg/logits.hpp"
#include "cdg/text.hpp"

namespace cdg {

struct AbsaModel;

struct BackdoorHead {
  static constexpr double kNormFloor = 1e-12;

  double tau = 0.1;
  std::size_t strata = 4;
  double epsilon = 1e-8;
  // Row c is the concatenation of the per-stratum vectors w_c1 ... w_cK.
  Matrix weights;
  // Confounder running mean over review representations.
  Vector mu;

  static BackdoorHead zeros(std::size_t d_rep, std::size_t strata, double tau,
                            double epsilon = 1e-8);

  std::size_t d_rep() const { return static_cast<std::size_t>(mu.size()); }
  std::size_t chunk() const { return d_rep() / strata; }
  void validate() const;
};

Logits backdoor_logits(const BackdoorHead& head, const Vector& r);

// mu <- m * mu + (1 - m) * batch_mean. Training only.
void update_confounder_mean(BackdoorHead& head, const Vector& batch_mean, double m);

struct CounterfactualBaseline {
  Logits c_a = Logits::Zero();
  Logits c_r = Logits::Zero();
  Logits c_k = Logits::Zero();
};

struct EffectEstimates {
  Logits te = Logits::Zero();
  Logits nde_a = Logits::Zero();
  Logits nde_r = Logits::Zero();
  Logits tie = Logits::Zero();
};

// The four fused terms of the counterfactual contrast.
struct CounterfactualTerms {
  Logits factual;        // L(a, r, k)
  Logits no_aspect;      // L(a*, r, k*)
  Logits no_review;      // L(a, r*, k*)
  Logits void_inputs;    // L(a*, r*, k*)
};

CounterfactualTerms counterfactual_terms(const BranchLogits& l, const CounterfactualBaseline& b);
EffectEstimates effects_from_branches(const BranchLogits& l, const CounterfactualBaseline& b);

// Throws kModeMismatch on a model trained without causal training.
EffectEstimates effects(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                        const Embedder& embedder);

enum class InferMode { kStandard, kTie };
std::string_view infer_mode_name(InferMode mode);

struct Inference {
  Label label = Label::kPositive;
  Logits scores = Logits::Zero();
};

// Standard: argmax of the fused score (causal model) or of the single head.
// Tie: argmax of the total indirect effect; causal models only.
Inference infer_from_branches(const AbsaModel& m, const BranchLogits& l, InferMode mode);
Inference infer(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                InferMode mode, const Embedder& embedder);

}  // namespace cdg

#endif  // CDG_CAUSAL_HPP_
