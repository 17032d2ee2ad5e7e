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

#include "cdg/causal.hpp"

#include <cmath>

#include "cdg/error.hpp"
#include "cdg/model.hpp"

namespace cdg {

Logits softmax(const Logits& z) {
  const Logits e = (z.array() - z.maxCoeff()).exp().matrix();
  return e / e.sum();
}

BackdoorHead BackdoorHead::zeros(std::size_t d_rep, std::size_t strata, double tau,
                                 double epsilon) {
  BackdoorHead h;
  h.tau = tau;
  h.strata = strata;
  h.epsilon = epsilon;
  h.weights = Matrix::Zero(kNumClasses, static_cast<Eigen::Index>(d_rep));
  h.mu = Vector::Zero(static_cast<Eigen::Index>(d_rep));
  h.validate();
  return h;
}

void BackdoorHead::validate() const {
  if (!(tau > 0)) throw Error(ErrorCode::kInvalidArgument, "backdoor tau must be > 0");
  if (!(epsilon > 0)) throw Error(ErrorCode::kInvalidArgument, "backdoor epsilon must be > 0");
  if (strata == 0 || d_rep() == 0 || d_rep() % strata != 0) {
    throw Error(ErrorCode::kInvalidArgument,
                "strata count " + std::to_string(strata) + " must divide d_rep " +
                    std::to_string(d_rep()));
  }
  if (weights.rows() != kNumClasses || static_cast<std::size_t>(weights.cols()) != d_rep()) {
    throw Error(ErrorCode::kDimensionMismatch, "backdoor weights have the wrong shape");
  }
}

Logits backdoor_logits(const BackdoorHead& head, const Vector& r) {
  if (static_cast<std::size_t>(r.size()) != head.d_rep()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "representation has dimension " + std::to_string(r.size()) + ", head expects " +
                    std::to_string(head.d_rep()));
  }
  const auto len = static_cast<Eigen::Index>(head.chunk());
  Logits out = Logits::Zero();
  for (std::size_t k = 0; k < head.strata; ++k) {
    const Eigen::Index off = static_cast<Eigen::Index>(k) * len;
    const auto rk = r.segment(off, len);
    const auto mk = head.mu.segment(off, len);
    const double rn = rk.norm();
    const double mn = mk.norm();
    Vector diff = Vector::Zero(len);
    if (rn >= BackdoorHead::kNormFloor) diff += rk / rn;
    if (mn >= BackdoorHead::kNormFloor) diff -= mk / mn;
    for (int c = 0; c < kNumClasses; ++c) {
      const auto wk = head.weights.row(c).segment(off, len);
      out[c] += wk.dot(diff) / (wk.norm() + head.epsilon);
    }
  }
  return out * (head.tau / static_cast<double>(head.strata));
}

void update_confounder_mean(BackdoorHead& head, const Vector& batch_mean, double m) {
  if (!(m >= 0.0 && m < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confounder momentum must be in [0, 1)");
  }
  if (batch_mean.size() != head.mu.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "batch mean has the wrong dimension");
  }
  head.mu = m * head.mu + (1.0 - m) * batch_mean;
}

CounterfactualTerms counterfactual_terms(const BranchLogits& l, const CounterfactualBaseline& b) {
  CounterfactualTerms t;
  t.factual = fuse(l);
  t.no_aspect = fuse(BranchLogits{b.c_a, l.zeta_r, b.c_k});
  t.no_review = fuse(BranchLogits{l.zeta_a, b.c_r, b.c_k});
  t.void_inputs = fuse(BranchLogits{b.c_a, b.c_r, b.c_k});
  return t;
}

EffectEstimates effects_from_branches(const BranchLogits& l, const CounterfactualBaseline& b) {
  const CounterfactualTerms t = counterfactual_terms(l, b);
  EffectEstimates e;
  e.te = t.factual - t.void_inputs;
  e.nde_a = t.no_review - t.void_inputs;
  e.nde_r = t.no_aspect - t.void_inputs;
  // Four-term form, computed independently of te / nde_*.
  e.tie = t.factual - t.no_aspect - t.no_review + t.void_inputs;
  return e;
}

EffectEstimates effects(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                        const Embedder& embedder) {
  if (!m.ct || !m.baselines) {
    throw Error(ErrorCode::kModeMismatch, "effects need a causally trained model");
  }
  return effects_from_branches(forward_branches(m, review, aspect, embedder), *m.baselines);
}

std::string_view infer_mode_name(InferMode mode) {
  return mode == InferMode::kStandard ? "standard" : "tie";
}

Inference infer_from_branches(const AbsaModel& m, const BranchLogits& l, InferMode mode) {
  Inference out;
  if (mode == InferMode::kTie) {
    if (!m.ct || !m.baselines) {
      throw Error(ErrorCode::kModeMismatch, "tie inference needs a causally trained model");
    }
    out.scores = effects_from_branches(l, *m.baselines).tie;
  } else {
    out.scores = m.ct ? fuse(l) : l.zeta_r;
  }
  out.label = argmax_label(out.scores);
  return out;
}

Inference infer(const AbsaModel& m, const TokenSeq& review, const TokenSeq& aspect,
                InferMode mode, const Embedder& embedder) {
  if (mode == InferMode::kTie && (!m.ct || !m.baselines)) {
    throw Error(ErrorCode::kModeMismatch, "tie inference needs a causally trained model");
  }
  return infer_from_branches(m, forward_branches(m, review, aspect, embedder), mode);
}

}  // namespace cdg
