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

#ifndef CDG_LOGITS_HPP_
#define CDG_LOGITS_HPP_

#include <Eigen/Core>

#include "cdg/corpus.hpp"

namespace cdg {

// Per-class scores, indexed by label_index().
using Logits = Eigen::Vector3d;

// Outputs of the three causal branches for one (review, aspect) input.
// zeta_r is the backdoor-adjusted review logit when the model was trained
// causally and the plain review head otherwise.
struct BranchLogits {
  Logits zeta_a = Logits::Zero();
  Logits zeta_r = Logits::Zero();
  Logits zeta_k = Logits::Zero();
};

// Ties resolve to the lowest class index (positive < negative < neutral).
inline Label argmax_label(const Logits& z) {
  int best = 0;
  for (int c = 1; c < kNumClasses; ++c) {
    if (z[c] > z[best]) best = c;
  }
  return label_from_index(best);
}

Logits softmax(const Logits& z);

}  // namespace cdg

#endif  // CDG_LOGITS_HPP_
