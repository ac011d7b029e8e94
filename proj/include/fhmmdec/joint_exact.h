// include/fhmmdec/joint_exact.h

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef FHMMDEC_JOINT_EXACT_H_
#define FHMMDEC_JOINT_EXACT_H_

#include <cstdint>

#include "fhmmdec/graph.h"
#include "fhmmdec/posteriors.h"
#include "fhmmdec/viterbi.h"

namespace fhmmdec {

// A pair of state paths through the shared graph plus the joint objective
// value: both chains' initial and transition terms plus the per-frame joint
// emission read at the path's state pair.
struct JointPath {
  StatePath path_a;
  StatePath path_b;
  double joint_score = 0.0;
};

struct ExactJointOptions {
  // The product space has V^2 states per frame; refuse instances above this.
  std::int32_t max_states = 256;
  // Two u16 backpointer tables of T*V^2 entries each.
  std::uint64_t max_backpointer_bytes = 2ull << 30;
};

// Exact MAP decoding over the two-speaker product state space. Ties break
// lexicographically toward the lowest (a-state, b-state) pair at every max;
// the per-step max over predecessor pairs is factored into a b-stage then an
// a-stage, so a frame costs O(V * E) instead of O(V^4).
//
// Throws CapacityError when the instance exceeds the configured budget.
JointPath ExactJointDecode(const DecodingGraph& graph,
                           const JointPosteriors& joint,
                           const ExactJointOptions& opts = {});

// Recomputes the joint objective for an arbitrary path pair.
double ScoreJointPath(const DecodingGraph& graph, const JointPosteriors& joint,
                      const std::vector<std::int32_t>& states_a,
                      const std::vector<std::int32_t>& states_b);

}  // namespace fhmmdec

#endif  // FHMMDEC_JOINT_EXACT_H_
