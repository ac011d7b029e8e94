// include/fhmmdec/lbp.h

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

#ifndef FHMMDEC_LBP_H_
#define FHMMDEC_LBP_H_

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "fhmmdec/graph.h"
#include "fhmmdec/joint_exact.h"
#include "fhmmdec/posteriors.h"

namespace fhmmdec {

// Max-product loopy BP working state for the two-chain factorial HMM.
// Three message families per speaker, all T x V in the log domain and
// max-normalized (vector max 0) after every update:
//   acoustic[k][t][i]  effective per-speaker emission, the joint emission
//                      maxed over the other speaker's state,
//   forward[k][t][i]   chain message from the left,
//   backward[k][t][i]  chain message from the right.
// The maximizing arguments are kept alongside: m1_arg (other-speaker state),
// m2_arg (predecessor), m3_arg (successor); decoding backtracks over m2_arg.
struct MessageSet {
  std::int32_t n_frames = 0;
  std::int32_t n_states = 0;
  std::array<std::vector<double>, 2> acoustic;
  std::array<std::vector<double>, 2> forward;
  std::array<std::vector<double>, 2> backward;
  std::array<std::vector<std::int32_t>, 2> m1_arg;
  std::array<std::vector<std::int32_t>, 2> m2_arg;
  std::array<std::vector<std::int32_t>, 2> m3_arg;

  double& At(std::vector<double>& mat, std::int32_t t, std::int32_t v) {
    return mat[static_cast<std::size_t>(t) * n_states + v];
  }
};

enum class SweepOrder { kAThenB, kBThenA };

struct LbpConfig {
  int max_sweeps = 10;
  // Convergence when no message entry moves by more than this over a full
  // two-speaker sweep.
  double convergence_tol = 1e-8;
  // Log-domain convex mixing of old into new messages; 0 = undamped.
  double damping = 0.0;
  SweepOrder schedule = SweepOrder::kAThenB;
};

struct LbpDiagnostics {
  int sweeps_used = 0;
  bool converged = false;
  double final_delta = std::numeric_limits<double>::infinity();
  double joint_score = 0.0;  // recomputed with the exact-joint scorer
};

struct LbpResult {
  JointPath path;
  LbpDiagnostics diagnostics;
  MessageSet messages;
};

// Runs the m1 -> m2 -> m3 schedule for one speaker, then the other, sweeping
// until convergence or config.max_sweeps. Initialization is uniform forward/
// backward messages for both speakers, acoustic messages seeded by m1 against
// those uniform messages. Each speaker's MAP path is then backtracked from
// its own chain's messages, Viterbi style; the cross-speaker coupling lives
// entirely in the converged acoustic messages.
//
// Throws NumericError (with the sweep index) if a message vector collapses to
// all -inf or goes non-finite.
LbpResult RunLbp(const DecodingGraph& graph, const JointPosteriors& joint,
                 const LbpConfig& config = {});

// RunLbp without the message dump.
JointPath LbpJointDecode(const DecodingGraph& graph,
                         const JointPosteriors& joint,
                         const LbpConfig& config, LbpDiagnostics* diag);

// Converged acoustic messages, logsumexp-renormalized per frame so they form
// valid per-speaker posterior streams (K = 2); drop-in input for
// ViterbiDecode when analyzing what the coupling did to each speaker.
SeparatePosteriors LbpPerSpeakerScores(const DecodingGraph& graph,
                                       const JointPosteriors& joint,
                                       const LbpConfig& config = {});

}  // namespace fhmmdec

#endif  // FHMMDEC_LBP_H_
