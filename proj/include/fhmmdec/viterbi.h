// include/fhmmdec/viterbi.h

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

#ifndef FHMMDEC_VITERBI_H_
#define FHMMDEC_VITERBI_H_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fhmmdec/graph.h"
#include "fhmmdec/posteriors.h"

namespace fhmmdec {

// MAP state sequence and its total log score
// (initial + transitions + per-frame emissions).
struct StatePath {
  std::vector<std::int32_t> states;
  double score = 0.0;
};

struct ViterbiOptions {
  // Prune states whose forward score falls more than this below the frame
  // maximum. Off by default; the reference decoder is exact.
  double beam = std::numeric_limits<double>::infinity();
};

// Forward max-product recursion with backpointers. The emission score of
// frame t is charged to the state occupied at frame t, including the final
// frame before the termination argmax. Every max breaks ties toward the
// lowest state index; with backtracking this yields the optimal path that is
// lexicographically smallest when frames are compared from t = T-1 down to 0.
//
// Throws NumericError naming the first frame at which every reachable state
// has score -inf.
StatePath ViterbiDecode(const DecodingGraph& graph,
                        const ScoreMatrixView& scores,
                        const ViterbiOptions& opts = {});

// Recomputes a path's score from scratch; decoder output matches within
// 1e-9. Returns -inf for paths that use impossible transitions.
double ScorePath(const DecodingGraph& graph, const ScoreMatrixView& scores,
                 const std::vector<std::int32_t>& states);

// Reads the word sequence off a state path: a word is emitted every time the
// path leaves a word-final state (or ends on one). Silence emits nothing.
std::vector<std::string> StatesToWords(const StatePath& path,
                                       const DecodingGraph& graph);

}  // namespace fhmmdec

#endif  // FHMMDEC_VITERBI_H_
