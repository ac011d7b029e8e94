// src/viterbi.cc

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

#include "fhmmdec/viterbi.h"

#include <cmath>

#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"

namespace fhmmdec {

StatePath ViterbiDecode(const DecodingGraph& graph,
                        const ScoreMatrixView& scores,
                        const ViterbiOptions& opts) {
  if (scores.n_states != graph.n_states)
    throw ValidationError("viterbi: scores have " +
                          std::to_string(scores.n_states) +
                          " states, graph has " +
                          std::to_string(graph.n_states));
  if (scores.n_frames < 1)
    throw ValidationError("viterbi: need at least one frame");

  std::int32_t T = scores.n_frames, V = graph.n_states;
  std::size_t nv = static_cast<std::size_t>(V);

  std::vector<double> m(nv), m_next(nv);
  std::vector<std::int32_t> backptr(static_cast<std::size_t>(T) * nv, -1);

  for (std::int32_t v = 0; v < V; ++v)
    m[static_cast<std::size_t>(v)] =
        graph.initial[static_cast<std::size_t>(v)] + scores.At(0, v);

  auto check_alive = [&](const std::vector<double>& row, std::int32_t t) {
    for (double x : row)
      if (!IsLogZero(x)) return;
    throw NumericError("viterbi: no state reachable at frame " +
                       std::to_string(t));
  };
  check_alive(m, 0);

  for (std::int32_t t = 1; t < T; ++t) {
    if (std::isfinite(opts.beam)) {
      double best = MaxOf(m);
      for (double& x : m)
        if (x < best - opts.beam) x = kLogZero;
    }
    for (std::int32_t s = 0; s < V; ++s) {
      double best = kLogZero;
      std::int32_t best_src = -1;
      // arcs_in sources ascend, so strict > keeps the lowest index on ties.
      for (const auto& arc : graph.arcs_in[static_cast<std::size_t>(s)]) {
        double cand = m[static_cast<std::size_t>(arc.target)] + arc.log_prob;
        if (cand > best) {
          best = cand;
          best_src = arc.target;
        }
      }
      m_next[static_cast<std::size_t>(s)] =
          IsLogZero(best) ? kLogZero : best + scores.At(t, s);
      backptr[static_cast<std::size_t>(t) * nv + s] = best_src;
    }
    m.swap(m_next);
    check_alive(m, t);
  }

  std::int32_t best_state = 0;
  double best_score = kLogZero;
  for (std::int32_t v = 0; v < V; ++v) {
    if (m[static_cast<std::size_t>(v)] > best_score) {
      best_score = m[static_cast<std::size_t>(v)];
      best_state = v;
    }
  }

  StatePath path;
  path.score = best_score;
  path.states.assign(static_cast<std::size_t>(T), 0);
  path.states[static_cast<std::size_t>(T - 1)] = best_state;
  for (std::int32_t t = T - 1; t > 0; --t) {
    best_state = backptr[static_cast<std::size_t>(t) * nv + best_state];
    path.states[static_cast<std::size_t>(t - 1)] = best_state;
  }
  return path;
}

double ScorePath(const DecodingGraph& graph, const ScoreMatrixView& scores,
                 const std::vector<std::int32_t>& states) {
  double total = graph.initial[static_cast<std::size_t>(states[0])] +
                 scores.At(0, states[0]);
  for (std::size_t t = 1; t < states.size(); ++t) {
    total += graph.Transition(states[t - 1], states[t]) +
             scores.At(static_cast<std::int32_t>(t), states[t]);
  }
  return total;
}

std::vector<std::string> StatesToWords(const StatePath& path,
                                       const DecodingGraph& graph) {
  std::vector<std::string> words;
  std::size_t T = path.states.size();
  for (std::size_t t = 0; t < T; ++t) {
    std::int32_t s = path.states[t];
    std::int32_t w = graph.state_to_word[static_cast<std::size_t>(s)];
    if (w < 0) continue;
    bool exits = (t + 1 == T) || (path.states[t + 1] != s);
    if (exits) words.push_back(graph.WordLabel(w));
  }
  return words;
}

}  // namespace fhmmdec
