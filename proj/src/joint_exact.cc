// src/joint_exact.cc

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

#include "fhmmdec/joint_exact.h"

#include <cmath>
#include <string>
#include <vector>

#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"

namespace fhmmdec {

JointPath ExactJointDecode(const DecodingGraph& graph,
                           const JointPosteriors& joint,
                           const ExactJointOptions& opts) {
  if (joint.n_states != graph.n_states)
    throw ValidationError("exact joint: tensor has " +
                          std::to_string(joint.n_states) +
                          " states, graph has " +
                          std::to_string(graph.n_states));

  std::int32_t T = joint.n_frames, V = graph.n_states;
  if (V > opts.max_states || V > 65535)
    throw CapacityError("exact joint: V = " + std::to_string(V) +
                        " exceeds the product-space limit of " +
                        std::to_string(opts.max_states) +
                        "; use the LBP decoder");
  std::size_t cells = static_cast<std::size_t>(V) * V;
  std::uint64_t bp_bytes = 2ull * sizeof(std::uint16_t) *
                           static_cast<std::uint64_t>(T) * cells;
  if (bp_bytes > opts.max_backpointer_bytes)
    throw CapacityError("exact joint: backpointers need " +
                        std::to_string(bp_bytes) + " bytes, budget is " +
                        std::to_string(opts.max_backpointer_bytes) +
                        "; use the LBP decoder");

  // m[i*V + j] is the best score of any pair path ending in (i, j).
  std::vector<double> m(cells), stage(cells), m_next(cells);
  std::vector<std::uint16_t> stage_bp(cells);
  std::vector<std::uint16_t> bp_a(static_cast<std::size_t>(T) * cells);
  std::vector<std::uint16_t> bp_b(static_cast<std::size_t>(T) * cells);

  for (std::int32_t i = 0; i < V; ++i)
    for (std::int32_t j = 0; j < V; ++j)
      m[static_cast<std::size_t>(i) * V + j] =
          graph.initial[static_cast<std::size_t>(i)] +
          graph.initial[static_cast<std::size_t>(j)] + joint.At(0, i, j);

  auto check_alive = [&](const std::vector<double>& grid, std::int32_t t) {
    for (double x : grid)
      if (!IsLogZero(x)) return;
    throw NumericError("exact joint: no state pair reachable at frame " +
                       std::to_string(t));
  };
  check_alive(m, 0);

  for (std::int32_t t = 1; t < T; ++t) {
    // b-stage: best predecessor j' for each (i', j), lowest j' on ties.
    for (std::int32_t ip = 0; ip < V; ++ip) {
      const double* m_row = m.data() + static_cast<std::size_t>(ip) * V;
      double* stage_row = stage.data() + static_cast<std::size_t>(ip) * V;
      std::uint16_t* bp_row =
          stage_bp.data() + static_cast<std::size_t>(ip) * V;
      for (std::int32_t j = 0; j < V; ++j) {
        double best = kLogZero;
        std::int32_t best_jp = 0;
        for (const auto& arc : graph.arcs_in[static_cast<std::size_t>(j)]) {
          double cand = m_row[arc.target] + arc.log_prob;
          if (cand > best) {
            best = cand;
            best_jp = arc.target;
          }
        }
        stage_row[j] = best;
        bp_row[j] = static_cast<std::uint16_t>(best_jp);
      }
    }
    // a-stage: best predecessor i' for each (i, j), lowest i' on ties.
    // Lowest-i'-then-lowest-j' equals the lexicographic (a, b) rule.
    std::size_t t_off = static_cast<std::size_t>(t) * cells;
    for (std::int32_t i = 0; i < V; ++i) {
      double* out_row = m_next.data() + static_cast<std::size_t>(i) * V;
      const double* e_row =
          joint.data.data() + t_off + static_cast<std::size_t>(i) * V;
      std::uint16_t* bpa_row =
          bp_a.data() + t_off + static_cast<std::size_t>(i) * V;
      std::uint16_t* bpb_row =
          bp_b.data() + t_off + static_cast<std::size_t>(i) * V;
      const auto& in_arcs = graph.arcs_in[static_cast<std::size_t>(i)];
      for (std::int32_t j = 0; j < V; ++j) {
        double best = kLogZero;
        std::int32_t best_ip = 0;
        for (const auto& arc : in_arcs) {
          double cand =
              stage[static_cast<std::size_t>(arc.target) * V + j] +
              arc.log_prob;
          if (cand > best) {
            best = cand;
            best_ip = arc.target;
          }
        }
        out_row[j] = IsLogZero(best) ? kLogZero : best + e_row[j];
        bpa_row[j] = static_cast<std::uint16_t>(best_ip);
        bpb_row[j] = stage_bp[static_cast<std::size_t>(best_ip) * V + j];
      }
    }
    m.swap(m_next);
    check_alive(m, t);
  }

  std::int32_t best_i = 0, best_j = 0;
  double best = kLogZero;
  for (std::int32_t i = 0; i < V; ++i) {
    for (std::int32_t j = 0; j < V; ++j) {
      double cand = m[static_cast<std::size_t>(i) * V + j];
      if (cand > best) {
        best = cand;
        best_i = i;
        best_j = j;
      }
    }
  }

  JointPath out;
  out.joint_score = best;
  out.path_a.states.assign(static_cast<std::size_t>(T), 0);
  out.path_b.states.assign(static_cast<std::size_t>(T), 0);
  out.path_a.states[static_cast<std::size_t>(T - 1)] = best_i;
  out.path_b.states[static_cast<std::size_t>(T - 1)] = best_j;
  for (std::int32_t t = T - 1; t > 0; --t) {
    std::size_t idx = static_cast<std::size_t>(t) * cells +
                      static_cast<std::size_t>(best_i) * V + best_j;
    std::int32_t prev_i = bp_a[idx];
    std::int32_t prev_j = bp_b[idx];
    out.path_a.states[static_cast<std::size_t>(t - 1)] = prev_i;
    out.path_b.states[static_cast<std::size_t>(t - 1)] = prev_j;
    best_i = prev_i;
    best_j = prev_j;
  }

  // Per-chain scores carry only that chain's initial and transition terms;
  // emissions belong to the pair and live in joint_score.
  auto chain_score = [&](const std::vector<std::int32_t>& states) {
    double s = graph.initial[static_cast<std::size_t>(states[0])];
    for (std::size_t t = 1; t < states.size(); ++t)
      s += graph.Transition(states[t - 1], states[t]);
    return s;
  };
  out.path_a.score = chain_score(out.path_a.states);
  out.path_b.score = chain_score(out.path_b.states);
  return out;
}

double ScoreJointPath(const DecodingGraph& graph, const JointPosteriors& joint,
                      const std::vector<std::int32_t>& states_a,
                      const std::vector<std::int32_t>& states_b) {
  double total = graph.initial[static_cast<std::size_t>(states_a[0])] +
                 graph.initial[static_cast<std::size_t>(states_b[0])] +
                 joint.At(0, states_a[0], states_b[0]);
  for (std::size_t t = 1; t < states_a.size(); ++t) {
    total += graph.Transition(states_a[t - 1], states_a[t]) +
             graph.Transition(states_b[t - 1], states_b[t]) +
             joint.At(static_cast<std::int32_t>(t), states_a[t], states_b[t]);
  }
  return total;
}

}  // namespace fhmmdec
