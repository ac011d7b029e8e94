// src/lbp.cc

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

#include "fhmmdec/lbp.h"

#include <cmath>
#include <string>

#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"

namespace fhmmdec {

namespace {

struct SweepState {
  const DecodingGraph& graph;
  const JointPosteriors& joint;
  const LbpConfig& config;
  MessageSet& msgs;
  int sweep = 0;          // 0 during initialization
  double delta = 0.0;     // max message movement in the current sweep
  std::vector<double> scratch;
  std::vector<double> other_fwbw;  // fw + bw of the opposite speaker, T x V

  SweepState(const DecodingGraph& g, const JointPosteriors& j,
             const LbpConfig& c, MessageSet& m)
      : graph(g), joint(j), config(c), msgs(m) {
    scratch.resize(static_cast<std::size_t>(m.n_states));
    other_fwbw.resize(static_cast<std::size_t>(m.n_frames) * m.n_states);
  }

  // Normalizes scratch to max 0, applies damping against the stored vector,
  // tracks the movement, then commits.
  void Commit(std::vector<double>& stored, std::int32_t t, const char* name) {
    std::int32_t v_count = msgs.n_states;
    double m = MaxOf(scratch);
    if (IsLogZero(m) || !std::isfinite(m))
      throw NumericError("lbp: " + std::string(name) + " message collapsed at"
                         " sweep " + std::to_string(sweep) + ", frame " +
                         std::to_string(t));
    double* dst = stored.data() + static_cast<std::size_t>(t) * v_count;
    for (std::int32_t i = 0; i < v_count; ++i) {
      double nv = scratch[static_cast<std::size_t>(i)] - m;
      double ov = dst[i];
      if (config.damping > 0.0 && std::isfinite(nv) && std::isfinite(ov))
        nv = (1.0 - config.damping) * nv + config.damping * ov;
      double move;
      if (IsLogZero(nv) && IsLogZero(ov)) {
        move = 0.0;
      } else if (IsLogZero(nv) || IsLogZero(ov)) {
        move = std::numeric_limits<double>::infinity();
      } else {
        move = std::abs(nv - ov);
      }
      if (move > delta) delta = move;
      dst[i] = nv;
    }
  }

  // m1: emission maxed over the other speaker's state, weighted by that
  // speaker's current forward/backward messages.
  void UpdateAcoustic(int k) {
    std::int32_t T = msgs.n_frames, V = msgs.n_states;
    int o = 1 - k;
    for (std::size_t idx = 0; idx < other_fwbw.size(); ++idx)
      other_fwbw[idx] = msgs.forward[o][idx] + msgs.backward[o][idx];

    for (std::int32_t t = 0; t < T; ++t) {
      const double* weight =
          other_fwbw.data() + static_cast<std::size_t>(t) * V;
      const double* frame =
          joint.data.data() +
          static_cast<std::size_t>(t) * V * static_cast<std::size_t>(V);
      std::int32_t* arg =
          msgs.m1_arg[k].data() + static_cast<std::size_t>(t) * V;
      for (std::int32_t i = 0; i < V; ++i) {
        double best = kLogZero;
        std::int32_t best_j = 0;
        if (k == 0) {
          const double* row = frame + static_cast<std::size_t>(i) * V;
          for (std::int32_t j = 0; j < V; ++j) {
            double cand = row[j] + weight[j];
            if (cand > best) {
              best = cand;
              best_j = j;
            }
          }
        } else {
          const double* col = frame + i;
          for (std::int32_t j = 0; j < V; ++j) {
            double cand = col[static_cast<std::size_t>(j) * V] + weight[j];
            if (cand > best) {
              best = cand;
              best_j = j;
            }
          }
        }
        scratch[static_cast<std::size_t>(i)] = best;
        arg[i] = best_j;
      }
      Commit(msgs.acoustic[k], t, "acoustic");
    }
  }

  // m2: left-to-right chain recursion seeded by the initial vector.
  void UpdateForward(int k) {
    std::int32_t T = msgs.n_frames, V = msgs.n_states;
    for (std::int32_t i = 0; i < V; ++i)
      scratch[static_cast<std::size_t>(i)] =
          graph.initial[static_cast<std::size_t>(i)];
    Commit(msgs.forward[k], 0, "forward");

    for (std::int32_t t = 1; t < T; ++t) {
      const double* prev_fw =
          msgs.forward[k].data() + static_cast<std::size_t>(t - 1) * V;
      const double* prev_ac =
          msgs.acoustic[k].data() + static_cast<std::size_t>(t - 1) * V;
      std::int32_t* arg =
          msgs.m2_arg[k].data() + static_cast<std::size_t>(t) * V;
      for (std::int32_t i = 0; i < V; ++i) {
        double best = kLogZero;
        std::int32_t best_src = -1;
        for (const auto& arc : graph.arcs_in[static_cast<std::size_t>(i)]) {
          double cand = prev_fw[arc.target] + prev_ac[arc.target] +
                        arc.log_prob;
          if (cand > best) {
            best = cand;
            best_src = arc.target;
          }
        }
        scratch[static_cast<std::size_t>(i)] = best;
        arg[i] = best_src;
      }
      Commit(msgs.forward[k], t, "forward");
    }
  }

  // m3: right-to-left chain recursion, uniform at the last frame.
  void UpdateBackward(int k) {
    std::int32_t T = msgs.n_frames, V = msgs.n_states;
    for (std::int32_t i = 0; i < V; ++i)
      scratch[static_cast<std::size_t>(i)] = 0.0;
    Commit(msgs.backward[k], T - 1, "backward");

    for (std::int32_t t = T - 2; t >= 0; --t) {
      const double* next_bw =
          msgs.backward[k].data() + static_cast<std::size_t>(t + 1) * V;
      const double* next_ac =
          msgs.acoustic[k].data() + static_cast<std::size_t>(t + 1) * V;
      std::int32_t* arg =
          msgs.m3_arg[k].data() + static_cast<std::size_t>(t) * V;
      for (std::int32_t i = 0; i < V; ++i) {
        double best = kLogZero;
        std::int32_t best_succ = -1;
        for (const auto& arc : graph.arcs_out[static_cast<std::size_t>(i)]) {
          double cand = next_bw[arc.target] + next_ac[arc.target] +
                        arc.log_prob;
          if (cand > best) {
            best = cand;
            best_succ = arc.target;
          }
        }
        scratch[static_cast<std::size_t>(i)] = best;
        arg[i] = best_succ;
      }
      Commit(msgs.backward[k], t, "backward");
    }
  }

  void UpdateSpeaker(int k) {
    UpdateAcoustic(k);
    UpdateForward(k);
    UpdateBackward(k);
  }
};

StatePath BacktrackSpeaker(const DecodingGraph& graph, const MessageSet& msgs,
                           int k) {
  std::int32_t T = msgs.n_frames, V = msgs.n_states;
  const auto& fw = msgs.forward[k];
  const auto& bw = msgs.backward[k];
  const auto& ac = msgs.acoustic[k];

  std::size_t last = static_cast<std::size_t>(T - 1) * V;
  double best = kLogZero;
  std::int32_t best_state = -1;
  for (std::int32_t i = 0; i < V; ++i) {
    double cand = fw[last + i] + ac[last + i] + bw[last + i];
    if (cand > best) {
      best = cand;
      best_state = i;
    }
  }
  if (best_state < 0)
    throw NumericError("lbp: terminal frame has no live state for speaker " +
                       std::to_string(k));

  StatePath path;
  path.states.assign(static_cast<std::size_t>(T), 0);
  path.states[static_cast<std::size_t>(T - 1)] = best_state;
  for (std::int32_t t = T - 1; t > 0; --t) {
    best_state =
        msgs.m2_arg[k][static_cast<std::size_t>(t) * V + best_state];
    if (best_state < 0)
      throw NumericError("lbp: broken backpointer chain at frame " +
                         std::to_string(t) + " for speaker " +
                         std::to_string(k));
    path.states[static_cast<std::size_t>(t - 1)] = best_state;
  }
  path.score = graph.initial[static_cast<std::size_t>(path.states[0])];
  for (std::int32_t t = 1; t < T; ++t)
    path.score += graph.Transition(path.states[static_cast<std::size_t>(t - 1)],
                                   path.states[static_cast<std::size_t>(t)]);
  return path;
}

}  // namespace

LbpResult RunLbp(const DecodingGraph& graph, const JointPosteriors& joint,
                 const LbpConfig& config) {
  if (joint.n_states != graph.n_states)
    throw ValidationError("lbp: tensor has " + std::to_string(joint.n_states) +
                          " states, graph has " +
                          std::to_string(graph.n_states));
  if (config.max_sweeps < 1)
    throw ValidationError("lbp: max_sweeps must be at least 1");
  if (config.damping < 0.0 || config.damping >= 1.0)
    throw ValidationError("lbp: damping must be in [0, 1)");

  std::int32_t T = joint.n_frames, V = joint.n_states;
  std::size_t tv = static_cast<std::size_t>(T) * V;

  LbpResult res;
  MessageSet& msgs = res.messages;
  msgs.n_frames = T;
  msgs.n_states = V;
  for (int k = 0; k < 2; ++k) {
    msgs.acoustic[k].assign(tv, 0.0);
    msgs.forward[k].assign(tv, 0.0);
    msgs.backward[k].assign(tv, 0.0);
    msgs.m1_arg[k].assign(tv, 0);
    msgs.m2_arg[k].assign(tv, -1);
    msgs.m3_arg[k].assign(tv, -1);
  }

  SweepState sweep(graph, joint, config, msgs);

  // Initialization: uniform chain messages, acoustic seeded through m1.
  sweep.UpdateAcoustic(0);
  sweep.UpdateAcoustic(1);

  int first = config.schedule == SweepOrder::kAThenB ? 0 : 1;
  auto& diag = res.diagnostics;
  for (int s = 1; s <= config.max_sweeps; ++s) {
    sweep.sweep = s;
    sweep.delta = 0.0;
    sweep.UpdateSpeaker(first);
    sweep.UpdateSpeaker(1 - first);
    diag.sweeps_used = s;
    diag.final_delta = sweep.delta;
    if (sweep.delta < config.convergence_tol) {
      diag.converged = true;
      break;
    }
  }

  res.path.path_a = BacktrackSpeaker(graph, msgs, 0);
  res.path.path_b = BacktrackSpeaker(graph, msgs, 1);
  res.path.joint_score = ScoreJointPath(graph, joint, res.path.path_a.states,
                                        res.path.path_b.states);
  diag.joint_score = res.path.joint_score;
  return res;
}

JointPath LbpJointDecode(const DecodingGraph& graph,
                         const JointPosteriors& joint,
                         const LbpConfig& config, LbpDiagnostics* diag) {
  LbpResult res = RunLbp(graph, joint, config);
  if (diag != nullptr) *diag = res.diagnostics;
  return std::move(res.path);
}

SeparatePosteriors LbpPerSpeakerScores(const DecodingGraph& graph,
                                       const JointPosteriors& joint,
                                       const LbpConfig& config) {
  LbpResult res = RunLbp(graph, joint, config);
  std::int32_t T = joint.n_frames, V = joint.n_states;
  std::vector<double> data;
  data.reserve(2 * static_cast<std::size_t>(T) * V);
  for (int k = 0; k < 2; ++k) {
    for (std::int32_t t = 0; t < T; ++t) {
      std::span<const double> row(
          res.messages.acoustic[k].data() + static_cast<std::size_t>(t) * V,
          static_cast<std::size_t>(V));
      double lse = LogSumExp(row);
      for (double x : row) data.push_back(x - lse);
    }
  }
  return SeparatePosteriors::Create(2, T, V, std::move(data));
}

}  // namespace fhmmdec
