// src/synthgen.cc

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

#include "fhmmdec/synthgen.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"
#include "fhmmdec/scoring.h"

namespace fhmmdec {

namespace {

void CheckConfig(const GenConfig& c) {
  if (c.digits_min < 1 || c.digits_max < c.digits_min)
    throw ValidationError("generator: digits range must satisfy 1 <= min <= "
                          "max");
  if (!(c.frames_per_state_mean >= 1.0))
    throw ValidationError("generator: frames_per_state_mean must be >= 1");
  if (!(c.kappa > 0.0))
    throw ValidationError("generator: kappa must be positive");
  for (double g : {c.gamma, c.gamma_same})
    if (g < 0.0 || g > 1.0)
      throw ValidationError("generator: gamma must lie in [0, 1]");
  if (c.factorized_fraction < 0.0 || c.factorized_fraction > 1.0)
    throw ValidationError("generator: factorized_fraction must lie in [0, 1]");
  if (c.same_gender_fraction < 0.0 || c.same_gender_fraction > 1.0)
    throw ValidationError("generator: same_gender_fraction must lie in [0, 1]");
  if (c.silence_between_prob < 0.0 || c.silence_between_prob > 1.0)
    throw ValidationError("generator: silence_between_prob must lie in [0, 1]");
  if (c.gamma_persist < 0.0 || c.gamma_persist >= 1.0)
    throw ValidationError("generator: gamma_persist must lie in [0, 1)");
  if (c.swap_persist < 0.0 || c.swap_persist >= 1.0)
    throw ValidationError("generator: swap_persist must lie in [0, 1)");
}

// Dwell >= 1, geometric with the configured mean.
int SampleDwell(double mean, std::mt19937_64& rng) {
  if (mean <= 1.0) return 1;
  std::geometric_distribution<int> extra(1.0 / mean);
  return 1 + extra(rng);
}

double SampleBeta(double a, double b, std::mt19937_64& rng) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  double x = ga(rng), y = gb(rng);
  if (x + y <= 0.0) return a / (a + b);
  return x / (x + y);
}

// Slowly drifting per-frame confusion level around gamma_mean.
class ConfusionTrack {
 public:
  ConfusionTrack(const GenConfig& cfg, double gamma_mean, std::mt19937_64& rng)
      : cfg_(cfg), mean_(gamma_mean), rng_(rng) {
    current_ = Draw();
  }

  double Next() {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng_) >= cfg_.gamma_persist) current_ = Draw();
    return current_;
  }

 private:
  double Draw() {
    if (cfg_.gamma_concentration <= 0.0 || mean_ <= 0.0 || mean_ >= 1.0)
      return mean_;
    double c = cfg_.gamma_concentration;
    return SampleBeta(mean_ * c, (1.0 - mean_) * c, rng_);
  }

  const GenConfig& cfg_;
  double mean_;
  std::mt19937_64& rng_;
  double current_;
};

// Signal fraction of a frame's mass; the rest is Dirichlet smoothing.
double SignalMass(double kappa) {
  if (std::isinf(kappa)) return 1.0;
  return kappa / (kappa + 1.0);
}

// Adds (1 - signal) of smoothing mass from a symmetric Dirichlet(1/kappa)
// draw over the `cells` slots of `frame`.
void AddDirichletSmoothing(std::vector<double>& frame, double kappa,
                           std::mt19937_64& rng) {
  double eps = 1.0 - SignalMass(kappa);
  if (eps <= 0.0) return;
  double alpha = 1.0 / kappa;
  std::gamma_distribution<double> gamma_draw(alpha, 1.0);
  std::vector<double> g(frame.size());
  double sum = 0.0;
  for (double& x : g) {
    x = gamma_draw(rng);
    sum += x;
  }
  if (sum <= 0.0) {
    // Every draw underflowed; fall back to a uniform spread.
    for (double& x : frame) x += eps / static_cast<double>(frame.size());
    return;
  }
  for (std::size_t i = 0; i < frame.size(); ++i) frame[i] += eps * g[i] / sum;
}

}  // namespace

std::uint64_t DeriveUttSeed(std::uint64_t corpus_seed, int utt_index) {
  // splitmix64 over (seed, index) so per-utterance streams never overlap.
  std::uint64_t z = corpus_seed + 0x9e3779b97f4a7c15ull *
                                      (static_cast<std::uint64_t>(utt_index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string UttId(int utt_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "utt%05d", utt_index);
  return buf;
}

std::array<SpeakerTruth, 2> SamplePaths(const DecodingGraph& graph,
                                        const GenConfig& config,
                                        std::mt19937_64& rng) {
  CheckConfig(config);
  if (graph.word_labels.empty())
    throw ValidationError("generator: graph has no words");

  std::vector<double> weights;
  for (double lw : graph.word_log_weight) weights.push_back(std::exp(lw));
  std::discrete_distribution<int> word_dist(weights.begin(), weights.end());
  std::uniform_int_distribution<int> count_dist(config.digits_min,
                                                config.digits_max);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool has_sil = graph.silence_start >= 0;

  auto dwell_through = [&](std::vector<std::int32_t>& states,
                           std::int32_t first, std::int32_t last) {
    for (std::int32_t s = first; s <= last; ++s) {
      int d = SampleDwell(config.frames_per_state_mean, rng);
      for (int i = 0; i < d; ++i) states.push_back(s);
    }
  };

  std::array<SpeakerTruth, 2> out;
  for (auto& spk : out) {
    int n_words = count_dist(rng);
    std::vector<std::int32_t>& states = spk.path.states;
    if (has_sil)
      dwell_through(states, graph.silence_start, graph.silence_final);
    for (int w = 0; w < n_words; ++w) {
      int wi = word_dist(rng);
      spk.words.push_back(graph.word_labels[static_cast<std::size_t>(wi)]);
      dwell_through(states,
                    graph.word_start_state[static_cast<std::size_t>(wi)],
                    graph.word_final_state[static_cast<std::size_t>(wi)]);
      bool last_word = w + 1 == n_words;
      bool insert_sil =
          has_sil && (last_word || u(rng) < config.silence_between_prob);
      if (insert_sil)
        dwell_through(states, graph.silence_start, graph.silence_final);
    }
  }

  // Pad the shorter path by dwelling in its final state.
  std::size_t T = std::max(out[0].path.states.size(),
                           out[1].path.states.size());
  for (auto& spk : out) {
    std::int32_t last = spk.path.states.back();
    if (spk.path.states.size() < T &&
        IsLogZero(graph.Transition(last, last)))
      throw ValidationError("generator: final state " + std::to_string(last) +
                            " has no self-loop, cannot pad");
    while (spk.path.states.size() < T) spk.path.states.push_back(last);
  }

  for (auto& spk : out) {
    spk.path.score = graph.initial[static_cast<std::size_t>(
        spk.path.states[0])];
    for (std::size_t t = 1; t < spk.path.states.size(); ++t)
      spk.path.score +=
          graph.Transition(spk.path.states[t - 1], spk.path.states[t]);
  }
  return out;
}

JointPosteriors EmitJointPosteriors(const std::array<StatePath, 2>& paths,
                                    std::int32_t n_states,
                                    const GenConfig& config, double gamma_mean,
                                    std::mt19937_64& rng) {
  CheckConfig(config);
  if (paths[0].states.size() != paths[1].states.size())
    throw ValidationError("generator: paths differ in length");
  std::int32_t T = static_cast<std::int32_t>(paths[0].states.size());
  std::int32_t V = n_states;
  std::size_t cells = static_cast<std::size_t>(V) * V;

  std::vector<double> data(static_cast<std::size_t>(T) * cells);
  std::vector<double> frame(cells);
  std::vector<double> marg_a(static_cast<std::size_t>(V)),
      marg_b(static_cast<std::size_t>(V));
  ConfusionTrack track(config, gamma_mean, rng);
  double signal = SignalMass(config.kappa);

  for (std::int32_t t = 0; t < T; ++t) {
    std::int32_t la = paths[0].states[static_cast<std::size_t>(t)];
    std::int32_t lb = paths[1].states[static_cast<std::size_t>(t)];
    double g = track.Next();

    std::fill(frame.begin(), frame.end(), 0.0);
    frame[static_cast<std::size_t>(la) * V + lb] += signal * (1.0 - g);
    frame[static_cast<std::size_t>(lb) * V + la] += signal * g;
    AddDirichletSmoothing(frame, config.kappa, rng);

    if (config.factorized_fraction > 0.0) {
      double f = config.factorized_fraction;
      std::fill(marg_a.begin(), marg_a.end(), 0.0);
      std::fill(marg_b.begin(), marg_b.end(), 0.0);
      for (std::int32_t i = 0; i < V; ++i)
        for (std::int32_t j = 0; j < V; ++j) {
          double p = frame[static_cast<std::size_t>(i) * V + j];
          marg_a[static_cast<std::size_t>(i)] += p;
          marg_b[static_cast<std::size_t>(j)] += p;
        }
      for (std::int32_t i = 0; i < V; ++i)
        for (std::int32_t j = 0; j < V; ++j) {
          double& cell = frame[static_cast<std::size_t>(i) * V + j];
          cell = (1.0 - f) * cell + f * marg_a[static_cast<std::size_t>(i)] *
                                        marg_b[static_cast<std::size_t>(j)];
        }
    }

    double* dst = data.data() + static_cast<std::size_t>(t) * cells;
    for (std::size_t c = 0; c < cells; ++c)
      dst[c] = frame[c] > 0.0 ? std::log(frame[c]) : kLogZero;
  }

  QuantizeNormalizeRows(data, cells);
  return JointPosteriors::Create(T, V, std::move(data));
}

SeparatePosteriors EmitSeparatePosteriors(
    const std::array<StatePath, 2>& paths, std::int32_t n_states,
    const GenConfig& config, double gamma_mean, std::mt19937_64& rng) {
  CheckConfig(config);
  if (paths[0].states.size() != paths[1].states.size())
    throw ValidationError("generator: paths differ in length");
  std::int32_t T = static_cast<std::int32_t>(paths[0].states.size());
  std::int32_t V = n_states;
  std::size_t nv = static_cast<std::size_t>(V);

  // Markov swap indicator with stationary probability gamma_mean.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<char> swapped(static_cast<std::size_t>(T), 0);
  bool z = u(rng) < gamma_mean;
  double flip_on = (1.0 - config.swap_persist) * gamma_mean;
  double flip_off = (1.0 - config.swap_persist) * (1.0 - gamma_mean);
  for (std::int32_t t = 0; t < T; ++t) {
    swapped[static_cast<std::size_t>(t)] = z ? 1 : 0;
    double flip = z ? flip_off : flip_on;
    if (u(rng) < flip) z = !z;
  }

  double signal = SignalMass(config.kappa);
  std::vector<double> data(2 * static_cast<std::size_t>(T) * nv);
  std::vector<double> row(nv);
  for (int k = 0; k < 2; ++k) {
    for (std::int32_t t = 0; t < T; ++t) {
      std::int32_t own = paths[static_cast<std::size_t>(k)]
                             .states[static_cast<std::size_t>(t)];
      std::int32_t other = paths[static_cast<std::size_t>(1 - k)]
                               .states[static_cast<std::size_t>(t)];
      std::int32_t target = swapped[static_cast<std::size_t>(t)] ? other : own;
      std::fill(row.begin(), row.end(), 0.0);
      row[static_cast<std::size_t>(target)] += signal;
      AddDirichletSmoothing(row, config.kappa, rng);
      double* dst =
          data.data() + (static_cast<std::size_t>(k) * T + t) * nv;
      for (std::size_t i = 0; i < nv; ++i)
        dst[i] = row[i] > 0.0 ? std::log(row[i]) : kLogZero;
    }
  }

  QuantizeNormalizeRows(data, nv);
  return SeparatePosteriors::Create(2, T, V, std::move(data));
}

MixtureInstance GenerateUtterance(const DecodingGraph& graph,
                                  const GenConfig& config, int utt_index) {
  CheckConfig(config);
  MixtureInstance inst;
  inst.utt_id = UttId(utt_index);
  inst.utt_seed = DeriveUttSeed(config.seed, utt_index);
  inst.config = config;
  std::mt19937_64 rng(inst.utt_seed);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  bool same = u(rng) < config.same_gender_fraction;
  char g0 = u(rng) < 0.5 ? 'F' : 'M';
  inst.genders[0] = g0;
  inst.genders[1] = same ? g0 : (g0 == 'F' ? 'M' : 'F');
  inst.gamma_used = same ? config.gamma_same : config.gamma;

  auto truth = SamplePaths(graph, config, rng);
  inst.words[0] = std::move(truth[0].words);
  inst.words[1] = std::move(truth[1].words);
  inst.paths[0] = std::move(truth[0].path);
  inst.paths[1] = std::move(truth[1].path);

  inst.joint = EmitJointPosteriors(inst.paths, graph.n_states, config,
                                   inst.gamma_used, rng);
  if (config.emit_separate)
    inst.separate = EmitSeparatePosteriors(inst.paths, graph.n_states, config,
                                           inst.gamma_used, rng);
  return inst;
}

CorpusStats GenerateCorpus(const DecodingGraph& graph, const GenConfig& config,
                           const std::string& out_dir, int n_threads) {
  CheckConfig(config);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "joint", ec);
  if (ec) throw IoError("cannot create " + out_dir + "/joint");
  if (config.emit_separate) {
    fs::create_directories(fs::path(out_dir) / "separate", ec);
    if (ec) throw IoError("cannot create " + out_dir + "/separate");
  }

  struct Meta {
    std::string utt_id;
    std::int32_t n_frames = 0;
    std::array<char, 2> genders = {'?', '?'};
    std::array<std::vector<std::string>, 2> words;
    double gamma_used = 0.0;
    std::uint64_t utt_seed = 0;
    std::size_t n_words = 0;
  };
  std::vector<Meta> metas(static_cast<std::size_t>(config.n_utts));

  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      int idx = next.fetch_add(1);
      if (idx >= config.n_utts) return;
      try {
        MixtureInstance inst = GenerateUtterance(graph, config, idx);
        std::string joint_path =
            (fs::path(out_dir) / "joint" / (inst.utt_id + ".fdp")).string();
        WritePosteriorFile(inst.joint, joint_path);
        if (config.emit_separate) {
          std::string sep_path =
              (fs::path(out_dir) / "separate" / (inst.utt_id + ".fdp"))
                  .string();
          WritePosteriorFile(inst.separate, sep_path);
        }
        Meta& m = metas[static_cast<std::size_t>(idx)];
        m.utt_id = inst.utt_id;
        m.n_frames = inst.joint.n_frames;
        m.genders = inst.genders;
        m.words = inst.words;
        m.gamma_used = inst.gamma_used;
        m.utt_seed = inst.utt_seed;
        m.n_words = inst.words[0].size() + inst.words[1].size();
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int threads = std::max(1, n_threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  // References and manifest are written in utterance order regardless of
  // which thread produced them.
  TranscriptMap refs;
  for (const auto& m : metas) {
    refs[m.utt_id] = {m.words[0], m.words[1]};
  }
  WriteTranscriptFile(refs, (fs::path(out_dir) / "refs.txt").string());

  std::ofstream manifest((fs::path(out_dir) / "manifest.txt").string(),
                         std::ios::trunc);
  if (!manifest) throw IoError("cannot open manifest for writing");
  CorpusStats stats;
  stats.n_utts = config.n_utts;
  double total_words = 0.0;
  for (const auto& m : metas) {
    manifest << m.utt_id << '\t' << m.n_frames << '\t' << m.genders[0] << '\t'
             << m.genders[1] << '\t' << m.gamma_used << '\t' << config.kappa
             << '\t' << m.utt_seed << '\n';
    stats.total_frames += m.n_frames;
    if (m.genders[0] == m.genders[1]) ++stats.n_same_gender;
    total_words += static_cast<double>(m.n_words);
  }
  if (!manifest) throw IoError("write failed on manifest");
  stats.mean_digits_per_utt =
      config.n_utts > 0 ? total_words / (2.0 * config.n_utts) : 0.0;
  return stats;
}

}  // namespace fhmmdec
