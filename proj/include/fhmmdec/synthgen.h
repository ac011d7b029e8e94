// include/fhmmdec/synthgen.h

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

#ifndef FHMMDEC_SYNTHGEN_H_
#define FHMMDEC_SYNTHGEN_H_

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "fhmmdec/graph.h"
#include "fhmmdec/posteriors.h"
#include "fhmmdec/viterbi.h"

namespace fhmmdec {

// Knobs for the two-speaker mixture generator.
//
// The joint tensor per frame is built as
//   signal * [(1-g_t) at (l_a, l_b)  +  g_t at (l_b, l_a)]
//   + (1 - signal) * symmetric-Dirichlet(1/kappa) smoothing over all cells,
// with signal = kappa / (kappa + 1). g_t is the speaker-confusion mass: it
// drifts around the utterance's gamma as a slowly resampled Beta draw, so
// hard-to-attribute stretches appear and disappear the way they do between
// similar voices. kappa = inf, gamma = 0 gives the exact delta-product
// (one-hot) tensor.
//
// The separate-stream emulation is deliberately harsher than the joint
// marginals: a separate-output acoustic model has to commit each frame to a
// speaker, so confusion appears as persistent hard swaps of the two streams
// (stationary swap probability gamma) rather than as split mass.
struct GenConfig {
  int n_utts = 100;
  int digits_min = 1;
  int digits_max = 7;
  double frames_per_state_mean = 3.0;

  // Sharpness: fraction kappa/(kappa+1) of each frame's mass is signal.
  // With gamma = 0 and factorized_fraction = 1 the marginals keep their
  // argmax at the true states for kappa >= 2 or so; tests use larger values.
  double kappa = 8.0;

  // Mean confusion mass for opposite-gender pairs, and the elevated level
  // used for same-gender pairs.
  double gamma = 0.15;
  double gamma_same = 0.45;
  // Beta concentration of the per-frame confusion jitter (<= 0 disables
  // jitter) and the per-frame probability of keeping the current draw.
  double gamma_concentration = 4.0;
  double gamma_persist = 0.875;

  // Fraction of each frame rebuilt as the product of its own marginals.
  double factorized_fraction = 0.0;

  double same_gender_fraction = 0.5;
  double silence_between_prob = 0.5;

  // Separate-baseline swap persistence: P(z_{t+1} = z_t).
  double swap_persist = 0.9;
  bool emit_separate = true;

  std::uint64_t seed = 0;
};

// Ground truth for one mixture plus the emitted tensors.
struct MixtureInstance {
  std::string utt_id;
  std::array<std::vector<std::string>, 2> words;
  std::array<StatePath, 2> paths;
  std::array<char, 2> genders;  // 'F' or 'M'
  double gamma_used = 0.0;
  std::uint64_t utt_seed = 0;
  JointPosteriors joint;
  SeparatePosteriors separate;  // only when config.emit_separate
  GenConfig config;
};

// Per-speaker truth: the sampled word sequence and its state path.
struct SpeakerTruth {
  std::vector<std::string> words;
  StatePath path;
};

// Samples word counts uniformly in [digits_min, digits_max], words i.i.d.
// from the graph's unigram weights, and per-state dwell times geometrically
// around frames_per_state_mean. Both paths are padded with trailing frames
// in their last state to a common length.
std::array<SpeakerTruth, 2> SamplePaths(const DecodingGraph& graph,
                                        const GenConfig& config,
                                        std::mt19937_64& rng);

// Emits the noisy joint tensor for a path pair; gamma_mean is the
// utterance-level confusion level (config.gamma for a plain call).
JointPosteriors EmitJointPosteriors(const std::array<StatePath, 2>& paths,
                                    std::int32_t n_states,
                                    const GenConfig& config, double gamma_mean,
                                    std::mt19937_64& rng);

// Emits the hard-committing separate-stream baseline at the same confusion
// level (K = 2).
SeparatePosteriors EmitSeparatePosteriors(
    const std::array<StatePath, 2>& paths, std::int32_t n_states,
    const GenConfig& config, double gamma_mean, std::mt19937_64& rng);

// Builds one utterance end to end. The RNG stream is derived from
// (config.seed, utt_index), so utterances are independent of generation
// order and thread count.
MixtureInstance GenerateUtterance(const DecodingGraph& graph,
                                  const GenConfig& config, int utt_index);

// Writes a corpus under out_dir:
//   joint/<utt_id>.fdp        joint tensors
//   separate/<utt_id>.fdp     separate baseline (when emit_separate)
//   refs.txt                  reference transcripts, both speakers
//   manifest.txt              utt_id T gender_a gender_b gamma kappa seed
// Returns the instances' metadata (tensors dropped) in utterance order.
struct CorpusStats {
  int n_utts = 0;
  std::int64_t total_frames = 0;
  int n_same_gender = 0;
  double mean_digits_per_utt = 0.0;
};
CorpusStats GenerateCorpus(const DecodingGraph& graph, const GenConfig& config,
                           const std::string& out_dir, int n_threads = 1);

std::uint64_t DeriveUttSeed(std::uint64_t corpus_seed, int utt_index);
std::string UttId(int utt_index);

}  // namespace fhmmdec

#endif  // FHMMDEC_SYNTHGEN_H_
