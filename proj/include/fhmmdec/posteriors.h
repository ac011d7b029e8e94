// include/fhmmdec/posteriors.h

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

#ifndef FHMMDEC_POSTERIORS_H_
#define FHMMDEC_POSTERIORS_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace fhmmdec {

// Non-owning T x V frame-major score matrix. Decoders take this view, so
// tests can feed arbitrary (not necessarily normalized) scores.
struct ScoreMatrixView {
  std::int32_t n_frames = 0;
  std::int32_t n_states = 0;
  const double* data = nullptr;

  std::span<const double> Row(std::int32_t t) const {
    return {data + static_cast<std::size_t>(t) * n_states,
            static_cast<std::size_t>(n_states)};
  }
  double At(std::int32_t t, std::int32_t v) const {
    return data[static_cast<std::size_t>(t) * n_states + v];
  }
};

// Per-speaker log-posterior streams, layout [speaker][frame][state].
// Every row is a normalized log distribution (|logsumexp| <= 1e-6);
// entries are finite or -inf.
struct SeparatePosteriors {
  std::int32_t n_frames = 0;   // T
  std::int32_t n_states = 0;   // V
  std::int32_t n_speakers = 0; // K
  std::vector<double> data;    // K*T*V

  static SeparatePosteriors Create(std::int32_t n_speakers,
                                   std::int32_t n_frames,
                                   std::int32_t n_states,
                                   std::vector<double> data);

  ScoreMatrixView Speaker(std::int32_t k) const {
    return {n_frames, n_states,
            data.data() + static_cast<std::size_t>(k) * n_frames * n_states};
  }
  double& At(std::int32_t k, std::int32_t t, std::int32_t v) {
    return data[(static_cast<std::size_t>(k) * n_frames + t) * n_states + v];
  }
  double At(std::int32_t k, std::int32_t t, std::int32_t v) const {
    return data[(static_cast<std::size_t>(k) * n_frames + t) * n_states + v];
  }
};

// Joint two-speaker log posteriors, layout [frame][state_a][state_b].
// Each frame is a normalized log distribution over V*V cells.
struct JointPosteriors {
  std::int32_t n_frames = 0;  // T
  std::int32_t n_states = 0;  // V
  std::vector<double> data;   // T*V*V

  static JointPosteriors Create(std::int32_t n_frames, std::int32_t n_states,
                                std::vector<double> data);

  std::span<const double> Frame(std::int32_t t) const {
    std::size_t cells = static_cast<std::size_t>(n_states) * n_states;
    return {data.data() + static_cast<std::size_t>(t) * cells, cells};
  }
  double At(std::int32_t t, std::int32_t a, std::int32_t b) const {
    return data[(static_cast<std::size_t>(t) * n_states + a) * n_states + b];
  }
  double& At(std::int32_t t, std::int32_t a, std::int32_t b) {
    return data[(static_cast<std::size_t>(t) * n_states + a) * n_states + b];
  }
};

// Length-V log prior, |logsumexp| <= 1e-6.
struct PriorVector {
  std::vector<double> log_prob;

  static PriorVector Create(std::vector<double> log_prob);
};

enum class SpeakerSlot { kA, kB };

// Sums out the other speaker: speaker A keeps rows, speaker B keeps columns.
SeparatePosteriors Marginalize(const JointPosteriors& joint,
                               SpeakerSlot speaker);

// Posterior -> pseudo-likelihood. Without a prior this is the identity (the
// working default); with one, the log prior is subtracted per state (both
// axes for the joint tensor, same prior on each).
SeparatePosteriors ToPseudoLikelihood(const SeparatePosteriors& post,
                                      const PriorVector* prior);
JointPosteriors ToPseudoLikelihood(const JointPosteriors& post,
                                   const PriorVector* prior);

// FDP1 container. Header: magic, u8 kind (0 separate / 1 joint), u8 K,
// u16 reserved, u32 T, u32 V; payload f32 little-endian log-probs.
// In-memory values are f64 but are always exact f32 values, so files
// round-trip bit-exactly.
using PosteriorFile = std::variant<SeparatePosteriors, JointPosteriors>;

void WritePosteriorFile(const SeparatePosteriors& post,
                        const std::string& path);
void WritePosteriorFile(const JointPosteriors& post, const std::string& path);
PosteriorFile ReadPosteriorFile(const std::string& path);

// Peeks at the header kind without loading the payload.
enum class PosteriorKind : std::uint8_t { kSeparate = 0, kJoint = 1 };
PosteriorKind ReadPosteriorKind(const std::string& path);

// Rounds every entry to the nearest f32 and renormalizes each row of
// `row_len` cells until the rounded values pass the 1e-6 ingest check.
void QuantizeNormalizeRows(std::vector<double>& log_values,
                           std::size_t row_len);

}  // namespace fhmmdec

#endif  // FHMMDEC_POSTERIORS_H_
