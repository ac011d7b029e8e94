// include/fhmmdec/scoring.h

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

#ifndef FHMMDEC_SCORING_H_
#define FHMMDEC_SCORING_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fhmmdec {

// One decoded stream: the word sequence attributed to a speaker slot.
struct WordHypothesis {
  std::vector<std::string> words;
  std::int32_t speaker_slot = 0;
};

struct EditCounts {
  std::int64_t substitutions = 0;
  std::int64_t deletions = 0;
  std::int64_t insertions = 0;

  std::int64_t Total() const { return substitutions + deletions + insertions; }
};

struct WerReport {
  EditCounts counts;
  std::int64_t n_reference_words = 0;
  std::vector<std::int32_t> permutation;  // hyp slot paired with ref slot i

  double Wer() const {
    return static_cast<double>(counts.Total()) /
           static_cast<double>(n_reference_words);
  }
};

// Minimal-cost Levenshtein alignment with unit costs. Among equal-cost
// alignments, substitutions are preferred over insert+delete pairs
// (diagonal moves win ties, then deletion beats insertion).
EditCounts EditDistanceAlignment(const std::vector<std::string>& ref,
                                 const std::vector<std::string>& hyp);

// Tries all K! speaker assignments and keeps the one with the fewest total
// errors; counts are pooled over the K streams. Refuses K > 8.
WerReport OraclePermutationWer(
    const std::vector<std::vector<std::string>>& refs,
    const std::vector<std::vector<std::string>>& hyps);

// Pools error counts over utterances (oracle permutation per utterance);
// corpus WER is pooled-errors / pooled-reference-words, not an average of
// per-utterance rates. Throws when the pooled reference is empty.
struct UtterancePair {
  std::vector<std::vector<std::string>> refs;
  std::vector<std::vector<std::string>> hyps;
};
WerReport CorpusScore(const std::vector<UtterancePair>& pairs);

// Transcript file: one line per stream, `utt_id<TAB>spk_index<TAB>words...`.
// Returned map is utt_id -> per-slot word sequences.
using TranscriptMap = std::map<std::string, std::vector<std::vector<std::string>>>;
TranscriptMap ReadTranscriptFile(const std::string& path);
void WriteTranscriptFile(const TranscriptMap& transcripts,
                         const std::string& path);

}  // namespace fhmmdec

#endif  // FHMMDEC_SCORING_H_
