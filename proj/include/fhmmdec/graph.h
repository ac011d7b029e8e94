// include/fhmmdec/graph.h

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

#ifndef FHMMDEC_GRAPH_H_
#define FHMMDEC_GRAPH_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fhmmdec {

// Mono-phone HMM inventory plus word pronunciations.
//
// Each phone owns a left-to-right chain of n_states emitting states. A phone
// may be used by at most one word (and at most once in its pronunciation):
// states are shared between the phone and the word using it, so sharing a
// phone across words would make word identity unrecoverable from a state
// path. The phone labeled "sil" (or "SIL") is reserved for the optional
// silence hub and must not appear in any pronunciation.
struct Lexicon {
  struct Phone {
    std::string label;
    int n_states = 0;
    // P(stay in state); the remaining mass advances. Negative = use default.
    double self_loop = -1.0;
  };
  struct Word {
    std::string label;
    std::vector<std::string> pronunciation;
  };

  std::vector<Phone> phones;
  std::vector<Word> words;

  const Phone* FindPhone(const std::string& label) const;
  const Word* FindWord(const std::string& label) const;
};

// Flat HMM state graph: a word loop with an optional-silence hub.
//
// Transitions and the initial vector are natural-log probabilities; kLogZero
// marks impossible moves. Immutable after construction.
struct DecodingGraph {
  struct Arc {
    std::int32_t target = 0;
    double log_prob = 0.0;
  };

  std::int32_t n_states = 0;  // V

  // Outgoing arcs per state, targets ascending (CSR-style).
  std::vector<std::vector<Arc>> arcs_out;
  // Transposed adjacency: arcs_in[s] lists (source, log_prob), sources
  // ascending. Derived from arcs_out; decoders iterate over predecessors.
  std::vector<std::vector<Arc>> arcs_in;

  std::vector<double> initial;  // log P(v_1 = s), length V

  std::vector<std::int32_t> state_to_pdf;    // identity in the default setup
  std::vector<std::int32_t> state_to_word;   // word index or -1
  std::vector<std::int32_t> state_to_phone;  // phone index into phone_labels

  std::vector<std::string> word_labels;
  std::vector<std::string> phone_labels;

  // Construction metadata used by the generator and word mapping.
  std::vector<std::int32_t> word_start_state;
  std::vector<std::int32_t> word_final_state;
  std::vector<double> word_log_weight;  // unigram entry weights, log domain
  std::int32_t silence_start = -1;      // -1 when the graph has no silence
  std::int32_t silence_final = -1;

  double Transition(std::int32_t from, std::int32_t to) const;
  bool IsSilenceState(std::int32_t s) const;

  const std::string& WordLabel(std::int32_t word_index) const {
    return word_labels[static_cast<std::size_t>(word_index)];
  }
};

struct GraphBuildOptions {
  double default_self_loop = 0.5;  // per-state stay probability
  double silence_prob = 0.5;       // chance of silence between words / at start
};

// Compiles the lexicon and unigram weights into the word-loop graph.
// word_weights must cover a subset of the lexicon's words, every weight
// positive, sum within 1e-6 of 1. Only words present in word_weights are
// built into the graph.
DecodingGraph BuildGraph(const Lexicon& lexicon,
                         const std::map<std::string, double>& word_weights,
                         const GraphBuildOptions& opts = {});

// Invariant check: row stochasticity, normalized initial vector,
// reachability from initial support, word-final coverage. Violations are
// returned as data, one human-readable line each; empty means healthy.
std::vector<std::string> ValidateGraph(const DecodingGraph& graph);

// Text formats. Lines are whitespace separated, '#' starts a comment.
//   phones file:  PHONE N_STATES [SELF_LOOP]
//   lexicon file: WORD PHONE1 PHONE2 ...
//   grammar file: WORD WEIGHT
Lexicon ReadLexiconFiles(const std::string& phones_path,
                         const std::string& lexicon_path);
std::map<std::string, double> ReadGrammarFile(const std::string& path);

// Binary container (magic FDG1, little-endian): round-trips bit-exactly.
void WriteGraphFile(const DecodingGraph& graph, const std::string& path);
DecodingGraph ReadGraphFile(const std::string& path);

}  // namespace fhmmdec

#endif  // FHMMDEC_GRAPH_H_
