// src/graph.cc

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

#include "fhmmdec/graph.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include "fhmmdec/binary_io.h"
#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"

namespace fhmmdec {

namespace {

bool IsSilenceLabel(const std::string& label) {
  return label == "sil" || label == "SIL";
}

// Tokenizes one line, dropping '#' comments. Empty result = blank line.
std::vector<std::string> Tokenize(const std::string& line) {
  std::string stripped = line.substr(0, line.find('#'));
  std::istringstream ss(stripped);
  std::vector<std::string> toks;
  std::string t;
  while (ss >> t) toks.push_back(t);
  return toks;
}

}  // namespace

const Lexicon::Phone* Lexicon::FindPhone(const std::string& label) const {
  for (const auto& p : phones)
    if (p.label == label) return &p;
  return nullptr;
}

const Lexicon::Word* Lexicon::FindWord(const std::string& label) const {
  for (const auto& w : words)
    if (w.label == label) return &w;
  return nullptr;
}

double DecodingGraph::Transition(std::int32_t from, std::int32_t to) const {
  const auto& row = arcs_out[static_cast<std::size_t>(from)];
  auto it = std::lower_bound(
      row.begin(), row.end(), to,
      [](const Arc& a, std::int32_t t) { return a.target < t; });
  if (it != row.end() && it->target == to) return it->log_prob;
  return kLogZero;
}

bool DecodingGraph::IsSilenceState(std::int32_t s) const {
  return silence_start >= 0 && s >= silence_start && s <= silence_final;
}

DecodingGraph BuildGraph(const Lexicon& lexicon,
                         const std::map<std::string, double>& word_weights,
                         const GraphBuildOptions& opts) {
  if (lexicon.words.empty()) throw ValidationError("lexicon has no words");
  if (word_weights.empty()) throw ValidationError("grammar has no words");
  if (opts.default_self_loop < 0.0 || opts.default_self_loop >= 1.0)
    throw ValidationError("default self-loop must lie in [0, 1)");
  if (opts.silence_prob < 0.0 || opts.silence_prob > 1.0)
    throw ValidationError("silence probability must lie in [0, 1]");

  for (const auto& [word, weight] : word_weights) {
    if (lexicon.FindWord(word) == nullptr)
      throw ValidationError("grammar word '" + word + "' not in lexicon");
    if (!(weight > 0.0))
      throw ValidationError("grammar word '" + word +
                            "' has non-positive weight");
  }
  double weight_sum = 0.0;
  for (const auto& [word, weight] : word_weights) weight_sum += weight;
  if (std::abs(weight_sum - 1.0) > 1e-6)
    throw ValidationError("grammar weights sum to " +
                          std::to_string(weight_sum) + ", expected 1");

  const Lexicon::Phone* sil = nullptr;
  if (opts.silence_prob > 0.0)  // zero silence weight = no silence states
    for (const auto& p : lexicon.phones)
      if (IsSilenceLabel(p.label)) sil = &p;

  auto self_loop_of = [&](const Lexicon::Phone& p) {
    double sl = p.self_loop >= 0.0 ? p.self_loop : opts.default_self_loop;
    if (sl < 0.0 || sl >= 1.0)
      throw ValidationError("phone '" + p.label + "' self-loop " +
                            std::to_string(sl) + " outside [0, 1)");
    return sl;
  };

  // Words in lexicon order, restricted to the grammar, weights renormalized
  // so rows come out stochastic to machine precision.
  struct BuildWord {
    const Lexicon::Word* word;
    double weight;
  };
  std::vector<BuildWord> build_words;
  for (const auto& w : lexicon.words) {
    auto it = word_weights.find(w.label);
    if (it != word_weights.end())
      build_words.push_back({&w, it->second / weight_sum});
  }

  // Phones are single-owner: the same chain cannot serve two words.
  std::map<std::string, std::string> phone_owner;
  for (const auto& bw : build_words) {
    for (const auto& ph : bw.word->pronunciation) {
      const Lexicon::Phone* p = lexicon.FindPhone(ph);
      if (p == nullptr)
        throw ValidationError("word '" + bw.word->label +
                              "' uses unknown phone '" + ph + "'");
      if (IsSilenceLabel(ph))
        throw ValidationError("word '" + bw.word->label +
                              "' uses the reserved silence phone");
      if (p->n_states < 1)
        throw ValidationError("phone '" + ph + "' has no states");
      auto [it, inserted] = phone_owner.emplace(ph, bw.word->label);
      if (!inserted)
        throw ValidationError("phone '" + ph + "' used by both '" +
                              it->second + "' and '" + bw.word->label +
                              "'; shared phones are unsupported");
    }
    if (bw.word->pronunciation.empty())
      throw ValidationError("word '" + bw.word->label +
                            "' has an empty pronunciation");
  }

  DecodingGraph g;

  // State layout: silence chain first (when present), then each word's
  // phone chains in lexicon order.
  std::int32_t next_state = 0;
  if (sil != nullptr) {
    if (sil->n_states < 1)
      throw ValidationError("silence phone has no states");
    g.silence_start = next_state;
    next_state += sil->n_states;
    g.silence_final = next_state - 1;
  }

  std::vector<std::int32_t> phone_index;  // parallel to state ids, filled below
  struct WordStates {
    std::int32_t start;
    std::int32_t final;
    std::vector<const Lexicon::Phone*> phones;
  };
  std::vector<WordStates> word_states;
  for (const auto& bw : build_words) {
    WordStates ws;
    ws.start = next_state;
    for (const auto& ph : bw.word->pronunciation) {
      const Lexicon::Phone* p = lexicon.FindPhone(ph);
      ws.phones.push_back(p);
      next_state += p->n_states;
    }
    ws.final = next_state - 1;
    word_states.push_back(ws);
  }

  g.n_states = next_state;
  std::size_t n = static_cast<std::size_t>(g.n_states);
  g.arcs_out.resize(n);
  g.initial.assign(n, kLogZero);
  g.state_to_pdf.resize(n);
  for (std::int32_t s = 0; s < g.n_states; ++s)
    g.state_to_pdf[static_cast<std::size_t>(s)] = s;
  g.state_to_word.assign(n, -1);
  g.state_to_phone.assign(n, -1);

  auto phone_id = [&](const std::string& label) {
    for (std::size_t i = 0; i < g.phone_labels.size(); ++i)
      if (g.phone_labels[i] == label) return static_cast<std::int32_t>(i);
    g.phone_labels.push_back(label);
    return static_cast<std::int32_t>(g.phone_labels.size() - 1);
  };

  // Hub distribution in probability domain: optional silence, then word
  // entries weighted by the unigram.
  std::vector<std::pair<std::int32_t, double>> hub_with_sil, hub_words_only;
  for (std::size_t wi = 0; wi < build_words.size(); ++wi)
    hub_words_only.emplace_back(word_states[wi].start, build_words[wi].weight);
  if (sil != nullptr) {
    hub_with_sil.emplace_back(g.silence_start, opts.silence_prob);
    for (std::size_t wi = 0; wi < build_words.size(); ++wi)
      hub_with_sil.emplace_back(word_states[wi].start,
                                (1.0 - opts.silence_prob) *
                                    build_words[wi].weight);
  } else {
    hub_with_sil = hub_words_only;
  }

  // Accumulates probability mass per target, then freezes a sorted log row.
  auto emit_row = [&](std::int32_t from,
                      const std::vector<std::pair<std::int32_t, double>>&
                          mass) {
    std::map<std::int32_t, double> acc;
    for (const auto& [to, p] : mass)
      if (p > 0.0) acc[to] += p;
    auto& row = g.arcs_out[static_cast<std::size_t>(from)];
    for (const auto& [to, p] : acc)
      row.push_back({to, std::log(p)});
  };

  // Lays out one phone chain starting at state `base`; exit mass of the last
  // state flows into `exit_mass` scaled by (1 - self_loop).
  auto build_chain = [&](std::int32_t base, const Lexicon::Phone& phone,
                         const std::vector<std::pair<std::int32_t, double>>&
                             exit_targets) {
    double sl = self_loop_of(phone);
    std::int32_t pid = phone_id(phone.label);
    for (std::int32_t i = 0; i < phone.n_states; ++i) {
      std::int32_t s = base + i;
      g.state_to_phone[static_cast<std::size_t>(s)] = pid;
      std::vector<std::pair<std::int32_t, double>> mass;
      if (sl > 0.0) mass.emplace_back(s, sl);
      if (i + 1 < phone.n_states) {
        mass.emplace_back(s + 1, 1.0 - sl);
      } else {
        for (const auto& [to, p] : exit_targets)
          mass.emplace_back(to, (1.0 - sl) * p);
      }
      emit_row(s, mass);
    }
  };

  if (sil != nullptr)
    build_chain(g.silence_start, *sil, hub_words_only);

  for (std::size_t wi = 0; wi < build_words.size(); ++wi) {
    const auto& ws = word_states[wi];
    g.word_labels.push_back(build_words[wi].word->label);
    g.word_start_state.push_back(ws.start);
    g.word_final_state.push_back(ws.final);
    g.word_log_weight.push_back(std::log(build_words[wi].weight));
    g.state_to_word[static_cast<std::size_t>(ws.final)] =
        static_cast<std::int32_t>(wi);

    std::int32_t base = ws.start;
    for (std::size_t pi = 0; pi < ws.phones.size(); ++pi) {
      const Lexicon::Phone* p = ws.phones[pi];
      bool last = pi + 1 == ws.phones.size();
      if (last) {
        build_chain(base, *p, hub_with_sil);
      } else {
        build_chain(base, *p, {{base + p->n_states, 1.0}});
      }
      base += p->n_states;
    }
  }

  for (const auto& [to, p] : hub_with_sil)
    g.initial[static_cast<std::size_t>(to)] = std::log(p);

  g.arcs_in.resize(n);
  for (std::int32_t s = 0; s < g.n_states; ++s)
    for (const auto& arc : g.arcs_out[static_cast<std::size_t>(s)])
      g.arcs_in[static_cast<std::size_t>(arc.target)].push_back(
          {s, arc.log_prob});

  return g;
}

std::vector<std::string> ValidateGraph(const DecodingGraph& graph) {
  std::vector<std::string> violations;
  std::size_t n = static_cast<std::size_t>(graph.n_states);

  if (graph.n_states <= 0) {
    violations.push_back("graph has no states");
    return violations;
  }
  if (graph.arcs_out.size() != n || graph.initial.size() != n ||
      graph.state_to_pdf.size() != n || graph.state_to_word.size() != n ||
      graph.state_to_phone.size() != n) {
    violations.push_back("table sizes disagree with n_states");
    return violations;
  }

  for (std::size_t s = 0; s < n; ++s) {
    double sum = 0.0;
    for (const auto& arc : graph.arcs_out[s]) {
      if (arc.target < 0 || arc.target >= graph.n_states) {
        violations.push_back("state " + std::to_string(s) +
                             ": arc target out of range");
        continue;
      }
      sum += std::exp(arc.log_prob);
    }
    if (std::abs(sum - 1.0) > 1e-9)
      violations.push_back("state " + std::to_string(s) +
                           ": row-stochasticity violated, outgoing mass " +
                           std::to_string(sum));
  }

  double init_sum = 0.0;
  for (double lp : graph.initial) init_sum += std::exp(lp);
  if (std::abs(init_sum - 1.0) > 1e-9)
    violations.push_back("initial vector mass " + std::to_string(init_sum) +
                         ", expected 1");

  // Reachability: BFS over outgoing arcs from the initial support.
  std::vector<char> seen(n, 0);
  std::deque<std::int32_t> queue;
  for (std::size_t s = 0; s < n; ++s) {
    if (!IsLogZero(graph.initial[s])) {
      seen[s] = 1;
      queue.push_back(static_cast<std::int32_t>(s));
    }
  }
  while (!queue.empty()) {
    std::int32_t s = queue.front();
    queue.pop_front();
    for (const auto& arc : graph.arcs_out[static_cast<std::size_t>(s)]) {
      if (arc.target >= 0 && arc.target < graph.n_states &&
          !seen[static_cast<std::size_t>(arc.target)]) {
        seen[static_cast<std::size_t>(arc.target)] = 1;
        queue.push_back(arc.target);
      }
    }
  }
  for (std::size_t s = 0; s < n; ++s)
    if (!seen[s])
      violations.push_back("state " + std::to_string(s) +
                           ": unreachable from initial states");

  for (std::size_t wi = 0; wi < graph.word_labels.size(); ++wi) {
    bool has_final = false;
    for (std::size_t s = 0; s < n; ++s)
      if (graph.state_to_word[s] == static_cast<std::int32_t>(wi))
        has_final = true;
    if (!has_final)
      violations.push_back("word '" + graph.word_labels[wi] +
                           "' has no word-final state");
  }

  return violations;
}

Lexicon ReadLexiconFiles(const std::string& phones_path,
                         const std::string& lexicon_path) {
  Lexicon lex;

  std::ifstream phones(phones_path);
  if (!phones) throw IoError("cannot open phones file " + phones_path);
  std::string line;
  int lineno = 0;
  while (std::getline(phones, line)) {
    ++lineno;
    auto toks = Tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 2 && toks.size() != 3)
      throw IoError(phones_path + ":" + std::to_string(lineno) +
                    ": expected 'PHONE N_STATES [SELF_LOOP]'");
    Lexicon::Phone p;
    p.label = toks[0];
    try {
      p.n_states = std::stoi(toks[1]);
      if (toks.size() == 3) p.self_loop = std::stod(toks[2]);
    } catch (const std::exception&) {
      throw IoError(phones_path + ":" + std::to_string(lineno) +
                    ": malformed number");
    }
    if (p.n_states < 1)
      throw ValidationError(phones_path + ":" + std::to_string(lineno) +
                            ": phone '" + p.label + "' needs n_states >= 1");
    if (lex.FindPhone(p.label) != nullptr)
      throw ValidationError(phones_path + ": duplicate phone '" + p.label +
                            "'");
    lex.phones.push_back(std::move(p));
  }

  std::ifstream words(lexicon_path);
  if (!words) throw IoError("cannot open lexicon file " + lexicon_path);
  lineno = 0;
  while (std::getline(words, line)) {
    ++lineno;
    auto toks = Tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() < 2)
      throw IoError(lexicon_path + ":" + std::to_string(lineno) +
                    ": expected 'WORD PHONE1 [PHONE2 ...]'");
    Lexicon::Word w;
    w.label = toks[0];
    w.pronunciation.assign(toks.begin() + 1, toks.end());
    if (lex.FindWord(w.label) != nullptr)
      throw ValidationError(lexicon_path + ": duplicate word '" + w.label +
                            "'");
    for (const auto& ph : w.pronunciation)
      if (lex.FindPhone(ph) == nullptr)
        throw ValidationError(lexicon_path + ":" + std::to_string(lineno) +
                              ": unknown phone '" + ph + "'");
    lex.words.push_back(std::move(w));
  }
  return lex;
}

std::map<std::string, double> ReadGrammarFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open grammar file " + path);
  std::map<std::string, double> weights;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto toks = Tokenize(line);
    if (toks.empty()) continue;
    if (toks.size() != 2)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'WORD WEIGHT'");
    double w;
    try {
      w = std::stod(toks[1]);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": malformed weight");
    }
    if (weights.count(toks[0]))
      throw ValidationError(path + ": duplicate grammar word '" + toks[0] +
                            "'");
    weights[toks[0]] = w;
  }
  return weights;
}

void WriteGraphFile(const DecodingGraph& graph, const std::string& path) {
  ByteWriter w;
  w.Magic("FDG1");
  w.U32(static_cast<std::uint32_t>(graph.n_states));
  w.U32(static_cast<std::uint32_t>(graph.word_labels.size()));
  w.U32(static_cast<std::uint32_t>(graph.phone_labels.size()));
  w.I32(graph.silence_start);
  w.I32(graph.silence_final);

  std::uint64_t nnz = 0;
  for (const auto& row : graph.arcs_out) nnz += row.size();
  w.U64(nnz);
  std::uint64_t offset = 0;
  w.U64(offset);
  for (const auto& row : graph.arcs_out) {
    offset += row.size();
    w.U64(offset);
  }
  for (const auto& row : graph.arcs_out)
    for (const auto& arc : row) w.U32(static_cast<std::uint32_t>(arc.target));
  for (const auto& row : graph.arcs_out)
    for (const auto& arc : row) w.F64(arc.log_prob);

  for (double lp : graph.initial) w.F64(lp);
  for (auto v : graph.state_to_pdf) w.I32(v);
  for (auto v : graph.state_to_word) w.I32(v);
  for (auto v : graph.state_to_phone) w.I32(v);
  for (auto v : graph.word_start_state) w.I32(v);
  for (auto v : graph.word_final_state) w.I32(v);
  for (auto v : graph.word_log_weight) w.F64(v);
  for (const auto& s : graph.word_labels) w.Str(s);
  for (const auto& s : graph.phone_labels) w.Str(s);

  WriteFileBytes(path, w.bytes());
}

DecodingGraph ReadGraphFile(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  r.ExpectMagic("FDG1", "decoding graph");

  DecodingGraph g;
  g.n_states = static_cast<std::int32_t>(r.U32());
  std::uint32_t n_words = r.U32();
  std::uint32_t n_phones = r.U32();
  g.silence_start = r.I32();
  g.silence_final = r.I32();
  if (g.n_states <= 0)
    throw IoError(path + ": graph has no states");

  std::uint64_t nnz = r.U64();
  std::size_t n = static_cast<std::size_t>(g.n_states);
  std::vector<std::uint64_t> offsets(n + 1);
  r.Require((n + 1) * 8);
  for (auto& o : offsets) o = r.U64();
  if (offsets[0] != 0 || offsets[n] != nnz)
    throw IoError(path + ": CSR offsets disagree with nnz");
  for (std::size_t i = 0; i < n; ++i)
    if (offsets[i + 1] < offsets[i])
      throw IoError(path + ": CSR offsets not monotone");

  r.Require(nnz * 4 + nnz * 8);
  std::vector<std::int32_t> cols(nnz);
  for (auto& c : cols) {
    c = static_cast<std::int32_t>(r.U32());
    if (c < 0 || c >= g.n_states)
      throw IoError(path + ": arc target out of range");
  }
  std::vector<double> vals(nnz);
  for (auto& v : vals) v = r.F64();

  g.arcs_out.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::uint64_t k = offsets[s]; k < offsets[s + 1]; ++k)
      g.arcs_out[s].push_back({cols[k], vals[k]});
  }

  r.Require(n * 8 + n * 4 * 3);
  g.initial.resize(n);
  for (auto& v : g.initial) v = r.F64();
  g.state_to_pdf.resize(n);
  for (auto& v : g.state_to_pdf) v = r.I32();
  g.state_to_word.resize(n);
  for (auto& v : g.state_to_word) v = r.I32();
  g.state_to_phone.resize(n);
  for (auto& v : g.state_to_phone) v = r.I32();

  g.word_start_state.resize(n_words);
  for (auto& v : g.word_start_state) v = r.I32();
  g.word_final_state.resize(n_words);
  for (auto& v : g.word_final_state) v = r.I32();
  g.word_log_weight.resize(n_words);
  for (auto& v : g.word_log_weight) v = r.F64();
  g.word_labels.resize(n_words);
  for (auto& s : g.word_labels) s = r.Str();
  g.phone_labels.resize(n_phones);
  for (auto& s : g.phone_labels) s = r.Str();
  r.ExpectEnd();

  g.arcs_in.resize(n);
  for (std::int32_t s = 0; s < g.n_states; ++s)
    for (const auto& arc : g.arcs_out[static_cast<std::size_t>(s)])
      g.arcs_in[static_cast<std::size_t>(arc.target)].push_back(
          {s, arc.log_prob});

  return g;
}

}  // namespace fhmmdec
