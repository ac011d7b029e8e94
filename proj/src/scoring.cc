// src/scoring.cc

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

#include "fhmmdec/scoring.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fhmmdec/error.h"

namespace fhmmdec {

EditCounts EditDistanceAlignment(const std::vector<std::string>& ref,
                                 const std::vector<std::string>& hyp) {
  std::size_t n = ref.size(), m = hyp.size();

  // Cell-wise DP carrying counts; move preference on cost ties is
  // diagonal, then deletion, then insertion.
  struct Cell {
    std::int64_t cost;
    EditCounts counts;
  };
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j)
    prev[j] = {static_cast<std::int64_t>(j),
               {0, 0, static_cast<std::int64_t>(j)}};

  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {static_cast<std::int64_t>(i),
              {0, static_cast<std::int64_t>(i), 0}};
    for (std::size_t j = 1; j <= m; ++j) {
      bool match = ref[i - 1] == hyp[j - 1];
      Cell diag = prev[j - 1];
      diag.cost += match ? 0 : 1;
      if (!match) ++diag.counts.substitutions;
      Cell del = prev[j];
      ++del.cost;
      ++del.counts.deletions;
      Cell ins = cur[j - 1];
      ++ins.cost;
      ++ins.counts.insertions;

      Cell best = diag;
      if (del.cost < best.cost) best = del;
      if (ins.cost < best.cost) best = ins;
      cur[j] = best;
    }
    prev.swap(cur);
  }
  return prev[m].counts;
}

WerReport OraclePermutationWer(
    const std::vector<std::vector<std::string>>& refs,
    const std::vector<std::vector<std::string>>& hyps) {
  if (refs.size() != hyps.size())
    throw ValidationError("oracle WER: " + std::to_string(refs.size()) +
                          " reference streams vs " +
                          std::to_string(hyps.size()) + " hypothesis streams");
  std::size_t k = refs.size();
  if (k == 0) throw ValidationError("oracle WER: no streams");
  if (k > 8)
    throw ValidationError("oracle WER: refusing " + std::to_string(k) +
                          " streams, permutation count explodes past K = 8");

  // Pairwise counts once, then search the K! assignments.
  std::vector<std::vector<EditCounts>> table(k, std::vector<EditCounts>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j)
      table[i][j] = EditDistanceAlignment(refs[i], hyps[j]);

  std::vector<std::int32_t> perm(k), best_perm;
  std::iota(perm.begin(), perm.end(), 0);
  std::int64_t best_cost = -1;
  do {
    std::int64_t cost = 0;
    for (std::size_t i = 0; i < k; ++i)
      cost += table[i][static_cast<std::size_t>(perm[i])].Total();
    if (best_cost < 0 || cost < best_cost) {
      best_cost = cost;
      best_perm = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  WerReport report;
  report.permutation = best_perm;
  for (std::size_t i = 0; i < k; ++i) {
    const EditCounts& c = table[i][static_cast<std::size_t>(best_perm[i])];
    report.counts.substitutions += c.substitutions;
    report.counts.deletions += c.deletions;
    report.counts.insertions += c.insertions;
    report.n_reference_words += static_cast<std::int64_t>(refs[i].size());
  }
  return report;
}

WerReport CorpusScore(const std::vector<UtterancePair>& pairs) {
  if (pairs.empty()) throw ValidationError("corpus score: no utterances");
  WerReport pooled;
  for (const auto& pair : pairs) {
    WerReport r = OraclePermutationWer(pair.refs, pair.hyps);
    pooled.counts.substitutions += r.counts.substitutions;
    pooled.counts.deletions += r.counts.deletions;
    pooled.counts.insertions += r.counts.insertions;
    pooled.n_reference_words += r.n_reference_words;
  }
  if (pooled.n_reference_words == 0)
    throw ValidationError("corpus score: reference corpus is empty, WER "
                          "undefined");
  return pooled;
}

TranscriptMap ReadTranscriptFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open transcript file " + path);
  TranscriptMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::size_t tab1 = line.find('\t');
    std::size_t tab2 = tab1 == std::string::npos
                           ? std::string::npos
                           : line.find('\t', tab1 + 1);
    if (tab1 == std::string::npos || tab2 == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'utt_id<TAB>spk<TAB>words...'");
    std::string utt_id = line.substr(0, tab1);
    int spk;
    try {
      spk = std::stoi(line.substr(tab1 + 1, tab2 - tab1 - 1));
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": malformed speaker index");
    }
    if (spk < 0 || spk > 7)
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": speaker index out of range");

    std::istringstream rest(line.substr(tab2 + 1));
    std::vector<std::string> words;
    std::string w;
    while (rest >> w) words.push_back(w);

    auto& slots = out[utt_id];
    if (slots.size() <= static_cast<std::size_t>(spk))
      slots.resize(static_cast<std::size_t>(spk) + 1);
    slots[static_cast<std::size_t>(spk)] = std::move(words);
  }
  return out;
}

void WriteTranscriptFile(const TranscriptMap& transcripts,
                         const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  for (const auto& [utt_id, slots] : transcripts) {
    for (std::size_t spk = 0; spk < slots.size(); ++spk) {
      out << utt_id << '\t' << spk << '\t';
      for (std::size_t i = 0; i < slots[spk].size(); ++i) {
        if (i) out << ' ';
        out << slots[spk][i];
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("write failed on " + path);
}

}  // namespace fhmmdec
