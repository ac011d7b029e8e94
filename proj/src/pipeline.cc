// src/pipeline.cc

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

#include "fhmmdec/pipeline.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "fhmmdec/error.h"
#include "fhmmdec/joint_exact.h"
#include "fhmmdec/scoring.h"
#include "fhmmdec/viterbi.h"

namespace fhmmdec {

namespace fs = std::filesystem;
using nlohmann::json;

int CmdBuildGraph(const BuildGraphOptions& opts, std::ostream& out) {
  Lexicon lex = ReadLexiconFiles(opts.phones_path, opts.lexicon_path);
  auto weights = ReadGrammarFile(opts.grammar_path);
  DecodingGraph graph = BuildGraph(lex, weights);

  auto violations = ValidateGraph(graph);
  if (!violations.empty()) {
    std::string msg = "graph failed validation:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }

  WriteGraphFile(graph, opts.out_path);
  out << "V=" << graph.n_states << " words=" << graph.word_labels.size()
      << " -> " << opts.out_path << "\n";
  return kExitOk;
}

GenConfig ParseGenConfigFile(const std::string& path, GenConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line.substr(0, line.find('#'));
    auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      std::istringstream check(stripped);
      std::string leftover;
      if (check >> leftover)
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'key = value'");

    try {
      if (key == "n_utts") base.n_utts = std::stoi(value);
      else if (key == "digits_min") base.digits_min = std::stoi(value);
      else if (key == "digits_max") base.digits_max = std::stoi(value);
      else if (key == "frames_per_state_mean")
        base.frames_per_state_mean = std::stod(value);
      else if (key == "kappa") base.kappa = std::stod(value);
      else if (key == "gamma") base.gamma = std::stod(value);
      else if (key == "gamma_same") base.gamma_same = std::stod(value);
      else if (key == "gamma_concentration")
        base.gamma_concentration = std::stod(value);
      else if (key == "gamma_persist") base.gamma_persist = std::stod(value);
      else if (key == "factorized_fraction")
        base.factorized_fraction = std::stod(value);
      else if (key == "same_gender_fraction")
        base.same_gender_fraction = std::stod(value);
      else if (key == "silence_between_prob")
        base.silence_between_prob = std::stod(value);
      else if (key == "swap_persist") base.swap_persist = std::stod(value);
      else if (key == "emit_separate")
        base.emit_separate = (value == "1" || value == "true");
      else if (key == "seed")
        base.seed = static_cast<std::uint64_t>(std::stoull(value));
      else
        throw IoError(path + ":" + std::to_string(lineno) +
                      ": unknown key '" + key + "'");
    } catch (const IoError&) {
      throw;
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": malformed value for '" + key + "'");
    }
  }
  return base;
}

int CmdGenerate(const GenerateOptions& opts, std::ostream& out) {
  DecodingGraph graph = ReadGraphFile(opts.graph_path);
  GenConfig config = opts.config;
  CorpusStats stats =
      GenerateCorpus(graph, config, opts.out_dir, opts.n_threads);
  out << "utts=" << stats.n_utts << " frames=" << stats.total_frames
      << " same_gender=" << stats.n_same_gender
      << " mean_digits_per_utt=" << std::fixed << std::setprecision(2)
      << stats.mean_digits_per_utt << " -> " << opts.out_dir << "\n";
  return kExitOk;
}

DecodeMode ParseDecodeMode(const std::string& name) {
  if (name == "separate") return DecodeMode::kSeparate;
  if (name == "marginal") return DecodeMode::kMarginal;
  if (name == "joint-exact") return DecodeMode::kJointExact;
  if (name == "joint-lbp") return DecodeMode::kJointLbp;
  throw ValidationError("unknown decode mode '" + name + "'");
}

std::string DecodeModeName(DecodeMode mode) {
  switch (mode) {
    case DecodeMode::kSeparate: return "separate";
    case DecodeMode::kMarginal: return "marginal";
    case DecodeMode::kJointExact: return "joint-exact";
    case DecodeMode::kJointLbp: return "joint-lbp";
  }
  return "?";
}

namespace {

struct UttResult {
  std::string utt_id;
  std::vector<std::vector<std::string>> hyps;  // per speaker slot
  std::optional<LbpDiagnostics> diag;
};

std::vector<fs::path> CollectPosteriorFiles(const std::string& path) {
  fs::path p(path);
  std::error_code ec;
  if (fs::is_directory(p, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(p)) {
      if (entry.is_regular_file() && entry.path().extension() == ".fdp")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty())
      throw IoError("no .fdp files under " + path);
    return files;
  }
  if (fs::is_regular_file(p, ec)) return {p};
  throw IoError("posterior path " + path + " is neither a file nor a "
                "directory");
}

UttResult DecodeOne(const DecodingGraph& graph, const DecodeOptions& opts,
                    const fs::path& file) {
  UttResult res;
  res.utt_id = file.stem().string();

  PosteriorKind kind = ReadPosteriorKind(file.string());
  bool need_joint = opts.mode != DecodeMode::kSeparate;
  if (need_joint && kind != PosteriorKind::kJoint)
    throw ValidationError("mode/kind mismatch: mode=" +
                          DecodeModeName(opts.mode) +
                          " requires a joint tensor, " + file.string() +
                          " has kind=separate");
  if (!need_joint && kind != PosteriorKind::kSeparate)
    throw ValidationError("mode/kind mismatch: mode=separate requires a "
                          "separate tensor, " + file.string() +
                          " has kind=joint");

  PosteriorFile tensor = ReadPosteriorFile(file.string());
  switch (opts.mode) {
    case DecodeMode::kSeparate: {
      const auto& sep = std::get<SeparatePosteriors>(tensor);
      for (std::int32_t k = 0; k < sep.n_speakers; ++k) {
        StatePath path = ViterbiDecode(graph, sep.Speaker(k));
        res.hyps.push_back(StatesToWords(path, graph));
      }
      break;
    }
    case DecodeMode::kMarginal: {
      const auto& joint = std::get<JointPosteriors>(tensor);
      for (SpeakerSlot slot : {SpeakerSlot::kA, SpeakerSlot::kB}) {
        SeparatePosteriors marg = Marginalize(joint, slot);
        StatePath path = ViterbiDecode(graph, marg.Speaker(0));
        res.hyps.push_back(StatesToWords(path, graph));
      }
      break;
    }
    case DecodeMode::kJointExact: {
      const auto& joint = std::get<JointPosteriors>(tensor);
      JointPath pair = ExactJointDecode(graph, joint, opts.exact);
      res.hyps.push_back(StatesToWords(pair.path_a, graph));
      res.hyps.push_back(StatesToWords(pair.path_b, graph));
      break;
    }
    case DecodeMode::kJointLbp: {
      const auto& joint = std::get<JointPosteriors>(tensor);
      LbpDiagnostics diag;
      JointPath pair = LbpJointDecode(graph, joint, opts.lbp, &diag);
      res.hyps.push_back(StatesToWords(pair.path_a, graph));
      res.hyps.push_back(StatesToWords(pair.path_b, graph));
      res.diag = diag;
      break;
    }
  }
  return res;
}

}  // namespace

int CmdDecode(const DecodeOptions& opts, std::ostream& out) {
  DecodingGraph graph = ReadGraphFile(opts.graph_path);
  std::vector<fs::path> files = CollectPosteriorFiles(opts.posteriors_path);

  std::vector<UttResult> results(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= files.size()) return;
      try {
        results[idx] = DecodeOne(graph, opts, files[idx]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  int threads = std::max(1, opts.n_threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  TranscriptMap hyps;
  for (const auto& r : results) hyps[r.utt_id] = r.hyps;
  WriteTranscriptFile(hyps, opts.out_path);

  if (opts.mode == DecodeMode::kJointLbp) {
    std::string diag_path = opts.diagnostics_path.empty()
                                ? opts.out_path + ".diag.jsonl"
                                : opts.diagnostics_path;
    std::ofstream diag_out(diag_path, std::ios::trunc);
    if (!diag_out) throw IoError("cannot open " + diag_path + " for writing");
    for (const auto& r : results) {
      json j{{"utt_id", r.utt_id},
             {"sweeps", r.diag->sweeps_used},
             {"converged", r.diag->converged},
             {"final_delta", r.diag->final_delta},
             {"joint_score", r.diag->joint_score}};
      diag_out << j.dump() << "\n";
    }
    if (!diag_out) throw IoError("write failed on " + diag_path);
  }

  if (opts.json) {
    json j{{"mode", DecodeModeName(opts.mode)},
           {"n_utts", results.size()},
           {"out", opts.out_path}};
    out << j.dump() << "\n";
  } else {
    out << "decoded " << results.size() << " utterances (mode="
        << DecodeModeName(opts.mode) << ") -> " << opts.out_path << "\n";
  }
  return kExitOk;
}

std::map<std::string, std::string> ReadManifestGenders(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path);
  std::map<std::string, std::string> genders;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string utt_id, t, ga, gb;
    if (!(ss >> utt_id >> t >> ga >> gb))
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": expected 'utt_id T gender_a gender_b ...'");
    genders[utt_id] = ga + gb;
  }
  return genders;
}

namespace {

void PrintWerLine(std::ostream& out, const std::string& tag,
                  const WerReport& r) {
  out << "%WER " << std::fixed << std::setprecision(2) << 100.0 * r.Wer()
      << " [ " << r.counts.Total() << " / " << r.n_reference_words << ", "
      << r.counts.insertions << " ins, " << r.counts.deletions << " del, "
      << r.counts.substitutions << " sub ]  (" << tag << ")\n";
}

json WerJson(const WerReport& r) {
  return json{{"wer", r.Wer()},
              {"errors", r.counts.Total()},
              {"reference_words", r.n_reference_words},
              {"insertions", r.counts.insertions},
              {"deletions", r.counts.deletions},
              {"substitutions", r.counts.substitutions}};
}

}  // namespace

int CmdScore(const ScoreOptions& opts, std::ostream& out) {
  TranscriptMap refs = ReadTranscriptFile(opts.refs_path);
  TranscriptMap hyps = ReadTranscriptFile(opts.hyps_path);

  std::vector<std::string> unmatched;
  for (const auto& [id, slots] : refs)
    if (!hyps.count(id)) unmatched.push_back(id + " (missing in hyps)");
  for (const auto& [id, slots] : hyps)
    if (!refs.count(id)) unmatched.push_back(id + " (missing in refs)");
  if (!unmatched.empty()) {
    std::string msg = "unmatched utt_ids:";
    for (std::size_t i = 0; i < unmatched.size() && i < 10; ++i)
      msg += "\n  " + unmatched[i];
    if (unmatched.size() > 10)
      msg += "\n  ... and " + std::to_string(unmatched.size() - 10) + " more";
    throw ValidationError(msg);
  }

  std::map<std::string, std::string> genders;
  if (!opts.manifest_path.empty())
    genders = ReadManifestGenders(opts.manifest_path);

  std::vector<UtterancePair> all;
  std::map<std::string, std::vector<UtterancePair>> groups;
  for (const auto& [id, ref_slots] : refs) {
    UtterancePair pair{ref_slots, hyps[id]};
    all.push_back(pair);
    if (!genders.empty()) {
      auto it = genders.find(id);
      if (it == genders.end())
        throw ValidationError("utt_id " + id + " missing from manifest");
      const std::string& g = it->second;
      groups[g == "FF" ? "F+F" : g == "MM" ? "M+M" : "F+M"].push_back(pair);
      groups[g[0] == g[1] ? "same" : "opposite"].push_back(pair);
    }
  }

  WerReport overall = CorpusScore(all);
  std::vector<std::pair<std::string, WerReport>> group_reports;
  for (const char* tag : {"F+F", "M+M", "F+M", "same", "opposite"}) {
    auto it = groups.find(tag);
    if (it != groups.end())
      group_reports.emplace_back(tag, CorpusScore(it->second));
  }

  if (opts.json) {
    json j{{"overall", WerJson(overall)}};
    for (const auto& [tag, report] : group_reports)
      j["groups"][tag] = WerJson(report);
    out << j.dump() << "\n";
  } else {
    PrintWerLine(out, "all", overall);
    for (const auto& [tag, report] : group_reports)
      PrintWerLine(out, tag, report);
  }
  return kExitOk;
}

}  // namespace fhmmdec
