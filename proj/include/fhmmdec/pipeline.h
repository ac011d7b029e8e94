// include/fhmmdec/pipeline.h

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

#ifndef FHMMDEC_PIPELINE_H_
#define FHMMDEC_PIPELINE_H_

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fhmmdec/lbp.h"
#include "fhmmdec/synthgen.h"

namespace fhmmdec {

// Subcommand option structs; the CLI fills these, tests can too.

struct BuildGraphOptions {
  std::string phones_path;
  std::string lexicon_path;
  std::string grammar_path;
  std::string out_path;
};

struct GenerateOptions {
  std::string graph_path;
  std::string out_dir;
  std::string config_path;  // optional key = value file
  GenConfig config;
  bool config_from_file = false;
  int n_threads = 1;
};

enum class DecodeMode { kSeparate, kMarginal, kJointExact, kJointLbp };

struct DecodeOptions {
  std::string graph_path;
  std::string posteriors_path;  // one .fdp file or a directory of them
  DecodeMode mode = DecodeMode::kSeparate;
  std::string out_path;
  std::string diagnostics_path;  // joint-lbp only; default out + .diag.jsonl
  LbpConfig lbp;
  ExactJointOptions exact;
  int n_threads = 1;
  bool json = false;
};

struct ScoreOptions {
  std::string refs_path;
  std::string hyps_path;
  std::string manifest_path;  // optional, enables the gender breakdown
  bool json = false;
};

// Command bodies. Success returns kExitOk; failures throw (main translates
// to exit codes). Progress and reports go to `out`.
int CmdBuildGraph(const BuildGraphOptions& opts, std::ostream& out);
int CmdGenerate(const GenerateOptions& opts, std::ostream& out);
int CmdDecode(const DecodeOptions& opts, std::ostream& out);
int CmdScore(const ScoreOptions& opts, std::ostream& out);

// `key = value` config file with '#' comments; unknown keys are errors.
GenConfig ParseGenConfigFile(const std::string& path, GenConfig base = {});

DecodeMode ParseDecodeMode(const std::string& name);
std::string DecodeModeName(DecodeMode mode);

// Manifest rows used by the gender breakdown (utt_id -> "FF"/"FM"/...).
std::map<std::string, std::string> ReadManifestGenders(
    const std::string& path);

}  // namespace fhmmdec

#endif  // FHMMDEC_PIPELINE_H_
