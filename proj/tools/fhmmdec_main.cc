// tools/fhmmdec_main.cc

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

#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "fhmmdec/error.h"
#include "fhmmdec/pipeline.h"

using namespace fhmmdec;

int main(int argc, char** argv) {
  CLI::App app{"Multi-talker HMM decoding toolkit: separate, marginal and "
               "joint (exact / loopy-BP) decoding over state-posterior "
               "streams"};
  app.require_subcommand(1);

  BuildGraphOptions bg;
  auto* build = app.add_subcommand("build-graph",
                                   "Compile lexicon + unigram grammar into a "
                                   "decoding graph (FDG1)");
  build->add_option("--phones", bg.phones_path, "Phone inventory file")
      ->required();
  build->add_option("--lexicon", bg.lexicon_path, "Pronunciation lexicon file")
      ->required();
  build->add_option("--grammar", bg.grammar_path, "Unigram weights file")
      ->required();
  build->add_option("--out", bg.out_path, "Output graph path")->required();

  GenerateOptions gen;
  std::string kappa_str;
  auto* generate = app.add_subcommand("generate",
                                      "Generate a synthetic two-speaker "
                                      "corpus with ground truth");
  generate->add_option("--graph", gen.graph_path, "Decoding graph (FDG1)")
      ->required();
  generate->add_option("--out", gen.out_dir, "Output corpus directory")
      ->required();
  generate->add_option("--config", gen.config_path,
                       "key = value generator config file");
  generate->add_option("--n-utts", gen.config.n_utts, "Utterance count");
  generate->add_option("--seed", gen.config.seed, "Corpus seed");
  generate->add_option("--gamma", gen.config.gamma,
                       "Confusion mass, opposite-gender pairs");
  generate->add_option("--gamma-same", gen.config.gamma_same,
                       "Confusion mass, same-gender pairs");
  generate->add_option("--kappa", kappa_str,
                       "Posterior sharpness (number or 'inf')");
  generate->add_option("--digits-min", gen.config.digits_min,
                       "Minimum digits per utterance");
  generate->add_option("--digits-max", gen.config.digits_max,
                       "Maximum digits per utterance");
  generate->add_option("--factorized-fraction",
                       gen.config.factorized_fraction,
                       "Fraction of mass rebuilt as product of marginals");
  generate->add_option("--same-gender-fraction",
                       gen.config.same_gender_fraction,
                       "Fraction of same-gender pairs");
  generate->add_option("--threads", gen.n_threads, "Worker threads");

  DecodeOptions dec;
  std::string mode_str, schedule_str = "ab", format_str = "text";
  auto* decode = app.add_subcommand("decode",
                                    "Decode posterior tensors to word "
                                    "hypotheses");
  decode->add_option("--graph", dec.graph_path, "Decoding graph (FDG1)")
      ->required();
  decode->add_option("--posteriors", dec.posteriors_path,
                     ".fdp file or directory of them")
      ->required();
  decode->add_option("--mode", mode_str,
                     "separate | marginal | joint-exact | joint-lbp")
      ->required();
  decode->add_option("--out", dec.out_path, "Hypothesis file")->required();
  decode->add_option("--diagnostics", dec.diagnostics_path,
                     "joint-lbp diagnostics path (default <out>.diag.jsonl)");
  decode->add_option("--lbp-max-sweeps", dec.lbp.max_sweeps,
                     "LBP sweep budget");
  decode->add_option("--lbp-tol", dec.lbp.convergence_tol,
                     "LBP convergence tolerance");
  decode->add_option("--lbp-damping", dec.lbp.damping,
                     "LBP damping factor in [0, 1)");
  decode->add_option("--lbp-schedule", schedule_str,
                     "Speaker sweep order: ab | ba");
  decode->add_option("--exact-max-states", dec.exact.max_states,
                     "Product-space state limit for joint-exact");
  decode->add_option("--threads", dec.n_threads, "Worker threads");
  decode->add_option("--format", format_str, "text | json");

  ScoreOptions sc;
  std::string score_format = "text";
  auto* score = app.add_subcommand("score",
                                   "Oracle-permutation WER against "
                                   "references");
  score->add_option("--refs", sc.refs_path, "Reference transcript file")
      ->required();
  score->add_option("--hyps", sc.hyps_path, "Hypothesis transcript file")
      ->required();
  score->add_option("--by-gender", sc.manifest_path,
                    "Corpus manifest; adds same/opposite gender rows");
  score->add_option("--format", score_format, "text | json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (build->parsed()) return CmdBuildGraph(bg, std::cout);
    if (generate->parsed()) {
      if (!gen.config_path.empty())
        gen.config = ParseGenConfigFile(gen.config_path, gen.config);
      if (!kappa_str.empty())
        gen.config.kappa = kappa_str == "inf"
                               ? std::numeric_limits<double>::infinity()
                               : std::stod(kappa_str);
      return CmdGenerate(gen, std::cout);
    }
    if (decode->parsed()) {
      dec.mode = ParseDecodeMode(mode_str);
      if (schedule_str == "ab") {
        dec.lbp.schedule = SweepOrder::kAThenB;
      } else if (schedule_str == "ba") {
        dec.lbp.schedule = SweepOrder::kBThenA;
      } else {
        throw ValidationError("unknown --lbp-schedule '" + schedule_str +
                              "'");
      }
      if (format_str == "json") dec.json = true;
      else if (format_str != "text")
        throw ValidationError("unknown --format '" + format_str + "'");
      return CmdDecode(dec, std::cout);
    }
    if (score->parsed()) {
      if (score_format == "json") sc.json = true;
      else if (score_format != "text")
        throw ValidationError("unknown --format '" + score_format + "'");
      return CmdScore(sc, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitValidation;
}
