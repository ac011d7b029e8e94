// tests/test_pipeline.cc

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fhmmdec/error.h"
#include "fhmmdec/pipeline.h"
#include "test_util.h"

using namespace fhmmdec;
using namespace fhmmdec::testutil;

namespace {

const std::string kDataDir = FHMMDEC_DATA_DIR;
namespace fs = std::filesystem;

// Builds the digit graph once per test binary run.
std::string DigitsGraphFile() {
  static std::string path = [] {
    auto dir = TempDir("pipe_graph");
    BuildGraphOptions opts;
    opts.phones_path = kDataDir + "/digits/phones.txt";
    opts.lexicon_path = kDataDir + "/digits/lexicon.txt";
    opts.grammar_path = kDataDir + "/digits/grammar.txt";
    opts.out_path = (dir / "digits.fdg").string();
    std::ostringstream out;
    REQUIRE(CmdBuildGraph(opts, out) == 0);
    REQUIRE(out.str().find("V=62") != std::string::npos);
    return opts.out_path;
  }();
  return path;
}

std::string NoiselessCorpus(const std::string& tag) {
  auto dir = TempDir("pipe_" + tag);
  GenerateOptions gen;
  gen.graph_path = DigitsGraphFile();
  gen.out_dir = (dir / "corpus").string();
  gen.config.n_utts = 5;
  gen.config.digits_max = 3;
  gen.config.kappa = std::numeric_limits<double>::infinity();
  gen.config.gamma = 0.0;
  gen.config.gamma_same = 0.0;
  gen.config.seed = 4;
  std::ostringstream out;
  REQUIRE(CmdGenerate(gen, out) == 0);
  return gen.out_dir;
}

}  // namespace

TEST_CASE("build-graph failure modes") {
  BuildGraphOptions opts;
  opts.phones_path = kDataDir + "/digits/phones.txt";
  opts.lexicon_path = kDataDir + "/digits/lexicon.txt";
  opts.grammar_path = kDataDir + "/digits/grammar.txt";
  auto dir = TempDir("pipe_bg");
  opts.out_path = (dir / "g.fdg").string();
  std::ostringstream out;

  SUBCASE("missing phones file names the path") {
    opts.phones_path = (dir / "nope.txt").string();
    try {
      CmdBuildGraph(opts, out);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(e.exit_code() == kExitIo);
      CHECK(std::string(e.what()).find("nope.txt") != std::string::npos);
    }
  }
  SUBCASE("grammar summing to 0.99 reports the sum") {
    std::string bad = (dir / "bad_grammar.txt").string();
    std::ofstream f(bad);
    f << "one 0.99\n";
    f.close();
    opts.grammar_path = bad;
    try {
      CmdBuildGraph(opts, out);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      CHECK(e.exit_code() == kExitValidation);
      CHECK(std::string(e.what()).find("0.99") != std::string::npos);
    }
  }
}

TEST_CASE("generator config files parse key = value lines") {
  auto dir = TempDir("pipe_cfg");
  std::string path = (dir / "gen.cfg").string();

  SUBCASE("values, spacing and comments") {
    std::ofstream(path) << "# comment line\n"
                        << "n_utts = 42\n"
                        << "gamma=0.25   # trailing comment\n"
                        << "  kappa =  12.5\n"
                        << "emit_separate = false\n"
                        << "seed = 1234\n";
    GenConfig c = ParseGenConfigFile(path);
    CHECK(c.n_utts == 42);
    CHECK(c.gamma == doctest::Approx(0.25));
    CHECK(c.kappa == doctest::Approx(12.5));
    CHECK(c.emit_separate == false);
    CHECK(c.seed == 1234);
    CHECK(c.digits_max == 7);  // untouched default
  }
  SUBCASE("unknown key") {
    std::ofstream(path) << "n_utt = 42\n";
    CHECK_THROWS_WITH_AS(ParseGenConfigFile(path),
                         doctest::Contains("unknown key"), IoError);
  }
  SUBCASE("malformed value") {
    std::ofstream(path) << "n_utts = many\n";
    CHECK_THROWS_AS(ParseGenConfigFile(path), IoError);
  }
  SUBCASE("stray tokens without equals") {
    std::ofstream(path) << "n_utts 42\n";
    CHECK_THROWS_AS(ParseGenConfigFile(path), IoError);
  }
}

TEST_CASE("decode mode names round-trip and reject junk") {
  for (auto mode : {DecodeMode::kSeparate, DecodeMode::kMarginal,
                    DecodeMode::kJointExact, DecodeMode::kJointLbp})
    CHECK(ParseDecodeMode(DecodeModeName(mode)) == mode);
  CHECK_THROWS_AS(ParseDecodeMode("fast"), ValidationError);
}

TEST_CASE("noiseless pipeline closes end to end at zero WER") {
  std::string corpus = NoiselessCorpus("e2e");
  auto dir = TempDir("pipe_e2e_out");

  for (const char* mode : {"separate", "marginal", "joint-exact",
                           "joint-lbp"}) {
    DecodeOptions dec;
    dec.graph_path = DigitsGraphFile();
    dec.posteriors_path =
        corpus + (std::string(mode) == "separate" ? "/separate" : "/joint");
    dec.mode = ParseDecodeMode(mode);
    dec.out_path = (dir / (std::string("hyp_") + mode + ".txt")).string();
    dec.n_threads = 2;
    std::ostringstream out;
    REQUIRE(CmdDecode(dec, out) == 0);

    ScoreOptions sc;
    sc.refs_path = corpus + "/refs.txt";
    sc.hyps_path = dec.out_path;
    sc.manifest_path = corpus + "/manifest.txt";
    std::ostringstream report;
    REQUIRE(CmdScore(sc, report) == 0);
    CHECK(report.str().find("%WER 0.00") != std::string::npos);
  }

  // joint-lbp leaves a diagnostics sidecar.
  CHECK(fs::exists((dir / "hyp_joint-lbp.txt.diag.jsonl")));
}

TEST_CASE("mode/kind mismatches are named explicitly") {
  std::string corpus = NoiselessCorpus("mismatch");
  auto dir = TempDir("pipe_mm_out");
  DecodeOptions dec;
  dec.graph_path = DigitsGraphFile();
  dec.out_path = (dir / "h.txt").string();

  SUBCASE("separate mode on joint tensors") {
    dec.posteriors_path = corpus + "/joint";
    dec.mode = DecodeMode::kSeparate;
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(CmdDecode(dec, out),
                         doctest::Contains("mode/kind mismatch"),
                         ValidationError);
  }
  SUBCASE("joint mode on separate tensors") {
    dec.posteriors_path = corpus + "/separate";
    dec.mode = DecodeMode::kJointLbp;
    std::ostringstream out;
    CHECK_THROWS_WITH_AS(CmdDecode(dec, out),
                         doctest::Contains("mode/kind mismatch"),
                         ValidationError);
  }
}

TEST_CASE("capacity refusal surfaces as exit code 4") {
  std::string corpus = NoiselessCorpus("capacity");
  auto dir = TempDir("pipe_cap_out");
  DecodeOptions dec;
  dec.graph_path = DigitsGraphFile();
  dec.posteriors_path = corpus + "/joint";
  dec.mode = DecodeMode::kJointExact;
  dec.exact.max_states = 16;  // digits graph has 62
  dec.out_path = (dir / "h.txt").string();
  std::ostringstream out;
  try {
    CmdDecode(dec, out);
    FAIL("expected CapacityError");
  } catch (const CapacityError& e) {
    CHECK(e.exit_code() == kExitCapacity);
  }
}

TEST_CASE("scoring rejects unmatched utterance ids, listing them") {
  std::string corpus = NoiselessCorpus("unmatched");
  auto dir = TempDir("pipe_um_out");
  std::string hyp = (dir / "h.txt").string();
  std::ofstream(hyp) << "uttXXXXX\t0\tone\nuttXXXXX\t1\ttwo\n";

  ScoreOptions sc;
  sc.refs_path = corpus + "/refs.txt";
  sc.hyps_path = hyp;
  std::ostringstream out;
  CHECK_THROWS_WITH_AS(CmdScore(sc, out), doctest::Contains("unmatched"),
                       ValidationError);
}

TEST_CASE("json score reports carry the counts") {
  std::string corpus = NoiselessCorpus("json");
  auto dir = TempDir("pipe_json_out");

  DecodeOptions dec;
  dec.graph_path = DigitsGraphFile();
  dec.posteriors_path = corpus + "/joint";
  dec.mode = DecodeMode::kMarginal;
  dec.out_path = (dir / "h.txt").string();
  std::ostringstream out;
  REQUIRE(CmdDecode(dec, out) == 0);

  ScoreOptions sc;
  sc.refs_path = corpus + "/refs.txt";
  sc.hyps_path = dec.out_path;
  sc.manifest_path = corpus + "/manifest.txt";
  sc.json = true;
  std::ostringstream report;
  REQUIRE(CmdScore(sc, report) == 0);
  CHECK(report.str().find("\"overall\"") != std::string::npos);
  CHECK(report.str().find("\"wer\":0.0") != std::string::npos);
}
