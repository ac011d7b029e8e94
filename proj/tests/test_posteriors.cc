// tests/test_posteriors.cc

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "fhmmdec/binary_io.h"
#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"
#include "fhmmdec/posteriors.h"
#include "test_util.h"

using namespace fhmmdec;
using namespace fhmmdec::testutil;

TEST_CASE("marginalize a hand 2x2 frame") {
  // joint = [[0.4, 0.1], [0.3, 0.2]]
  std::vector<double> data = {std::log(0.4), std::log(0.1), std::log(0.3),
                              std::log(0.2)};
  JointPosteriors j = JointPosteriors::Create(1, 2, std::move(data));

  SeparatePosteriors a = Marginalize(j, SpeakerSlot::kA);
  CHECK(a.At(0, 0, 0) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  CHECK(a.At(0, 0, 1) == doctest::Approx(std::log(0.5)).epsilon(1e-12));
  SeparatePosteriors b = Marginalize(j, SpeakerSlot::kB);
  CHECK(b.At(0, 0, 0) == doctest::Approx(std::log(0.7)).epsilon(1e-12));
  CHECK(b.At(0, 0, 1) == doctest::Approx(std::log(0.3)).epsilon(1e-12));
}

TEST_CASE("marginals of a factorized joint recover the factors") {
  std::mt19937_64 rng(3);
  std::int32_t T = 5, V = 4;
  auto sa = RandomScores(T, V, rng);
  auto sb = RandomScores(T, V, rng);
  JointPosteriors j = FactorizedJoint(T, V, sa, sb);

  SeparatePosteriors ma = Marginalize(j, SpeakerSlot::kA);
  SeparatePosteriors mb = Marginalize(j, SpeakerSlot::kB);
  for (std::int32_t t = 0; t < T; ++t)
    for (std::int32_t v = 0; v < V; ++v) {
      CHECK(ma.At(0, t, v) ==
            doctest::Approx(sa[static_cast<std::size_t>(t) * V + v])
                .epsilon(1e-9));
      CHECK(mb.At(0, t, v) ==
            doctest::Approx(sb[static_cast<std::size_t>(t) * V + v])
                .epsilon(1e-9));
    }
}

TEST_CASE("uniform joint marginalizes to uniform") {
  std::int32_t V = 3;
  std::vector<double> data(9, std::log(1.0 / 9.0));
  JointPosteriors j = JointPosteriors::Create(1, V, std::move(data));
  SeparatePosteriors m = Marginalize(j, SpeakerSlot::kB);
  for (std::int32_t v = 0; v < V; ++v)
    CHECK(m.At(0, 0, v) == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("marginal rows stay normalized and commute with frame shuffles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::int32_t T = 2 + static_cast<std::int32_t>(rng() % 8);
    std::int32_t V = 2 + static_cast<std::int32_t>(rng() % 5);
    JointPosteriors j = RandomJoint(T, V, rng, 0.4);
    SeparatePosteriors m = Marginalize(j, SpeakerSlot::kA);
    for (std::int32_t t = 0; t < T; ++t)
      CHECK(std::abs(LogSumExp(m.Speaker(0).Row(t))) <= 1e-6);

    // Reverse the frames, marginalize, compare to reversed marginals.
    JointPosteriors rev = j;
    std::size_t cells = static_cast<std::size_t>(V) * V;
    for (std::int32_t t = 0; t < T; ++t)
      std::copy(j.data.begin() + static_cast<std::size_t>(t) * cells,
                j.data.begin() + static_cast<std::size_t>(t + 1) * cells,
                rev.data.begin() +
                    static_cast<std::size_t>(T - 1 - t) * cells);
    SeparatePosteriors mrev = Marginalize(rev, SpeakerSlot::kA);
    for (std::int32_t t = 0; t < T; ++t)
      for (std::int32_t v = 0; v < V; ++v)
        CHECK(mrev.At(0, T - 1 - t, v) == m.At(0, t, v));
  }
}

TEST_CASE("pseudo-likelihood") {
  std::mt19937_64 rng(5);
  std::int32_t T = 4, V = 3;
  SeparatePosteriors post =
      SeparatePosteriors::Create(1, T, V, RandomScores(T, V, rng));

  SUBCASE("no prior is the identity, bit for bit") {
    SeparatePosteriors out = ToPseudoLikelihood(post, nullptr);
    CHECK(out.data == post.data);
  }
  SUBCASE("uniform prior shifts but keeps the argmax") {
    PriorVector prior = PriorVector::Create(
        std::vector<double>(static_cast<std::size_t>(V), std::log(1.0 / V)));
    SeparatePosteriors out = ToPseudoLikelihood(post, &prior);
    for (std::int32_t t = 0; t < T; ++t) {
      std::int32_t arg_in = 0, arg_out = 0;
      for (std::int32_t v = 1; v < V; ++v) {
        if (post.At(0, t, v) > post.At(0, t, arg_in)) arg_in = v;
        if (out.At(0, t, v) > out.At(0, t, arg_out)) arg_out = v;
      }
      CHECK(arg_in == arg_out);
      for (std::int32_t v = 0; v < V; ++v)
        CHECK(out.At(0, t, v) ==
              doctest::Approx(post.At(0, t, v) + std::log(double(V)))
                  .epsilon(1e-12));
    }
  }
  SUBCASE("hand arithmetic, V = 2") {
    SeparatePosteriors p = SeparatePosteriors::Create(
        1, 1, 2, {std::log(0.9), std::log(0.1)});
    PriorVector prior = PriorVector::Create({std::log(0.5), std::log(0.5)});
    SeparatePosteriors out = ToPseudoLikelihood(p, &prior);
    CHECK(out.At(0, 0, 0) == doctest::Approx(std::log(1.8)).epsilon(1e-12));
    CHECK(out.At(0, 0, 1) == doctest::Approx(std::log(0.2)).epsilon(1e-12));
  }
  SUBCASE("joint subtracts both speakers' priors") {
    JointPosteriors j = JointPosteriors::Create(
        1, 2,
        {std::log(0.4), std::log(0.1), std::log(0.3), std::log(0.2)});
    PriorVector prior = PriorVector::Create({std::log(0.25), std::log(0.75)});
    JointPosteriors out = ToPseudoLikelihood(j, &prior);
    CHECK(out.At(0, 0, 1) ==
          doctest::Approx(std::log(0.1) - std::log(0.25) - std::log(0.75))
              .epsilon(1e-12));
  }
  SUBCASE("zero prior under live posterior is a numeric error") {
    SeparatePosteriors p = SeparatePosteriors::Create(
        1, 1, 2, {std::log(0.9), std::log(0.1)});
    PriorVector prior = PriorVector::Create({0.0, kLogZero});
    CHECK_THROWS_AS(ToPseudoLikelihood(p, &prior), NumericError);
  }
}

TEST_CASE("posterior files round-trip") {
  std::mt19937_64 rng(23);
  auto dir = TempDir("post");

  SUBCASE("joint, write-read-write is byte stable") {
    JointPosteriors j = RandomJoint(6, 5, rng, 0.3);
    std::string p1 = (dir / "j1.fdp").string(), p2 = (dir / "j2.fdp").string();
    WritePosteriorFile(j, p1);
    auto loaded = std::get<JointPosteriors>(ReadPosteriorFile(p1));
    CHECK(loaded.n_frames == 6);
    CHECK(loaded.n_states == 5);
    WritePosteriorFile(loaded, p2);
    CHECK(ReadFileBytes(p1) == ReadFileBytes(p2));
  }
  SUBCASE("separate, f32-quantized values reload exactly") {
    auto scores = RandomScores(7, 4, rng);
    QuantizeNormalizeRows(scores, 4);
    SeparatePosteriors s = SeparatePosteriors::Create(1, 7, 4, scores);
    std::string p = (dir / "s.fdp").string();
    WritePosteriorFile(s, p);
    auto loaded = std::get<SeparatePosteriors>(ReadPosteriorFile(p));
    CHECK(loaded.data == s.data);
    CHECK(loaded.n_speakers == 1);
  }
  SUBCASE("one-hot frames with -inf entries survive") {
    std::vector<double> data = {0.0,      kLogZero, kLogZero, kLogZero,
                                kLogZero, kLogZero, kLogZero, 0.0};
    JointPosteriors j = JointPosteriors::Create(2, 2, std::move(data));
    std::string p = (dir / "hot.fdp").string();
    WritePosteriorFile(j, p);
    auto loaded = std::get<JointPosteriors>(ReadPosteriorFile(p));
    CHECK(loaded.data ==
          std::vector<double>{0.0, kLogZero, kLogZero, kLogZero, kLogZero,
                              kLogZero, kLogZero, 0.0});
  }
}

TEST_CASE("posterior file error paths") {
  std::mt19937_64 rng(29);
  auto dir = TempDir("post_err");
  JointPosteriors j = RandomJoint(3, 4, rng, 0.0);
  std::string path = (dir / "t.fdp").string();
  WritePosteriorFile(j, path);
  auto bytes = ReadFileBytes(path);

  SUBCASE("truncated names expected and actual sizes") {
    bytes.resize(bytes.size() - 7);
    WriteFileBytes(path, bytes);
    CHECK_THROWS_WITH_AS(ReadPosteriorFile(path),
                         doctest::Contains("truncated"), IoError);
  }
  SUBCASE("bad magic") {
    bytes[1] = 'Z';
    WriteFileBytes(path, bytes);
    CHECK_THROWS_WITH_AS(ReadPosteriorFile(path), doctest::Contains("magic"),
                         IoError);
  }
  SUBCASE("NaN payload") {
    ByteWriter w;
    w.Magic("FDP1");
    w.U8(0);
    w.U8(1);
    w.U16(0);
    w.U32(1);
    w.U32(2);
    w.F32(std::numeric_limits<float>::quiet_NaN());
    w.F32(0.0f);
    WriteFileBytes(path, w.bytes());
    CHECK_THROWS_WITH_AS(ReadPosteriorFile(path), doctest::Contains("NaN"),
                         IoError);
  }
  SUBCASE("non-normalized rows are rejected, not fixed") {
    ByteWriter w;
    w.Magic("FDP1");
    w.U8(0);
    w.U8(1);
    w.U16(0);
    w.U32(1);
    w.U32(2);
    w.F32(static_cast<float>(std::log(0.5)));
    w.F32(static_cast<float>(std::log(0.4)));
    WriteFileBytes(path, w.bytes());
    CHECK_THROWS_WITH_AS(ReadPosteriorFile(path),
                         doctest::Contains("not normalized"), IoError);
  }
  SUBCASE("joint kind must carry K = 2") {
    bytes[5] = 3;  // K field
    WriteFileBytes(path, bytes);
    CHECK_THROWS_AS(ReadPosteriorFile(path), IoError);
  }
  SUBCASE("trailing bytes rejected") {
    bytes.push_back(0);
    WriteFileBytes(path, bytes);
    CHECK_THROWS_AS(ReadPosteriorFile(path), IoError);
  }
  SUBCASE("kind peek") {
    CHECK(ReadPosteriorKind(path) == PosteriorKind::kJoint);
  }
}

TEST_CASE("quantize-normalize passes the ingest gate after rounding") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    std::int32_t T = 3, V = 50;
    JointPosteriors j = RandomJoint(T, V, rng, 0.5);
    std::vector<double> q = j.data;
    QuantizeNormalizeRows(q, static_cast<std::size_t>(V) * V);
    for (double x : q)
      CHECK(static_cast<double>(static_cast<float>(x)) == x);
    // Survives the strict Create check.
    CHECK_NOTHROW(JointPosteriors::Create(T, V, std::move(q)));
  }
}
