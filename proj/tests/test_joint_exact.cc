// tests/test_joint_exact.cc

#include <doctest.h>

#include <cmath>
#include <random>

#include "fhmmdec/error.h"
#include "fhmmdec/joint_exact.h"
#include "fhmmdec/logmath.h"
#include "fhmmdec/viterbi.h"
#include "test_util.h"

using namespace fhmmdec;
using namespace fhmmdec::testutil;

namespace {

JointPosteriors Transposed(const JointPosteriors& j) {
  JointPosteriors out = j;
  for (std::int32_t t = 0; t < j.n_frames; ++t)
    for (std::int32_t a = 0; a < j.n_states; ++a)
      for (std::int32_t b = 0; b < j.n_states; ++b)
        out.At(t, b, a) = j.At(t, a, b);
  return out;
}

}  // namespace

TEST_CASE("factorized tensors decouple into two independent decodes") {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    std::int32_t T = 1 + static_cast<std::int32_t>(rng() % 10);
    std::int32_t V = 2 + static_cast<std::int32_t>(rng() % 6);
    DecodingGraph g = RandomGraph(V, rng);
    auto sa = RandomScores(T, V, rng);
    auto sb = RandomScores(T, V, rng);
    JointPosteriors j = FactorizedJoint(T, V, sa, sb);

    JointPath pair = ExactJointDecode(g, j);
    StatePath va = ViterbiDecode(g, {T, V, sa.data()});
    StatePath vb = ViterbiDecode(g, {T, V, sb.data()});
    CHECK(pair.path_a.states == va.states);
    CHECK(pair.path_b.states == vb.states);
    CHECK(pair.joint_score ==
          doctest::Approx(va.score + vb.score).epsilon(1e-9));
  }
}

TEST_CASE("single frame is the argmax over the V x V grid") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    std::int32_t V = 2 + static_cast<std::int32_t>(rng() % 5);
    DecodingGraph g = RandomGraph(V, rng);
    JointPosteriors j = RandomJoint(1, V, rng, 0.5);

    double best = kLogZero;
    std::int32_t bi = 0, bj = 0;
    for (std::int32_t a = 0; a < V; ++a)
      for (std::int32_t b = 0; b < V; ++b) {
        double cand = g.initial[static_cast<std::size_t>(a)] +
                      g.initial[static_cast<std::size_t>(b)] + j.At(0, a, b);
        if (cand > best) {
          best = cand;
          bi = a;
          bj = b;
        }
      }
    JointPath pair = ExactJointDecode(g, j);
    CHECK(pair.path_a.states[0] == bi);
    CHECK(pair.path_b.states[0] == bj);
    CHECK(pair.joint_score == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("matches pair-sequence enumeration on random instances") {
  std::mt19937_64 rng(23);
  int checked = 0;
  for (int trial = 0; trial < 120; ++trial) {
    std::int32_t T = 1 + static_cast<std::int32_t>(rng() % 5);
    std::int32_t V = 2 + static_cast<std::int32_t>(rng() % 2);
    double keep = trial % 4 == 0 ? 0.7 : 1.0;
    DecodingGraph g = RandomGraph(V, rng, keep);
    JointPosteriors j = RandomJoint(T, V, rng, 0.5);

    BruteJointResult want = BruteForceJoint(g, j);
    if (IsLogZero(want.score)) {
      CHECK_THROWS_AS(ExactJointDecode(g, j), NumericError);
      continue;
    }
    JointPath got = ExactJointDecode(g, j);
    CHECK(got.path_a.states == want.a);
    CHECK(got.path_b.states == want.b);
    CHECK(got.joint_score == doctest::Approx(want.score).epsilon(1e-9));
    CHECK(ScoreJointPath(g, j, got.path_a.states, got.path_b.states) ==
          doctest::Approx(got.joint_score).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked > 100);
}

TEST_CASE("transposing the tensor swaps the two paths") {
  std::mt19937_64 rng(27);
  for (int trial = 0; trial < 25; ++trial) {
    std::int32_t T = 1 + static_cast<std::int32_t>(rng() % 8);
    std::int32_t V = 2 + static_cast<std::int32_t>(rng() % 4);
    DecodingGraph g = RandomGraph(V, rng);
    JointPosteriors j = RandomJoint(T, V, rng, 0.6);

    JointPath p = ExactJointDecode(g, j);
    JointPath q = ExactJointDecode(g, Transposed(j));
    CHECK(q.path_a.states == p.path_b.states);
    CHECK(q.path_b.states == p.path_a.states);
    CHECK(q.joint_score == doctest::Approx(p.joint_score).epsilon(1e-12));
  }
}

TEST_CASE("no random pair path scores above the exact optimum") {
  std::mt19937_64 rng(31);
  std::int32_t T = 12, V = 5;
  DecodingGraph g = RandomGraph(V, rng);
  JointPosteriors j = RandomJoint(T, V, rng, 0.5);
  JointPath best = ExactJointDecode(g, j);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto random_walk = [&]() {
    std::vector<std::int32_t> states;
    std::int32_t s = static_cast<std::int32_t>(rng() % V);
    states.push_back(s);
    for (std::int32_t t = 1; t < T; ++t) {
      const auto& arcs = g.arcs_out[static_cast<std::size_t>(s)];
      s = arcs[rng() % arcs.size()].target;
      states.push_back(s);
    }
    return states;
  };
  for (int trial = 0; trial < 500; ++trial) {
    double s = ScoreJointPath(g, j, random_walk(), random_walk());
    CHECK(s <= best.joint_score + 1e-9);
  }
}

TEST_CASE("capacity limits are enforced before allocation") {
  std::mt19937_64 rng(33);
  DecodingGraph g = RandomGraph(6, rng);
  JointPosteriors j = RandomJoint(4, 6, rng, 0.0);

  SUBCASE("state limit") {
    ExactJointOptions opts;
    opts.max_states = 5;
    CHECK_THROWS_WITH_AS(ExactJointDecode(g, j, opts),
                         doctest::Contains("LBP"), CapacityError);
  }
  SUBCASE("backpointer byte budget") {
    ExactJointOptions opts;
    opts.max_backpointer_bytes = 64;
    CHECK_THROWS_AS(ExactJointDecode(g, j, opts), CapacityError);
  }
}
