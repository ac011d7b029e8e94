// src/posteriors.cc

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

#include "fhmmdec/posteriors.h"

#include <cmath>
#include <cstring>
#include <fstream>

#include "fhmmdec/binary_io.h"
#include "fhmmdec/error.h"
#include "fhmmdec/logmath.h"

namespace fhmmdec {

namespace {

constexpr double kNormTol = 1e-6;

void CheckRows(const std::vector<double>& data, std::size_t row_len,
               const char* what) {
  for (double x : data) {
    if (std::isnan(x))
      throw ValidationError(std::string(what) + ": NaN entry");
    if (std::isinf(x) && x > 0.0)
      throw ValidationError(std::string(what) + ": +inf entry");
  }
  std::size_t n_rows = data.size() / row_len;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double lse =
        LogSumExp(std::span<const double>(data.data() + r * row_len, row_len));
    if (!(std::abs(lse) <= kNormTol))
      throw ValidationError(std::string(what) + ": row " + std::to_string(r) +
                            " not normalized, logsumexp = " +
                            std::to_string(lse));
  }
}

}  // namespace

SeparatePosteriors SeparatePosteriors::Create(std::int32_t n_speakers,
                                              std::int32_t n_frames,
                                              std::int32_t n_states,
                                              std::vector<double> data) {
  if (n_speakers < 1 || n_frames < 1 || n_states < 1)
    throw ValidationError("separate posteriors: dimensions must be positive");
  std::size_t expect = static_cast<std::size_t>(n_speakers) * n_frames *
                       static_cast<std::size_t>(n_states);
  if (data.size() != expect)
    throw ValidationError("separate posteriors: payload has " +
                          std::to_string(data.size()) + " values, expected " +
                          std::to_string(expect));
  CheckRows(data, static_cast<std::size_t>(n_states), "separate posteriors");
  SeparatePosteriors p;
  p.n_speakers = n_speakers;
  p.n_frames = n_frames;
  p.n_states = n_states;
  p.data = std::move(data);
  return p;
}

JointPosteriors JointPosteriors::Create(std::int32_t n_frames,
                                        std::int32_t n_states,
                                        std::vector<double> data) {
  if (n_frames < 1 || n_states < 1)
    throw ValidationError("joint posteriors: dimensions must be positive");
  std::size_t cells = static_cast<std::size_t>(n_states) * n_states;
  std::size_t expect = static_cast<std::size_t>(n_frames) * cells;
  if (data.size() != expect)
    throw ValidationError("joint posteriors: payload has " +
                          std::to_string(data.size()) + " values, expected " +
                          std::to_string(expect));
  CheckRows(data, cells, "joint posteriors");
  JointPosteriors p;
  p.n_frames = n_frames;
  p.n_states = n_states;
  p.data = std::move(data);
  return p;
}

PriorVector PriorVector::Create(std::vector<double> log_prob) {
  if (log_prob.empty()) throw ValidationError("prior: empty vector");
  CheckRows(log_prob, log_prob.size(), "prior");
  return PriorVector{std::move(log_prob)};
}

SeparatePosteriors Marginalize(const JointPosteriors& joint,
                               SpeakerSlot speaker) {
  std::int32_t T = joint.n_frames, V = joint.n_states;
  std::vector<double> out(static_cast<std::size_t>(T) * V);
  std::vector<double> cell(static_cast<std::size_t>(V));
  for (std::int32_t t = 0; t < T; ++t) {
    for (std::int32_t i = 0; i < V; ++i) {
      if (speaker == SpeakerSlot::kA) {
        for (std::int32_t j = 0; j < V; ++j)
          cell[static_cast<std::size_t>(j)] = joint.At(t, i, j);
      } else {
        for (std::int32_t j = 0; j < V; ++j)
          cell[static_cast<std::size_t>(j)] = joint.At(t, j, i);
      }
      out[static_cast<std::size_t>(t) * V + i] = LogSumExp(cell);
    }
  }
  return SeparatePosteriors::Create(1, T, V, std::move(out));
}

namespace {

std::vector<double> SubtractPrior(const std::vector<double>& data,
                                  std::size_t row_len,
                                  const PriorVector& prior,
                                  bool joint_rows) {
  std::vector<double> out(data.size());
  std::size_t v = prior.log_prob.size();
  for (std::size_t idx = 0; idx < data.size(); ++idx) {
    double x = data[idx];
    if (IsLogZero(x)) {
      out[idx] = x;
      continue;
    }
    double lp;
    if (joint_rows) {
      std::size_t cell = idx % row_len;
      lp = prior.log_prob[cell / v] + prior.log_prob[cell % v];
    } else {
      lp = prior.log_prob[idx % row_len];
    }
    if (IsLogZero(lp))
      throw NumericError(
          "pseudo-likelihood: prior is zero where the posterior is not");
    out[idx] = x - lp;
  }
  return out;
}

}  // namespace

SeparatePosteriors ToPseudoLikelihood(const SeparatePosteriors& post,
                                      const PriorVector* prior) {
  if (prior == nullptr) return post;
  if (prior->log_prob.size() != static_cast<std::size_t>(post.n_states))
    throw ValidationError("pseudo-likelihood: prior length mismatch");
  SeparatePosteriors out = post;
  out.data = SubtractPrior(post.data, static_cast<std::size_t>(post.n_states),
                           *prior, /*joint_rows=*/false);
  return out;
}

JointPosteriors ToPseudoLikelihood(const JointPosteriors& post,
                                   const PriorVector* prior) {
  if (prior == nullptr) return post;
  if (prior->log_prob.size() != static_cast<std::size_t>(post.n_states))
    throw ValidationError("pseudo-likelihood: prior length mismatch");
  JointPosteriors out = post;
  std::size_t cells = static_cast<std::size_t>(post.n_states) * post.n_states;
  out.data = SubtractPrior(post.data, cells, *prior, /*joint_rows=*/true);
  return out;
}

namespace {

constexpr char kPosteriorMagic[4] = {'F', 'D', 'P', '1'};

void WriteHeaderAndPayload(ByteWriter& w, std::uint8_t kind, std::uint8_t k,
                           std::int32_t t, std::int32_t v,
                           const std::vector<double>& data) {
  w.Magic(kPosteriorMagic);
  w.U8(kind);
  w.U8(k);
  w.U16(0);  // reserved
  w.U32(static_cast<std::uint32_t>(t));
  w.U32(static_cast<std::uint32_t>(v));
  for (double x : data) w.F32(static_cast<float>(x));
}

}  // namespace

void WritePosteriorFile(const SeparatePosteriors& post,
                        const std::string& path) {
  ByteWriter w;
  WriteHeaderAndPayload(w, 0, static_cast<std::uint8_t>(post.n_speakers),
                        post.n_frames, post.n_states, post.data);
  WriteFileBytes(path, w.bytes());
}

void WritePosteriorFile(const JointPosteriors& post, const std::string& path) {
  ByteWriter w;
  WriteHeaderAndPayload(w, 1, 2, post.n_frames, post.n_states, post.data);
  WriteFileBytes(path, w.bytes());
}

PosteriorFile ReadPosteriorFile(const std::string& path) {
  auto bytes = ReadFileBytes(path);
  ByteReader r(bytes, path);
  r.ExpectMagic(kPosteriorMagic, "posterior tensor");
  std::uint8_t kind = r.U8();
  std::uint8_t k = r.U8();
  std::uint16_t reserved = r.U16();
  std::int32_t t = static_cast<std::int32_t>(r.U32());
  std::int32_t v = static_cast<std::int32_t>(r.U32());
  if (reserved != 0) throw IoError(path + ": nonzero reserved header field");
  if (t < 1 || v < 1) throw IoError(path + ": bad dimensions in header");

  std::uint64_t n_floats;
  if (kind == 0) {
    if (k < 1) throw IoError(path + ": separate kind with K = 0");
    n_floats = static_cast<std::uint64_t>(k) * t * v;
  } else if (kind == 1) {
    if (k != 2)
      throw IoError(path + ": joint kind expects K = 2, header says " +
                    std::to_string(k));
    n_floats = static_cast<std::uint64_t>(t) * v * v;
  } else {
    throw IoError(path + ": unknown tensor kind " + std::to_string(kind));
  }
  r.Require(n_floats * 4);

  std::vector<double> data(n_floats);
  for (auto& x : data) {
    float f = r.F32();
    if (std::isnan(f)) throw IoError(path + ": NaN entry in payload");
    x = static_cast<double>(f);
  }
  r.ExpectEnd();

  try {
    if (kind == 0) return SeparatePosteriors::Create(k, t, v, std::move(data));
    return JointPosteriors::Create(t, v, std::move(data));
  } catch (const ValidationError& e) {
    throw IoError(path + ": " + e.what());
  }
}

PosteriorKind ReadPosteriorKind(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char header[5];
  if (!in.read(header, 5))
    throw IoError(path + ": truncated, expected 16 bytes, have fewer than 5");
  if (std::memcmp(header, kPosteriorMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a posterior tensor file");
  std::uint8_t kind = static_cast<std::uint8_t>(header[4]);
  if (kind > 1)
    throw IoError(path + ": unknown tensor kind " + std::to_string(kind));
  return static_cast<PosteriorKind>(kind);
}

void QuantizeNormalizeRows(std::vector<double>& log_values,
                           std::size_t row_len) {
  std::size_t n_rows = log_values.size() / row_len;
  for (std::size_t r = 0; r < n_rows; ++r) {
    std::span<double> row(log_values.data() + r * row_len, row_len);
    for (double& x : row) x = static_cast<double>(static_cast<float>(x));
    // A couple of passes push the post-rounding logsumexp well under the
    // ingest tolerance.
    for (int pass = 0; pass < 4; ++pass) {
      double lse = LogSumExp(row);
      if (std::abs(lse) <= 2e-7) break;
      for (double& x : row)
        x = static_cast<double>(static_cast<float>(x - lse));
    }
  }
}

}  // namespace fhmmdec
