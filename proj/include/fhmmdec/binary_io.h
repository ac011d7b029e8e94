// include/fhmmdec/binary_io.h

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

#ifndef FHMMDEC_BINARY_IO_H_
#define FHMMDEC_BINARY_IO_H_

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "fhmmdec/error.h"

namespace fhmmdec {

// Little-endian buffer writer for the FDG1/FDP1 containers.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(v); }
  void U16(std::uint16_t v) { Raw(&v, 2); }
  void U32(std::uint32_t v) { Raw(&v, 4); }
  void U64(std::uint64_t v) { Raw(&v, 8); }
  void I32(std::int32_t v) { Raw(&v, 4); }
  void F32(float v) { Raw(&v, 4); }
  void F64(double v) { Raw(&v, 8); }
  void Magic(const char m[4]) { Raw(m, 4); }
  void Str(const std::string& s) {
    U32(static_cast<std::uint32_t>(s.size()));
    Raw(s.data(), s.size());
  }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }

 private:
  void Raw(const void* p, std::size_t n) {
    // Host is assumed little-endian; static_assert guards the build.
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swapping here");
    std::size_t off = buf_.size();
    buf_.resize(off + n);
    std::memcpy(buf_.data() + off, p, n);
  }

  std::vector<std::uint8_t> buf_;
};

// Bounds-checked reader; throws IoError naming the shortfall.
class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& buf, std::string origin)
      : buf_(buf), origin_(std::move(origin)) {}

  std::uint8_t U8() { return Take<std::uint8_t>(); }
  std::uint16_t U16() { return Take<std::uint16_t>(); }
  std::uint32_t U32() { return Take<std::uint32_t>(); }
  std::uint64_t U64() { return Take<std::uint64_t>(); }
  std::int32_t I32() { return Take<std::int32_t>(); }
  float F32() { return Take<float>(); }
  double F64() { return Take<double>(); }

  void ExpectMagic(const char m[4], const std::string& what) {
    char got[4];
    RawInto(got, 4);
    if (std::memcmp(got, m, 4) != 0)
      throw IoError(origin_ + ": bad magic, not a " + what + " file");
  }

  std::string Str() {
    std::uint32_t n = U32();
    std::string s(n, '\0');
    RawInto(s.data(), n);
    return s;
  }

  // Fails with expected-vs-actual byte counts when the payload is short.
  void Require(std::uint64_t more_bytes) const {
    if (buf_.size() - pos_ < more_bytes)
      throw IoError(origin_ + ": truncated, expected " +
                    std::to_string(pos_ + more_bytes) + " bytes, have " +
                    std::to_string(buf_.size()));
  }

  void ExpectEnd() const {
    if (pos_ != buf_.size())
      throw IoError(origin_ + ": trailing bytes, expected " +
                    std::to_string(pos_) + " bytes, have " +
                    std::to_string(buf_.size()));
  }

  std::uint64_t remaining() const { return buf_.size() - pos_; }
  const std::string& origin() const { return origin_; }

 private:
  template <typename T>
  T Take() {
    static_assert(std::endian::native == std::endian::little,
                  "big-endian hosts need byte swapping here");
    T v;
    RawInto(&v, sizeof(T));
    return v;
  }

  void RawInto(void* out, std::size_t n) {
    Require(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }

  const std::vector<std::uint8_t>& buf_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::vector<std::uint8_t> ReadFileBytes(const std::string& path);
void WriteFileBytes(const std::string& path,
                    const std::vector<std::uint8_t>& bytes);

}  // namespace fhmmdec

#endif  // FHMMDEC_BINARY_IO_H_
