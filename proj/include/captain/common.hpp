// Copyright 2026 The Captain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace captain {

inline constexpr std::size_t kVggDims = 4096;
inline constexpr std::size_t kOdClasses = 80;
inline constexpr std::size_t kSpClasses = 150;
inline constexpr std::size_t kMergedClasses = 210;
inline constexpr std::size_t kJointCount = 18;
inline constexpr std::size_t kCategoryCount = 10;
inline constexpr std::size_t kJ2lDims = 2448;  // 18 * C(17, 2)
inline constexpr std::size_t kScBins = 18;
inline constexpr std::size_t kScDims = kJointCount * kScBins;
inline constexpr std::size_t kArposeDims = kJ2lDims + kScDims;  // 2772
inline constexpr std::size_t kStatDims = 2;
inline constexpr std::size_t kGenderDims = 3;
inline constexpr std::size_t kCadeFeatureCount = 40;

enum class ErrorCode {
  MalformedBundle,
  DimensionMismatch,
  ValueOutOfRange,
  ZeroSaliency,
  DegenerateTraining,
  SingleClass,
  TooFewJoints,
  EmptyInput,
  KTooLarge,
  EmptyCorpus,
  DuplicateId,
  EmptyModel,
  InvalidWeights,
  MissingRoot,
  NoSharedJoints,
  EmptyTaken,
  EmptyPreferred,
  EmptySession,
  UnknownId,
  MalformedModel,
  IoError,
  InvalidArgument,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedBundle: return "MalformedBundle";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ValueOutOfRange: return "ValueOutOfRange";
    case ErrorCode::ZeroSaliency: return "ZeroSaliency";
    case ErrorCode::DegenerateTraining: return "DegenerateTraining";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewJoints: return "TooFewJoints";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyModel: return "EmptyModel";
    case ErrorCode::InvalidWeights: return "InvalidWeights";
    case ErrorCode::MissingRoot: return "MissingRoot";
    case ErrorCode::NoSharedJoints: return "NoSharedJoints";
    case ErrorCode::EmptyTaken: return "EmptyTaken";
    case ErrorCode::EmptyPreferred: return "EmptyPreferred";
    case ErrorCode::EmptySession: return "EmptySession";
    case ErrorCode::UnknownId: return "UnknownId";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI and the HTTP service can map it to an exit status or a response body.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

/// Row-major 2D grid indexed as (x, y); rows are image lines.
template <typename T>
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<T> data;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, T fill = T{})
      : width(w), height(h), data(w * h, fill) {}

  std::size_t size() const noexcept { return data.size(); }
  bool empty() const noexcept { return data.empty(); }
  T& at(std::size_t x, std::size_t y) { return data[y * width + x]; }
  const T& at(std::size_t x, std::size_t y) const { return data[y * width + x]; }

  friend bool operator==(const Plane&, const Plane&) = default;
};

/// Dense row-major matrix with contiguous storage.
template <typename T>
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  template <typename Range>
  void push_row(const Range& values) {
    if (rows_ == 0 && cols_ == 0) cols_ = values.size();
    if (values.size() != cols_) {
      throw Error(ErrorCode::DimensionMismatch,
                  "row has " + std::to_string(values.size()) +
                      " columns, matrix has " + std::to_string(cols_));
    }
    for (const auto& v : values) data_.push_back(static_cast<T>(v));
    ++rows_;
  }

  void set_cols(std::size_t cols) {
    if (rows_ != 0) throw Error(ErrorCode::InvalidArgument, "matrix not empty");
    cols_ = cols;
  }

  const std::vector<T>& storage() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

template <typename T>
T byteswap_if_needed(T value) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  } else {
    return value;
  }
}

}  // namespace detail

/// Little-endian binary writer over a std::ostream.
class LeWriter {
 public:
  explicit LeWriter(std::ostream& out) : out_(out) {}

  template <typename T>
  void put(T value) {
    const T le = detail::byteswap_if_needed(value);
    out_.write(reinterpret_cast<const char*>(&le), sizeof(T));
  }

  template <typename T>
  void put_all(std::span<const T> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (const T& v : values) put(v);
    }
  }

  void put_bytes(std::string_view bytes) {
    out_.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  bool ok() const { return static_cast<bool>(out_); }

 private:
  std::ostream& out_;
};

/// Little-endian binary reader; throws on truncation.
class LeReader {
 public:
  LeReader(std::istream& in, ErrorCode on_error) : in_(in), on_error_(on_error) {}

  template <typename T>
  T get() {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in_) throw Error(on_error_, "unexpected end of binary stream");
    return detail::byteswap_if_needed(value);
  }

  template <typename T>
  void get_all(std::span<T> values) {
    in_.read(reinterpret_cast<char*>(values.data()),
             static_cast<std::streamsize>(values.size_bytes()));
    if (!in_) throw Error(on_error_, "unexpected end of binary stream");
    if constexpr (std::endian::native == std::endian::big) {
      for (T& v : values) v = detail::byteswap_if_needed(v);
    }
  }

  std::string get_bytes(std::size_t n) {
    std::string s(n, '\0');
    in_.read(s.data(), static_cast<std::streamsize>(n));
    if (!in_) throw Error(on_error_, "unexpected end of binary stream");
    return s;
  }

 private:
  std::istream& in_;
  ErrorCode on_error_;
};

/// Dot product of a stored f32 row with a f64 query, accumulated in f64.
/// Eight independent partial sums let the compiler vectorise the loop.
inline double dot(std::span<const float> row, std::span<const double> query) {
  const std::size_t n = row.size() < query.size() ? row.size() : query.size();
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    for (std::size_t k = 0; k < 8; ++k) {
      acc[k] += static_cast<double>(row[i + k]) * query[i + k];
    }
  }
  double total = ((acc[0] + acc[1]) + (acc[2] + acc[3])) +
                 ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) total += static_cast<double>(row[i]) * query[i];
  return total;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size() < b.size() ? a.size() : b.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += a[i] * b[i];
  return total;
}

}  // namespace captain
