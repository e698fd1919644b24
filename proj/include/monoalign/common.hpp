#ifndef MONOALIGN_COMMON_HPP
#define MONOALIGN_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace monoalign {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files, schema violations, bad arguments on datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Failures while fitting boosted trees or during grid search.
class TrainingError : public Error {
 public:
  using Error::Error;
};

/// Shapes, schemas or fingerprints that do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::string_view kVersion = "0.3.1";

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ (mix64(b) + 0x632be59bd9b4e019ULL + (a << 6) + (a >> 2)));
}

template <typename... Rest>
constexpr std::uint64_t combine_seed(std::uint64_t a, std::uint64_t b, Rest... rest) {
  return combine_seed(combine_seed(a, b), static_cast<std::uint64_t>(rest)...);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v);

}  // namespace monoalign

#endif  // MONOALIGN_COMMON_HPP
