#ifndef MONOALIGN_TESTS_FIXTURES_HPP
#define MONOALIGN_TESTS_FIXTURES_HPP

#include <atomic>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>

#include "monoalign/data.hpp"

namespace fixture {

/// Directory removed when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("monoalign-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

/// Two increasing effects, one decreasing, two noise columns and a categorical.
inline monoalign::SyntheticSpec clinical_spec(Eigen::Index n, std::uint64_t seed, double label_noise = 0.1) {
  monoalign::SyntheticSpec s;
  s.n = n;
  s.seed = seed;
  s.monotone_features = {{"stage", 1, 2.0}, {"grade", 1, 1.5}, {"response", -1, 1.5}};
  s.noise_features = 2;
  s.label_noise = label_noise;
  s.categorical_features = 1;
  return s;
}

}  // namespace fixture

#endif  // MONOALIGN_TESTS_FIXTURES_HPP
