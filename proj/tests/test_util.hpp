#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "lingad/rng.hpp"

namespace testutil {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("lingad-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
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

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  f << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

/// Rule choices replayed from fixed lists; index() values are reduced mod n.
struct ScriptedChoices {
  std::vector<std::size_t> indices;
  std::vector<double> uniforms;
  std::size_t next_index = 0;
  std::size_t next_uniform = 0;

  std::size_t index(std::size_t n) {
    const std::size_t v = indices.empty() ? 0 : indices[next_index++ % indices.size()];
    return v % n;
  }
  double uniform() { return uniforms.empty() ? 0.0 : uniforms[next_uniform++ % uniforms.size()]; }
};

/// Random probability vector of size n; some entries repeated to exercise ties.
inline std::vector<double> random_distribution(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(gen);
  if (n >= 3 && u(gen) < 0.3) w[n - 1] = w[0];
  if (n >= 2 && u(gen) < 0.1) w[1] = 0.0;
  double s = 0.0;
  for (double x : w) s += x;
  if (s == 0.0) {
    w[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : w) x /= s;
  return w;
}

}  // namespace testutil
