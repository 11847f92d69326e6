#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace emphi {

class EmphiError : public std::runtime_error {
 public:
  explicit EmphiError(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic random stream. All draws are derived from the engine's
/// 64-bit output so results are identical across standard libraries
/// (std::*_distribution is implementation-defined and never used here).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Child stream for a named purpose. Same (seed, name) -> same stream.
  static RngStream fork(std::uint64_t master_seed, const std::string& name);

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);

  /// Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller on uniform bits.
  double normal();

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Index sample from an unnormalized or normalized weight vector.
  int categorical(const std::vector<double>& weights);

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64(const std::string& s);
std::string hash_hex(std::uint64_t h);

/// FNV-1a of a file's bytes, rendered as 16 hex chars. Throws on missing file.
std::string file_hash_hex(const std::filesystem::path& p);

std::string read_text_file(const std::filesystem::path& p);

/// Write-temp-then-rename so readers never observe a partial file.
void atomic_write_file(const std::filesystem::path& p, const std::string& content);

std::vector<std::string> split_lines(const std::string& text);

std::string lowercase_ascii(std::string s);

std::string format_double(double v, int precision = 6);

}  // namespace emphi
