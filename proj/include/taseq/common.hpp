#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>

namespace taseq {

// Error taxonomy. CLI maps these onto exit codes: ConfigError -> 1,
// DataError -> 2, NumericError -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};

// Reserved vocabulary ids, fixed across every vocabulary in the pipeline.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kBosId = 2;
inline constexpr int kEosId = 3;
inline constexpr int kReservedCount = 4;

inline const char* reserved_symbol(int id) {
  switch (id) {
    case kPadId: return "<pad>";
    case kUnkId: return "<unk>";
    case kBosId: return "<bos>";
    case kEosId: return "<eos>";
    default: throw ContractError("reserved_symbol: id out of range");
  }
}

// Deterministic random source. All distributions are built from the raw
// mt19937_64 stream so that identical seeds give bitwise-identical runs on
// every platform (std::uniform_*_distribution is implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Unbiased draw from [0, n).
  std::size_t uniform_index(std::size_t n) {
    if (n == 0) throw ContractError("uniform_index: empty range");
    const std::uint64_t limit =
        UINT64_MAX - UINT64_MAX % static_cast<std::uint64_t>(n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  // Box-Muller; caches the second variate.
  double gaussian(double mean = 0.0, double stddev = 1.0) {
    if (has_spare_) {
      has_spare_ = false;
      return mean + spare_ * stddev;
    }
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double mag = std::sqrt(-2.0 * std::log(u1));
    const double two_pi = 6.283185307179586476925286766559;
    spare_ = mag * std::sin(two_pi * u2);
    has_spare_ = true;
    return mean + mag * std::cos(two_pi * u2) * stddev;
  }

  std::string save_state() const {
    std::ostringstream out;
    out << engine_ << ' ' << (has_spare_ ? 1 : 0);
    if (has_spare_) out << ' ' << spare_;
    return out.str();
  }

  void restore_state(const std::string& text) {
    std::istringstream in(text);
    int spare_flag = 0;
    in >> engine_ >> spare_flag;
    if (!in) throw DataError("Rng: malformed state string");
    has_spare_ = spare_flag != 0;
    if (has_spare_) in >> spare_;
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taseq
