#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "pcc/common.hpp"

namespace pcc {

// mt19937_64 with hand-rolled value mappings. std::uniform_*_distribution is
// implementation-defined, so goldens would not survive a stdlib change; the
// raw engine stream is pinned by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  real uniform() { return static_cast<real>(engine_() >> 11) * 0x1.0p-53; }

  real uniform(real lo, real hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Rejection-free modulo is biased for huge n;
  // n here is always tiny relative to 2^64.
  std::int64_t index(std::int64_t n) {
    return static_cast<std::int64_t>(engine_() % static_cast<std::uint64_t>(n));
  }

  // Standard normal via Box-Muller (no rejection, so the stream advance per
  // call is fixed).
  real normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    real u1 = uniform();
    real u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    const real r = std::sqrt(-2.0 * std::log(u1));
    const real a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << (have_spare_ ? 1 : 0) << ' ';
    os.precision(17);
    os << spare_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    int flag = 0;
    is >> engine_ >> flag >> spare_;
    if (!is) throw RestoreError("bad rng state string");
    have_spare_ = flag != 0;
  }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  real spare_ = 0.0;
};

}  // namespace pcc
