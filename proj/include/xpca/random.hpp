#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace xpca {

// Seedable generator with platform-independent output. std::mt19937_64 is
// fully specified by the standard; the distributions are not, so the
// variates below are derived by hand from its raw output.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();               // [0, 1)
  double uniform_open();          // (0, 1)
  double normal();                // N(0, 1) by inversion
  std::uint64_t below(std::uint64_t n);  // uniform in [0, n)

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Child seed for replication `index` of a run seeded with `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace xpca
