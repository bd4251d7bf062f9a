#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

namespace histprior {

/// Counter-based random stream (Philox4x32-10 keyed by the seed, with the
/// stream id in the upper counter words). A (seed, stream_id) pair always
/// yields the same sequence, independent of what other streams have done.
class SeededStream {
 public:
  using result_type = std::uint64_t;

  SeededStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  double standard_normal() noexcept;
  int binomial(int n, double p) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

/// One draw of H uniforms joined by a Gaussian copula with equicorrelation
/// rho, using the common-factor form z_i = sqrt(rho) z0 + sqrt(1-rho) e_i.
/// Throws std::domain_error unless 0 <= rho < 1.
std::vector<double> sample_equicorrelated_uniforms(int dim, double rho, SeededStream& stream);

}  // namespace histprior
