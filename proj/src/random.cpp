#include "histprior/random.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "histprior/numerics.hpp"

namespace histprior {
namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

}  // namespace

void SeededStream::refill() noexcept {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32_10(ctr, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
  buffered_ = 2;
  ++block_;
}

SeededStream::result_type SeededStream::operator()() noexcept {
  if (buffered_ == 0) refill();
  return buffer_[2 - buffered_--];
}

double SeededStream::uniform() noexcept {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double SeededStream::standard_normal() noexcept {
  // Marsaglia polar method; the second variate is discarded so the stream
  // carries no hidden state beyond its counter.
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  return u * std::sqrt(-2.0 * std::log(s) / s);
}

int SeededStream::binomial(int n, double p) noexcept {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  if (n > 1000) {
    int count = 0;
    for (int i = 0; i < n; ++i) count += uniform() < p ? 1 : 0;
    return count;
  }
  // Inversion; q^n >= 2^-1000 so the starting mass does not underflow.
  const double q = 1.0 - p;
  const double ratio = p / q;
  double pmf = std::pow(q, n);
  double cdf = pmf;
  const double u = uniform();
  int x = 0;
  while (u > cdf && x < n) {
    pmf *= ratio * static_cast<double>(n - x) / static_cast<double>(x + 1);
    cdf += pmf;
    ++x;
  }
  return x;
}

std::vector<double> sample_equicorrelated_uniforms(int dim, double rho, SeededStream& stream) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("copula correlation must lie in [0, 1)");
  }
  if (dim < 1) throw std::domain_error("copula dimension must be positive");
  const double shared_scale = std::sqrt(rho);
  const double own_scale = std::sqrt(1.0 - rho);
  const double common = stream.standard_normal();
  std::vector<double> out(static_cast<std::size_t>(dim));
  constexpr double kLo = 0x1.0p-60;
  constexpr double kHi = 1.0 - 0x1.0p-53;
  for (auto& u : out) {
    const double z = shared_scale * common + own_scale * stream.standard_normal();
    u = std::clamp(normal_cdf(z), kLo, kHi);
  }
  return out;
}

}  // namespace histprior
