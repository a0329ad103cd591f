#include "sscf/estimator.hpp"

#include "sscf/error.hpp"

namespace sscf::estimator {

std::mt19937_64 RngStream::engine() const {
  auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
  auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  std::seed_seq seq{lo(master_seed),     hi(master_seed),     lo(iteration_index),
                    hi(iteration_index), lo(sample_index),    hi(sample_index)};
  return std::mt19937_64(seq);
}

Vector draw_probe(const ProbeDistribution& dist, const RngStream& stream) {
  require(dist.dim >= 1, ErrorKind::InvalidArgument, "probe dimension must be >= 1");
  auto engine = stream.engine();
  Vector v(dist.dim);
  switch (dist.kind) {
    case ProbeKind::Rademacher: {
      std::uint64_t bits = 0;
      for (Index i = 0; i < dist.dim; ++i) {
        if (i % 64 == 0) bits = engine();
        v(i) = (bits & 1u) ? -1.0 : 1.0;
        bits >>= 1;
      }
      break;
    }
    case ProbeKind::Gaussian: {
      std::normal_distribution<double> normal(0.0, 1.0);
      for (Index i = 0; i < dist.dim; ++i) v(i) = normal(engine);
      break;
    }
  }
  return v;
}

DiagonalEstimate diag_estimate(const std::function<Vector(const Vector&)>& apply,
                               const ProbeDistribution& dist, Index n_vec,
                               const RngStream& stream) {
  require(n_vec >= 1, ErrorKind::InvalidArgument, "n_vec must be >= 1");
  // Welford accumulation in ascending sample order.
  Vector mean = Vector::Zero(dist.dim);
  Vector m2 = Vector::Zero(dist.dim);
  for (Index i = 0; i < n_vec; ++i) {
    const Vector v = draw_probe(dist, stream.with_sample(static_cast<std::uint64_t>(i)));
    const Vector av = apply(v);
    require(av.size() == dist.dim, ErrorKind::LengthMismatch, "operator returned wrong size");
    const Vector sample = av.cwiseProduct(v);
    const Vector delta = sample - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta.cwiseProduct(sample - mean);
  }
  DiagonalEstimate out;
  out.mean = std::move(mean);
  out.variance = n_vec > 1 ? Vector(m2 / static_cast<double>(n_vec - 1))
                           : Vector(Vector::Zero(dist.dim));
  return out;
}

std::vector<Vector> enumerate_rademacher(Index dim) {
  require(dim >= 1, ErrorKind::InvalidArgument, "dimension must be >= 1");
  if (dim > kMaxEnumerationDim) {
    fail(ErrorKind::DimensionTooLarge,
         "exhaustive Rademacher enumeration is limited to dim <= 12");
  }
  const std::size_t count = std::size_t{1} << dim;
  std::vector<Vector> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Vector v(dim);
    for (Index i = 0; i < dim; ++i) {
      const std::size_t bit = (k >> (dim - 1 - i)) & 1u;
      v(i) = bit ? -1.0 : 1.0;
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace sscf::estimator
