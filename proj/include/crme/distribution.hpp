#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace crme {

/// Parameters that fully determine a generated synthetic distribution. Also
/// serves as the cache key for the on-disk format.
struct DistributionParams {
  std::uint64_t seed = 0;
  std::size_t num_samples = 100'000;
  std::size_t num_classes = 2;
  std::size_t feature_dim = 10;
  double weight_scale = 1.5;

  friend bool operator==(const DistributionParams&, const DistributionParams&) = default;
};

/**
 * A finite sample of class-conditional probability vectors eta(x) and the
 * class priors they induce.
 *
 * The features that produced the sample are not retained; everything
 * downstream is an expectation over eta. Immutable after construction.
 */
class SyntheticDistribution {
 public:
  /// Takes ownership of a row-major n x k matrix of probability vectors.
  /// Priors are computed as per-class means in sample order.
  SyntheticDistribution(std::size_t num_classes, std::vector<double> eta,
                        std::uint64_t seed);

  std::size_t num_classes() const { return num_classes_; }
  std::size_t num_samples() const { return eta_.size() / num_classes_; }
  std::uint64_t seed() const { return seed_; }

  /// Probability vector of one sample.
  std::span<const double> eta(std::size_t sample) const {
    return {eta_.data() + sample * num_classes_, num_classes_};
  }
  /// The whole row-major matrix.
  std::span<const double> eta_matrix() const { return eta_; }
  std::span<const double> priors() const { return priors_; }
  double prior(std::size_t cls) const { return priors_.at(cls); }

 private:
  std::size_t num_classes_;
  std::vector<double> eta_;
  std::vector<double> priors_;
  std::uint64_t seed_;
};

/// Draws a k x feature_dim weight matrix with entries uniform on
/// [-weight_scale, weight_scale], then n standard-normal feature vectors,
/// and stores softmax(W x) per sample. Deterministic in the seed.
SyntheticDistribution generate(const DistributionParams& params);

/// Same as generate() but with a caller-supplied row-major weight matrix
/// (k x feature_dim). Only the features are drawn from the seed.
SyntheticDistribution generate_with_weights(const DistributionParams& params,
                                            std::span<const double> weight_matrix);

/// Empirical g_ij(r) = P[eta_i / eta_j >= r] at every grid point. A zero
/// denominator counts as an infinite ratio.
std::vector<double> tradeoff_curve(const SyntheticDistribution& dist, std::size_t i,
                                   std::size_t j, std::span<const double> grid);

/// Per-class means of eta, recomputed from scratch.
std::vector<double> recompute_priors(const SyntheticDistribution& dist);

// On-disk cache. Little-endian layout:
//   char[8]  magic "CRMEDIS1"
//   u64 seed, u64 num_samples, u64 num_classes, u64 feature_dim, f64 weight_scale
//   f64[num_samples * num_classes] eta (row-major)
//   f64[num_classes] priors
void save_distribution(const std::filesystem::path& path, const DistributionParams& params,
                       const SyntheticDistribution& dist);

/// Returns nullopt when the file is missing or was written for other params.
std::optional<SyntheticDistribution> load_distribution(const std::filesystem::path& path,
                                                       const DistributionParams& params);

/// File name derived from every field of the cache key.
std::string cache_file_name(const DistributionParams& params);

/// Loads from cache_dir when a matching file exists, otherwise generates and
/// writes it there. An empty cache_dir disables caching.
SyntheticDistribution load_or_generate(const DistributionParams& params,
                                       const std::filesystem::path& cache_dir);

}  // namespace crme
