#include "crme/distribution.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>

#include "crme/error.hpp"

namespace crme {
namespace {

static_assert(std::endian::native == std::endian::little,
              "distribution cache format assumes a little-endian host");

constexpr std::array<char, 8> kMagic = {'C', 'R', 'M', 'E', 'D', 'I', 'S', '1'};
constexpr double kNormalizationTolerance = 1e-9;

void validate(const DistributionParams& p) {
  if (p.num_samples < 1) throw ParameterError("num_samples must be >= 1");
  if (p.num_classes < 2) throw ParameterError("num_classes must be >= 2");
  if (p.feature_dim < 1) throw ParameterError("feature_dim must be >= 1");
  if (!(p.weight_scale > 0.0) || !std::isfinite(p.weight_scale)) {
    throw ParameterError("weight_scale must be a positive finite number");
  }
}

std::vector<double> class_means(std::size_t k, std::span<const double> eta) {
  std::vector<double> sums(k, 0.0);
  const std::size_t n = eta.size() / k;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t c = 0; c < k; ++c) sums[c] += eta[s * k + c];
  }
  for (double& v : sums) v /= static_cast<double>(n);
  return sums;
}

// Draws features sample by sample so they never need to be stored.
std::vector<double> softmax_sample(const DistributionParams& p,
                                   std::span<const double> weights,
                                   boost::random::mt19937_64& engine) {
  const std::size_t k = p.num_classes;
  const std::size_t dim = p.feature_dim;
  boost::random::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> eta(p.num_samples * k);
  std::vector<double> x(dim);
  std::vector<double> logits(k);
  for (std::size_t s = 0; s < p.num_samples; ++s) {
    for (double& v : x) v = normal(engine);
    for (std::size_t c = 0; c < k; ++c) {
      double z = 0.0;
      for (std::size_t f = 0; f < dim; ++f) z += weights[c * dim + f] * x[f];
      logits[c] = z;
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& z : logits) {
      z = std::exp(z - top);
      total += z;
    }
    for (std::size_t c = 0; c < k; ++c) eta[s * k + c] = logits[c] / total;
  }
  return eta;
}

template <typename T>
void write_pod(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool read_pod(std::istream& in, T& value) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(&value), sizeof(T)));
}

}  // namespace

SyntheticDistribution::SyntheticDistribution(std::size_t num_classes, std::vector<double> eta,
                                             std::uint64_t seed)
    : num_classes_(num_classes), eta_(std::move(eta)), seed_(seed) {
  if (num_classes_ < 2) throw ParameterError("num_classes must be >= 2");
  if (eta_.empty() || eta_.size() % num_classes_ != 0) {
    throw ParameterError("eta must hold a positive whole number of probability vectors");
  }
  const std::size_t n = eta_.size() / num_classes_;
  for (std::size_t s = 0; s < n; ++s) {
    double total = 0.0;
    for (std::size_t c = 0; c < num_classes_; ++c) {
      const double v = eta_[s * num_classes_ + c];
      if (!(v >= 0.0)) throw ParameterError("eta entries must be nonnegative");
      total += v;
    }
    if (std::abs(total - 1.0) > kNormalizationTolerance) {
      throw ParameterError("eta vector " + std::to_string(s) + " does not sum to 1");
    }
  }
  priors_ = class_means(num_classes_, eta_);
}

SyntheticDistribution generate(const DistributionParams& params) {
  validate(params);
  boost::random::mt19937_64 engine(params.seed);
  boost::random::uniform_real_distribution<double> uniform(-params.weight_scale,
                                                           params.weight_scale);
  std::vector<double> weights(params.num_classes * params.feature_dim);
  for (double& w : weights) w = uniform(engine);
  return SyntheticDistribution(params.num_classes, softmax_sample(params, weights, engine),
                               params.seed);
}

SyntheticDistribution generate_with_weights(const DistributionParams& params,
                                            std::span<const double> weight_matrix) {
  validate(params);
  if (weight_matrix.size() != params.num_classes * params.feature_dim) {
    throw ParameterError("weight matrix must be num_classes x feature_dim");
  }
  boost::random::mt19937_64 engine(params.seed);
  return SyntheticDistribution(params.num_classes,
                               softmax_sample(params, weight_matrix, engine), params.seed);
}

std::vector<double> tradeoff_curve(const SyntheticDistribution& dist, std::size_t i,
                                   std::size_t j, std::span<const double> grid) {
  const std::size_t k = dist.num_classes();
  if (grid.empty()) throw ParameterError("tradeoff grid must not be empty");
  if (i >= k || j >= k || i == j) throw ParameterError("class indices must be distinct and < k");
  if (!std::is_sorted(grid.begin(), grid.end())) {
    throw ParameterError("tradeoff grid must be sorted ascending");
  }
  if (grid.front() < 0.0) throw ParameterError("tradeoff grid must be nonnegative");

  // Count samples whose ratio reaches each grid point by sorting ratios once.
  const std::size_t n = dist.num_samples();
  std::vector<double> ratios(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto row = dist.eta(s);
    ratios[s] = row[j] == 0.0 ? std::numeric_limits<double>::infinity() : row[i] / row[j];
  }
  std::sort(ratios.begin(), ratios.end());
  std::vector<double> out;
  out.reserve(grid.size());
  for (double r : grid) {
    const auto first = std::lower_bound(ratios.begin(), ratios.end(), r);
    out.push_back(static_cast<double>(ratios.end() - first) / static_cast<double>(n));
  }
  return out;
}

std::vector<double> recompute_priors(const SyntheticDistribution& dist) {
  return class_means(dist.num_classes(), dist.eta_matrix());
}

std::string cache_file_name(const DistributionParams& p) {
  std::ostringstream name;
  name.precision(17);
  name << "dist_s" << p.seed << "_n" << p.num_samples << "_k" << p.num_classes << "_f"
       << p.feature_dim << "_w" << p.weight_scale << ".bin";
  return name.str();
}

void save_distribution(const std::filesystem::path& path, const DistributionParams& params,
                       const SyntheticDistribution& dist) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint64_t>(out, params.seed);
  write_pod<std::uint64_t>(out, dist.num_samples());
  write_pod<std::uint64_t>(out, dist.num_classes());
  write_pod<std::uint64_t>(out, params.feature_dim);
  write_pod<double>(out, params.weight_scale);
  const auto eta = dist.eta_matrix();
  out.write(reinterpret_cast<const char*>(eta.data()),
            static_cast<std::streamsize>(eta.size() * sizeof(double)));
  const auto priors = dist.priors();
  out.write(reinterpret_cast<const char*>(priors.data()),
            static_cast<std::streamsize>(priors.size() * sizeof(double)));
  if (!out) throw ParameterError("failed writing " + path.string());
}

std::optional<SyntheticDistribution> load_distribution(const std::filesystem::path& path,
                                                       const DistributionParams& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) return std::nullopt;
  DistributionParams stored;
  std::uint64_t n = 0, k = 0, dim = 0;
  if (!read_pod(in, stored.seed) || !read_pod(in, n) || !read_pod(in, k) ||
      !read_pod(in, dim) || !read_pod(in, stored.weight_scale)) {
    return std::nullopt;
  }
  stored.num_samples = n;
  stored.num_classes = k;
  stored.feature_dim = dim;
  if (!(stored == params)) return std::nullopt;

  std::vector<double> eta(n * k);
  if (!in.read(reinterpret_cast<char*>(eta.data()),
               static_cast<std::streamsize>(eta.size() * sizeof(double)))) {
    return std::nullopt;
  }
  std::vector<double> priors(k);
  if (!in.read(reinterpret_cast<char*>(priors.data()),
               static_cast<std::streamsize>(priors.size() * sizeof(double)))) {
    return std::nullopt;
  }
  SyntheticDistribution dist(k, std::move(eta), stored.seed);
  if (!std::equal(priors.begin(), priors.end(), dist.priors().begin())) return std::nullopt;
  return dist;
}

SyntheticDistribution load_or_generate(const DistributionParams& params,
                                       const std::filesystem::path& cache_dir) {
  if (cache_dir.empty()) return generate(params);
  const auto path = cache_dir / cache_file_name(params);
  if (auto cached = load_distribution(path, params)) return std::move(*cached);
  auto dist = generate(params);
  std::filesystem::create_directories(cache_dir);
  save_distribution(path, params, dist);
  return dist;
}

}  // namespace crme
