#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace abpipe::classifier {

using FeatureVector = std::vector<std::uint8_t>;

inline constexpr std::size_t kDefaultFeatureCount = 23;

enum class ClassifierErrorKind { SingleClass, TooFewSamples, DimensionMismatch, Malformed, Io };

class ClassifierError : public std::runtime_error {
 public:
  ClassifierError(ClassifierErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ClassifierErrorKind kind() const noexcept { return kind_; }

 private:
  ClassifierErrorKind kind_;
};

struct Dataset {
  std::vector<FeatureVector> x;
  std::vector<int> y;

  std::size_t size() const { return y.size(); }
  std::size_t features() const { return x.empty() ? 0 : x.front().size(); }
};

// f0..f{F-1},label with 0/1 cells.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_csv(const std::filesystem::path& path);
void write_dataset_csv(std::ostream& out, const Dataset& data);

struct SgdParams {
  double eta0 = 0.01;
  double power_t = 0.25;  // eta_t = eta0 / t^power_t
  double l2 = 1e-4;
  int epochs = 5;
  std::uint64_t seed = 0;
  // Weight each class by n / (2 n_c).
  bool balanced = true;

  friend bool operator==(const SgdParams&, const SgdParams&) = default;
};

class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::vector<double> weights, double bias, std::uint64_t seed = 0);

  std::size_t features() const { return weights_.size(); }
  const std::vector<double>& weights() const { return weights_; }
  double bias() const { return bias_; }
  std::uint64_t seed() const { return seed_; }

  double decision(const FeatureVector& x) const;
  double probability(const FeatureVector& x) const;
  // 1 when the probability is at least 0.5.
  int predict_class(const FeatureVector& x) const;

  std::string to_json() const;
  static LinearModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static LinearModel load(const std::filesystem::path& path);

  friend bool operator==(const LinearModel&, const LinearModel&) = default;

 private:
  void check_dimension(const FeatureVector& x) const;

  std::vector<double> weights_;
  double bias_ = 0.0;
  std::uint64_t seed_ = 0;
};

/// Per-sample SGD on L2-regularised, class-weighted log loss, reshuffling the
/// samples every epoch with `params.seed`. Stores the wall time in ms in
/// `wall_ms` when given.
LinearModel train(const Dataset& data, const SgdParams& params, double* wall_ms = nullptr);

struct Metrics {
  double accuracy = 0.0;
  double recall = 0.0;
  double precision = 0.0;
};

Metrics evaluate(const LinearModel& model, const Dataset& data);

}  // namespace abpipe::classifier
