#include "abpipe/classifier/linear_model.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "abpipe/rng.hpp"

namespace abpipe::classifier {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] void malformed(std::size_t line, const std::string& msg) {
  throw ClassifierError(ClassifierErrorKind::Malformed,
                        "line " + std::to_string(line) + ": " + msg);
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty()) {
    throw ClassifierError(ClassifierErrorKind::Malformed, "empty training data");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "label") malformed(1, "last column must be 'label'");
  const std::size_t f = header.size() - 1;
  Dataset data;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != f + 1) {
      malformed(lineno, "expected " + std::to_string(f + 1) + " cells, got " +
                            std::to_string(cells.size()));
    }
    FeatureVector x(f);
    for (std::size_t j = 0; j <= f; ++j) {
      if (cells[j] != "0" && cells[j] != "1") malformed(lineno, "cells must be 0 or 1");
      if (j < f) x[j] = cells[j] == "1" ? 1 : 0;
    }
    data.x.push_back(std::move(x));
    data.y.push_back(cells[f] == "1" ? 1 : 0);
  }
  if (data.y.empty()) throw ClassifierError(ClassifierErrorKind::Malformed, "no data rows");
  return data;
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ClassifierError(ClassifierErrorKind::Io, "cannot open " + path.string());
  return read_dataset_csv(in);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const std::size_t f = data.features();
  for (std::size_t j = 0; j < f; ++j) out << 'f' << j << ',';
  out << "label\n";
  std::string row;
  for (std::size_t i = 0; i < data.size(); ++i) {
    row.clear();
    for (auto v : data.x[i]) {
      row += v ? '1' : '0';
      row += ',';
    }
    row += data.y[i] ? '1' : '0';
    row += '\n';
    out << row;
  }
}

LinearModel::LinearModel(std::vector<double> weights, double bias, std::uint64_t seed)
    : weights_(std::move(weights)), bias_(bias), seed_(seed) {}

void LinearModel::check_dimension(const FeatureVector& x) const {
  if (x.size() != weights_.size()) {
    throw ClassifierError(ClassifierErrorKind::DimensionMismatch,
                          "feature vector has " + std::to_string(x.size()) +
                              " values, model expects " + std::to_string(weights_.size()));
  }
}

double LinearModel::decision(const FeatureVector& x) const {
  check_dimension(x);
  double z = bias_;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j]) z += weights_[j];
  }
  return z;
}

double LinearModel::probability(const FeatureVector& x) const { return sigmoid(decision(x)); }

int LinearModel::predict_class(const FeatureVector& x) const {
  return probability(x) >= 0.5 ? 1 : 0;
}

std::string LinearModel::to_json() const {
  nlohmann::ordered_json j;
  j["features"] = weights_.size();
  j["weights"] = weights_;
  j["bias"] = bias_;
  j["loss"] = "log";
  j["seed"] = seed_;
  return j.dump(2) + "\n";
}

LinearModel LinearModel::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ClassifierError(ClassifierErrorKind::Malformed, e.what());
  }
  try {
    if (j.at("loss").get<std::string>() != "log") {
      throw ClassifierError(ClassifierErrorKind::Malformed, "unsupported loss");
    }
    auto weights = j.at("weights").get<std::vector<double>>();
    if (j.at("features").get<std::size_t>() != weights.size()) {
      throw ClassifierError(ClassifierErrorKind::DimensionMismatch,
                            "'features' does not match the number of weights");
    }
    return LinearModel(std::move(weights), j.at("bias").get<double>(),
                       j.value("seed", std::uint64_t{0}));
  } catch (const nlohmann::json::exception& e) {
    throw ClassifierError(ClassifierErrorKind::Malformed, e.what());
  }
}

void LinearModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ClassifierError(ClassifierErrorKind::Io, "cannot write " + path.string());
  out << to_json();
}

LinearModel LinearModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ClassifierError(ClassifierErrorKind::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

LinearModel train(const Dataset& data, const SgdParams& params, double* wall_ms) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t n = data.size();
  if (n < 2 || data.x.size() != n) {
    throw ClassifierError(ClassifierErrorKind::TooFewSamples, "need at least two samples");
  }
  const std::size_t f = data.features();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (data.x[i].size() != f) {
      throw ClassifierError(ClassifierErrorKind::DimensionMismatch,
                            "sample " + std::to_string(i) + " has " +
                                std::to_string(data.x[i].size()) + " features, expected " +
                                std::to_string(f));
    }
    positives += data.y[i] ? 1 : 0;
  }
  if (positives == 0 || positives == n) {
    throw ClassifierError(ClassifierErrorKind::SingleClass, "training data has a single class");
  }
  if (params.epochs < 1 || !(params.eta0 > 0.0) || params.l2 < 0.0) {
    throw ClassifierError(ClassifierErrorKind::Malformed, "invalid SGD hyperparameters");
  }

  double class_weight[2] = {1.0, 1.0};
  if (params.balanced) {
    class_weight[0] = static_cast<double>(n) / (2.0 * static_cast<double>(n - positives));
    class_weight[1] = static_cast<double>(n) / (2.0 * static_cast<double>(positives));
  }

  std::vector<double> w(f, 0.0);
  double b = 0.0;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 rng(hash_values(params.seed, fnv1a64("sgd-shuffle")));
  std::uint64_t t = 0;
  for (int epoch = 0; epoch < params.epochs; ++epoch) {
    shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      ++t;
      const double eta = params.eta0 / std::pow(static_cast<double>(t), params.power_t);
      const auto& x = data.x[i];
      double z = b;
      for (std::size_t j = 0; j < f; ++j) {
        if (x[j]) z += w[j];
      }
      const int y = data.y[i];
      const double g = (sigmoid(z) - y) * class_weight[y];
      const double shrink = 1.0 - eta * params.l2;
      for (std::size_t j = 0; j < f; ++j) {
        w[j] = w[j] * shrink - (x[j] ? eta * g : 0.0);
      }
      b -= eta * g;
    }
  }
  LinearModel model(std::move(w), b, params.seed);
  if (wall_ms) {
    *wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                   .count();
  }
  return model;
}

Metrics evaluate(const LinearModel& model, const Dataset& data) {
  std::size_t correct = 0, tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int p = model.predict_class(data.x[i]);
    const int y = data.y[i];
    correct += p == y ? 1 : 0;
    tp += (p == 1 && y == 1) ? 1 : 0;
    fp += (p == 1 && y == 0) ? 1 : 0;
    fn += (p == 0 && y == 1) ? 1 : 0;
  }
  Metrics m;
  if (data.size() > 0) m.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  return m;
}

}  // namespace abpipe::classifier
