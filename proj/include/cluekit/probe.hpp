// Copyright 2026 The cluekit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluekit/analysis.hpp"
#include "cluekit/corpus.hpp"
#include "cluekit/dataset.hpp"
#include "cluekit/error.hpp"
#include "cluekit/metrics.hpp"
#include "cluekit/sampler.hpp"

namespace cluekit {

// The probe sees only superficial features plus the synthetic semantic
// marker, never the text itself.
inline constexpr std::size_t kProbeArity = 4;
inline constexpr std::array<std::string_view, kProbeArity> kProbeFeatureNames = {
    "normalized_edit_distance", "char_overlap", "semantic_marker", "bias"};

enum ProbeFeature : std::size_t { kDistance = 0, kOverlap = 1, kMarker = 2, kBias = 3 };

using FeatureVector = std::array<double, kProbeArity>;
using Weights = std::array<double, kProbeArity>;

inline FeatureVector probe_features(const TextPair& pair) {
  const PairFeatures f = featurize(pair);
  const double norm = f.max_len ? static_cast<double>(f.edit_distance) / static_cast<double>(f.max_len)
                                : 0.0;
  return {norm, f.char_overlap, has_semantic_marker(pair) ? 1.0 : 0.0, 1.0};
}

inline std::vector<FeatureVector> probe_features(const Dataset& dataset) {
  std::vector<FeatureVector> out;
  out.reserve(dataset.size());
  for (const auto& p : dataset) out.push_back(probe_features(p));
  return out;
}

inline double dot(const Weights& w, const FeatureVector& x) {
  double s = 0;
  for (std::size_t k = 0; k < kProbeArity; ++k) s += w[k] * x[k];
  return s;
}

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Cross-entropy of one example, computed as softplus to stay finite.
inline double log_loss(const Weights& w, const FeatureVector& x, Label y) {
  const double z = dot(w, x);
  const double s = y == Label::kMatch ? -z : z;
  return s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
}

inline Weights log_loss_gradient(const Weights& w, const FeatureVector& x, Label y) {
  const double err = sigmoid(dot(w, x)) - (y == Label::kMatch ? 1.0 : 0.0);
  Weights g{};
  for (std::size_t k = 0; k < kProbeArity; ++k) g[k] = err * x[k];
  return g;
}

struct ProbeHyperparams {
  double learning_rate = 0.1;
  // Number of SGD steps; defaults to one pass over the effective order.
  // Longer runs cycle through the order again.
  std::optional<std::size_t> steps;
  std::uint64_t seed = 0;
  std::size_t smoothing_window = 100;
};

struct LossPoint {
  std::size_t step = 0;
  double loss = 0;
};

struct ProbeModel {
  Weights weights{};
  std::vector<LossPoint> loss_trace;

  double probability(const FeatureVector& x) const { return sigmoid(dot(weights, x)); }
  // Probability exactly 0.5 predicts a match.
  Label predict(const FeatureVector& x) const {
    return probability(x) >= 0.5 ? Label::kMatch : Label::kMismatch;
  }
};

// Per-sample SGD on zero-initialized weights in the given order.
// `mask`, when non-empty, keeps only indices with mask[i] set.
inline ProbeModel train(std::span<const FeatureVector> features, std::span<const Label> labels,
                        const ResampleResult& order, const ProbeHyperparams& hp,
                        const std::vector<bool>& mask = {}) {
  if (!(hp.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
  if (hp.smoothing_window == 0) throw ConfigError("smoothing_window must be positive");
  if (features.size() != labels.size()) throw std::invalid_argument("train: size mismatch");
  if (!is_permutation_of_indices(order.order, features.size())) {
    throw std::invalid_argument("train: order is not a permutation of the dataset indices");
  }
  std::vector<std::size_t> seq;
  seq.reserve(order.size());
  for (std::size_t i : order.order) {
    if (mask.empty() || mask.at(i)) seq.push_back(i);
  }
  if (seq.empty()) throw EmptyResultError("train: empty effective training set");

  ProbeModel model;
  const std::size_t steps = hp.steps.value_or(seq.size());
  model.loss_trace.reserve(steps);
  std::vector<double> recent(hp.smoothing_window, 0.0);
  double running = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t i = seq[t % seq.size()];
    const double loss = log_loss(model.weights, features[i], labels[i]);
    const auto g = log_loss_gradient(model.weights, features[i], labels[i]);
    for (std::size_t k = 0; k < kProbeArity; ++k) model.weights[k] -= hp.learning_rate * g[k];

    auto& slot = recent[t % recent.size()];
    running += loss - slot;
    slot = loss;
    const std::size_t filled = std::min(t + 1, recent.size());
    model.loss_trace.push_back({t + 1, std::max(0.0, running / static_cast<double>(filled))});
  }
  return model;
}

inline ProbeModel train(const Dataset& dataset, const ResampleResult& order,
                        const ProbeHyperparams& hp) {
  const auto f = probe_features(dataset);
  const auto l = labels_of(dataset);
  return train(f, l, order, hp);
}

inline ProbeModel train(const Dataset& dataset, const ResampleResult& order,
                        const ProbeHyperparams& hp, std::span<const std::size_t> restrict_to) {
  std::vector<bool> mask(dataset.size(), false);
  for (std::size_t i : restrict_to) mask.at(i) = true;
  const auto f = probe_features(dataset);
  const auto l = labels_of(dataset);
  return train(f, l, order, hp, mask);
}

inline std::vector<Label> predict_all(const ProbeModel& model, std::span<const FeatureVector> features) {
  std::vector<Label> out;
  out.reserve(features.size());
  for (const auto& x : features) out.push_back(model.predict(x));
  return out;
}

inline double evaluate(const ProbeModel& model, std::span<const FeatureVector> features,
                       std::span<const Label> labels, std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty index set");
  std::size_t hit = 0;
  for (std::size_t i : indices) hit += model.predict(features[i]) == labels[i];
  return static_cast<double>(hit) / static_cast<double>(indices.size());
}

inline double evaluate(const ProbeModel& model, const Dataset& dataset,
                       std::span<const std::size_t> indices) {
  const auto f = probe_features(dataset);
  const auto l = labels_of(dataset);
  return evaluate(model, f, l, indices);
}

// Mean predicted P(label = 1) for each edit distance present.
inline std::map<std::size_t, double> tendency_report(const ProbeModel& model,
                                                     std::span<const FeatureVector> features,
                                                     std::span<const std::size_t> distances) {
  std::map<std::size_t, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto& [sum, n] = acc[distances[i]];
    sum += model.probability(features[i]);
    ++n;
  }
  std::map<std::size_t, double> out;
  for (const auto& [d, v] : acc) out[d] = v.first / static_cast<double>(v.second);
  return out;
}

inline std::map<std::size_t, double> tendency_report(const ProbeModel& model, const Dataset& dataset) {
  const auto f = probe_features(dataset);
  const auto d = edit_distances(dataset);
  return tendency_report(model, f, d);
}

enum class LossDrop { kDetected, kNotDetected };

namespace detail {

inline double segment_slope(std::span<const LossPoint> seg) {
  std::vector<double> x, y;
  for (const auto& p : seg) {
    x.push_back(static_cast<double>(p.step));
    y.push_back(p.loss);
  }
  return fit_line(x, y).slope;
}

}  // namespace detail

// Fires when the least-squares slope of the trace after the CSC block starts
// is more negative than twice the slope before it.
inline LossDrop loss_drop_detector(std::span<const LossPoint> trace, double csc_start_fraction) {
  if (trace.empty()) throw std::invalid_argument("loss_drop_detector: empty trace");
  if (!(csc_start_fraction >= 0.0 && csc_start_fraction < 1.0)) {
    throw std::invalid_argument("loss_drop_detector: fraction must lie in [0, 1)");
  }
  const auto split = static_cast<std::size_t>(csc_start_fraction * static_cast<double>(trace.size()));
  if (split < 2 || trace.size() - split < 2) return LossDrop::kNotDetected;
  const double before = detail::segment_slope(trace.first(split));
  const double after = detail::segment_slope(trace.subspan(split));
  return after < 2.0 * before ? LossDrop::kDetected : LossDrop::kNotDetected;
}

// ---------------------------------------------------------------------------
// Serialization

inline nlohmann::json to_json(const ProbeModel& model) {
  nlohmann::json j;
  j["features"] = kProbeFeatureNames;
  j["weights"] = model.weights;
  return j;
}

inline ProbeModel model_from_json(const nlohmann::json& j) {
  if (!j.contains("features") || !j.contains("weights")) {
    throw InputError("model JSON needs features and weights");
  }
  const auto names = j.at("features").get<std::vector<std::string>>();
  const auto w = j.at("weights").get<std::vector<double>>();
  if (names.size() != kProbeArity || w.size() != kProbeArity) {
    throw InputError("model JSON has the wrong number of features");
  }
  ProbeModel m;
  for (std::size_t k = 0; k < kProbeArity; ++k) {
    if (names[k] != kProbeFeatureNames[k]) throw InputError("unknown feature " + names[k]);
    if (!std::isfinite(w[k])) throw InputError("non-finite weight");
    m.weights[k] = w[k];
  }
  return m;
}

inline void write_loss_trace(std::ostream& out, std::span<const LossPoint> trace) {
  out << "step,loss\n";
  char buf[40];
  for (const auto& p : trace) {
    std::snprintf(buf, sizeof buf, "%.9g", p.loss);
    out << p.step << ',' << buf << '\n';
  }
}

// Parses the CSV written by write_loss_trace.
inline std::vector<LossPoint> read_loss_trace(std::istream& in) {
  std::vector<LossPoint> trace;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 || line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InputError("expected step,loss", line_no);
    try {
      trace.push_back({std::stoull(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
    } catch (const std::exception&) {
      throw InputError("expected step,loss", line_no);
    }
  }
  return trace;
}

}  // namespace cluekit
