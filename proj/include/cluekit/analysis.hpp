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
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cluekit/dataset.hpp"
#include "cluekit/error.hpp"
#include "cluekit/metrics.hpp"

namespace cluekit {

struct BucketCounts {
  std::size_t label0 = 0;
  std::size_t label1 = 0;

  std::size_t total() const noexcept { return label0 + label1; }
  // Ties resolve to label 1; a tie can never pass a threshold above 0.5.
  Label majority() const noexcept { return label1 >= label0 ? Label::kMatch : Label::kMismatch; }
  double majority_share() const noexcept {
    return total() ? static_cast<double>(std::max(label0, label1)) / static_cast<double>(total())
                   : 0.0;
  }
  friend bool operator==(const BucketCounts&, const BucketCounts&) = default;
};

// Label counts keyed by edit distance.
struct DistanceHistogram {
  std::map<std::size_t, BucketCounts> buckets;

  std::size_t total() const noexcept {
    std::size_t n = 0;
    for (const auto& [d, c] : buckets) n += c.total();
    return n;
  }
  std::size_t max_distance() const noexcept { return buckets.empty() ? 0 : buckets.rbegin()->first; }
  friend bool operator==(const DistanceHistogram&, const DistanceHistogram&) = default;
};

inline std::vector<Label> labels_of(const Dataset& dataset) {
  std::vector<Label> out;
  out.reserve(dataset.size());
  for (const auto& p : dataset) out.push_back(p.label);
  return out;
}

inline DistanceHistogram build_histogram(std::span<const std::size_t> distances,
                                         std::span<const Label> labels) {
  if (distances.size() != labels.size()) {
    throw std::invalid_argument("build_histogram: distances and labels differ in length");
  }
  DistanceHistogram h;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    auto& b = h.buckets[distances[i]];
    (labels[i] == Label::kMatch ? b.label1 : b.label0) += 1;
  }
  return h;
}

inline DistanceHistogram build_histogram(const Dataset& dataset) {
  const auto d = edit_distances(dataset);
  const auto l = labels_of(dataset);
  return build_histogram(d, l);
}

enum class BoundaryMode { kFixed, kDerived };

// Parameters that decide which distance buckets carry the clue and how
// evaluation data splits into easy / hard / normal.
struct CluePolicy {
  double threshold = 0.70;
  std::size_t min_support = 50;
  std::size_t low_boundary = 3;
  std::size_t high_boundary = 12;
  BoundaryMode boundary_mode = BoundaryMode::kFixed;
};

inline void validate(const CluePolicy& p) {
  if (!(p.threshold > 0.5 && p.threshold <= 1.0)) {
    throw ConfigError("threshold must exceed 0.5 and be at most 1");
  }
  if (p.min_support == 0) throw ConfigError("min_support must be positive");
  if (p.low_boundary >= p.high_boundary) {
    throw ConfigError("low_boundary must be below high_boundary");
  }
}

struct ClueFlags {
  std::vector<bool> is_csc;
  // Qualifying distance -> its majority label.
  std::map<std::size_t, Label> qualifying;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(std::count(is_csc.begin(), is_csc.end(), true));
  }
  std::size_t size() const noexcept { return is_csc.size(); }
  friend bool operator==(const ClueFlags&, const ClueFlags&) = default;
};

// Whether one bucket passes the policy at distance d.
inline std::optional<Label> qualifies(std::size_t d, const BucketCounts& c, const CluePolicy& p) {
  if (c.total() < p.min_support) return std::nullopt;
  if (c.majority_share() < p.threshold) return std::nullopt;
  const Label m = c.majority();
  if (p.boundary_mode == BoundaryMode::kFixed) {
    const bool low_ok = d <= p.low_boundary && m == Label::kMatch;
    const bool high_ok = d >= p.high_boundary && m == Label::kMismatch;
    if (!low_ok && !high_ok) return std::nullopt;
  }
  return m;
}

inline std::map<std::size_t, Label> qualifying_distances(const DistanceHistogram& h,
                                                         const CluePolicy& p) {
  validate(p);
  std::map<std::size_t, Label> out;
  for (const auto& [d, c] : h.buckets) {
    if (auto m = qualifies(d, c, p)) out.emplace(d, *m);
  }
  return out;
}

// A pair is flagged iff its distance qualifies and its label equals that
// bucket's majority label.
inline ClueFlags flag_csc(std::span<const std::size_t> distances, std::span<const Label> labels,
                          const DistanceHistogram& histogram, const CluePolicy& policy) {
  if (distances.size() != labels.size()) {
    throw std::invalid_argument("flag_csc: distances and labels differ in length");
  }
  ClueFlags flags;
  flags.qualifying = qualifying_distances(histogram, policy);
  flags.is_csc.resize(distances.size());
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const auto it = flags.qualifying.find(distances[i]);
    flags.is_csc[i] = it != flags.qualifying.end() && it->second == labels[i];
  }
  return flags;
}

inline ClueFlags flag_csc(const Dataset& dataset, const DistanceHistogram& histogram,
                          const CluePolicy& policy) {
  const auto d = edit_distances(dataset);
  const auto l = labels_of(dataset);
  return flag_csc(d, l, histogram, policy);
}

enum class Split { kEasy, kHard, kNormal };

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::kEasy: return "e_pred";
    case Split::kHard: return "h_pred";
    case Split::kNormal: return "normal";
  }
  return "normal";
}

// Easy: the distance clue points at the true label. Hard: it points away.
inline Split classify(std::size_t distance, Label label, const CluePolicy& p) {
  if (distance <= p.low_boundary) return label == Label::kMatch ? Split::kEasy : Split::kHard;
  if (distance >= p.high_boundary) return label == Label::kMismatch ? Split::kEasy : Split::kHard;
  return Split::kNormal;
}

struct EvalPartition {
  std::vector<std::size_t> e_pred;
  std::vector<std::size_t> h_pred;
  std::vector<std::size_t> normal;

  std::size_t size() const noexcept { return e_pred.size() + h_pred.size() + normal.size(); }
};

inline EvalPartition partition_eval(std::span<const std::size_t> distances,
                                    std::span<const Label> labels, const CluePolicy& policy) {
  validate(policy);
  if (distances.size() != labels.size()) {
    throw std::invalid_argument("partition_eval: distances and labels differ in length");
  }
  EvalPartition part;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    switch (classify(distances[i], labels[i], policy)) {
      case Split::kEasy: part.e_pred.push_back(i); break;
      case Split::kHard: part.h_pred.push_back(i); break;
      case Split::kNormal: part.normal.push_back(i); break;
    }
  }
  return part;
}

inline EvalPartition partition_eval(const Dataset& dataset, const CluePolicy& policy) {
  const auto d = edit_distances(dataset);
  const auto l = labels_of(dataset);
  return partition_eval(d, l, policy);
}

// Accuracies are empty when their split is empty; delta then is too.
struct GapReport {
  std::optional<double> acc_e;
  std::optional<double> acc_h;
  std::optional<double> delta;
};

inline GapReport gap(std::span<const Label> predictions, std::span<const Label> truth,
                     const EvalPartition& partition) {
  if (predictions.size() != truth.size()) {
    throw std::invalid_argument("gap: predictions and truth differ in length");
  }
  const auto accuracy = [&](const std::vector<std::size_t>& idx) -> std::optional<double> {
    if (idx.empty()) return std::nullopt;
    std::size_t hit = 0;
    for (std::size_t i : idx) {
      if (i >= truth.size()) throw std::out_of_range("gap: partition index out of range");
      hit += predictions[i] == truth[i];
    }
    return static_cast<double>(hit) / static_cast<double>(idx.size());
  };
  GapReport r;
  r.acc_e = accuracy(partition.e_pred);
  r.acc_h = accuracy(partition.h_pred);
  if (r.acc_e && r.acc_h) r.delta = *r.acc_e - *r.acc_h;
  return r;
}

// One Spearman matrix per label value, entries empty where undefined.
struct SpearmanMatrices {
  std::vector<std::string> names;
  std::vector<std::vector<std::optional<double>>> label0;
  std::vector<std::vector<std::optional<double>>> label1;
};

// Count vector for one label over distances 0..max_distance, zero-filled.
inline std::vector<double> aligned_counts(const DistanceHistogram& h, Label label,
                                          std::size_t max_distance) {
  std::vector<double> v(max_distance + 1, 0.0);
  for (const auto& [d, c] : h.buckets) {
    if (d <= max_distance) v[d] = static_cast<double>(label == Label::kMatch ? c.label1 : c.label0);
  }
  return v;
}

inline SpearmanMatrices cross_dataset_spearman(
    const std::vector<std::pair<std::string, DistanceHistogram>>& histograms) {
  if (histograms.size() < 2) throw std::invalid_argument("cross_dataset_spearman: need >= 2 datasets");
  std::size_t support = 0;
  for (const auto& [name, h] : histograms) support = std::max(support, h.max_distance());

  SpearmanMatrices out;
  const std::size_t k = histograms.size();
  for (const auto& [name, h] : histograms) out.names.push_back(name);
  for (Label label : {Label::kMismatch, Label::kMatch}) {
    std::vector<std::vector<double>> vecs;
    for (const auto& [name, h] : histograms) vecs.push_back(aligned_counts(h, label, support));
    std::vector<std::vector<std::optional<double>>> m(k, std::vector<std::optional<double>>(k));
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i; j < k; ++j) {
        try {
          m[i][j] = m[j][i] = (i == j) ? (spearman_rho(vecs[i], vecs[i]), 1.0)
                                       : spearman_rho(vecs[i], vecs[j]);
        } catch (const std::exception&) {
          // zero variance (or a single-distance support) leaves the entry undefined
        }
      }
    }
    (label == Label::kMatch ? out.label1 : out.label0) = std::move(m);
  }
  return out;
}

}  // namespace cluekit
