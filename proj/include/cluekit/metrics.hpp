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
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <ranges>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cluekit/dataset.hpp"
#include "cluekit/utf8.hpp"

namespace cluekit {

// Random-access sequences of decoded symbols. Byte strings are excluded so
// UTF-8 text always goes through the decoding overload.
template <class R>
concept SymbolRange = std::ranges::random_access_range<R> &&
                      !std::same_as<std::ranges::range_value_t<R>, char>;

// Levenshtein distance with unit costs for insert, delete, substitute.
// Keeps a single row sized by the shorter input.
template <SymbolRange R1, SymbolRange R2>
std::size_t levenshtein(const R1& a, const R2& b) {
  const auto na = static_cast<std::size_t>(std::ranges::size(a));
  const auto nb = static_cast<std::size_t>(std::ranges::size(b));
  if (na < nb) return levenshtein(b, a);
  if (nb == 0) return na;

  std::vector<std::size_t> row(nb + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= na; ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    const auto& ca = a[i - 1];
    for (std::size_t j = 1; j <= nb; ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (ca == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[nb];
}

// Distance in Unicode scalar values between two UTF-8 strings.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(utf8::decode(a), utf8::decode(b));
}

// Jaccard similarity of the character sets of `a` and `b`.
inline double char_overlap(std::u32string_view a, std::u32string_view b) {
  if (a.empty() && b.empty()) {
    throw std::invalid_argument("char_overlap: both strings are empty");
  }
  std::u32string sa(a), sb(b);
  std::ranges::sort(sa);
  std::ranges::sort(sb);
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  std::u32string common;
  std::ranges::set_intersection(sa, sb, std::back_inserter(common));
  const std::size_t uni = sa.size() + sb.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

inline double char_overlap(std::string_view a, std::string_view b) {
  return char_overlap(std::u32string_view(utf8::decode(a)), std::u32string_view(utf8::decode(b)));
}

// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::ranges::stable_sort(idx, [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> ranks(x.size());
  for (std::size_t lo = 0; lo < idx.size();) {
    std::size_t hi = lo;
    while (hi + 1 < idx.size() && x[idx[hi + 1]] == x[idx[lo]]) ++hi;
    const double r = (static_cast<double>(lo) + static_cast<double>(hi)) / 2.0 + 1.0;
    for (std::size_t k = lo; k <= hi; ++k) ranks[idx[k]] = r;
    lo = hi + 1;
  }
  return ranks;
}

// Spearman's rank correlation with average ranks for ties.
// Throws std::invalid_argument on size mismatch or fewer than two points, and
// std::domain_error when either input is constant.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: length mismatch");
  if (x.size() < 2) throw std::invalid_argument("spearman_rho: need at least two points");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  // Both rank vectors have mean (n + 1) / 2.
  const double mean = (static_cast<double>(x.size()) + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const double dx = rx[i] - mean;
    const double dy = ry[i] - mean;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0 || syy == 0) throw std::domain_error("spearman_rho: zero rank variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct PairFeatures {
  std::size_t edit_distance = 0;
  double char_overlap = 0;
  std::size_t len_sum = 0;
  std::size_t max_len = 0;

  friend bool operator==(const PairFeatures&, const PairFeatures&) = default;
};

inline PairFeatures featurize(const TextPair& pair) {
  const auto a = utf8::decode(pair.text_a);
  const auto b = utf8::decode(pair.text_b);
  return {levenshtein(a, b), char_overlap(a, b), a.size() + b.size(), std::max(a.size(), b.size())};
}

inline std::vector<std::size_t> edit_distances(const Dataset& dataset) {
  std::vector<std::size_t> out;
  out.reserve(dataset.size());
  for (const auto& p : dataset) out.push_back(levenshtein(p.text_a, p.text_b));
  return out;
}

}  // namespace cluekit
