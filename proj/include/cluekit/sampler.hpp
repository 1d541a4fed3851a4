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
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluekit/analysis.hpp"
#include "cluekit/dataset.hpp"
#include "cluekit/error.hpp"
#include "cluekit/utf8.hpp"

namespace cluekit {

enum class Strategy { kRandom, kLlsCsc, kGlsCsc, kCurriculumLength };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kLlsCsc: return "lls-csc";
    case Strategy::kGlsCsc: return "gls-csc";
    case Strategy::kCurriculumLength: return "curriculum";
  }
  return "random";
}

inline std::optional<Strategy> parse_strategy(std::string_view s) {
  if (s == "random") return Strategy::kRandom;
  if (s == "lls-csc" || s == "lls_csc") return Strategy::kLlsCsc;
  if (s == "gls-csc" || s == "gls_csc") return Strategy::kGlsCsc;
  if (s == "curriculum" || s == "curriculum_length") return Strategy::kCurriculumLength;
  return std::nullopt;
}

struct SamplerConfig {
  Strategy strategy = Strategy::kGlsCsc;
  std::uint64_t seed = 0;
  // Replaces the derived ramp slope when set; must be positive.
  std::optional<double> alpha_override;
};

// Where each position of an order came from. kFallback marks positions that
// were bulk-inserted rather than drawn step by step from a pool.
enum class Provenance : std::uint8_t { kFromCsc, kFromOther, kFallback };

inline std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kFromCsc: return "FROM_CSC";
    case Provenance::kFromOther: return "FROM_OTHER";
    case Provenance::kFallback: return "FALLBACK";
  }
  return "FALLBACK";
}

struct ResampleResult {
  std::vector<std::size_t> order;
  std::vector<Provenance> provenance;

  std::size_t size() const noexcept { return order.size(); }
  friend bool operator==(const ResampleResult&, const ResampleResult&) = default;
};

using Rng = std::mt19937_64;

// Ramp slope for the CSC draw probability: 2 / ((n_other / n_csc + 1) * n),
// which simplifies to 2 * n_csc / n^2.
inline double compute_alpha(std::size_t n_csc, std::size_t n_other) {
  if (n_csc == 0) throw std::invalid_argument("compute_alpha: no CSC samples");
  const double n = static_cast<double>(n_csc) + static_cast<double>(n_other);
  return 2.0 * static_cast<double>(n_csc) / (n * n);
}

// Step-indexed draw law: at 1-based step i a CSC sample is drawn with
// probability min(1, alpha * i).
class GlsCscSchedule {
 public:
  explicit GlsCscSchedule(double alpha) : alpha_(alpha) {
    if (!(alpha > 0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  }

  double alpha() const noexcept { return alpha_; }

  double csc_probability(std::size_t step) const noexcept {
    return std::min(1.0, alpha_ * static_cast<double>(step));
  }

  bool draw_from_csc(std::size_t step, Rng& rng) const {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < csc_probability(step);
  }

 private:
  double alpha_;
};

namespace detail {

inline void split_pools(const ClueFlags& flags, std::vector<std::size_t>& csc,
                        std::vector<std::size_t>& other) {
  for (std::size_t i = 0; i < flags.size(); ++i) (flags.is_csc[i] ? csc : other).push_back(i);
}

inline void append(ResampleResult& r, std::span<const std::size_t> idx, Provenance p) {
  r.order.insert(r.order.end(), idx.begin(), idx.end());
  r.provenance.insert(r.provenance.end(), idx.size(), p);
}

// Uniform draw without replacement by swap-remove.
inline std::size_t take(std::vector<std::size_t>& pool, Rng& rng) {
  const auto j = std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng);
  std::swap(pool[j], pool.back());
  const std::size_t v = pool.back();
  pool.pop_back();
  return v;
}

}  // namespace detail

inline ResampleResult random_order(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  ResampleResult r;
  r.order.resize(n);
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::shuffle(r.order.begin(), r.order.end(), rng);
  r.provenance.assign(n, Provenance::kFallback);
  return r;
}

// Shuffled non-CSC samples, then shuffled CSC samples.
inline ResampleResult lls_csc(std::size_t n, const ClueFlags& flags, std::uint64_t seed) {
  if (flags.size() != n) throw std::invalid_argument("lls_csc: flags do not cover the dataset");
  Rng rng(seed);
  std::vector<std::size_t> csc, other;
  detail::split_pools(flags, csc, other);
  std::shuffle(other.begin(), other.end(), rng);
  std::shuffle(csc.begin(), csc.end(), rng);
  ResampleResult r;
  detail::append(r, other, Provenance::kFromOther);
  detail::append(r, csc, Provenance::kFromCsc);
  return r;
}

// Gradual interleaving: CSC samples are drawn with a linearly growing
// probability, each pool without replacement. Once either pool runs dry the
// rest of the other pool is appended in shuffled order.
inline ResampleResult gls_csc(std::size_t n, const ClueFlags& flags, const SamplerConfig& config) {
  if (flags.size() != n) throw std::invalid_argument("gls_csc: flags do not cover the dataset");
  if (config.alpha_override && !(*config.alpha_override > 0)) {
    throw ConfigError("alpha_override must be positive");
  }
  Rng rng(config.seed);
  std::vector<std::size_t> csc, other;
  detail::split_pools(flags, csc, other);
  std::shuffle(csc.begin(), csc.end(), rng);
  std::shuffle(other.begin(), other.end(), rng);

  ResampleResult r;
  r.order.reserve(n);
  r.provenance.reserve(n);
  if (csc.empty() || other.empty()) {
    detail::append(r, csc.empty() ? other : csc, Provenance::kFallback);
    return r;
  }

  const GlsCscSchedule schedule(config.alpha_override.value_or(compute_alpha(csc.size(), other.size())));
  for (std::size_t step = 1; step <= n; ++step) {
    if (csc.empty() || other.empty()) {
      auto& rest = csc.empty() ? other : csc;
      std::shuffle(rest.begin(), rest.end(), rng);
      detail::append(r, rest, Provenance::kFallback);
      break;
    }
    if (schedule.draw_from_csc(step, rng)) {
      r.order.push_back(detail::take(csc, rng));
      r.provenance.push_back(Provenance::kFromCsc);
    } else {
      r.order.push_back(detail::take(other, rng));
      r.provenance.push_back(Provenance::kFromOther);
    }
  }
  return r;
}

// Short pairs first: ascending total character length, ties by index.
inline ResampleResult curriculum_length(const Dataset& dataset) {
  std::vector<std::size_t> len(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    len[i] = utf8::length(dataset[i].text_a) + utf8::length(dataset[i].text_b);
  }
  ResampleResult r;
  r.order.resize(dataset.size());
  std::iota(r.order.begin(), r.order.end(), std::size_t{0});
  std::ranges::stable_sort(r.order, [&](std::size_t a, std::size_t b) { return len[a] < len[b]; });
  r.provenance.assign(dataset.size(), Provenance::kFallback);
  return r;
}

inline ResampleResult resample(const Dataset& dataset, const ClueFlags& flags,
                               const SamplerConfig& config) {
  switch (config.strategy) {
    case Strategy::kRandom: return random_order(dataset.size(), config.seed);
    case Strategy::kLlsCsc: return lls_csc(dataset.size(), flags, config.seed);
    case Strategy::kGlsCsc: return gls_csc(dataset.size(), flags, config);
    case Strategy::kCurriculumLength: return curriculum_length(dataset);
  }
  throw ConfigError("unknown strategy");
}

inline bool is_permutation_of_indices(std::span<const std::size_t> order, std::size_t n) {
  if (order.size() != n) return false;
  std::vector<bool> seen(n, false);
  for (std::size_t i : order) {
    if (i >= n || seen[i]) return false;
    seen[i] = true;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Diagnostics

struct ProportionPoint {
  std::size_t step = 0;  // last step of the window, 1-based
  double csc_fraction = 0;
};

struct ProportionCurve {
  std::size_t window = 0;
  std::vector<ProportionPoint> points;
};

// CSC share of each consecutive block of `window` steps.
inline ProportionCurve proportion_curve(const ResampleResult& result, const ClueFlags& flags,
                                        std::size_t window) {
  if (window == 0) throw std::invalid_argument("proportion_curve: window must be positive");
  if (window > result.size()) throw std::invalid_argument("proportion_curve: window exceeds order");
  ProportionCurve curve{window, {}};
  std::size_t hits = 0;
  for (std::size_t k = 0; k < result.size(); ++k) {
    hits += flags.is_csc.at(result.order[k]);
    if ((k + 1) % window == 0) {
      curve.points.push_back({k + 1, static_cast<double>(hits) / static_cast<double>(window)});
      hits = 0;
    }
  }
  return curve;
}

// 1-based step of the first bulk-inserted position, or nullopt.
inline std::optional<std::size_t> first_fallback_step(const ResampleResult& r) {
  const auto it = std::ranges::find(r.provenance, Provenance::kFallback);
  if (it == r.provenance.end()) return std::nullopt;
  return static_cast<std::size_t>(it - r.provenance.begin()) + 1;
}

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
};

// Ordinary least squares of y on x. Needs at least two distinct x.
inline LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line: bad input");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("fit_line: constant x");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

// ---------------------------------------------------------------------------
// Order files

inline void write_order(std::ostream& out, const ResampleResult& r) {
  for (std::size_t i : r.order) out << i << '\n';
}

inline void write_provenance(std::ostream& out, const ResampleResult& r) {
  for (std::size_t k = 0; k < r.size(); ++k) {
    nlohmann::ordered_json rec;
    rec["step"] = k + 1;
    rec["index"] = r.order[k];
    rec["provenance"] = to_string(r.provenance[k]);
    out << rec.dump() << '\n';
  }
}

inline void write_proportion(std::ostream& out, const ProportionCurve& c) {
  out << "step,csc_fraction\n";
  char buf[32];
  for (const auto& p : c.points) {
    std::snprintf(buf, sizeof buf, "%.6f", p.csc_fraction);
    out << p.step << ',' << buf << '\n';
  }
}

// Reads a newline-separated index list. Provenance is unknown and recorded
// as kFallback.
inline ResampleResult read_order(std::istream& in) {
  ResampleResult r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(line, &pos);
    } catch (const std::exception&) {
      throw InputError("invalid index", line_no);
    }
    if (pos != line.size() || line[0] == '-') throw InputError("invalid index", line_no);
    r.order.push_back(static_cast<std::size_t>(v));
  }
  r.provenance.assign(r.order.size(), Provenance::kFallback);
  return r;
}

}  // namespace cluekit
