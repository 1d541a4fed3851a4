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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cluekit/dataset.hpp"
#include "cluekit/error.hpp"
#include "cluekit/metrics.hpp"
#include "cluekit/utf8.hpp"

namespace cluekit {

enum class Format { kTsv, kJsonl };

inline std::string_view to_string(Format f) { return f == Format::kTsv ? "tsv" : "jsonl"; }

inline std::optional<Format> parse_format(std::string_view s) {
  if (s == "tsv") return Format::kTsv;
  if (s == "jsonl") return Format::kJsonl;
  return std::nullopt;
}

// Picks a format from the file extension; anything but .jsonl/.json is TSV.
inline Format format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return (ext == ".jsonl" || ext == ".json") ? Format::kJsonl : Format::kTsv;
}

namespace detail {

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == U'\u00A0' || c == U'\u3000';
}

inline std::optional<Label> parse_label(std::string_view s) {
  if (s == "0") return Label::kMismatch;
  if (s == "1") return Label::kMatch;
  return std::nullopt;
}

inline bool looks_numeric(std::string_view s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  bool digit = false;
  for (; i < s.size(); ++i) {
    if (s[i] >= '0' && s[i] <= '9') {
      digit = true;
    } else if (s[i] != '.' && s[i] != 'e' && s[i] != 'E' && s[i] != '-' && s[i] != '+') {
      return false;
    }
  }
  return digit;
}

inline std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  for (;;) {
    const auto tab = line.find('\t', start);
    cols.push_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return cols;
}

}  // namespace detail

// Strips leading and trailing whitespace (ASCII, NBSP, ideographic space).
// No case folding or width conversion. `s` must be valid UTF-8.
inline std::string normalize_text(std::string_view s) {
  const auto cps = utf8::decode(s);
  std::size_t lo = 0, hi = cps.size();
  while (lo < hi && detail::is_space(cps[lo])) ++lo;
  while (hi > lo && detail::is_space(cps[hi - 1])) --hi;
  return utf8::encode(std::u32string_view(cps).substr(lo, hi - lo));
}

namespace detail {

inline TextPair make_pair(std::string_view a, std::string_view b, Label label, std::size_t line) {
  if (!utf8::is_valid(a) || !utf8::is_valid(b)) throw InputError("invalid UTF-8", line);
  TextPair p;
  p.text_a = normalize_text(a);
  p.text_b = normalize_text(b);
  p.label = label;
  if (p.text_a.empty() || p.text_b.empty()) throw InputError("empty text", line);
  return p;
}

inline std::string_view chomp(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank(std::string_view line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

inline Dataset read_tsv(std::istream& in, std::string source) {
  std::vector<TextPair> pairs;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (is_blank(line)) continue;
    const auto cols = split_tabs(line);
    if (cols.size() != 3) {
      throw InputError("expected 3 columns, found " + std::to_string(cols.size()), line_no);
    }
    if (!utf8::is_valid(cols[2])) throw InputError("invalid UTF-8", line_no);
    const auto label_text = normalize_text(cols[2]);
    const auto label = parse_label(label_text);
    if (!label) {
      if (pairs.empty() && line_no == 1 && !looks_numeric(label_text)) continue;  // header
      throw InputError("invalid label", line_no);
    }
    pairs.push_back(make_pair(cols[0], cols[1], *label, line_no));
  }
  return Dataset(std::move(pairs), std::move(source));
}

inline Dataset read_jsonl(std::istream& in, std::string source) {
  using nlohmann::json;
  std::vector<TextPair> pairs;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = chomp(raw);
    if (is_blank(line)) continue;
    if (!utf8::is_valid(line)) throw InputError("invalid UTF-8", line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error&) {
      throw InputError("malformed JSON", line_no);
    }
    if (!rec.is_object() || !rec.contains("text_a") || !rec.contains("text_b") ||
        !rec.contains("label") || !rec["text_a"].is_string() || !rec["text_b"].is_string()) {
      throw InputError("expected object with string text_a, text_b and a label", line_no);
    }
    std::optional<Label> label;
    const auto& l = rec["label"];
    if (l.is_number_integer()) {
      const auto v = l.get<std::int64_t>();
      if (v == 0 || v == 1) label = static_cast<Label>(v);
    } else if (l.is_string()) {
      label = parse_label(l.get<std::string>());
    }
    if (!label) throw InputError("invalid label", line_no);
    pairs.push_back(make_pair(rec["text_a"].get<std::string>(), rec["text_b"].get<std::string>(),
                              *label, line_no));
  }
  return Dataset(std::move(pairs), std::move(source));
}

}  // namespace detail

inline Dataset ingest(std::istream& in, Format format, std::string source_name = {}) {
  return format == Format::kTsv ? detail::read_tsv(in, std::move(source_name))
                                : detail::read_jsonl(in, std::move(source_name));
}

// Loads a corpus file. An empty file yields an empty dataset.
// Throws InputError naming the offending line.
inline Dataset ingest(const std::filesystem::path& path, Format format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return ingest(in, format, path.filename().string());
}

// TSV output always carries the header row. Texts containing tabs or line
// breaks cannot be represented in TSV and are rejected.
inline void serialize(std::ostream& out, const Dataset& dataset, Format format) {
  if (format == Format::kTsv) {
    out << "text_a\ttext_b\tlabel\n";
    for (const auto& p : dataset) {
      for (const auto* t : {&p.text_a, &p.text_b}) {
        if (t->find_first_of("\t\r\n") != std::string::npos) {
          throw InputError("text of pair " + std::to_string(p.index) +
                           " contains a tab or line break");
        }
      }
      out << p.text_a << '\t' << p.text_b << '\t' << to_int(p.label) << '\n';
    }
    return;
  }
  for (const auto& p : dataset) {
    nlohmann::ordered_json rec;
    rec["text_a"] = p.text_a;
    rec["text_b"] = p.text_b;
    rec["label"] = to_int(p.label);
    out << rec.dump() << '\n';
  }
}

inline std::string serialize(const Dataset& dataset, Format format) {
  std::ostringstream out;
  serialize(out, dataset, format);
  return out.str();
}

// ---------------------------------------------------------------------------
// Synthetic corpora

// Inclusive edit-distance range.
struct Band {
  std::size_t lo = 0;
  std::size_t hi = 0;

  bool contains(std::size_t d) const noexcept { return d >= lo && d <= hi; }
  friend bool operator==(const Band&, const Band&) = default;
};

// Shared substring realizing the hidden semantic bit. Its characters are
// reserved and may not appear in a synthesis alphabet.
inline constexpr std::u32string_view kSemanticMarker = U"⟦≡⟧";

inline constexpr std::u32string_view kDefaultAlphabet =
    U"的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可也你"
    U"说年后多天下能过子而得自家方心前所行然想都同现起还经学什么样问题手机怎如何删除"
    U"水果城市游戏文字消息原因电话";

struct SynthConfig {
  std::size_t n = 1000;
  double p_csc = 0.3;
  // P(label follows the clue direction) for band pairs: low -> 1, high -> 0.
  double clue_fidelity = 1.0;
  // P(marker presence equals label) for every pair.
  double semantic_fidelity = 0.8;
  Band low_band{1, 2};
  Band high_band{12, 13};
  // Distances used for pairs outside the clue bands.
  Band mid_band{4, 11};
  std::size_t min_len = 16;
  std::size_t max_len = 24;
  std::u32string alphabet{kDefaultAlphabet};
  std::uint64_t seed = 0;
};

inline void validate(const SynthConfig& c) {
  const auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!prob(c.p_csc) || !prob(c.clue_fidelity) || !prob(c.semantic_fidelity)) {
    throw ConfigError("probabilities must lie in [0, 1]");
  }
  for (const Band* b : {&c.low_band, &c.mid_band, &c.high_band}) {
    if (b->lo > b->hi) throw ConfigError("band lower bound exceeds upper bound");
  }
  if (c.low_band.lo == 0) throw ConfigError("low band must start at distance >= 1");
  if (!(c.low_band.hi < c.mid_band.lo && c.mid_band.hi < c.high_band.lo)) {
    throw ConfigError("bands must be ordered low < mid < high without overlap");
  }
  if (c.min_len == 0 || c.min_len > c.max_len) throw ConfigError("invalid text length range");
  if (c.high_band.hi > c.min_len) {
    throw ConfigError("high band exceeds the constructible distance for min_len " +
                      std::to_string(c.min_len));
  }
  std::u32string sorted = c.alphabet;
  std::ranges::sort(sorted);
  if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 2) {
    throw ConfigError("alphabet needs at least two distinct characters");
  }
  for (char32_t m : kSemanticMarker) {
    if (c.alphabet.find(m) != std::u32string::npos) {
      throw ConfigError("alphabet overlaps the semantic marker");
    }
  }
}

inline bool has_semantic_marker(const TextPair& p) {
  const auto marker = utf8::encode(kSemanticMarker);
  return p.text_a.find(marker) != std::string::npos && p.text_b.find(marker) != std::string::npos;
}

// Builds a corpus in which a fraction p_csc of pairs sit in the low/high
// distance bands with clue-directed labels, the rest in the mid band with
// uniform labels. Every pair's distance is measured and the construction is
// retried until it lands in its band.
inline Dataset generate_synthetic(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(config.seed);
  std::vector<TextPair> pairs;
  pairs.reserve(config.n);

  std::u32string alphabet = config.alphabet;
  std::ranges::sort(alphabet);
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());

  const auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  const auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  for (std::size_t i = 0; i < config.n; ++i) {
    Band band = config.mid_band;
    Label label;
    if (coin(config.p_csc)) {
      const bool low = coin(0.5);
      band = low ? config.low_band : config.high_band;
      const bool follows = coin(config.clue_fidelity);
      label = (low == follows) ? Label::kMatch : Label::kMismatch;
    } else {
      label = coin(0.5) ? Label::kMatch : Label::kMismatch;
    }
    const bool semantic = coin(config.semantic_fidelity) ? label == Label::kMatch
                                                         : label == Label::kMismatch;

    constexpr int kMaxAttempts = 64;
    bool built = false;
    for (int attempt = 0; attempt < kMaxAttempts && !built; ++attempt) {
      const std::size_t target = pick(band.lo, band.hi);
      const std::size_t len = pick(config.min_len, config.max_len);
      std::u32string a(len, U'\0');
      for (auto& c : a) c = alphabet[pick(0, alphabet.size() - 1)];
      std::u32string b = a;

      std::vector<std::size_t> positions(len);
      for (std::size_t k = 0; k < len; ++k) positions[k] = k;
      for (std::size_t k = 0; k < target; ++k) {
        std::swap(positions[k], positions[pick(k, len - 1)]);
        auto& c = b[positions[k]];
        const char32_t old = c;
        do {
          c = alphabet[pick(0, alphabet.size() - 1)];
        } while (c == old);
      }
      if (semantic) {
        const std::size_t at = pick(0, len);
        a.insert(at, kSemanticMarker);
        b.insert(at, kSemanticMarker);
      }
      if (!band.contains(levenshtein(a, b))) continue;

      TextPair p;
      p.text_a = utf8::encode(a);
      p.text_b = utf8::encode(b);
      p.label = label;
      pairs.push_back(std::move(p));
      built = true;
    }
    if (!built) {
      throw ConfigError("could not construct a pair in band [" + std::to_string(band.lo) + ", " +
                        std::to_string(band.hi) + "]; enlarge the alphabet or text lengths");
    }
  }
  return Dataset(std::move(pairs), "synthetic");
}

}  // namespace cluekit
