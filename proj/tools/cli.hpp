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

// Command-line front end. Every command writes plain files plus a
// manifest.json that records how to reproduce them.

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cluekit/analysis.hpp"
#include "cluekit/corpus.hpp"
#include "cluekit/error.hpp"
#include "cluekit/probe.hpp"
#include "cluekit/sampler.hpp"

namespace cluekit::cli {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kInputError = 2,
  kFlagError = 3,
  kEmptyResult = 4,
};

namespace fs = std::filesystem;
using nlohmann::json;

namespace detail {

struct PolicyFlags {
  double threshold = 0.70;
  std::size_t min_support = 50;
  std::size_t low_boundary = 3;
  std::size_t high_boundary = 12;
  std::string boundary_mode = "fixed";

  void add_to(CLI::App& app) {
    app.add_option("--threshold", threshold, "majority-label share a distance needs to carry the clue");
    app.add_option("--min-support", min_support, "minimum pairs per distance bucket");
    app.add_option("--low-boundary", low_boundary, "largest 'small' edit distance");
    app.add_option("--high-boundary", high_boundary, "smallest 'large' edit distance");
    app.add_option("--boundary-mode", boundary_mode, "fixed or derived");
  }

  CluePolicy build() const {
    CluePolicy p;
    p.threshold = threshold;
    p.min_support = min_support;
    p.low_boundary = low_boundary;
    p.high_boundary = high_boundary;
    if (boundary_mode == "fixed") {
      p.boundary_mode = BoundaryMode::kFixed;
    } else if (boundary_mode == "derived") {
      p.boundary_mode = BoundaryMode::kDerived;
    } else {
      throw ConfigError("boundary-mode must be fixed or derived");
    }
    validate(p);
    return p;
  }
};

inline json to_json(const CluePolicy& p) {
  return {{"threshold", p.threshold},
          {"min_support", p.min_support},
          {"low_boundary", p.low_boundary},
          {"high_boundary", p.high_boundary},
          {"boundary_mode", p.boundary_mode == BoundaryMode::kFixed ? "fixed" : "derived"}};
}

inline json to_json(const SamplerConfig& c) {
  json j = {{"strategy", to_string(c.strategy)}, {"seed", c.seed}};
  j["alpha_override"] = c.alpha_override ? json(*c.alpha_override) : json(nullptr);
  return j;
}

inline json to_json(const ProbeHyperparams& hp) {
  json j = {{"learning_rate", hp.learning_rate},
            {"seed", hp.seed},
            {"smoothing_window", hp.smoothing_window}};
  j["steps"] = hp.steps ? json(*hp.steps) : json(nullptr);
  return j;
}

inline json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline Format resolve_format(const std::string& flag, const fs::path& path) {
  if (flag.empty()) return format_from_path(path);
  if (auto f = parse_format(flag)) return *f;
  throw ConfigError("format must be tsv or jsonl");
}

inline Dataset load(const std::string& path, const std::string& format_flag) {
  if (!fs::exists(path)) throw InputError("no such file: " + path);
  return ingest(fs::path(path), resolve_format(format_flag, path));
}

// Everything the run needs to be replayed: the argument vector (without the
// output location) and the resolved configuration.
struct Manifest {
  std::string command;
  std::vector<std::string> args;
  std::vector<std::string> inputs;
  std::string out;
  json config = json::object();

  void write(const fs::path& path) const {
    json j;
    j["command"] = command;
    j["args"] = args;
    j["inputs"] = inputs;
    j["out"] = out;
    for (const auto& [k, v] : config.items()) j[k] = v;
    j["tool_version"] = kToolVersion;
    j["timestamp"] = utc_timestamp();
    write_file(path, dump(j));
  }
};

inline std::string histogram_csv(const DistanceHistogram& h, const ClueFlags& flags) {
  std::ostringstream out;
  out << "distance,count0,count1,majority,qualifies\n";
  for (const auto& [d, c] : h.buckets) {
    out << d << ',' << c.label0 << ',' << c.label1 << ',' << to_int(c.majority()) << ','
        << (flags.qualifying.contains(d) ? 1 : 0) << '\n';
  }
  return out.str();
}

inline json spearman_json(const std::vector<std::vector<std::optional<double>>>& m) {
  json rows = json::array();
  for (const auto& row : m) {
    json r = json::array();
    for (const auto& v : row) r.push_back(optional_json(v));
    rows.push_back(r);
  }
  return rows;
}

inline std::string pair_line(const TextPair& p, std::size_t distance) {
  nlohmann::ordered_json rec;
  rec["index"] = p.index;
  rec["text_a"] = p.text_a;
  rec["text_b"] = p.text_b;
  rec["label"] = to_int(p.label);
  rec["edit_distance"] = distance;
  return rec.dump() + "\n";
}

inline Band parse_band(const std::string& s) {
  const auto comma = s.find(',');
  try {
    if (comma == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    return {std::stoull(s.substr(0, comma)), std::stoull(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("band must look like LO,HI: " + s);
  }
}

inline std::string band_string(const Band& b) {
  return std::to_string(b.lo) + "," + std::to_string(b.hi);
}

// ---------------------------------------------------------------------------

inline int analyze(const std::string& input, const std::string& format,
                   const std::vector<std::string>& compare, const CluePolicy& policy,
                   const fs::path& out, Manifest manifest) {
  const Dataset ds = load(input, format);
  const auto distances = edit_distances(ds);
  const auto labels = labels_of(ds);
  const auto hist = build_histogram(distances, labels);
  const auto flags = flag_csc(distances, labels, hist, policy);
  const auto part = partition_eval(distances, labels, policy);

  write_file(out / "histogram.csv", histogram_csv(hist, flags));

  json qualifying = json::array();
  for (const auto& [d, m] : flags.qualifying) {
    qualifying.push_back({{"distance", d}, {"majority", to_int(m)}});
  }
  std::vector<std::size_t> csc_indices;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags.is_csc[i]) csc_indices.push_back(i);
  }
  write_file(out / "flags.json", dump({{"total", ds.size()},
                                       {"csc_count", flags.count()},
                                       {"qualifying_distances", qualifying},
                                       {"csc_indices", csc_indices}}));

  json table = json::array();
  for (const auto& [d, c] : hist.buckets) {
    table.push_back({{"distance", d},
                     {"count0", c.label0},
                     {"count1", c.label1},
                     {"majority", to_int(c.majority())},
                     {"majority_share", c.majority_share()},
                     {"qualifies", flags.qualifying.contains(d)}});
  }
  json report = {{"source", ds.source_name()},
                 {"total", ds.size()},
                 {"csc_count", flags.count()},
                 {"other_count", ds.size() - flags.count()},
                 {"qualifying_distances", qualifying},
                 {"majority_table", table},
                 {"partition",
                  {{"e_pred", part.e_pred.size()},
                   {"h_pred", part.h_pred.size()},
                   {"normal", part.normal.size()}}},
                 {"policy", to_json(policy)}};

  if (!compare.empty()) {
    std::vector<std::pair<std::string, DistanceHistogram>> hs;
    hs.emplace_back(input, hist);
    for (const auto& path : compare) hs.emplace_back(path, build_histogram(load(path, format)));
    const auto m = cross_dataset_spearman(hs);
    report["spearman"] = {{"datasets", m.names},
                          {"label0", spearman_json(m.label0)},
                          {"label1", spearman_json(m.label1)}};
  }
  write_file(out / "report.json", dump(report));

  manifest.inputs.push_back(input);
  manifest.inputs.insert(manifest.inputs.end(), compare.begin(), compare.end());
  manifest.config["policy"] = to_json(policy);
  manifest.write(out / "manifest.json");
  return kOk;
}

inline int resample_cmd(const std::string& input, const std::string& format,
                        const SamplerConfig& sampler, std::size_t window,
                        const CluePolicy& policy, const fs::path& out, Manifest manifest) {
  const Dataset ds = load(input, format);
  const auto distances = edit_distances(ds);
  const auto labels = labels_of(ds);
  const auto flags = flag_csc(distances, labels, build_histogram(distances, labels), policy);
  const auto result = resample(ds, flags, sampler);

  std::ostringstream order, prov, prop;
  write_order(order, result);
  write_provenance(prov, result);
  if (result.size() > 0) {
    write_proportion(prop, proportion_curve(result, flags, std::min(window, result.size())));
  } else {
    write_proportion(prop, ProportionCurve{window, {}});
  }
  write_file(out / "order.txt", order.str());
  write_file(out / "provenance.jsonl", prov.str());
  write_file(out / "proportion.csv", prop.str());

  manifest.inputs.push_back(input);
  manifest.config["policy"] = to_json(policy);
  manifest.config["sampler"] = to_json(sampler);
  manifest.config["window"] = window;
  manifest.write(out / "manifest.json");
  return kOk;
}

inline int partition_cmd(const std::string& input, const std::string& format,
                         const CluePolicy& policy, const fs::path& out, Manifest manifest) {
  const Dataset ds = load(input, format);
  const auto distances = edit_distances(ds);
  const auto labels = labels_of(ds);
  const auto part = partition_eval(distances, labels, policy);

  const auto lines = [&](const std::vector<std::size_t>& idx) {
    std::string s;
    for (std::size_t i : idx) s += pair_line(ds[i], distances[i]);
    return s;
  };
  write_file(out / "epred.jsonl", lines(part.e_pred));
  write_file(out / "hpred.jsonl", lines(part.h_pred));
  write_file(out / "normal.jsonl", lines(part.normal));
  write_file(out / "sizes.json", dump({{"total", ds.size()},
                                       {"e_pred", part.e_pred.size()},
                                       {"h_pred", part.h_pred.size()},
                                       {"normal", part.normal.size()}}));
  manifest.inputs.push_back(input);
  manifest.config["policy"] = to_json(policy);
  manifest.write(out / "manifest.json");
  return kOk;
}

struct ProbeArgs {
  std::string train_path;
  std::string eval_path;
  std::string format;
  std::string order_path;
  std::string strategy = "random";
  std::optional<double> alpha;
  bool csc_only = false;
};

inline int probe_cmd(const ProbeArgs& a, const ProbeHyperparams& hp, const CluePolicy& policy,
                     const fs::path& out, Manifest manifest) {
  const Dataset train_ds = load(a.train_path, a.format);
  const Dataset eval_ds = load(a.eval_path, a.format);

  const auto train_d = edit_distances(train_ds);
  const auto train_l = labels_of(train_ds);
  const auto flags = flag_csc(train_d, train_l, build_histogram(train_d, train_l), policy);

  SamplerConfig sampler;
  sampler.seed = hp.seed;
  sampler.alpha_override = a.alpha;
  ResampleResult order;
  if (!a.order_path.empty()) {
    std::ifstream in(a.order_path);
    if (!in) throw InputError("cannot open " + a.order_path);
    order = read_order(in);
    if (!is_permutation_of_indices(order.order, train_ds.size())) {
      throw InputError("order file is not a permutation of the training indices");
    }
  } else {
    const auto s = parse_strategy(a.strategy);
    if (!s) throw ConfigError("unknown strategy: " + a.strategy);
    sampler.strategy = *s;
    order = resample(train_ds, flags, sampler);
  }

  std::vector<bool> mask;
  if (a.csc_only) {
    mask = flags.is_csc;
    if (flags.count() == 0) throw EmptyResultError("--csc-only: no CSC samples in the training set");
  }
  const auto train_f = probe_features(train_ds);
  const ProbeModel model = train(train_f, train_l, order, hp, mask);

  const auto eval_f = probe_features(eval_ds);
  const auto eval_d = edit_distances(eval_ds);
  const auto eval_l = labels_of(eval_ds);
  const auto part = partition_eval(eval_d, eval_l, policy);
  const auto report = gap(predict_all(model, eval_f), eval_l, part);

  write_file(out / "model.json", dump(to_json(model)));
  std::ostringstream trace;
  write_loss_trace(trace, model.loss_trace);
  write_file(out / "losstrace.csv", trace.str());
  write_file(out / "gap.json", dump({{"acc_e", optional_json(report.acc_e)},
                                     {"acc_h", optional_json(report.acc_h)},
                                     {"delta", optional_json(report.delta)},
                                     {"e_pred_size", part.e_pred.size()},
                                     {"h_pred_size", part.h_pred.size()},
                                     {"normal_size", part.normal.size()}}));
  std::ostringstream tend;
  tend << "distance,p_match\n";
  char buf[32];
  for (const auto& [d, p] : tendency_report(model, eval_f, eval_d)) {
    std::snprintf(buf, sizeof buf, "%.6f", p);
    tend << d << ',' << buf << '\n';
  }
  write_file(out / "tendency.csv", tend.str());

  manifest.inputs = {a.train_path, a.eval_path};
  if (!a.order_path.empty()) manifest.inputs.push_back(a.order_path);
  manifest.config["policy"] = to_json(policy);
  manifest.config["sampler"] = to_json(sampler);
  manifest.config["hyperparams"] = to_json(hp);
  manifest.config["csc_only"] = a.csc_only;
  manifest.write(out / "manifest.json");
  return kOk;
}

inline int synth_cmd(const SynthConfig& config, Format format, const fs::path& out,
                     Manifest manifest) {
  const Dataset ds = generate_synthetic(config);
  write_file(out, serialize(ds, format));
  manifest.config["synth"] = {{"n", config.n},
                              {"p_csc", config.p_csc},
                              {"clue_fidelity", config.clue_fidelity},
                              {"semantic_fidelity", config.semantic_fidelity},
                              {"low_band", band_string(config.low_band)},
                              {"mid_band", band_string(config.mid_band)},
                              {"high_band", band_string(config.high_band)},
                              {"min_len", config.min_len},
                              {"max_len", config.max_len},
                              {"alphabet", utf8::encode(config.alphabet)},
                              {"seed", config.seed},
                              {"format", to_string(format)}};
  manifest.write(fs::path(out.string() + ".manifest.json"));
  return kOk;
}

}  // namespace detail

// Runs one command. `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& err = std::cerr) {
  CLI::App app{"cluekit: superficial-clue analysis and training-order scheduling"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string out;
  std::string input;
  std::string format;
  detail::PolicyFlags policy_flags;

  // analyze
  auto* analyze = app.add_subcommand("analyze", "distance histogram, CSC flags, report");
  std::vector<std::string> compare;
  analyze->add_option("--input,-i", input, "corpus file")->required();
  analyze->add_option("--format", format, "tsv or jsonl (default: by extension)");
  analyze->add_option("--compare", compare, "extra corpora for Spearman matrices");
  analyze->add_option("--out,-o", out, "output directory")->required();
  policy_flags.add_to(*analyze);

  // resample
  auto* resample = app.add_subcommand("resample", "produce a training order");
  std::string strategy = "gls-csc";
  std::uint64_t seed = 0;
  std::optional<double> alpha;
  std::size_t window = 1000;
  resample->add_option("--input,-i", input, "corpus file")->required();
  resample->add_option("--format", format, "tsv or jsonl (default: by extension)");
  resample->add_option("--strategy", strategy, "random|lls-csc|gls-csc|curriculum");
  resample->add_option("--seed", seed, "random seed");
  resample->add_option("--alpha", alpha, "override the GLS-CSC ramp slope");
  resample->add_option("--window", window, "proportion curve window");
  resample->add_option("--out,-o", out, "output directory")->required();
  policy_flags.add_to(*resample);

  // partition
  auto* partition = app.add_subcommand("partition", "split into E-pred / H-pred / normal");
  partition->add_option("--input,-i", input, "corpus file")->required();
  partition->add_option("--format", format, "tsv or jsonl (default: by extension)");
  partition->add_option("--out,-o", out, "output directory")->required();
  policy_flags.add_to(*partition);

  // probe
  auto* probe = app.add_subcommand("probe", "train and evaluate the linear bias probe");
  detail::ProbeArgs pa;
  ProbeHyperparams hp;
  std::optional<std::size_t> steps;
  probe->add_option("--train", pa.train_path, "training corpus")->required();
  probe->add_option("--eval", pa.eval_path, "evaluation corpus")->required();
  probe->add_option("--format", pa.format, "tsv or jsonl (default: by extension)");
  auto* order_opt = probe->add_option("--order", pa.order_path, "order file (one index per line)");
  probe->add_option("--strategy", pa.strategy, "random|lls-csc|gls-csc|curriculum")->excludes(order_opt);
  probe->add_option("--alpha", pa.alpha, "override the GLS-CSC ramp slope");
  probe->add_flag("--csc-only", pa.csc_only, "train on CSC samples only");
  probe->add_option("--lr", hp.learning_rate, "learning rate");
  probe->add_option("--steps", steps, "SGD steps (default: one pass)");
  probe->add_option("--seed", hp.seed, "random seed");
  probe->add_option("--smoothing", hp.smoothing_window, "loss trace smoothing window");
  probe->add_option("--out,-o", out, "output directory")->required();
  policy_flags.add_to(*probe);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  SynthConfig sc;
  std::string low = "1,2", mid = "4,11", high = "12,13", alphabet;
  std::string synth_format = "tsv";
  synth->add_option("--n", sc.n, "number of pairs");
  synth->add_option("--p-csc", sc.p_csc, "share of pairs placed in the clue bands");
  synth->add_option("--clue-fidelity", sc.clue_fidelity, "P(label follows distance clue)");
  synth->add_option("--semantic-fidelity", sc.semantic_fidelity, "P(marker agrees with label)");
  synth->add_option("--low-band", low, "LO,HI");
  synth->add_option("--mid-band", mid, "LO,HI");
  synth->add_option("--high-band", high, "LO,HI");
  synth->add_option("--min-len", sc.min_len, "minimum text length");
  synth->add_option("--max-len", sc.max_len, "maximum text length");
  synth->add_option("--alphabet", alphabet, "characters to draw from");
  synth->add_option("--seed", sc.seed, "random seed");
  synth->add_option("--format", synth_format, "tsv or jsonl");
  synth->add_option("--out,-o", out, "output file")->required();

  // replay
  auto* replay = app.add_subcommand("replay", "rerun a command from its manifest");
  std::string manifest_path;
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out,-o", out, "output location (default: the recorded one)");

  // Record everything but the output location so a replay can redirect it.
  detail::Manifest manifest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if ((args[i] == "--out" || args[i] == "-o") && i + 1 < args.size()) {
      ++i;
    } else if (args[i].rfind("--out=", 0) != 0) {
      manifest.args.push_back(args[i]);
    }
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kFlagError;
  }

  try {
    manifest.out = out;
    if (*analyze) {
      manifest.command = "analyze";
      return detail::analyze(input, format, compare, policy_flags.build(), out, manifest);
    }
    if (*resample) {
      manifest.command = "resample";
      const auto s = parse_strategy(strategy);
      if (!s) throw ConfigError("unknown strategy: " + strategy);
      if (window == 0) throw ConfigError("window must be positive");
      if (alpha && !(*alpha > 0)) throw ConfigError("alpha must be positive");
      SamplerConfig cfg{*s, seed, alpha};
      return detail::resample_cmd(input, format, cfg, window, policy_flags.build(), out, manifest);
    }
    if (*partition) {
      manifest.command = "partition";
      return detail::partition_cmd(input, format, policy_flags.build(), out, manifest);
    }
    if (*probe) {
      manifest.command = "probe";
      hp.steps = steps;
      if (!(hp.learning_rate > 0)) throw ConfigError("learning rate must be positive");
      if (pa.alpha && !(*pa.alpha > 0)) throw ConfigError("alpha must be positive");
      return detail::probe_cmd(pa, hp, policy_flags.build(), out, manifest);
    }
    if (*synth) {
      manifest.command = "synth";
      sc.low_band = detail::parse_band(low);
      sc.mid_band = detail::parse_band(mid);
      sc.high_band = detail::parse_band(high);
      if (!alphabet.empty()) {
        if (!utf8::is_valid(alphabet)) throw ConfigError("alphabet is not valid UTF-8");
        sc.alphabet = utf8::decode(alphabet);
      }
      const auto f = parse_format(synth_format);
      if (!f) throw ConfigError("format must be tsv or jsonl");
      return detail::synth_cmd(sc, *f, out, manifest);
    }
    if (*replay) {
      std::ifstream in(manifest_path);
      if (!in) throw InputError("cannot open " + manifest_path);
      json m;
      try {
        m = json::parse(in);
      } catch (const json::exception&) {
        throw InputError("manifest is not valid JSON");
      }
      if (!m.contains("args") || !m.contains("out")) throw InputError("manifest lacks args/out");
      auto rerun = m.at("args").get<std::vector<std::string>>();
      rerun.push_back("--out");
      rerun.push_back(out.empty() ? m.at("out").get<std::string>() : out);
      return run(rerun, err);
    }
  } catch (const InputError& e) {
    err << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const ConfigError& e) {
    err << "flag error: " << e.what() << "\n";
    return kFlagError;
  } catch (const EmptyResultError& e) {
    err << "empty result: " << e.what() << "\n";
    return kEmptyResult;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

}  // namespace cluekit::cli
