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

// Acceptance suite. Each TEST is one exit criterion; a listener prints one
// PASS/FAIL line per criterion after the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "cluekit/analysis.hpp"
#include "cluekit/corpus.hpp"
#include "cluekit/metrics.hpp"
#include "cluekit/probe.hpp"
#include "cluekit/sampler.hpp"

namespace cluekit {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::size_t RecursiveDistance(std::u32string_view a, std::u32string_view b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a[0] == b[0]) return RecursiveDistance(a.substr(1), b.substr(1));
  return 1 + std::min({RecursiveDistance(a.substr(1), b), RecursiveDistance(a, b.substr(1)),
                       RecursiveDistance(a.substr(1), b.substr(1))});
}

ClueFlags RandomFlags(std::size_t n, double p, std::mt19937_64& rng) {
  ClueFlags f;
  f.is_csc.resize(n);
  std::bernoulli_distribution coin(p);
  for (std::size_t i = 0; i < n; ++i) f.is_csc[i] = coin(rng);
  return f;
}

std::vector<std::size_t> Flagged(const ClueFlags& f) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.is_csc[i]) out.push_back(i);
  }
  return out;
}

// ---------------------------------------------------------------------------

TEST(Acceptance, C01_EditDistanceExactness) {
  struct Case {
    const char* a;
    const char* b;
    std::size_t expected;
  };
  const Case cases[] = {
      {"苹果手机通讯录如何删除", "苹果手机电话簿如何删除", 3},
      {"属兔的人适合居住在中国哪个城市？", "中国哪个城市最适合居住？", 14},
      {"游戏内无法发送文字消息的原因", "为什么我游戏里面不能发文字呢", 14},
      {"猫喜欢吃什么水果", "牛喜欢吃什么水果", 1},
  };
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const auto d = levenshtein(c.a, c.b);
    const double ms = Seconds(t0) * 1e3;
    EXPECT_EQ(c.expected, d) << c.a;
    EXPECT_LT(ms, 1.0) << c.a;
  }
}

TEST(Acceptance, C02_OracleEquivalence) {
  const auto t0 = Clock::now();
  std::vector<std::u32string> all{U""};
  for (std::size_t k = 0, lo = 0; k < 6; ++k) {
    const std::size_t hi = all.size();
    for (std::size_t i = lo; i < hi; ++i) {
      for (char32_t c : {U'a', U'b', U'c'}) all.push_back(all[i] + c);
    }
    lo = hi;
  }
  ASSERT_EQ(1093u, all.size());
  std::size_t mismatches = 0;
  for (const auto& a : all) {
    for (const auto& b : all) mismatches += RecursiveDistance(a, b) != levenshtein(a, b);
  }
  EXPECT_EQ(0u, mismatches);
  EXPECT_LT(Seconds(t0), 60.0);
}

TEST(Acceptance, C03_MetricAxioms) {
  std::mt19937 rng(2024);
  constexpr std::u32string_view kAlphabet = U"abcd猫牛喜欢吃";
  std::uniform_int_distribution<std::size_t> len(0, 12), pick(0, kAlphabet.size() - 1);
  const auto gen = [&] {
    std::u32string s(len(rng), U'\0');
    for (auto& c : s) c = kAlphabet[pick(rng)];
    return s;
  };
  int failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    const auto a = gen(), b = gen(), c = gen();
    const auto ab = levenshtein(a, b);
    const auto diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
    const bool ok = levenshtein(a, a) == 0 && (ab == 0) == (a == b) && ab == levenshtein(b, a) &&
                    levenshtein(a, c) <= ab + levenshtein(b, c) && diff <= ab &&
                    ab <= std::max(a.size(), b.size());
    failures += !ok;
  }
  EXPECT_EQ(0, failures);
}

TEST(Acceptance, C04_AlphaIdentity) {
  const auto t0 = Clock::now();
  EXPECT_EQ(0.005, compute_alpha(25, 75));

  const std::size_t n = 10000, n_csc = 2500;
  const double alpha = compute_alpha(n_csc, n - n_csc);
  double analytic = 0;
  for (std::size_t i = 1; i <= n; ++i) analytic += std::min(1.0, alpha * static_cast<double>(i));
  const double identity = static_cast<double>(n_csc) * (n + 1) / static_cast<double>(n);
  EXPECT_NEAR(identity, analytic, 1e-9 * identity);

  ClueFlags flags;
  flags.is_csc.assign(n, false);
  std::fill_n(flags.is_csc.begin(), n_csc, true);
  double total = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto r = gls_csc(n, flags, SamplerConfig{Strategy::kGlsCsc, seed, {}});
    total += static_cast<double>(std::ranges::count(r.provenance, Provenance::kFromCsc));
  }
  const double mean = total / 20.0;
  std::printf("  [C04] mean FROM_CSC draws over 20 seeds = %.2f, analytic = %.2f (%+.2f%%)\n", mean,
              analytic, 100.0 * (mean - analytic) / analytic);
  EXPECT_NEAR(analytic, mean, 0.02 * analytic);
  EXPECT_LT(Seconds(t0), 30.0);
}

TEST(Acceptance, C05_PermutationProperty) {
  std::mt19937_64 rng(55);
  for (auto strategy : {Strategy::kRandom, Strategy::kLlsCsc, Strategy::kGlsCsc, Strategy::kCurriculumLength}) {
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
      SynthConfig c;
      c.n = rng() % 400;
      c.p_csc = std::uniform_real_distribution<>(0, 1)(rng);
      c.seed = rng();
      const auto ds = generate_synthetic(c);
      const auto flags = RandomFlags(ds.size(), std::uniform_real_distribution<>(0, 1)(rng), rng);
      const auto r = resample(ds, flags, SamplerConfig{strategy, rng(), {}});
      bad += !is_permutation_of_indices(r.order, ds.size()) || r.provenance.size() != ds.size();
    }
    EXPECT_EQ(0, bad) << to_string(strategy);
  }
}

TEST(Acceptance, C06_OrderingLaws) {
  std::mt19937_64 rng(66);
  int lls_bad = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 1000;
    const auto flags = RandomFlags(n, std::uniform_real_distribution<>(0, 1)(rng), rng);
    const auto r = lls_csc(n, flags, rng());
    std::size_t last_other = 0, first_csc = n;
    bool any_other = false;
    for (std::size_t k = 0; k < n; ++k) {
      if (flags.is_csc[r.order[k]]) {
        first_csc = std::min(first_csc, k);
      } else {
        last_other = k, any_other = true;
      }
    }
    lls_bad += any_other && first_csc < n && last_other > first_csc;
  }
  EXPECT_EQ(0, lls_bad);

  const std::size_t n = 100000, window = 1000;
  const auto flags = RandomFlags(n, 0.3, rng);
  const auto gls = gls_csc(n, flags, SamplerConfig{Strategy::kGlsCsc, 6, {}});
  const auto curve = proportion_curve(gls, flags, window);
  const auto stop = first_fallback_step(gls).value_or(n + 1);
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    if (p.step < stop) x.push_back(static_cast<double>(p.step)), y.push_back(p.csc_fraction);
  }
  const auto fit = fit_line(x, y);
  std::printf("  [C06] GLS-CSC curve: %zu pre-fallback windows, slope %.3g, R^2 %.4f\n", x.size(),
              fit.slope, fit.r_squared);
  EXPECT_GT(fit.slope, 0.0);
  EXPECT_GE(fit.r_squared, 0.98);

  // Pointwise 3-sigma band over 100 windows: even a uniform shuffle leaves it
  // somewhere in roughly one run in five. The seed is fixed, not tuned.
  const auto rnd = proportion_curve(random_order(n, 6), flags, window);
  const double p = static_cast<double>(flags.count()) / n;
  const double sd = std::sqrt(p * (1 - p) / window * (n - window) / (n - 1.0));
  double worst = 0;
  for (const auto& pt : rnd.points) worst = std::max(worst, std::abs(pt.csc_fraction - p) / sd);
  std::printf("  [C06] random curve: max |deviation| = %.2f sigma\n", worst);
  EXPECT_LE(worst, 3.0);
}

struct BiasedRun {
  double acc_e = 0, acc_h = 0, tendency_gap = 0;
};

// CSC-only probe on a clue-faithful corpus, evaluated on an independently
// drawn corpus whose band labels ignore the clue.
BiasedRun CscOnlyProbe(std::uint64_t seed) {
  SynthConfig tc;
  tc.n = 4000;
  tc.p_csc = 0.5;
  tc.clue_fidelity = 1.0;
  tc.semantic_fidelity = 0.5;
  tc.seed = seed;
  SynthConfig ec = tc;
  ec.clue_fidelity = 0.5;
  ec.seed = seed + 1000;
  const auto train_ds = generate_synthetic(tc);
  const auto eval_ds = generate_synthetic(ec);
  const CluePolicy policy;
  const auto flags = flag_csc(train_ds, build_histogram(train_ds), policy);
  const auto model = train(train_ds, random_order(train_ds.size(), seed), ProbeHyperparams{}, Flagged(flags));

  const auto f = probe_features(eval_ds);
  const auto l = labels_of(eval_ds);
  const auto d = edit_distances(eval_ds);
  const auto part = partition_eval(d, l, policy);
  BiasedRun out;
  out.acc_e = evaluate(model, f, l, part.e_pred);
  out.acc_h = evaluate(model, f, l, part.h_pred);

  double low = 0, high = 0;
  std::size_t nl = 0, nh = 0;
  for (std::size_t i = 0; i < eval_ds.size(); ++i) {
    const double p = model.probability(f[i]);
    if (ec.low_band.contains(d[i])) low += p, ++nl;
    if (ec.high_band.contains(d[i])) high += p, ++nh;
  }
  out.tendency_gap = low / static_cast<double>(nl) - high / static_cast<double>(nh);
  return out;
}

TEST(Acceptance, C07_CscOnlyGap) {
  const auto t0 = Clock::now();
  int pass = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = CscOnlyProbe(seed);
    std::printf("  [C07] seed %llu: E-analog %.4f  H-analog %.4f\n", static_cast<unsigned long long>(seed),
                r.acc_e, r.acc_h);
    pass += r.acc_e >= 0.95 && r.acc_h <= 0.05;
  }
  EXPECT_EQ(10, pass);
  EXPECT_LT(Seconds(t0), 60.0);
}

TEST(Acceptance, C08_Tendency) {
  int pass = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = CscOnlyProbe(seed);
    std::printf("  [C08] seed %llu: P(1|low band) - P(1|high band) = %.4f\n",
                static_cast<unsigned long long>(seed), r.tendency_gap);
    pass += r.tendency_gap >= 0.5;
  }
  EXPECT_EQ(10, pass);
}

TEST(Acceptance, C09_LossDrop) {
  int pass = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig c;
    c.n = 5000;
    c.p_csc = 0.3;
    c.clue_fidelity = 1.0;
    c.semantic_fidelity = 0.5;
    c.seed = seed;
    const auto ds = generate_synthetic(c);
    const auto flags = flag_csc(ds, build_histogram(ds), CluePolicy{});
    const double start = 1.0 - static_cast<double>(flags.count()) / static_cast<double>(ds.size());
    const auto x = probe_features(ds);
    const auto l = labels_of(ds);
    const auto lls = train(x, l, lls_csc(ds.size(), flags, seed), ProbeHyperparams{});
    const auto rnd = train(x, l, random_order(ds.size(), seed), ProbeHyperparams{});
    const bool fires = loss_drop_detector(lls.loss_trace, start) == LossDrop::kDetected;
    const bool quiet = loss_drop_detector(rnd.loss_trace, start) == LossDrop::kNotDetected;
    std::printf("  [C09] seed %llu: lls %s, random %s\n", static_cast<unsigned long long>(seed),
                fires ? "detected" : "not detected", quiet ? "not detected" : "detected");
    pass += fires && quiet;
  }
  EXPECT_GE(pass, 8);
}

int GlsWins(double learning_rate, std::size_t n, bool verbose) {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthConfig c;
    c.n = n;
    c.p_csc = 0.3;
    c.clue_fidelity = 0.95;
    c.semantic_fidelity = 0.95;
    c.seed = seed;
    const auto ds = generate_synthetic(c);
    const auto flags = flag_csc(ds, build_histogram(ds), CluePolicy{});
    const auto x = probe_features(ds);
    const auto l = labels_of(ds);
    ProbeHyperparams hp;
    hp.learning_rate = learning_rate;
    const auto g = train(x, l, gls_csc(ds.size(), flags, SamplerConfig{Strategy::kGlsCsc, seed, {}}), hp);
    const auto r = train(x, l, random_order(ds.size(), seed), hp);
    const bool win = std::abs(g.weights[kDistance]) <= std::abs(r.weights[kDistance]);
    if (verbose) {
      std::printf("  [C10] seed %llu: |w_dist| gls %.4f  random %.4f\n",
                  static_cast<unsigned long long>(seed), std::abs(g.weights[kDistance]),
                  std::abs(r.weights[kDistance]));
    }
    wins += win;
  }
  return wins;
}

TEST(Acceptance, C10_GlsDirectionalEffect) {
  const int wins = GlsWins(0.01, 10000, true);
  std::printf("  [C10] lr 0.01: GLS-CSC <= random in %d/10 paired seeds\n", wins);
  // Diagnostic only: with lr 0.1 the final steps dominate constant-rate SGD
  // and the late CSC block reverses the comparison.
  std::printf("  [C10] (diagnostic) lr 0.1: GLS-CSC <= random in %d/10 paired seeds\n",
              GlsWins(0.1, 10000, false));
  EXPECT_GE(wins, 8);
}

TEST(Acceptance, C11_SpearmanCorrectness) {
  std::mt19937 rng(111);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 60;
    std::vector<double> x(n), y(n);
    std::normal_distribution<double> g;
    for (auto& v : x) v = g(rng);
    for (std::size_t i = 0; i < n; ++i) y[i] = 0.5 * x[i] + g(rng);

    // Oracle: Pearson correlation of explicit rank vectors (ties impossible
    // with continuous draws).
    const auto rank = [](const std::vector<double>& v) {
      std::vector<std::size_t> idx(v.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      std::ranges::sort(idx, [&](auto a, auto b) { return v[a] < v[b]; });
      std::vector<double> r(v.size());
      for (std::size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k + 1);
      return r;
    };
    const auto rx = rank(x), ry = rank(y);
    const double m = (static_cast<double>(n) + 1) / 2;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
      sxy += (rx[i] - m) * (ry[i] - m);
      sxx += (rx[i] - m) * (rx[i] - m);
      syy += (ry[i] - m) * (ry[i] - m);
    }
    worst = std::max(worst, std::abs(sxy / std::sqrt(sxx * syy) - spearman_rho(x, y)));
  }
  EXPECT_LE(worst, 1e-12);
  const std::vector<double> a{1, 2, 3, 4, 5}, b{1, 3, 2, 5, 4};
  EXPECT_NEAR(0.8, spearman_rho(a, b), 1e-12);
}

TEST(Acceptance, C12_GradientCheck) {
  std::mt19937 rng(12);
  std::normal_distribution<double> g(0.0, 1.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double h = 1e-5;
  double worst = 0;
  for (int point = 0; point < 100; ++point) {
    const Weights w{g(rng), g(rng), g(rng), g(rng)};
    const FeatureVector x{u(rng), u(rng), point % 2 ? 1.0 : 0.0, 1.0};
    const Label y = point % 3 ? Label::kMatch : Label::kMismatch;
    const auto grad = log_loss_gradient(w, x, y);
    for (std::size_t k = 0; k < kProbeArity; ++k) {
      if (x[k] == 0) continue;
      Weights plus = w, minus = w;
      plus[k] += h;
      minus[k] -= h;
      const double fd = (log_loss(plus, x, y) - log_loss(minus, x, y)) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[k]) / std::abs(grad[k]));
    }
  }
  std::printf("  [C12] worst relative error %.3g\n", worst);
  EXPECT_LT(worst, 1e-6);
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

TEST(Acceptance, C13_Reproducibility) {
  const fs::path dir = fs::temp_directory_path() / "cluekit_acceptance_c13";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ostringstream err;
  const auto run = [&](std::vector<std::string> args) { return cli::run(args, err); };
  const auto train_path = (dir / "train.tsv").string();
  const auto eval_path = (dir / "eval.jsonl").string();

  ASSERT_EQ(0, run({"synth", "--n", "3000", "--seed", "13", "--semantic-fidelity", "0.6", "-o", train_path}));
  ASSERT_EQ(0, run({"synth", "--n", "1000", "--seed", "14", "--clue-fidelity", "0.5", "--format", "jsonl",
                    "-o", eval_path}));

  struct Job {
    std::string name;
    std::vector<std::string> args;
    std::vector<std::string> files;
  };
  const std::vector<Job> jobs = {
      {"analyze", {"analyze", "-i", train_path, "--compare", eval_path}, {"histogram.csv", "flags.json", "report.json"}},
      {"resample", {"resample", "-i", train_path, "--strategy", "gls-csc", "--seed", "5"},
       {"order.txt", "provenance.jsonl", "proportion.csv"}},
      {"partition", {"partition", "-i", eval_path}, {"epred.jsonl", "hpred.jsonl", "normal.jsonl", "sizes.json"}},
      {"probe", {"probe", "--train", train_path, "--eval", eval_path, "--strategy", "gls-csc", "--seed", "2"},
       {"model.json", "losstrace.csv", "gap.json", "tendency.csv"}},
  };
  int identical = 0, total = 0;
  for (const auto& job : jobs) {
    auto args = job.args;
    args.insert(args.end(), {"-o", (dir / job.name).string()});
    ASSERT_EQ(0, run(args)) << err.str();
    ASSERT_EQ(0, run({"replay", (dir / job.name / "manifest.json").string(), "-o", (dir / (job.name + "_replay")).string()}));
    for (const auto& f : job.files) {
      ++total;
      const bool same = Slurp(dir / job.name / f) == Slurp(dir / (job.name + "_replay") / f);
      identical += same;
      EXPECT_TRUE(same) << job.name << "/" << f;
    }
  }
  // synth: replay into a new file.
  ASSERT_EQ(0, run({"replay", train_path + ".manifest.json", "-o", (dir / "train_replay.tsv").string()}));
  ++total;
  identical += Slurp(train_path) == Slurp(dir / "train_replay.tsv");
  EXPECT_EQ(Slurp(train_path), Slurp(dir / "train_replay.tsv"));
  std::printf("  [C13] %d/%d output files byte-identical after replay\n", identical, total);
  fs::remove_all(dir);
}

class CriterionPrinter : public ::testing::EmptyTestEventListener {
 public:
  void OnTestEnd(const ::testing::TestInfo& info) override {
    lines_.push_back(std::string(info.result()->Passed() ? "PASS" : "FAIL") + "  " + info.name());
  }
  void OnTestProgramEnd(const ::testing::UnitTest&) override {
    std::printf("\n==== acceptance criteria ====\n");
    for (const auto& l : lines_) std::printf("%s\n", l.c_str());
    std::fflush(stdout);
  }

 private:
  std::vector<std::string> lines_;
};

}  // namespace
}  // namespace cluekit

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  ::testing::UnitTest::GetInstance()->listeners().Append(new cluekit::CriterionPrinter);
  return RUN_ALL_TESTS();
}
