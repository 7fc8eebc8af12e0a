// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
//
//   poesup_acceptance [--cli PATH] [--workdir DIR]
//
// The determinism check drives the command-line tool and is reported as FAIL
// when --cli is not given.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "poesup/fusion.hpp"
#include "poesup/gradcheck_suite.hpp"
#include "poesup/kfold.hpp"
#include "poesup/losses.hpp"
#include "poesup/metrics.hpp"
#include "poesup/rng.hpp"
#include "poesup/synth.hpp"
#include "poesup/trainer.hpp"

namespace fs = std::filesystem;
using namespace poesup;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!out.pass) ++failures;
  std::printf("%s  %-28s %s (%.1f s)\n", out.pass ? "PASS" : "FAIL", name.c_str(), out.detail.c_str(), secs);
  std::fflush(stdout);
}

double elapsed_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Matrix random_matrix(Rng& rng, Index rows, Index cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

double brute_force_supcon(const Matrix& h, const std::vector<int>& ids, double tau, SupConVariant variant) {
  double total = 0.0;
  for (Index k = 0; k < h.rows(); ++k) {
    double denom = 0.0;
    int n_pos = 0, n_den = 0;
    for (Index j = 0; j < h.rows(); ++j) {
      if (j == k) continue;
      if (ids[j] == ids[k]) ++n_pos;
      if (variant == SupConVariant::Standard || ids[j] != ids[k]) {
        denom += std::exp(h.row(k).dot(h.row(j)) / tau);
        ++n_den;
      }
    }
    if (n_pos == 0 || n_den == 0) continue;
    double term = 0.0;
    for (Index p = 0; p < h.rows(); ++p) {
      if (p != k && ids[p] == ids[k]) term += std::log(std::exp(h.row(k).dot(h.row(p)) / tau) / denom);
    }
    total -= term / n_pos;
  }
  return total;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& cli, const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SynthConfig small_dims(SynthConfig s) {
  s.dims = {{Modality::Speech, 32}, {Modality::Acoustic, 16}, {Modality::Text, 32}, {Modality::Image, 32}};
  return s;
}

ExperimentConfig synthetic_protocol(std::uint64_t seed, int epochs) {
  ExperimentConfig cfg;
  cfg.lr = 1e-3;
  cfg.hidden = 64;
  cfg.projection_dim = 32;
  cfg.k_folds = 5;
  cfg.epochs = epochs;
  cfg.seed = seed;
  return cfg;
}

// ------------------------------------------------------------------ checks

Outcome gradient_correctness() {
  const auto t = std::chrono::steady_clock::now();
  const std::vector<GradCheckRow> rows = run_gradcheck_suite({});
  const double secs = elapsed_since(t);
  double worst = 0.0;
  std::string worst_name;
  std::set<std::string> families;
  for (const GradCheckRow& r : rows) {
    families.insert(r.name);
    if (!(r.max_relative_error <= worst)) {
      worst = r.max_relative_error;
      worst_name = r.name;
    }
  }
  const bool ok = worst < 1e-5 && secs < 10.0 && rows.size() == families.size() * 5 && families.size() >= 5;
  return {ok, fmt("%zu rows, worst %.3e (%s), %.2f s", rows.size(), worst, worst_name.c_str(), secs)};
}

Outcome supcon_oracle() {
  const auto t = std::chrono::steady_clock::now();
  Rng rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = 1 + static_cast<Index>(rng.below(8));
    const Matrix h = normalize_rows(random_matrix(rng, n, 6)).unit;
    std::vector<int> ids(static_cast<std::size_t>(n));
    for (int& id : ids) id = 1 + static_cast<int>(rng.below(3));
    for (SupConVariant v : {SupConVariant::Standard, SupConVariant::PaperLiteral}) {
      const double diff = std::abs(supcon_loss({h, ids, 0.07, v}).loss - brute_force_supcon(h, ids, 0.07, v));
      worst = std::max(worst, diff);
    }
  }
  const double secs = elapsed_since(t);
  return {worst <= 1e-10 && secs < 5.0, fmt("100 batches x 2 variants, max |diff| %.3e, %.3f s", worst, secs)};
}

Outcome worked_values() {
  Matrix h(3, 2);
  h << 1, 0, 1, 0, 0, 1;
  const double standard = supcon_loss({h, {1, 1, 2}, 1.0, SupConVariant::Standard}).loss;
  const double literal = supcon_loss({h, {1, 1, 2}, 1.0, SupConVariant::PaperLiteral}).loss;
  Matrix a(1, 2), b(1, 2);
  a << std::log(0.8), std::log(0.2);
  b << std::log(0.6), std::log(0.4);
  const double poe = std::exp(poe_fuse(std::vector<Matrix>{a, b}).fused(0, 0));
  const MetricSet m = compute_metrics({.tp = 3, .tn = 2, .fp = 2, .fn = 1});
  const bool ok = std::abs(standard - 0.626523) <= 1e-6 && std::abs(literal + 2.0) <= 1e-6 &&
                  std::abs(poe - 0.857142857) <= 1e-6 && std::abs(*m.uar - 0.625) <= 1e-6 &&
                  std::abs(*m.f1 - 0.666667) <= 1e-6;
  return {ok, fmt("supcon %.6f / %.6f, poe %.9f, uar %.6f, f1 %.6f", standard, literal, poe, *m.uar, *m.f1)};
}

Outcome poe_identities() {
  Rng rng(7);
  double single = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix z = random_matrix(rng, 5, 2, 5.0);
    single = std::max(single, (poe_fuse(std::vector<Matrix>{z}).fused - log_softmax_rows(z)).cwiseAbs().maxCoeff());
  }
  int flips = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_experts = 1 + static_cast<int>(rng.below(4));
    std::vector<Matrix> experts, shifted;
    for (int e = 0; e < n_experts; ++e) {
      experts.push_back(random_matrix(rng, 4, 2, 3.0));
      shifted.push_back(experts.back().array() + (100.0 * rng.uniform() - 50.0));
    }
    const Matrix before = poe_fuse(experts).fused;
    const Matrix after = poe_fuse(shifted).fused;
    for (Index r = 0; r < before.rows(); ++r) {
      Index i = 0, j = 0;
      before.row(r).maxCoeff(&i);
      after.row(r).maxCoeff(&j);
      flips += i != j;
    }
  }
  return {single <= 1e-12 && flips == 0, fmt("single-expert max |diff| %.3e, argmax changes %d/1000 trials", single, flips)};
}

Outcome kfold_counts() {
  const Dataset ds = generate_synthetic(SynthConfig{});
  int mci_total = 0;
  for (const Sample& s : ds.samples) mci_total += s.label == CognitiveLabel::MCI;
  const std::vector<FoldSplit> folds = stratified_kfold(ds, ExperimentConfig{});
  bool ok = ds.size() == 387 && mci_total == 222 && folds.size() == 10;
  std::vector<int> seen(ds.size(), 0);
  std::size_t min_n = ds.size(), max_n = 0;
  int min_pos = 1 << 30, max_pos = 0;
  for (const FoldSplit& f : folds) {
    int pos = 0;
    for (std::size_t i : f.validation) {
      ++seen[i];
      pos += ds.samples[i].label == CognitiveLabel::MCI;
    }
    std::set<std::size_t> train(f.train.begin(), f.train.end());
    for (std::size_t i : f.validation) ok = ok && !train.contains(i);
    ok = ok && train.size() + f.validation.size() == ds.size();
    min_n = std::min(min_n, f.validation.size());
    max_n = std::max(max_n, f.validation.size());
    min_pos = std::min(min_pos, pos);
    max_pos = std::max(max_pos, pos);
  }
  for (int s : seen) ok = ok && s == 1;
  ok = ok && min_n >= 38 && max_n <= 39 && min_pos >= 22 && max_pos <= 23;
  return {ok, fmt("%zu samples (%d MCI), fold sizes %zu-%zu, positives %d-%d", ds.size(), mci_total, min_n, max_n,
                  min_pos, max_pos)};
}

Outcome determinism(const std::string& cli, const fs::path& work) {
  if (cli.empty()) return {false, "no --cli given"};
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = (dir / "data").string();
  if (run_cli(cli, "synth -o \"" + data + "\" --seed 11 --dims speech=16,acoustic=8,text=16,image=16",
              dir / "synth.log") != 0) {
    return {false, "synth failed, see " + (dir / "synth.log").string()};
  }
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    const fs::path out = dir / ("train" + std::to_string(run));
    const std::string args = "train -d \"" + data + "\" -o \"" + out.string() +
                             "\" --seed 5 --epochs 3 --lr 1e-3 --hidden 32 --projection_dim 16 --jobs " +
                             (run == 0 ? "1" : "4");
    if (run_cli(cli, args, dir / ("train" + std::to_string(run) + ".log")) != 0) {
      return {false, "train failed, see " + (dir / ("train" + std::to_string(run) + ".log")).string()};
    }
    reports[run] = read_file(out / "report.json");
  }
  const bool ok = !reports[0].empty() && reports[0] == reports[1];
  return {ok, fmt("report.json %zu bytes, identical: %s (jobs 1 vs 4)", reports[0].size(), ok ? "yes" : "no")};
}

Outcome claim_a() {
  const auto t = std::chrono::steady_clock::now();
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig synth = small_dims({});
    synth.picture_signal_strength = 4.0;
    synth.seed = seed;
    const Dataset ds = generate_synthetic(synth);
    ExperimentConfig cfg = synthetic_protocol(seed, 20);
    const RunReport cl = run_experiment(ds, cfg);
    cfg.use_cl = false;
    const RunReport no_cl = run_experiment(ds, cfg);
    const double a = cl.mean_separability.value_or(-2.0);
    const double b = no_cl.mean_separability.value_or(-2.0);
    wins += a > b;
    detail += fmt(" %.3f/%.3f", a, b);
  }
  const double secs = elapsed_since(t);
  return {wins >= 4 && secs < 120.0, fmt("CL beats no-CL in %d/5 seeds (cl/no-cl:%s)", wins, detail.c_str())};
}

Outcome claim_b() {
  const auto t = std::chrono::steady_clock::now();
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthConfig synth = small_dims({});
    synth.n_participants = 516;
    synth.n_english = 248;
    synth.n_mci = 296;
    synth.n_english_mci = 164;
    synth.n_male_mci = 116;
    synth.n_male_nc = 84;
    synth.label_signal_strength = 1.0;
    synth.spurious_subgroup_bias = 1.0;
    synth.seed = seed;
    const Dataset ds = generate_synthetic(synth);
    ExperimentConfig cfg = synthetic_protocol(seed, 20);
    cfg.bias_flipped_validation = true;
    cfg.fusion = Fusion::Concat;
    const double concat = disparity(run_experiment(ds, cfg), DisparityAxis::Language);
    cfg.fusion = Fusion::PoE;
    const double poe = disparity(run_experiment(ds, cfg), DisparityAxis::Language);
    wins += poe <= concat;
    detail += fmt(" %.3f/%.3f", poe, concat);
  }
  const double secs = elapsed_since(t);
  return {wins >= 4 && secs < 300.0, fmt("PoE <= Concat in %d/5 seeds (poe/concat:%s)", wins, detail.c_str())};
}

Outcome separable_sanity() {
  SynthConfig synth = small_dims({});
  synth.label_signal_strength = 3.0;
  synth.noise_std = 0.3;
  const Dataset ds = generate_synthetic(synth);
  double worst = 1.0;
  std::string worst_cell;
  for (Fusion fusion : {Fusion::Concat, Fusion::PoE}) {
    for (bool use_cl : {false, true}) {
      for (bool use_image : {false, true}) {
        ExperimentConfig cfg = synthetic_protocol(0, 10);
        cfg.fusion = fusion;
        cfg.use_cl = use_cl;
        cfg.use_image = use_image;
        const double uar = run_experiment(ds, cfg).summary(Subgroup::Both).metrics.uar.value_or(0.0);
        if (uar <= worst) {
          worst = uar;
          worst_cell = std::string(to_string(fusion)) + (use_cl ? "+cl" : "-cl") + (use_image ? "+ie" : "-ie");
        }
      }
    }
  }
  return {worst > 0.9, fmt("8 cells, lowest UAR %.4f (%s)", worst, worst_cell.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli;
  fs::path work = fs::temp_directory_path() / "poesup_acceptance";
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else if (arg == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else {
      std::cerr << "usage: poesup_acceptance [--cli PATH] [--workdir DIR]\n";
      return 2;
    }
  }
  fs::create_directories(work);

  report("gradient-correctness", gradient_correctness);
  report("supcon-oracle-equivalence", supcon_oracle);
  report("worked-values", worked_values);
  report("poe-identities", poe_identities);
  report("stratified-kfold", kfold_counts);
  report("determinism", [&] { return determinism(cli, work); });
  report("claim-a-cl-separability", claim_a);
  report("claim-b-poe-disparity", claim_b);
  report("separable-data-sanity", separable_sanity);

  std::printf("%s: %d failing criteria\n", failures == 0 ? "OK" : "FAILED", failures);
  return failures == 0 ? 0 : 1;
}
