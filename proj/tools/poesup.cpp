// poesup: synthetic data, cross-validated training, ablations and gradient checks.
//
// Exit codes: 0 success, 1 verification or runtime failure, 2 input error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "poesup/config.hpp"
#include "poesup/csv_import.hpp"
#include "poesup/dataset.hpp"
#include "poesup/errors.hpp"
#include "poesup/gradcheck_suite.hpp"
#include "poesup/report.hpp"
#include "poesup/synth.hpp"
#include "poesup/trainer.hpp"

namespace fs = std::filesystem;
using namespace poesup;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitInput = 2;

constexpr double kGradCheckLimit = 1e-5;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path manifest_path(const fs::path& data) {
  return fs::is_directory(data) ? data / std::string(kManifestFileName) : data;
}

Dataset load_or_die(const fs::path& data) {
  LoadedDataset loaded = load_dataset(manifest_path(data));
  for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  return std::move(loaded.dataset);
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// ---------------------------------------------------------------------------
// Experiment configuration flags

struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<CLI::Option*> options;
};

void add_config_flags(CLI::App& cmd, ConfigFlags& flags) {
  cmd.add_option("-c,--config", flags.config_path, "Experiment config (.json or .toml); flags override it");
  const ExperimentConfig defaults;
  for (const ConfigField& f : config_fields()) {
    const std::string name(f.name);
    std::string help(f.help);
    help += " [default: " + get_config_field(defaults, f.name) + "]";
    CLI::Option* opt = nullptr;
    if (f.is_bool) {
      opt = cmd.add_flag("--" + name + "{true}", flags.values[name], help + " (use --" + name + "=false to disable)");
    } else {
      opt = cmd.add_option("--" + name, flags.values[name], help);
    }
    opt->group("Experiment config");
    flags.options.push_back(opt);
  }
}

ExperimentConfig resolve_config(const ConfigFlags& flags) {
  ExperimentConfig cfg = flags.config_path.empty() ? ExperimentConfig{} : load_config(flags.config_path);
  for (const ConfigField& f : config_fields()) {
    const std::string name(f.name);
    for (const CLI::Option* opt : flags.options) {
      if (opt->get_single_name() == name && opt->count() > 0) set_config_field(cfg, name, flags.values.at(name));
    }
  }
  validate(cfg);
  return cfg;
}

unsigned resolve_jobs(const std::optional<unsigned>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("POE_SUPCON_JOBS"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (*end != '\0') throw InputError(std::string("POE_SUPCON_JOBS must be a non-negative integer, got '") + env + "'");
    return static_cast<unsigned>(v);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Console tables

void print_summary(std::ostream& out, const RunReport& report) {
  out << std::left << std::setw(8) << "group" << std::right << std::setw(6) << "n" << std::setw(10) << "UAR"
      << std::setw(10) << "F1" << std::setw(10) << "sens" << std::setw(10) << "spec" << std::setw(10) << "prec"
      << '\n';
  for (const SubgroupSummary& s : report.aggregate) {
    out << std::left << std::setw(8) << to_string(s.subgroup) << std::right << std::setw(6) << s.size
        << std::setw(10) << format_metric(s.metrics.uar, 4) << std::setw(10) << format_metric(s.metrics.f1, 4)
        << std::setw(10) << format_metric(s.metrics.sensitivity, 4) << std::setw(10)
        << format_metric(s.metrics.specificity, 4) << std::setw(10) << format_metric(s.metrics.precision, 4)
        << '\n';
  }
  for (DisparityAxis axis : {DisparityAxis::Language, DisparityAxis::Gender}) {
    out << (axis == DisparityAxis::Language ? "disparity En/Zh: " : "disparity M/F:   ");
    try {
      out << format_metric(disparity(report, axis), 4) << '\n';
    } catch (const std::domain_error&) {
      out << "n/a\n";
    }
  }
  out << "picture separability: " << format_metric(report.mean_separability, 4) << '\n';
}

void print_synth_summary(std::ostream& out, const Dataset& ds) {
  struct Counts {
    int nc = 0;
    int mci = 0;
  };
  std::map<std::string, Counts> samples;
  std::map<std::string, std::map<std::string, CognitiveLabel>> participants;
  for (const Sample& s : ds.samples) {
    for (const std::string& key : {std::string(to_string(s.language)), std::string(to_string(s.gender)),
                                   std::string("total")}) {
      (s.label == CognitiveLabel::MCI ? samples[key].mci : samples[key].nc)++;
      participants[key][s.participant_id] = s.label;
    }
  }
  out << std::left << std::setw(8) << "group" << std::right << std::setw(10) << "speakers" << std::setw(8) << "NC"
      << std::setw(8) << "MCI" << std::setw(10) << "samples" << std::setw(8) << "NC" << std::setw(8) << "MCI"
      << '\n';
  for (const std::string key : {"En", "Zh", "M", "F", "total"}) {
    int p_nc = 0;
    int p_mci = 0;
    for (const auto& [id, label] : participants[key]) (label == CognitiveLabel::MCI ? p_mci : p_nc)++;
    const Counts c = samples[key];
    out << std::left << std::setw(8) << key << std::right << std::setw(10) << p_nc + p_mci << std::setw(8) << p_nc
        << std::setw(8) << p_mci << std::setw(10) << c.nc + c.mci << std::setw(8) << c.nc << std::setw(8) << c.mci
        << '\n';
  }
  out << "modalities:";
  for (const auto& [m, block] : ds.blocks) out << ' ' << to_string(m) << '(' << block.dim() << ')';
  out << '\n';
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config_path;
  std::string out_dir;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
};

SynthConfig resolve_synth(const SynthArgs& args) {
  using nlohmann::json;
  json doc = args.config_path.empty() ? json::object() : json::parse(read_text(args.config_path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw InputError(args.config_path + ": not a JSON object");
  auto number = [](const std::string& key, const std::string& text) {
    try {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return v;
    } catch (const std::exception&) {
      throw InputError("--" + key + ": expected a number, got '" + text + "'");
    }
  };
  for (const auto& [key, opt] : args.options) {
    if (opt->count() == 0) continue;
    const std::string& text = args.values.at(key);
    if (key == "spurious_language") {
      doc[key] = text;
    } else if (key == "spurious_modalities") {
      json list = json::array();
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) list.push_back(item);
      doc[key] = list;
    } else if (key == "dims") {
      json dims = json::object();
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw InputError("--dims: expected modality=dim pairs, got '" + item + "'");
        dims[item.substr(0, eq)] = static_cast<int>(number(key, item.substr(eq + 1)));
      }
      doc[key] = dims;
    } else if (key == "seed") {
      try {
        doc[key] = std::stoull(text);
      } catch (const std::exception&) {
        throw InputError("--seed: expected a non-negative integer, got '" + text + "'");
      }
    } else if (key.rfind("n_", 0) == 0) {
      doc[key] = static_cast<int>(number(key, text));
    } else {
      doc[key] = number(key, text);
    }
  }
  SynthConfig cfg = synth_config_from_json(doc.dump());
  validate(cfg);
  return cfg;
}

int cmd_synth(const SynthArgs& args) {
  const SynthConfig cfg = resolve_synth(args);
  const Dataset ds = generate_synthetic(cfg);
  make_out_dir(args.out_dir);
  write_dataset(ds, args.out_dir);
  write_text(fs::path(args.out_dir) / "synth_config.json", synth_config_to_json(cfg));
  print_synth_summary(std::cout, ds);
  std::cout << "wrote " << (fs::path(args.out_dir) / std::string(kManifestFileName)).string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  ConfigFlags config;
  std::string data;
  std::string out_dir;
  std::string label = "run";
  std::optional<unsigned> jobs;
  bool no_checkpoints = false;
};

int cmd_train(const TrainArgs& args) {
  const ExperimentConfig cfg = resolve_config(args.config);
  const Dataset ds = load_or_die(args.data);
  std::vector<Checkpoint> checkpoints;
  RunOptions opts{resolve_jobs(args.jobs), args.label, args.no_checkpoints ? nullptr : &checkpoints};
  const RunReport report = run_experiment(ds, cfg, opts);

  const fs::path out(args.out_dir);
  make_out_dir(out);
  write_text(out / "report.json", report_to_json(report));
  write_text(out / "report.csv", reports_to_csv(std::span(&report, 1)));
  write_text(out / "fold_uar.tsv", fold_uar_tsv(report));
  if (!args.no_checkpoints) {
    make_out_dir(out / "checkpoints");
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      char stem[32];
      std::snprintf(stem, sizeof stem, "fold_%02zu", i);
      write_checkpoint(out / "checkpoints" / stem, checkpoints[i]);
    }
  }
  print_summary(std::cout, report);
  std::cout << "wrote " << (out / "report.json").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string report_path;
  std::string data;
  std::string out_dir;
  bool pooled = false;
};

int cmd_eval(const EvalArgs& args) {
  RunReport report = report_from_json(read_text(args.report_path));
  const Dataset ds = load_or_die(args.data);
  rescore(report, ds, args.pooled ? Aggregation::Pooled : Aggregation::Mean);
  print_summary(std::cout, report);
  if (!args.out_dir.empty()) {
    const fs::path out(args.out_dir);
    make_out_dir(out);
    write_text(out / "eval.json", report_to_json(report));
    write_text(out / "eval.csv", reports_to_csv(std::span(&report, 1)));
    write_text(out / "eval_fold_uar.tsv", fold_uar_tsv(report));
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// ablate

struct AblateArgs {
  ConfigFlags config;
  std::string data;
  std::string out_dir;
  std::optional<unsigned> jobs;
};

std::string cell_label(const ExperimentConfig& cfg) {
  return std::string(to_string(cfg.fusion)) + (cfg.use_cl ? "+cl" : "-cl") + (cfg.use_image ? "+ie" : "-ie");
}

std::string delta(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a || !b) return "n/a";
  return format_metric(*a - *b);
}

int cmd_ablate(const AblateArgs& args) {
  const ExperimentConfig base = resolve_config(args.config);
  const Dataset ds = load_or_die(args.data);
  const fs::path out(args.out_dir);
  make_out_dir(out / "cells");

  std::vector<RunReport> reports;
  for (Fusion fusion : {Fusion::Concat, Fusion::PoE}) {
    for (bool use_cl : {false, true}) {
      for (bool use_image : {false, true}) {
        ExperimentConfig cfg = base;
        cfg.fusion = fusion;
        cfg.use_cl = use_cl;
        cfg.use_image = use_image;
        validate(cfg);
        const std::string label = cell_label(cfg);
        std::cerr << "running " << label << '\n';
        RunReport report = run_experiment(ds, cfg, RunOptions{resolve_jobs(args.jobs), label, nullptr});
        write_text(out / "cells" / (label + ".json"), report_to_json(report));
        reports.push_back(std::move(report));
      }
    }
  }

  // reports[0] is concat-cl-ie by construction of the loops above.
  const RunReport& baseline = reports.front();
  std::ostringstream csv;
  csv << "label,fusion,use_cl,use_image,subgroup,size,uar,f1,sensitivity,specificity,precision,"
         "delta_uar,delta_f1,note\n";
  for (const RunReport& r : reports) {
    const bool single_expert = effective_modalities(r.config).size() == 1;
    for (const SubgroupSummary& s : r.aggregate) {
      const MetricSet& b = baseline.summary(s.subgroup).metrics;
      csv << r.label << ',' << to_string(r.config.fusion) << ',' << (r.config.use_cl ? "true" : "false") << ','
          << (r.config.use_image ? "true" : "false") << ',' << to_string(s.subgroup) << ',' << s.size << ','
          << format_metric(s.metrics.uar) << ',' << format_metric(s.metrics.f1) << ','
          << format_metric(s.metrics.sensitivity) << ',' << format_metric(s.metrics.specificity) << ','
          << format_metric(s.metrics.precision) << ',' << delta(s.metrics.uar, b.uar) << ','
          << delta(s.metrics.f1, b.f1) << ',' << (single_expert ? "PoE = Concat (single modality)" : "") << '\n';
    }
  }
  write_text(out / "ablation.csv", csv.str());

  std::cout << std::left << std::setw(16) << "cell" << std::right << std::setw(10) << "UAR" << std::setw(10)
            << "dUAR" << std::setw(10) << "F1" << std::setw(10) << "dF1" << std::setw(12) << "disp En/Zh" << '\n';
  for (const RunReport& r : reports) {
    const MetricSet& m = r.summary(Subgroup::Both).metrics;
    const MetricSet& b = baseline.summary(Subgroup::Both).metrics;
    std::string disp = "n/a";
    try {
      disp = format_metric(disparity(r, DisparityAxis::Language), 4);
    } catch (const std::domain_error&) {
    }
    std::cout << std::left << std::setw(16) << r.label << std::right << std::setw(10) << format_metric(m.uar, 4)
              << std::setw(10) << delta(m.uar, b.uar).substr(0, 7) << std::setw(10) << format_metric(m.f1, 4)
              << std::setw(10) << delta(m.f1, b.f1).substr(0, 7) << std::setw(12) << disp;
    if (effective_modalities(r.config).size() == 1) std::cout << "  (PoE = Concat: single modality)";
    std::cout << '\n';
  }
  std::cout << "wrote " << (out / "ablation.csv").string() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

int cmd_gradcheck(const GradCheckSuiteOptions& opts) {
  const std::vector<GradCheckRow> rows = run_gradcheck_suite(opts);
  bool ok = true;
  std::cout << std::left << std::setw(20) << "objective" << std::right << std::setw(6) << "point" << std::setw(8)
            << "params" << std::setw(14) << "max rel err" << "  status\n";
  for (const GradCheckRow& r : rows) {
    const bool pass = r.max_relative_error < kGradCheckLimit;
    ok = ok && pass;
    char err[32];
    std::snprintf(err, sizeof err, "%.3e", r.max_relative_error);
    std::cout << std::left << std::setw(20) << r.name << std::right << std::setw(6) << r.point << std::setw(8)
              << r.parameters << std::setw(14) << err << "  " << (pass ? "ok" : "FAIL") << '\n';
  }
  std::cout << (ok ? "all gradients within " : "gradient check failed (limit ") << kGradCheckLimit
            << (ok ? "\n" : ")\n");
  return ok ? kExitOk : kExitFailure;
}

// ---------------------------------------------------------------------------
// convert

struct ConvertArgs {
  std::string samples;
  std::map<Modality, std::string> sidecars;
  std::string out_dir;
};

int cmd_convert(const ConvertArgs& args) {
  CsvImportSpec spec;
  spec.samples_csv = args.samples;
  for (const auto& [m, path] : args.sidecars) {
    if (!path.empty()) spec.embeddings[m] = path;
  }
  if (spec.embeddings.empty()) throw InputError("convert: give at least one embedding CSV (--speech, --text, ...)");
  LoadedDataset loaded = import_csv(spec);
  for (const std::string& w : loaded.warnings) std::cerr << "warning: " << w << '\n';
  make_out_dir(args.out_dir);
  write_dataset(loaded.dataset, args.out_dir);
  std::cout << "converted " << loaded.dataset.size() << " samples into "
            << (fs::path(args.out_dir) / std::string(kManifestFileName)).string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal MCI detection: supervised contrastive heads with Product-of-Experts fusion"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "poesup 0.1.0");

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus with planted structure");
  synth_cmd->add_option("-c,--config", synth.config_path, "Synthetic-data config (JSON)");
  synth_cmd->add_option("-o,--out", synth.out_dir, "Output directory")->required();
  const std::pair<const char*, const char*> synth_fields[] = {
      {"n_participants", "Number of speakers (three picture descriptions each)"},
      {"n_english", "English speakers; the rest are Chinese"},
      {"n_mci", "Speakers labelled MCI"},
      {"n_english_mci", "English speakers labelled MCI"},
      {"n_male_mci", "Male speakers labelled MCI"},
      {"n_male_nc", "Male speakers labelled NC"},
      {"picture_signal_strength", "Scale of the per-picture centroid"},
      {"label_signal_strength", "Scale of the label direction"},
      {"spurious_subgroup_bias", "Scale of the label-correlated shift in the spurious subgroup"},
      {"spurious_language", "Language subgroup carrying the shift (En or Zh)"},
      {"spurious_modalities", "Comma-separated modalities carrying the spurious shift"},
      {"noise_std", "Standard deviation of the isotropic noise (> 0)"},
      {"seed", "Generator seed"},
      {"dims", "Per-modality dims, e.g. speech=384,text=768"},
  };
  for (const auto& [key, help] : synth_fields) {
    synth.options.emplace_back(key, synth_cmd->add_option(std::string("--") + key, synth.values[key], help));
  }

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Cross-validated training; writes reports and checkpoints");
  train_cmd->add_option("-d,--data", train.data, "Dataset directory or manifest path")->required();
  train_cmd->add_option("-o,--out", train.out_dir, "Output directory")->required();
  train_cmd->add_option("--label", train.label, "Run label used in reports");
  train_cmd->add_option("-j,--jobs", train.jobs, "Folds trained in parallel (default: number of folds; env POE_SUPCON_JOBS)");
  train_cmd->add_flag("--no-checkpoints", train.no_checkpoints, "Skip per-fold checkpoints");
  add_config_flags(*train_cmd, train.config);

  EvalArgs eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Re-score a saved report against a dataset");
  eval_cmd->add_option("-r,--report", eval.report_path, "report.json written by train")->required();
  eval_cmd->add_option("-d,--data", eval.data, "Dataset directory or manifest path")->required();
  eval_cmd->add_option("-o,--out", eval.out_dir, "Optional output directory for re-scored reports");
  eval_cmd->add_flag("--pooled", eval.pooled, "Aggregate pooled confusion counts instead of fold means");

  AblateArgs ablate;
  CLI::App* ablate_cmd = app.add_subcommand("ablate", "Run the {Concat,PoE} x {-CL,+CL} x {-IE,+IE} grid");
  ablate_cmd->add_option("-d,--data", ablate.data, "Dataset directory or manifest path")->required();
  ablate_cmd->add_option("-o,--out", ablate.out_dir, "Output directory")->required();
  ablate_cmd->add_option("-j,--jobs", ablate.jobs, "Folds trained in parallel (default: number of folds; env POE_SUPCON_JOBS)");
  add_config_flags(*ablate_cmd, ablate.config);

  GradCheckSuiteOptions gc;
  CLI::App* gc_cmd = app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  gc_cmd->add_option("--seed", gc.seed, "Seed for the random points");
  gc_cmd->add_option("--points", gc.points, "Random points per objective")->check(CLI::PositiveNumber);
  gc_cmd->add_flag("--corrupt-gradient", gc.corrupt_end_to_end)->group("");

  ConvertArgs convert;
  CLI::App* convert_cmd = app.add_subcommand("convert", "Convert CSV embeddings into the binary container format");
  convert_cmd->add_option("--samples", convert.samples, "Sample table CSV")->required();
  for (Modality m : kAllModalities) {
    const std::string name(to_string(m));
    convert_cmd->add_option("--" + name, convert.sidecars[m], "Embedding CSV for " + name);
  }
  convert_cmd->add_option("-o,--out", convert.out_dir, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth);
    if (*train_cmd) return cmd_train(train);
    if (*eval_cmd) return cmd_eval(eval);
    if (*ablate_cmd) return cmd_ablate(ablate);
    if (*gc_cmd) return cmd_gradcheck(gc);
    if (*convert_cmd) return cmd_convert(convert);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}
