// Command-line front end: closed-loop runs, weighting search, and mode
// comparisons, with CSV/JSON artifacts for external plotting.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hcbf/config_io.hpp"
#include "hcbf/sim.hpp"
#include "hcbf/trace_io.hpp"
#include "hcbf/tuner.hpp"

namespace fs = std::filesystem;
using hcbf::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBlowup = 3;
constexpr int kExitIo = 4;

// Collects emitted files and their content hashes into manifest.json.
class OutputDir {
 public:
  explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {}

  bool prepare() {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    return !ec && fs::is_directory(dir_);
  }

  bool write(const std::string& rel, const std::string& content) {
    const fs::path p = dir_ / rel;
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    std::ofstream os(p, std::ios::binary);
    if (!os) return false;
    os << content;
    os.flush();
    if (!os) return false;
    entries_.push_back({rel, hcbf::hash_hex(content)});
    return true;
  }

  bool write_manifest(json extra) {
    json m;
    m["output_dir"] = dir_.string();
    m["files"] = json::array();
    for (const auto& [rel, hash] : entries_)
      m["files"].push_back({{"path", rel}, {"fnv1a64", hash}});
    for (auto& [k, v] : extra.items()) m[k] = v;
    const fs::path p = dir_ / "manifest.json";
    std::ofstream os(p, std::ios::binary);
    if (!os) return false;
    os << m.dump(2) << '\n';
    return static_cast<bool>(os);
  }

 private:
  fs::path dir_;
  std::vector<std::pair<std::string, std::string>> entries_;
};

fs::path resolve_outdir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("HCBF_OUT_DIR")) return env;
  return "hcbf-out";
}

std::optional<json> load_config(const std::string& path, std::string& err) {
  std::ifstream is(path);
  if (!is) {
    err = "cannot open config file '" + path + "'";
    return std::nullopt;
  }
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    err = std::string("config parse error: ") + e.what();
    return std::nullopt;
  }
}

// Scenario resolution: the config's scenario block (if any) merged on top of
// an optional --scenario catalog selection.
int resolve_scenario(const std::string& config_path, const std::string& name,
                     const std::string& mode, hcbf::ScenarioConfig& out) {
  json block = json::object();
  if (!config_path.empty()) {
    std::string err;
    const auto cfg = load_config(config_path, err);
    if (!cfg) {
      std::cerr << err << '\n';
      return kExitConfig;
    }
    if (cfg->contains("scenario")) block = cfg->at("scenario");
  }
  if (!name.empty()) block["builtin"] = name;
  if (block.empty()) {
    std::cerr << "no scenario given: pass a config file or --scenario\n";
    return kExitConfig;
  }
  try {
    out = hcbf::scenario_from_json(block);
    if (!mode.empty()) out.filter.mode = hcbf::mode_from_string(mode);
    out.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid scenario: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

bool emit_run_outputs(OutputDir& out, const hcbf::SimTrace& trace,
                      const hcbf::ScenarioConfig& sc,
                      const hcbf::TuneWeights& weights) {
  if (!out.write("trace.csv", hcbf::trace_csv(trace, sc))) return false;
  if (!out.write("summary.json",
                 hcbf::summary_to_json(trace, sc, weights).dump(2) + "\n"))
    return false;
  if (!out.write("plotdata/trajectory.csv", hcbf::plot_trajectory_csv(trace)))
    return false;
  if (!out.write("plotdata/barriers.csv",
                 hcbf::plot_barriers_csv(trace, sc.filter.barrier_count())))
    return false;
  if (!out.write("plotdata/tracking_error.csv", hcbf::plot_error_csv(trace)))
    return false;
  return true;
}

int cmd_run(const std::string& config_path, const std::string& scenario_name,
            const std::string& mode, const std::string& out_flag) {
  hcbf::ScenarioConfig sc;
  if (const int rc = resolve_scenario(config_path, scenario_name, mode, sc))
    return rc;

  OutputDir out(resolve_outdir(out_flag));
  if (!out.prepare()) {
    std::cerr << "cannot create output directory\n";
    return kExitIo;
  }

  hcbf::TuneWeights weights;  // summary cost uses the default Eq-style weights
  json meta;
  meta["command"] = "run";
  meta["config"] = config_path;
  meta["scenario"] = hcbf::scenario_to_json(sc);

  try {
    const hcbf::SimTrace trace = hcbf::run_scenario(sc);
    if (!emit_run_outputs(out, trace, sc, weights) || !out.write_manifest(meta)) {
      std::cerr << "failed writing outputs\n";
      return kExitIo;
    }
    std::cout << "run complete: " << trace.records.size() << " records, "
              << "final error " << hcbf::format_double(trace.summary.final_error)
              << '\n';
    return kExitOk;
  } catch (const hcbf::NumericalBlowup& blow) {
    std::cerr << "simulation aborted: " << blow.what() << '\n';
    out.write("trace.csv", hcbf::trace_csv(blow.partial, sc));
    out.write("summary.json",
              hcbf::summary_to_json(blow.partial, sc, weights).dump(2) + "\n");
    out.write_manifest(meta);
    return kExitBlowup;
  }
}

int cmd_tune(const std::string& config_path, const std::string& out_flag) {
  std::string err;
  const auto cfg = load_config(config_path, err);
  if (!cfg) {
    std::cerr << err << '\n';
    return kExitConfig;
  }
  hcbf::TuneConfig tc;
  try {
    if (!cfg->contains("scenario"))
      throw hcbf::InvalidConfig("tune config needs a scenario block");
    const hcbf::ScenarioConfig base =
        hcbf::scenario_from_json(cfg->at("scenario"));
    tc = hcbf::tune_from_json(cfg->value("tune", json::object()), base);
    tc.validate();
  } catch (const std::exception& e) {
    std::cerr << "invalid tune config: " << e.what() << '\n';
    return kExitConfig;
  }

  OutputDir out(resolve_outdir(out_flag));
  if (!out.prepare()) {
    std::cerr << "cannot create output directory\n";
    return kExitIo;
  }

  const hcbf::TuneReport rep = hcbf::tune(tc);

  hcbf::ScenarioConfig best = tc.base;
  best.filter.schedules = {
      hcbf::WeightSchedule{rep.best_pair(0), rep.best_pair(1)}};
  json best_file;
  best_file["scenario"] = hcbf::scenario_to_json(best);

  json meta;
  meta["command"] = "tune";
  meta["config"] = config_path;
  meta["tune"] = hcbf::tune_to_json(tc);

  const auto& map_rows = rep.costmap.empty() ? rep.samples : rep.costmap;
  if (!out.write("tune_report.json", hcbf::tune_report_to_json(rep).dump(2) + "\n") ||
      !out.write("costmap.csv", hcbf::costmap_csv(map_rows)) ||
      !out.write("best_scenario.json", best_file.dump(2) + "\n") ||
      !out.write_manifest(meta)) {
    std::cerr << "failed writing outputs\n";
    return kExitIo;
  }
  std::cout << "tune complete: best (gamma0, delta_gamma) = ("
            << hcbf::format_double(rep.best_pair(0)) << ", "
            << hcbf::format_double(rep.best_pair(1)) << ")\n";
  return kExitOk;
}

int cmd_compare(const std::string& config_path, const std::string& scenario_name,
                const std::string& modes_csv, const std::string& out_flag) {
  std::vector<std::string> mode_names;
  std::string cur;
  for (char c : modes_csv) {
    if (c == ',') {
      if (!cur.empty()) mode_names.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) mode_names.push_back(cur);
  if (mode_names.size() < 2) {
    std::cerr << "--modes needs at least two comma-separated modes\n";
    return kExitConfig;
  }

  hcbf::ScenarioConfig base;
  if (const int rc = resolve_scenario(config_path, scenario_name, "", base))
    return rc;

  std::vector<hcbf::FilterMode> modes;
  for (const auto& m : mode_names) {
    try {
      modes.push_back(hcbf::mode_from_string(m));
    } catch (const std::exception& e) {
      std::cerr << e.what() << '\n';
      return kExitConfig;
    }
  }

  OutputDir out(resolve_outdir(out_flag));
  if (!out.prepare()) {
    std::cerr << "cannot create output directory\n";
    return kExitIo;
  }

  hcbf::TuneWeights weights;
  json runs = json::array();
  bool io_ok = true;
  for (size_t i = 0; i < modes.size(); ++i) {
    hcbf::ScenarioConfig sc = base;
    sc.filter.mode = modes[i];
    try {
      sc.validate();
    } catch (const std::exception& e) {
      std::cerr << "mode '" << mode_names[i] << "' invalid here: " << e.what()
                << '\n';
      return kExitConfig;
    }
    try {
      const hcbf::SimTrace trace = hcbf::run_scenario(sc);
      json block = hcbf::summary_to_json(trace, sc, weights);
      runs.push_back(block);
      const std::string tag = std::to_string(i) + "_" + mode_names[i];
      io_ok = io_ok &&
              out.write("plotdata/" + tag + "_trajectory.csv",
                        hcbf::plot_trajectory_csv(trace)) &&
              out.write("plotdata/" + tag + "_error.csv",
                        hcbf::plot_error_csv(trace)) &&
              out.write("plotdata/" + tag + "_barriers.csv",
                        hcbf::plot_barriers_csv(trace, sc.filter.barrier_count()));
    } catch (const hcbf::NumericalBlowup& blow) {
      std::cerr << "mode '" << mode_names[i] << "' aborted: " << blow.what()
                << '\n';
      return kExitBlowup;
    }
  }

  json cmp;
  cmp["scenario"] = base.name;
  cmp["runs"] = runs;
  json meta;
  meta["command"] = "compare";
  meta["config"] = config_path;
  meta["modes"] = mode_names;
  if (!io_ok || !out.write("comparison.json", cmp.dump(2) + "\n") ||
      !out.write_manifest(meta)) {
    std::cerr << "failed writing outputs\n";
    return kExitIo;
  }
  std::cout << "compare complete: " << modes.size() << " runs\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical CBF safety-filter simulator"};
  app.require_subcommand(1);

  std::string config_path, scenario_name, mode, out_flag, modes_csv;

  auto* run = app.add_subcommand("run", "simulate one scenario");
  run->add_option("config", config_path, "JSON config file");
  run->add_option("--scenario", scenario_name, "builtin scenario name");
  run->add_option("--mode", mode, "filter mode override");
  run->add_option("--out", out_flag, "output directory");

  auto* tune = app.add_subcommand("tune", "search (gamma0, delta_gamma)");
  tune->add_option("config", config_path, "JSON config file")->required();
  tune->add_option("--out", out_flag, "output directory");

  auto* compare = app.add_subcommand("compare", "run several modes side by side");
  compare->add_option("config", config_path, "JSON config file");
  compare->add_option("--scenario", scenario_name, "builtin scenario name");
  compare->add_option("--modes", modes_csv, "comma-separated mode list")
      ->required();
  compare->add_option("--out", out_flag, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) return cmd_run(config_path, scenario_name, mode, out_flag);
  if (tune->parsed()) return cmd_tune(config_path, out_flag);
  if (compare->parsed())
    return cmd_compare(config_path, scenario_name, modes_csv, out_flag);
  return kExitConfig;
}
