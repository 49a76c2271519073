// Batch front-end: phtopo <spectrum|loop-class|features|sweep|models> --config run.json

#include "phtopo/config.hpp"
#include "phtopo/errors.hpp"
#include "phtopo/io.hpp"
#include "phtopo/parallel.hpp"
#include "phtopo/registry.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace phtopo;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string out;
  int threads = default_threads();
  std::string resolution;
};

RunConfig load(const Options& o) {
  if (o.config.empty()) throw ConfigError("--config is required");
  RunConfig c = load_config(o.config);
  if (!o.out.empty()) c.output = o.out;
  if (!o.resolution.empty()) {
    int nx = 0, ny = 0;
    char comma = 0;
    std::istringstream s(o.resolution);
    if (!(s >> nx >> comma >> ny) || comma != ',' || !s.eof())
      throw ConfigError("--resolution expects NX,NY");
    if (nx < 32 || ny < 32) throw ConfigError("resolution must be at least 32 per axis");
    c.nx = nx;
    c.ny = ny;
  }
  if (o.threads < 1) throw ConfigError("--threads must be positive");
  return c;
}

json model_block(const RunConfig& c, const BlochModel& m) {
  return {{"name", c.model},
          {"params", m.params},
          {"topology", std::string(to_string(m.topology))},
          {"dimension", m.dimension}};
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  f << content;
}

fs::path output_dir(const RunConfig& c) {
  fs::path dir(c.output);
  fs::create_directories(dir);
  return dir;
}

int cmd_spectrum(const Options& o) {
  const RunConfig c = load(o);
  check_keys(c.task, {}, "spectrum task");
  const BlochModel m = c.build_model();
  const GridScan gs = scan(m, c.scan_options(o.threads));
  std::ostringstream csv;
  write_spectrum_csv(csv, gs);
  const fs::path dir = output_dir(c);
  write_file(dir / "spectrum.csv", csv.str());
  std::cout << "spectrum: " << gs.nx << "x" << gs.ny << " nodes, " << gs.dim << " bands -> "
            << (dir / "spectrum.csv").string() << "\n";
  return 0;
}

int cmd_loop_class(const Options& o) {
  const RunConfig c = load(o);
  check_keys(c.task, {"loop", "loops", "e_ref", "windings"}, "loop-class task");
  std::vector<LoopSpec> specs;
  if (c.task.contains("loop")) specs.push_back(parse_loop(c.task["loop"]));
  if (c.task.contains("loops")) {
    if (!c.task["loops"].is_array()) throw ConfigError("loops must be a list");
    for (const auto& l : c.task["loops"]) specs.push_back(parse_loop(l));
  }
  if (specs.empty()) throw ConfigError("loop-class task needs a loop");
  std::optional<cd> e_ref;
  if (c.task.contains("e_ref") && !c.task["e_ref"].is_null()) e_ref = complex_from_json(c.task["e_ref"]);
  const bool windings = c.task.value("windings", true);

  const BlochModel m = c.build_model();
  const TrackOptions topt = c.track_options();
  std::vector<TrackedBands> tracked;
  json loops = json::array();
  for (const auto& s : specs) {
    const LoopPath path = build_loop(s, m.topology);
    TrackOptions t = topt;
    t.n_steps = s.n_steps;
    tracked.push_back(track_loop(m, path, t));
    LoopClass lc = classify(tracked.back());
    if (windings) lc.windings = winding_numbers(m, path, e_ref, t).windings;
    loops.push_back(to_json(lc, tracked.back()));
  }
  json out = loops[0];
  out["model"] = model_block(c, m);
  if (specs.size() > 1) {
    LoopClass total = compose_loops(tracked[0], tracked[1]);
    for (std::size_t k = 2; k < tracked.size(); ++k) {
      total.permutation = compose(total.permutation, tracked[k].permutation);
      total.cycles = permutation_cycles(total.permutation);
      total.cycle_type = cycle_type(total.permutation);
    }
    out["loops"] = loops;
    out["composed"] = {{"cycle_type", total.cycle_type}, {"permutation", total.permutation}, {"cycles", total.cycles}};
    out["cycle_type"] = total.cycle_type;
    out["permutation"] = total.permutation;
  }
  const fs::path dir = output_dir(c);
  write_file(dir / "loop_class.json", dump_json(out));
  for (std::size_t k = 0; k < tracked.size(); ++k) {
    std::ostringstream csv;
    write_trajectory_csv(csv, tracked[k]);
    write_file(dir / (k == 0 ? std::string("trajectory.csv") : "trajectory_" + std::to_string(k + 1) + ".csv"), csv.str());
  }
  std::cout << "cycle_type: " << out["cycle_type"].get<std::string>() << "\n";
  for (const auto& w : out["windings"]) std::cout << "winding: W=" << w["W"] << " C=" << w["C"] << "\n";
  return 0;
}

int cmd_features(const Options& o) {
  const RunConfig c = load(o);
  check_keys(c.task, {"trace_cuts"}, "features task");
  const bool cuts = c.task.value("trace_cuts", true);
  const BlochModel m = c.build_model();
  const GridScan gs = scan(m, c.scan_options(o.threads));
  const FeatureSet fset = extract_features(gs, c.feature_options(), cuts);
  json out = to_json(fset);
  out["model"] = model_block(c, m);
  out["grid"] = {{"nx", gs.nx}, {"ny", gs.ny}, {"flagged_cells", gs.flagged_count()}};
  const fs::path dir = output_dir(c);
  write_file(dir / "features.json", dump_json(out));
  int real = 0, imag = 0;
  for (const auto& p : fset.phls) (p.kind == PHLKind::Real ? real : imag)++;
  std::cout << "eps: " << fset.eps.size() << "\n";
  for (const auto& [pair, count] : ep_count_by_pair(fset.eps))
    std::cout << "  bands " << pair.first << "-" << pair.second << ": " << count << "\n";
  std::cout << "real_phls: " << real << "\n"
            << "imag_phls: " << imag << "\n"
            << "branch_cuts: " << fset.branch_cuts.size() << "\n"
            << "exceptional_lines: " << fset.exceptional_lines.size() << "\n"
            << "census: " << out["census"].get<std::string>() << "\n";
  for (const auto& w : fset.warnings) std::cerr << "warning: " << w << "\n";
  return 0;
}

int cmd_sweep(const Options& o) {
  const RunConfig c = load(o);
  const SweepSpec spec = parse_sweep(c, o.threads);
  const SweepResult r = run_sweep(spec);
  json out = to_json(r);
  out["parameter"] = spec.parameter;
  const fs::path dir = output_dir(c);
  write_file(dir / "sweep.json", dump_json(out));
  std::ostringstream csv;
  write_sweep_csv(csv, r);
  write_file(dir / "sweep.csv", csv.str());
  int invalid = 0;
  for (const auto& s : r.samples) invalid += !s.valid;
  std::cout << "samples: " << r.samples.size() << " (" << invalid << " invalid)\n";
  for (const auto& t : r.transitions)
    std::cout << "transition: " << spec.parameter << " = " << format_double(t.value) << "  " << t.description << "\n";
  return 0;
}

int cmd_models() {
  std::cout << dump_json(registry_json());
  return 0;
}

int exit_code(const Error& e) {
  switch (e.family()) {
  case Error::Family::Config:
    return 2;
  case Error::Family::Numerical:
    return 3;
  case Error::Family::Invariant:
    return 4;
  }
  return 4;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Hermitian multiband topology: spectra, loop classes, features and sweeps"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_option("--threads", o.threads, "worker threads");
    sub->add_option("--resolution", o.resolution, "grid size NX,NY");
  };
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues on the grid -> spectrum.csv");
  auto* loop = app.add_subcommand("loop-class", "band exchange class and windings of loops -> loop_class.json");
  auto* features = app.add_subcommand("features", "EPs, PHLs and branch cuts -> features.json");
  auto* sweep = app.add_subcommand("sweep", "one-parameter sweep with bisection -> sweep.json, sweep.csv");
  auto* models = app.add_subcommand("models", "list registered models and their parameters");
  for (auto* s : {spectrum, loop, features, sweep}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*spectrum) return cmd_spectrum(o);
    if (*loop) return cmd_loop_class(o);
    if (*features) return cmd_features(o);
    if (*sweep) return cmd_sweep(o);
    if (*models) return cmd_models();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
