#include <cstdio>
#include <filesystem>
#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lexdiff/calibration.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/experiment.hpp"
#include "lexdiff/rng.hpp"
#include "lexdiff/world.hpp"

namespace fs = std::filesystem;
using namespace lexdiff;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

struct Globals {
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::string out_dir = ".";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  WorldParams params;
  bool with_usage = false;
  double usage_stickiness = 0.9;
  double q = 0.75, r = 0.4;
  std::uint32_t theta = 100;
};

int cmd_generate(const Globals& g, GenerateArgs a) {
  a.params.seed = g.seed;
  auto world = generate_world(a.params);
  if (a.with_usage) {
    // Ground truth from the full model.
    for (const auto& w : world.words) {
      SimulationConfig c;
      c.q = a.q;
      c.r = a.r;
      c.theta = a.theta;
      c.stickiness = a.usage_stickiness;
      c.seed = derive_seed(g.seed, {fnv1a64("usage"), fnv1a64(w.word)});
      RunOptions o;
      o.keep_adopters = true;
      world.usage[w.word] = usage_from_log(run(c, world.graph, &world.identities, w.seeds, o));
    }
  }
  write_world(world, g.out_dir);
  std::printf("wrote world to %s: %zu agents, %zu counties, %zu edges, %zu words%s\n", g.out_dir.c_str(),
              world.agent_ids.size(), world.counties.num_counties(), world.graph.num_edges(), world.words.size(),
              a.with_usage ? " with usage logs" : "");
  return kOk;
}

int cmd_validate(const std::string& world_dir) {
  auto world = load_world(world_dir);
  std::size_t uses = 0;
  for (const auto& [w, u] : world.usage) uses += u.size();
  std::printf("ok: %zu agents, %zu counties, %zu edges, %zu identity dimensions, %zu words, %zu usage records\n",
              world.agent_ids.size(), world.counties.num_counties(), world.graph.num_edges(), world.identities.dimension(),
              world.words.size(), uses);
  return kOk;
}

struct SimulateArgs {
  std::string world;
  std::string word;
  std::string mode = "network_identity";
  SimulationConfig config;
  std::uint64_t shuffle_seed = 0;
};

int cmd_simulate(const Globals& g, SimulateArgs a) {
  auto world = load_world(a.world);
  const WordSeed* ws = world.find_word(a.word);
  if (ws == nullptr) throw InputError("word " + a.word + " is not in the seed file");
  SimulationConfig c = a.config;
  c.mode = parse_mode(a.mode);
  c.seed = g.seed;
  c.shuffle_seed = a.shuffle_seed;
  RunOptions o;
  o.counties = &world.counties;
  o.keep_adopters = false;
  auto log = run(c, world.graph, &world.identities, ws->seeds, o);
  const fs::path out = fs::path(g.out_dir) / ("simulate_" + a.word + "_" + a.mode + ".json");
  write_file(out, adoption_log_json(log, world, a.word));
  std::printf("%s %s: %llu uses over %u iterations (%s); log at %s\n", a.word.c_str(), a.mode.c_str(),
              static_cast<unsigned long long>(log.total_uses), log.iterations(),
              std::string(to_string(log.termination)).c_str(), out.string().c_str());
  return kOk;
}

struct TuneArgs {
  std::string world;
  std::string words;
  double multiplier = 10.0;
  std::size_t trials = 3;
  double sample_fraction = 0.2;
  bool skip_global = false;
  bool skip_stickiness = false;
  SimulationConfig base;
};

int cmd_tune(const Globals& g, TuneArgs a) {
  auto world = load_world(a.world);
  std::vector<CalibrationTarget> targets;
  const auto names = a.words.empty() ? std::vector<std::string>{} : split_list(a.words);
  for (const auto& ws : world.words) {
    if (!names.empty() && std::find(names.begin(), names.end(), ws.word) == names.end()) continue;
    auto it = world.usage.find(ws.word);
    if (it == world.usage.end()) continue;
    CalibrationTarget t;
    t.word = ws.word;
    t.seeds = ws.seeds;
    t.empirical_uses = static_cast<double>(it->second.size());
    t.multiplier = a.multiplier;
    targets.push_back(std::move(t));
  }
  if (targets.empty()) throw InputError("no words with usage logs to tune against");

  CalibrationSettings s;
  s.base = a.base;
  s.base.mode = Mode::network_identity;
  s.trials_per_cell = a.trials;
  s.seed = g.seed;
  s.threads = g.threads;
  nlohmann::json report = nlohmann::json::object();
  if (!a.skip_global) {
    std::vector<CalibrationTarget> sample;
    for (std::size_t i : sample_indices(targets.size(), a.sample_fraction, derive_seed(g.seed, {fnv1a64("sample")}))) {
      sample.push_back(targets[i]);
    }
    auto gc = tune_global(sample, world.graph, world.identities, GlobalGrid{}, s);
    std::printf("global: Q=%.2f r=%.2f theta=%u (mse %.6g over %zu words)\n", gc.q, gc.r, gc.theta, gc.mse, sample.size());
    s.base.q = gc.q;
    s.base.r = gc.r;
    s.base.theta = gc.theta;
    report["global"] = nlohmann::json::parse(to_json(gc));
  }
  if (!a.skip_stickiness) {
    const auto grid = default_stickiness_grid();
    nlohmann::json words = nlohmann::json::array();
    for (const auto& t : targets) {
      auto sc = tune_stickiness(t, world.graph, world.identities, grid, s);
      std::printf("%s: S=%.2f (|error| %.6g)\n", t.word.c_str(), sc.stickiness, sc.error);
      words.push_back(nlohmann::json::parse(to_json(sc)));
    }
    report["stickiness"] = words;
  }
  report["seed"] = g.seed;
  const fs::path out = fs::path(g.out_dir) / "calibration.json";
  write_file(out, report.dump(2) + "\n");
  std::printf("report at %s\n", out.string().c_str());
  return kOk;
}

struct EvaluateArgs {
  std::string world;
  std::string results;
};

int cmd_evaluate(const Globals& g, const EvaluateArgs& a, bool pathways_only) {
  auto world = load_world(a.world);
  auto res = load_results(a.results, world);
  evaluate_experiment(res, world, g.threads);
  const fs::path out = g.out_dir == "." ? fs::path(a.results) : fs::path(g.out_dir);
  write_summary_files(res, world, out);
  if (pathways_only) {
    for (const auto& [mode, m] : res.pathways) {
      std::printf("%s: %zu pathways\n", std::string(to_string(mode)).c_str(), m.pathways.size());
    }
    if (res.empirical_pathways) std::printf("empirical: %zu pathways\n", res.empirical_pathways->pathways.size());
  } else {
    for (const auto& m : res.mode_summaries) {
      std::printf("%-17s trials=%zu lee_l=%s likelihood=%s\n", std::string(to_string(m.mode)).c_str(), m.trials,
                  m.lee_l ? std::to_string(m.lee_l->mean).c_str() : "NA",
                  m.likelihood ? std::to_string(*m.likelihood).c_str() : "NA");
    }
  }
  std::printf("tables at %s (%zu failures)\n", out.string().c_str(), res.failures.size());
  return kOk;
}

struct ExperimentArgs {
  std::string world;
  std::string plan;
  std::string words;
  std::string modes;
  std::size_t trials = 0;
};

int cmd_experiment(const Globals& g, const ExperimentArgs& a) {
  auto world = load_world(a.world);
  ExperimentPlan plan;
  if (!a.plan.empty()) {
    plan = parse_plan(read_file(a.plan));
  } else {
    for (const auto& w : world.words) plan.words.push_back(w.word);
  }
  if (!a.words.empty()) plan.words = split_list(a.words);
  if (!a.modes.empty()) {
    plan.modes.clear();
    for (const auto& m : split_list(a.modes)) plan.modes.push_back(parse_mode(m));
  }
  if (a.trials > 0) plan.trials = a.trials;
  plan.seed = g.seed;
  plan.validate();
  ExperimentOptions o;
  o.threads = g.threads;
  o.out_dir = g.out_dir;
  auto res = run_experiment(plan, world, o);
  for (const auto& m : res.mode_summaries) {
    std::printf("%-17s trials=%zu lee_l=%s likelihood=%s\n", std::string(to_string(m.mode)).c_str(), m.trials,
                m.lee_l ? std::to_string(m.lee_l->mean).c_str() : "NA",
                m.likelihood ? std::to_string(*m.likelihood).c_str() : "NA");
  }
  std::printf("plan %s: %zu trials, %zu failures; results in %s\n", res.digest.c_str(), res.trials.size(),
              res.failures.size(), g.out_dir.c_str());
  return kOk;
}

void add_simulation_flags(CLI::App* app, SimulationConfig& c) {
  app->add_option("--q", c.q, "Enregisterment threshold Q")->capture_default_str();
  app->add_option("--r", c.r, "Attention retained per idle iteration")->capture_default_str();
  app->add_option("--theta", c.theta, "Exposures until novelty is gone")->capture_default_str();
  app->add_option("--stickiness", c.stickiness, "Word stickiness S")->capture_default_str();
  app->add_option("--min-iterations", c.min_iterations)->capture_default_str();
  app->add_option("--stop-window", c.stop_window)->capture_default_str();
  app->add_option("--stop-growth", c.stop_growth)->capture_default_str();
  app->add_option("--max-iterations", c.max_iterations)->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Agent-based lexical diffusion: simulate, calibrate and evaluate"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML file mirroring any command-line flag");
  Globals g;
  app.add_option("--seed", g.seed, "Master seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic world bundle");
  generate->add_option("--agents", gen.params.agents)->capture_default_str();
  generate->add_option("--counties", gen.params.counties)->capture_default_str();
  generate->add_option("--words", gen.params.words)->capture_default_str();
  generate->add_option("--seeds-per-word", gen.params.seeds_per_word)->capture_default_str();
  generate->add_option("--homophily", gen.params.homophily)->capture_default_str();
  generate->add_option("--mean-degree", gen.params.mean_degree)->capture_default_str();
  generate->add_option("--tie-length-km", gen.params.tie_length_km)->capture_default_str();
  generate->add_option("--identity-selectivity", gen.params.identity_selectivity)->capture_default_str();
  generate->add_option("--identity-noise", gen.params.identity_noise)->capture_default_str();
  generate->add_flag("--with-usage", gen.with_usage, "Also simulate usage logs with the full model");
  generate->add_option("--usage-stickiness", gen.usage_stickiness)->capture_default_str();
  generate->add_option("--usage-q", gen.q)->capture_default_str();
  generate->add_option("--usage-r", gen.r)->capture_default_str();
  generate->add_option("--usage-theta", gen.theta)->capture_default_str();

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Check a world bundle");
  validate->add_option("--world", validate_dir, "World directory")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run one word in one mode");
  simulate->add_option("--world", sim.world)->required();
  simulate->add_option("--word", sim.word)->required();
  simulate->add_option("--mode", sim.mode)->capture_default_str();
  simulate->add_option("--shuffle-seed", sim.shuffle_seed)->capture_default_str();
  add_simulation_flags(simulate, sim.config);

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "Grid-search Q, r, theta and per-word stickiness");
  tune_cmd->add_option("--world", tune.world)->required();
  tune_cmd->add_option("--words", tune.words, "Comma-separated subset (default: all with usage)");
  tune_cmd->add_option("--multiplier", tune.multiplier)->capture_default_str();
  tune_cmd->add_option("--trials", tune.trials, "Runs per grid cell")->capture_default_str();
  tune_cmd->add_option("--sample-fraction", tune.sample_fraction)->capture_default_str();
  tune_cmd->add_flag("--skip-global", tune.skip_global);
  tune_cmd->add_flag("--skip-stickiness", tune.skip_stickiness);
  add_simulation_flags(tune_cmd, tune.base);

  EvaluateArgs pw;
  auto* pathways = app.add_subcommand("pathways", "Build pathway matrices from a results directory");
  pathways->add_option("--world", pw.world)->required();
  pathways->add_option("--results", pw.results)->required();

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Recompute Lee's L, likelihoods, regression and regions");
  evaluate->add_option("--world", ev.world)->required();
  evaluate->add_option("--results", ev.results)->required();

  ExperimentArgs ex;
  auto* experiment = app.add_subcommand("experiment", "Run a full experiment plan");
  experiment->add_option("--world", ex.world)->required();
  experiment->add_option("--plan", ex.plan, "Plan JSON (default: every word, all modes)");
  experiment->add_option("--words", ex.words, "Comma-separated word override");
  experiment->add_option("--modes", ex.modes, "Comma-separated mode override");
  experiment->add_option("--trials", ex.trials, "Trials per word override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*generate) return cmd_generate(g, gen);
    if (*validate) return cmd_validate(validate_dir);
    if (*simulate) return cmd_simulate(g, sim);
    if (*tune_cmd) return cmd_tune(g, tune);
    if (*pathways) return cmd_evaluate(g, pw, true);
    if (*evaluate) return cmd_evaluate(g, ev, false);
    if (*experiment) return cmd_experiment(g, ex);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "validation failed with %zu problem(s):\n", e.problems().size());
    for (const auto& p : e.problems()) std::fprintf(stderr, "  %s\n", p.c_str());
    return kValidation;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime failure: %s\n", e.what());
    return kRuntime;
  }
  return kRuntime;
}
