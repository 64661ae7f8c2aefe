#include "lexdiff/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/parallel.hpp"
#include "lexdiff/rng.hpp"

namespace lexdiff {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Plan

void ExperimentPlan::validate() const {
  if (words.empty()) throw InputError("experiment plan has no words");
  std::set<std::string> seen;
  std::map<fs::path, std::string> dirs;
  for (const auto& w : words) {
    if (w.empty()) throw InputError("experiment plan has an empty word name");
    if (!seen.insert(w).second) throw InputError("word " + w + " is listed twice");
    auto [it, fresh] = dirs.emplace(trial_file(w, Mode::network_identity, 0).begin()->native(), w);
    if (!fresh) throw InputError("words " + it->second + " and " + w + " map to the same results directory");
  }
  if (modes.empty()) throw InputError("experiment plan has no modes");
  std::set<Mode> seen_modes(modes.begin(), modes.end());
  if (seen_modes.size() != modes.size()) throw InputError("a mode is listed twice");
  if (trials < 1) throw InputError("trials per word must be at least 1");
  simulation.validate();
  for (const auto& [w, s] : stickiness) {
    if (!(s >= 0.0 && s <= 1.0)) throw InputError("stickiness of " + w + " must lie in [0,1]");
  }
  const auto& c = calibration;
  if (!(c.multiplier > 0.0)) throw InputError("usage multiplier must be positive");
  if (c.trials_per_cell < 1) throw InputError("calibration needs at least one trial per cell");
  if (!(c.sample_fraction > 0.0 && c.sample_fraction <= 1.0)) throw InputError("sample fraction must lie in (0,1]");
  if (c.grid.size() == 0) throw InputError("global tuning grids must be nonempty");
  if (c.stickiness_grid.empty()) throw InputError("stickiness grid must be nonempty");
  const auto& e = evaluation;
  if (e.neighbors < 1) throw InputError("neighbourhood size must be positive");
  if (e.block_length < 1) throw InputError("block length must be positive");
  if (!(e.empirical_block_length > 0.0)) throw InputError("empirical block length must be positive");
  if (e.lag < 1) throw InputError("pathway lag must be positive");
  if (!(e.ci_level > 0.0 && e.ci_level < 1.0)) throw InputError("confidence level must lie in (0,1)");
  if (e.regions < 1) throw InputError("at least one region component is needed");
}

namespace {

json simulation_json(const SimulationConfig& s) {
  return {{"q", s.q},
          {"r", s.r},
          {"theta", s.theta},
          {"stickiness", s.stickiness},
          {"min_iterations", s.min_iterations},
          {"stop_window", s.stop_window},
          {"stop_growth", s.stop_growth},
          {"max_iterations", s.max_iterations}};
}

json plan_json(const ExperimentPlan& p) {
  json modes = json::array();
  for (Mode m : p.modes) modes.push_back(std::string(to_string(m)));
  json stick = json::object();
  for (const auto& [w, s] : p.stickiness) stick[w] = s;
  const auto& c = p.calibration;
  const auto& e = p.evaluation;
  return {{"words", p.words},
          {"modes", modes},
          {"trials", p.trials},
          {"seed", p.seed},
          {"simulation", simulation_json(p.simulation)},
          {"stickiness", stick},
          {"calibration",
           {{"tune_global", c.tune_global},
            {"tune_stickiness", c.tune_stickiness},
            {"multiplier", c.multiplier},
            {"trials_per_cell", c.trials_per_cell},
            {"sample_fraction", c.sample_fraction},
            {"q_grid", c.grid.q},
            {"r_grid", c.grid.r},
            {"theta_grid", c.grid.theta},
            {"stickiness_grid", c.stickiness_grid}}},
          {"evaluation",
           {{"neighbors", e.neighbors},
            {"block_length", e.block_length},
            {"empirical_block_length", e.empirical_block_length},
            {"lag", e.lag},
            {"min_edges", e.min_edges},
            {"bootstrap", e.bootstrap},
            {"ci_level", e.ci_level},
            {"regions", e.regions}}}};
}

template <typename T>
void read_field(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw InputError(where + "." + key + " has the wrong type");
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
      throw InputError("unknown key " + where + "." + key);
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : "NA"; }

std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string ExperimentPlan::to_json() const { return plan_json(*this).dump(2) + "\n"; }

std::string ExperimentPlan::digest() const { return hex64(fnv1a64(plan_json(*this).dump())); }

ExperimentPlan parse_plan(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("plan is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("plan must be a JSON object");
  reject_unknown(doc, {"words", "modes", "trials", "seed", "simulation", "stickiness", "calibration", "evaluation", "plan_digest"},
                 "plan");
  ExperimentPlan p;
  read_field(doc, "words", p.words, "plan");
  if (doc.contains("modes")) {
    std::vector<std::string> names;
    read_field(doc, "modes", names, "plan");
    p.modes.clear();
    for (const auto& n : names) p.modes.push_back(parse_mode(n));
  }
  read_field(doc, "trials", p.trials, "plan");
  read_field(doc, "seed", p.seed, "plan");
  if (doc.contains("simulation")) {
    const auto& s = doc["simulation"];
    reject_unknown(s, {"q", "r", "theta", "stickiness", "min_iterations", "stop_window", "stop_growth", "max_iterations"},
                   "simulation");
    auto& c = p.simulation;
    read_field(s, "q", c.q, "simulation");
    read_field(s, "r", c.r, "simulation");
    read_field(s, "theta", c.theta, "simulation");
    read_field(s, "stickiness", c.stickiness, "simulation");
    read_field(s, "min_iterations", c.min_iterations, "simulation");
    read_field(s, "stop_window", c.stop_window, "simulation");
    read_field(s, "stop_growth", c.stop_growth, "simulation");
    read_field(s, "max_iterations", c.max_iterations, "simulation");
  }
  read_field(doc, "stickiness", p.stickiness, "plan");
  if (doc.contains("calibration")) {
    const auto& s = doc["calibration"];
    reject_unknown(s, {"tune_global", "tune_stickiness", "multiplier", "trials_per_cell", "sample_fraction", "q_grid",
                       "r_grid", "theta_grid", "stickiness_grid"},
                   "calibration");
    auto& c = p.calibration;
    read_field(s, "tune_global", c.tune_global, "calibration");
    read_field(s, "tune_stickiness", c.tune_stickiness, "calibration");
    read_field(s, "multiplier", c.multiplier, "calibration");
    read_field(s, "trials_per_cell", c.trials_per_cell, "calibration");
    read_field(s, "sample_fraction", c.sample_fraction, "calibration");
    read_field(s, "q_grid", c.grid.q, "calibration");
    read_field(s, "r_grid", c.grid.r, "calibration");
    read_field(s, "theta_grid", c.grid.theta, "calibration");
    read_field(s, "stickiness_grid", c.stickiness_grid, "calibration");
  }
  if (doc.contains("evaluation")) {
    const auto& s = doc["evaluation"];
    reject_unknown(s, {"neighbors", "block_length", "empirical_block_length", "lag", "min_edges", "bootstrap", "ci_level",
                       "regions"},
                   "evaluation");
    auto& e = p.evaluation;
    read_field(s, "neighbors", e.neighbors, "evaluation");
    read_field(s, "block_length", e.block_length, "evaluation");
    read_field(s, "empirical_block_length", e.empirical_block_length, "evaluation");
    read_field(s, "lag", e.lag, "evaluation");
    read_field(s, "min_edges", e.min_edges, "evaluation");
    read_field(s, "bootstrap", e.bootstrap, "evaluation");
    read_field(s, "ci_level", e.ci_level, "evaluation");
    read_field(s, "regions", e.regions, "evaluation");
  }
  p.validate();
  return p;
}

std::uint64_t adoption_seed(std::uint64_t plan_seed, const std::string& word, std::size_t trial) {
  return derive_seed(plan_seed, {fnv1a64("adopt"), fnv1a64(word), trial});
}

std::uint64_t shuffle_seed(std::uint64_t plan_seed, std::size_t trial) {
  return derive_seed(plan_seed, {fnv1a64("shuffle"), trial});
}

Interval bootstrap_mean(const std::vector<double>& values, std::size_t resamples, double level, std::uint64_t seed) {
  if (values.empty()) throw InputError("cannot summarise an empty sample");
  Interval out;
  out.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  out.low = out.high = out.mean;
  if (resamples == 0 || values.size() < 2) return out;
  CounterRng rng(seed, 0x424F4F54ULL);
  std::vector<double> means(resamples);
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) s += values[rng.below(values.size())];
    m = s / static_cast<double>(values.size());
  }
  std::sort(means.begin(), means.end());
  const double alpha = (1.0 - level) / 2.0;
  auto pick = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, resamples - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  out.low = pick(alpha);
  out.high = pick(1.0 - alpha);
  return out;
}

fs::path trial_file(const std::string& word, Mode mode, std::size_t trial) {
  std::string safe;
  for (char c : word) safe += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  if (safe.empty() || safe == "." || safe == "..") safe = "_" + safe;
  return fs::path(safe) / std::string(to_string(mode)) / ("trial_" + std::to_string(trial) + ".json");
}

// ---------------------------------------------------------------------------
// Running

namespace {

std::string what_of(const std::exception& e) { return e.what(); }

std::vector<double> county_totals(const std::vector<std::vector<std::uint32_t>>& per_iteration, std::size_t counties) {
  std::vector<double> out(counties, 0.0);
  for (const auto& row : per_iteration) {
    for (std::size_t c = 0; c < counties; ++c) out[c] += row[c];
  }
  return out;
}

}  // namespace

ExperimentResults run_experiment(const ExperimentPlan& plan, const WorldBundle& world, const ExperimentOptions& options) {
  plan.validate();
  ExperimentResults res;
  res.plan = plan;
  res.digest = plan.digest();
  const std::size_t threads = options.threads;

  std::vector<const WordSeed*> words;
  for (const auto& w : plan.words) {
    const WordSeed* ws = world.find_word(w);
    if (ws == nullptr) {
      res.failures.push_back(JobFailure{w, "", std::nullopt, "plan", "word not found in the world's seed file"});
    } else {
      words.push_back(ws);
    }
  }

  // Calibration.
  SimulationConfig sim = plan.simulation;
  sim.mode = Mode::network_identity;
  CalibrationSettings cal;
  cal.trials_per_cell = plan.calibration.trials_per_cell;
  cal.seed = derive_seed(plan.seed, {fnv1a64("calibration")});
  cal.threads = threads;
  auto target_for = [&](const WordSeed& ws) -> std::optional<CalibrationTarget> {
    auto it = world.usage.find(ws.word);
    if (it == world.usage.end()) return std::nullopt;
    CalibrationTarget t;
    t.word = ws.word;
    t.seeds = ws.seeds;
    t.empirical_uses = static_cast<double>(it->second.size());
    t.multiplier = plan.calibration.multiplier;
    if (auto s = plan.stickiness.find(ws.word); s != plan.stickiness.end()) t.stickiness = s->second;
    return t;
  };
  if (plan.calibration.tune_global) {
    try {
      std::vector<CalibrationTarget> targets;
      for (const WordSeed* ws : words) {
        if (auto t = target_for(*ws)) targets.push_back(std::move(*t));
      }
      if (targets.empty()) throw InputError("global tuning needs words with usage logs");
      std::vector<CalibrationTarget> sample;
      for (std::size_t i : sample_indices(targets.size(), plan.calibration.sample_fraction,
                                          derive_seed(plan.seed, {fnv1a64("sample")}))) {
        sample.push_back(targets[i]);
      }
      cal.base = sim;
      res.global_calibration = tune_global(sample, world.graph, world.identities, plan.calibration.grid, cal);
      sim.q = res.global_calibration->q;
      sim.r = res.global_calibration->r;
      sim.theta = res.global_calibration->theta;
    } catch (const std::exception& e) {
      res.failures.push_back(JobFailure{"", "", std::nullopt, "tune_global", what_of(e)});
    }
  }
  for (const WordSeed* ws : words) {
    double s = sim.stickiness;
    if (auto it = plan.stickiness.find(ws->word); it != plan.stickiness.end()) {
      s = it->second;
    } else if (plan.calibration.tune_stickiness) {
      try {
        auto t = target_for(*ws);
        if (!t) throw InputError("no usage log to tune against");
        cal.base = sim;
        auto tuned = tune_stickiness(*t, world.graph, world.identities, plan.calibration.stickiness_grid, cal);
        s = tuned.stickiness;
        res.stickiness_calibration.push_back(std::move(tuned));
      } catch (const std::exception& e) {
        res.failures.push_back(JobFailure{ws->word, "", std::nullopt, "tune_stickiness", what_of(e)});
      }
    }
    res.stickiness[ws->word] = s;
  }

  // One rewired graph per trial, shared by the shuffled-graph modes.
  const bool any_shuffled = std::any_of(plan.modes.begin(), plan.modes.end(), uses_shuffled_graph);
  std::vector<std::optional<ShuffleResult>> shuffled(plan.trials);
  std::vector<std::string> shuffle_errors(plan.trials);
  if (any_shuffled) {
    parallel_for(plan.trials, threads, [&](std::size_t t) {
      try {
        shuffled[t] = shuffle_network(world.graph, shuffle_seed(plan.seed, t));
      } catch (const std::exception& e) {
        shuffle_errors[t] = what_of(e);
      }
    });
  }

  // Jobs in plan order: word, mode, trial.
  const std::size_t nm = plan.modes.size(), nt = plan.trials;
  const std::size_t jobs = words.size() * nm * nt;
  std::vector<std::optional<TrialRecord>> records(jobs);
  std::vector<std::optional<JobFailure>> job_failures(jobs);
  RunOptions run_options;
  run_options.counties = &world.counties;
  run_options.keep_adopters = false;
  parallel_for(jobs, threads, [&](std::size_t j) {
    const WordSeed& ws = *words[j / (nm * nt)];
    const Mode mode = plan.modes[(j / nt) % nm];
    const std::size_t trial = j % nt;
    try {
      SimulationConfig c = sim;
      c.mode = mode;
      c.stickiness = res.stickiness.at(ws.word);
      c.seed = adoption_seed(plan.seed, ws.word, trial);
      c.shuffle_seed = shuffle_seed(plan.seed, trial);
      const SocialGraph* g = &world.graph;
      std::size_t unresolved = 0;
      if (uses_shuffled_graph(mode)) {
        if (!shuffled[trial]) throw InternalError("shuffle failed: " + shuffle_errors[trial]);
        g = &shuffled[trial]->graph;
        unresolved = shuffled[trial]->unresolved;
      }
      auto log = run_on_graph(c, *g, &world.identities, ws.seeds, run_options);
      TrialRecord r;
      r.word = ws.word;
      r.mode = mode;
      r.trial = trial;
      r.config = c;
      r.seeds = log.seeds;
      r.total_uses = log.total_uses;
      r.termination = log.termination;
      r.shuffle_unresolved = unresolved;
      r.adopter_counts = std::move(log.adopter_counts);
      r.county_uses = std::move(log.county_uses);
      records[j] = std::move(r);
    } catch (const std::exception& e) {
      job_failures[j] = JobFailure{ws.word, std::string(to_string(mode)), trial, "simulate", what_of(e)};
    }
  });
  for (std::size_t j = 0; j < jobs; ++j) {
    if (records[j]) res.trials.push_back(std::move(*records[j]));
    if (job_failures[j]) res.failures.push_back(std::move(*job_failures[j]));
  }

  evaluate_experiment(res, world, threads);
  if (options.out_dir) {
    write_trial_files(res, world, *options.out_dir);
    write_summary_files(res, world, *options.out_dir);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Evaluation

void evaluate_experiment(ExperimentResults& res, const WorldBundle& world, std::size_t threads) {
  const ExperimentPlan& plan = res.plan;
  const auto& ev = plan.evaluation;
  const std::size_t nc = world.counties.num_counties();
  // Evaluation failures are recomputed from scratch.
  std::erase_if(res.failures, [](const JobFailure& f) { return f.stage == "evaluate" || f.stage == "pathways" ||
                                                                f.stage == "likelihood" || f.stage == "regression" ||
                                                                f.stage == "regions"; });

  res.map_counties = populated_counties(world.counties);
  const SpatialWeights weights = knn_weights(world.counties, res.map_counties, ev.neighbors);

  // Empirical maps.
  std::map<std::string, SpatialDistribution> empirical_maps;
  std::map<std::string, std::vector<double>> empirical_rates;
  for (const auto& word : plan.words) {
    auto it = world.usage.find(word);
    if (it == world.usage.end() || it->second.empty()) continue;
    std::vector<double> totals(nc, 0.0);
    for (const Use& u : it->second) totals[world.counties.county_of(u.agent)] += 1.0;
    auto agg = aggregate(totals, world.counties, true);
    empirical_rates[word] = agg.distribution.values;
    empirical_maps[word] = getis_ord_smooth(agg.distribution, weights);
  }

  // Per-trial maps and Lee's L.
  std::vector<std::string> errors(res.trials.size());
  parallel_for(res.trials.size(), threads, [&](std::size_t k) {
    TrialRecord& r = res.trials[k];
    r.lee_l.reset();
    r.similarity.reset();
    try {
      auto agg = aggregate(county_totals(r.county_uses, nc), world.counties, true);
      const auto smoothed = getis_ord_smooth(agg.distribution, weights);
      r.map_degenerate = smoothed.degenerate;
      auto it = empirical_maps.find(r.word);
      if (it != empirical_maps.end()) {
        r.lee_l = lees_l(smoothed, it->second, weights);
        if (r.lee_l) r.similarity = classify_similarity(*r.lee_l);
      }
    } catch (const std::exception& e) {
      errors[k] = what_of(e);
    }
  });
  for (std::size_t k = 0; k < errors.size(); ++k) {
    if (errors[k].empty()) continue;
    const auto& r = res.trials[k];
    res.failures.push_back(JobFailure{r.word, std::string(to_string(r.mode)), r.trial, "evaluate", errors[k]});
  }

  auto bootstrap_seed = [&](const std::string& word, Mode mode) {
    return derive_seed(plan.seed, {fnv1a64("bootstrap"), fnv1a64(word), static_cast<std::uint64_t>(mode)});
  };

  // Per (word, mode) summaries.
  res.word_summaries.clear();
  for (const auto& word : plan.words) {
    for (Mode mode : plan.modes) {
      WordModeSummary s;
      s.word = word;
      s.mode = mode;
      std::vector<double> ls;
      double uses = 0.0;
      for (const auto& r : res.trials) {
        if (r.word != word || r.mode != mode) continue;
        ++s.trials;
        uses += static_cast<double>(r.total_uses);
        if (r.lee_l) {
          ls.push_back(*r.lee_l);
          s.broadly_similar += *r.lee_l >= kBroadlySimilar;
          s.very_similar += *r.lee_l >= kVerySimilar;
        }
      }
      if (s.trials == 0) continue;
      s.mean_uses = uses / static_cast<double>(s.trials);
      if (!ls.empty()) s.lee_l = bootstrap_mean(ls, ev.bootstrap, ev.ci_level, bootstrap_seed(word, mode));
      res.word_summaries.push_back(std::move(s));
    }
  }

  // Pathways.
  std::vector<CountyType> types(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    types[c] = classify_county(world.counties.county(static_cast<CountyIndex>(c)).urbanized_population);
  }
  const auto edge_counts = county_edge_counts(world.graph, world.counties);
  const auto& agents = world.counties.agent_counts();

  res.empirical_pathways.reset();
  if (!empirical_maps.empty()) {
    try {
      SpatialTimeSeries series{nc, {}};
      for (const auto& word : plan.words) {
        auto it = world.usage.find(word);
        if (it == world.usage.end() || it->second.empty()) continue;
        series.segments.push_back(block_series(county_uses_from_usage(it->second, world.counties, ev.empirical_block_length),
                                               agents, 1));
      }
      res.empirical_pathways = build_pathways(series, edge_counts, types, ev.lag, ev.min_edges);
    } catch (const std::exception& e) {
      res.failures.push_back(JobFailure{"", "empirical", std::nullopt, "pathways", what_of(e)});
    }
  }

  res.pathways.clear();
  res.mode_summaries.clear();
  for (Mode mode : plan.modes) {
    ModeSummary ms;
    ms.mode = mode;
    const std::string mode_name(to_string(mode));
    std::vector<double> ls;
    SpatialTimeSeries series{nc, {}};
    for (const auto& r : res.trials) {
      if (r.mode != mode) continue;
      ++ms.trials;
      if (r.lee_l) ls.push_back(*r.lee_l);
      if (!r.county_uses.empty()) series.segments.push_back(block_series(r.county_uses, agents, ev.block_length));
    }
    if (!ls.empty()) {
      ms.lee_l = bootstrap_mean(ls, ev.bootstrap, ev.ci_level, bootstrap_seed("", mode));
      std::size_t broad = 0, very = 0;
      for (double l : ls) {
        broad += l >= kBroadlySimilar;
        very += l >= kVerySimilar;
      }
      ms.broadly_similar_share = static_cast<double>(broad) / static_cast<double>(ls.size());
      ms.very_similar_share = static_cast<double>(very) / static_cast<double>(ls.size());
    }
    if (!series.segments.empty()) {
      try {
        auto matrix = build_pathways(series, edge_counts, types, ev.lag, ev.min_edges);
        ms.pathways = matrix.pathways.size();
        if (res.empirical_pathways) {
          ms.shared_pathways = align_pathways(*res.empirical_pathways, matrix).empirical.size();
          try {
            ms.likelihood = pathway_likelihood(*res.empirical_pathways, matrix);
            ms.likelihood_urban_urban = pathway_likelihood(*res.empirical_pathways, matrix, PairType::urban_urban);
            ms.likelihood_rural_rural = pathway_likelihood(*res.empirical_pathways, matrix, PairType::rural_rural);
            ms.likelihood_urban_rural = pathway_likelihood(*res.empirical_pathways, matrix, PairType::urban_rural);
          } catch (const std::exception& e) {
            res.failures.push_back(JobFailure{"", mode_name, std::nullopt, "likelihood", what_of(e)});
          }
        }
        res.pathways.emplace(mode, std::move(matrix));
      } catch (const std::exception& e) {
        res.failures.push_back(JobFailure{"", mode_name, std::nullopt, "pathways", what_of(e)});
      }
    }
    res.mode_summaries.push_back(std::move(ms));
  }

  // Empirical pathway strength against the network-only and identity-only models.
  res.regression.reset();
  auto no = res.pathways.find(Mode::network_only);
  auto io = res.pathways.find(Mode::identity_only);
  if (res.empirical_pathways && no != res.pathways.end() && io != res.pathways.end()) {
    try {
      std::vector<double> dep, tn, ti;
      std::vector<PairType> pt;
      for (const auto& p : res.empirical_pathways->pathways) {
        const Pathway* a = no->second.find(p.from, p.to);
        const Pathway* b = io->second.find(p.from, p.to);
        if (a == nullptr || b == nullptr) continue;
        dep.push_back(p.tau);
        tn.push_back(a->tau);
        ti.push_back(b->tau);
        pt.push_back(p.type);
      }
      PathwayRegressionOptions ro;
      ro.ols.bootstrap = ev.bootstrap;
      ro.ols.ci_level = ev.ci_level;
      ro.ols.seed = derive_seed(plan.seed, {fnv1a64("regression")});
      res.regression = pathway_regression(dep, tn, ti, pt, ro);
    } catch (const std::exception& e) {
      res.failures.push_back(JobFailure{"", "", std::nullopt, "regression", what_of(e)});
    }
  }

  // Regions of the empirical per-capita maps.
  res.regions.reset();
  if (empirical_rates.size() >= 2) {
    try {
      std::vector<std::vector<double>> m;
      for (const auto& word : plan.words) {
        if (auto it = empirical_rates.find(word); it != empirical_rates.end()) m.push_back(it->second);
      }
      res.regions = principal_regions(m, ev.regions);
    } catch (const std::exception& e) {
      res.failures.push_back(JobFailure{"", "", std::nullopt, "regions", what_of(e)});
    }
  }
}

// ---------------------------------------------------------------------------
// Files

namespace {

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("failed writing " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tsv_header(const ExperimentResults& res) {
  return "# plan_digest=" + res.digest + "\tseed=" + std::to_string(res.plan.seed) + "\n";
}

json trial_json(const TrialRecord& r, const ExperimentResults& res, const WorldBundle& world) {
  json seeds = json::array();
  for (AgentId a : r.seeds) seeds.push_back(world.agent_ids.at(a));
  json config = simulation_json(r.config);
  config["mode"] = std::string(to_string(r.mode));
  config["seed"] = r.config.seed;
  config["shuffle_seed"] = r.config.shuffle_seed;
  return {{"plan_digest", res.digest},
          {"plan_seed", res.plan.seed},
          {"word", r.word},
          {"mode", std::string(to_string(r.mode))},
          {"trial", r.trial},
          {"config", config},
          {"seeds", seeds},
          {"termination", std::string(to_string(r.termination))},
          {"iterations", r.iterations()},
          {"total_uses", r.total_uses},
          {"shuffle_unresolved", r.shuffle_unresolved},
          {"adopter_counts", r.adopter_counts},
          {"county_uses", r.county_uses}};
}

}  // namespace

void write_trial_files(const ExperimentResults& res, const WorldBundle& world, const fs::path& dir) {
  json plan = json::parse(res.plan.to_json());
  plan["plan_digest"] = res.digest;
  write_text(dir / "plan.json", plan.dump(2) + "\n");
  for (const auto& r : res.trials) {
    write_text(dir / trial_file(r.word, r.mode, r.trial), trial_json(r, res, world).dump() + "\n");
  }
}

void write_summary_files(const ExperimentResults& res, const WorldBundle& world, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string head = tsv_header(res);

  std::string s = head + "word\tmode\ttrial\tadoption_seed\tshuffle_seed\tstickiness\ttotal_uses\titerations\ttermination\tlee_l\tsimilarity\n";
  for (const auto& r : res.trials) {
    s += r.word + "\t" + std::string(to_string(r.mode)) + "\t" + std::to_string(r.trial) + "\t" + std::to_string(r.config.seed) +
         "\t" + (uses_shuffled_graph(r.mode) ? std::to_string(r.config.shuffle_seed) : "NA") + "\t" + fmt(r.config.stickiness) +
         "\t" + std::to_string(r.total_uses) + "\t" + std::to_string(r.iterations()) + "\t" +
         std::string(to_string(r.termination)) + "\t" + fmt(r.lee_l) + "\t" +
         (r.similarity ? std::string(to_string(*r.similarity)) : "NA") + "\n";
  }
  write_text(dir / "trials.tsv", s);

  s = head + "word\tmode\ttrials\tmean_uses\tlee_l_mean\tlee_l_low\tlee_l_high\tbroadly_similar\tvery_similar\n";
  for (const auto& w : res.word_summaries) {
    s += w.word + "\t" + std::string(to_string(w.mode)) + "\t" + std::to_string(w.trials) + "\t" + fmt(w.mean_uses) + "\t" +
         (w.lee_l ? fmt(w.lee_l->mean) + "\t" + fmt(w.lee_l->low) + "\t" + fmt(w.lee_l->high) : "NA\tNA\tNA") + "\t" +
         std::to_string(w.broadly_similar) + "\t" + std::to_string(w.very_similar) + "\n";
  }
  write_text(dir / "summary.tsv", s);

  s = head +
      "mode\ttrials\tlee_l_mean\tlee_l_low\tlee_l_high\tbroadly_similar_share\tvery_similar_share\tpathways\tshared_pathways\t"
      "likelihood\tlikelihood_urban_urban\tlikelihood_rural_rural\tlikelihood_urban_rural\n";
  for (const auto& m : res.mode_summaries) {
    s += std::string(to_string(m.mode)) + "\t" + std::to_string(m.trials) + "\t" +
         (m.lee_l ? fmt(m.lee_l->mean) + "\t" + fmt(m.lee_l->low) + "\t" + fmt(m.lee_l->high) : "NA\tNA\tNA") + "\t" +
         fmt(m.broadly_similar_share) + "\t" + fmt(m.very_similar_share) + "\t" + std::to_string(m.pathways) + "\t" +
         std::to_string(m.shared_pathways) + "\t" + fmt(m.likelihood) + "\t" + fmt(m.likelihood_urban_urban) + "\t" +
         fmt(m.likelihood_rural_rural) + "\t" + fmt(m.likelihood_urban_rural) + "\n";
  }
  write_text(dir / "modes.tsv", s);

  auto pathway_table = [&](const PathwayMatrix& m) {
    std::string t = head + "from\tto\ttau\tedges\ttype\n";
    for (const auto& p : m.pathways) {
      t += world.counties.county(p.from).fips + "\t" + world.counties.county(p.to).fips + "\t" + fmt(p.tau) + "\t" +
           std::to_string(p.edge_count) + "\t" + std::string(to_string(p.type)) + "\n";
    }
    return t;
  };
  if (res.empirical_pathways) write_text(dir / "pathways_empirical.tsv", pathway_table(*res.empirical_pathways));
  for (const auto& [mode, m] : res.pathways) {
    write_text(dir / ("pathways_" + std::string(to_string(mode)) + ".tsv"), pathway_table(m));
  }

  if (res.regression) {
    const auto& f = *res.regression;
    s = head + "# observations=" + std::to_string(f.observations) + "\tr_squared=" + fmt(f.r_squared) +
        "\tbootstrap=" + std::to_string(f.bootstrap_resamples) + "\n";
    s += "term\tcoefficient\tstd_error\tci_low\tci_high\n";
    for (std::size_t k = 0; k < f.names.size(); ++k) {
      s += f.names[k] + "\t" + fmt(f.coefficients[k]) + "\t" + fmt(f.std_errors[k]) + "\t" +
           (f.ci_low.empty() ? "NA\tNA" : fmt(f.ci_low[k]) + "\t" + fmt(f.ci_high[k])) + "\n";
    }
    write_text(dir / "regression.tsv", s);
  }

  if (res.regions) {
    s = head;
    for (const auto& w : res.regions->warnings) s += "# warning: " + w + "\n";
    s += "component\texplained_variance";
    for (CountyIndex c : res.map_counties) s += "\t" + world.counties.county(c).fips;
    s += "\n";
    for (std::size_t k = 0; k < res.regions->loadings.size(); ++k) {
      s += std::to_string(k + 1) + "\t" + fmt(res.regions->explained_variance_ratio[k]);
      for (double v : res.regions->loadings[k]) s += "\t" + fmt(v);
      s += "\n";
    }
    write_text(dir / "regions.tsv", s);
  }

  if (res.global_calibration || !res.stickiness_calibration.empty()) {
    json doc{{"plan_digest", res.digest}, {"plan_seed", res.plan.seed}};
    if (res.global_calibration) doc["global"] = json::parse(to_json(*res.global_calibration));
    json words = json::array();
    for (const auto& c : res.stickiness_calibration) words.push_back(json::parse(to_json(c)));
    doc["stickiness"] = words;
    write_text(dir / "calibration.json", doc.dump(2) + "\n");
  }

  s = head + "word\tmode\ttrial\tstage\tmessage\n";
  for (const auto& f : res.failures) {
    std::string msg = f.message;
    std::replace(msg.begin(), msg.end(), '\t', ' ');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    s += (f.word.empty() ? "NA" : f.word) + "\t" + (f.mode.empty() ? "NA" : f.mode) + "\t" +
         (f.trial ? std::to_string(*f.trial) : "NA") + "\t" + f.stage + "\t" + msg + "\n";
  }
  write_text(dir / "failures.tsv", s);
}

std::string adoption_log_json(const AdoptionLog& log, const WorldBundle& world, const std::string& word) {
  json config = simulation_json(log.config);
  config["mode"] = std::string(to_string(log.config.mode));
  config["seed"] = log.config.seed;
  config["shuffle_seed"] = log.config.shuffle_seed;
  json seeds = json::array();
  for (AgentId a : log.seeds) seeds.push_back(world.agent_ids.at(a));
  json by_county = json::array();
  for (const auto& row : log.county_uses) {
    json it = json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] > 0) it[world.counties.county(static_cast<CountyIndex>(c)).fips] = row[c];
    }
    by_county.push_back(it);
  }
  json doc{{"word", word},
           {"config", config},
           {"seeds", seeds},
           {"termination", std::string(to_string(log.termination))},
           {"iterations", log.iterations()},
           {"total_uses", log.total_uses},
           {"shuffle_unresolved", log.shuffle_unresolved},
           {"adopter_counts", log.adopter_counts},
           {"county_uses", by_county}};
  if (log.word_identity) {
    json regs = json::array();
    for (std::size_t m = 0; m < log.word_identity->registers.size(); ++m) {
      if (log.word_identity->registers[m]) regs.push_back(world.schema().register_label(m));
    }
    doc["word_identity"] = regs;
  }
  return doc.dump(1) + "\n";
}

ExperimentResults load_results(const fs::path& dir, const WorldBundle& world) {
  ExperimentResults res;
  res.plan = parse_plan(read_text(dir / "plan.json"));
  res.digest = res.plan.digest();
  std::unordered_map<std::string, AgentId> ids;
  for (std::size_t a = 0; a < world.agent_ids.size(); ++a) ids.emplace(world.agent_ids[a], static_cast<AgentId>(a));
  const std::size_t nc = world.counties.num_counties();
  for (const auto& word : res.plan.words) {
    for (Mode mode : res.plan.modes) {
      for (std::size_t t = 0; t < res.plan.trials; ++t) {
        const fs::path path = dir / trial_file(word, mode, t);
        try {
          if (!fs::exists(path)) throw InputError("missing trial file " + path.string());
          const json doc = json::parse(read_text(path));
          if (doc.at("plan_digest").get<std::string>() != res.digest) {
            throw InputError(path.string() + " belongs to a different plan");
          }
          TrialRecord r;
          r.word = word;
          r.mode = mode;
          r.trial = t;
          const auto& c = doc.at("config");
          r.config.mode = mode;
          r.config.q = c.at("q").get<double>();
          r.config.r = c.at("r").get<double>();
          r.config.theta = c.at("theta").get<std::uint32_t>();
          r.config.stickiness = c.at("stickiness").get<double>();
          r.config.min_iterations = c.at("min_iterations").get<std::uint32_t>();
          r.config.stop_window = c.at("stop_window").get<std::uint32_t>();
          r.config.stop_growth = c.at("stop_growth").get<double>();
          r.config.max_iterations = c.at("max_iterations").get<std::uint32_t>();
          r.config.seed = c.at("seed").get<std::uint64_t>();
          r.config.shuffle_seed = c.at("shuffle_seed").get<std::uint64_t>();
          for (const auto& s : doc.at("seeds")) {
            auto it = ids.find(s.get<std::string>());
            if (it == ids.end()) throw InputError(path.string() + " names unknown agent " + s.get<std::string>());
            r.seeds.push_back(it->second);
          }
          r.termination = doc.at("termination").get<std::string>() == "converged" ? Termination::converged
                                                                                  : Termination::truncated;
          r.total_uses = doc.at("total_uses").get<std::uint64_t>();
          r.shuffle_unresolved = doc.at("shuffle_unresolved").get<std::size_t>();
          r.adopter_counts = doc.at("adopter_counts").get<std::vector<std::uint32_t>>();
          r.county_uses = doc.at("county_uses").get<std::vector<std::vector<std::uint32_t>>>();
          for (const auto& row : r.county_uses) {
            if (row.size() != nc) throw InputError(path.string() + " has county rows of the wrong width");
          }
          res.stickiness[word] = r.config.stickiness;
          res.trials.push_back(std::move(r));
        } catch (const json::exception& e) {
          res.failures.push_back(JobFailure{word, std::string(to_string(mode)), t, "load", path.string() + ": " + e.what()});
        } catch (const std::exception& e) {
          res.failures.push_back(JobFailure{word, std::string(to_string(mode)), t, "load", e.what()});
        }
      }
    }
  }
  return res;
}

}  // namespace lexdiff
