#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/experiment.hpp"
#include "lexdiff/rng.hpp"

using namespace lexdiff;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("lexdiff_exp_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Small world whose usage logs come from the full model.
const WorldBundle& world() {
  static const WorldBundle w = [] {
    WorldParams p;
    p.agents = 800;
    p.counties = 25;
    p.words = 3;
    p.seeds_per_word = 6;
    p.mean_degree = 8;
    p.seed = 31;
    auto out = generate_world(p);
    for (const auto& ws : out.words) {
      SimulationConfig c;
      c.stickiness = 0.9;
      c.seed = derive_seed(5, {fnv1a64(ws.word)});
      RunOptions o;
      o.keep_adopters = true;
      out.usage[ws.word] = usage_from_log(run(c, out.graph, &out.identities, ws.seeds, o));
    }
    return out;
  }();
  return w;
}

ExperimentPlan small_plan() {
  ExperimentPlan p;
  p.words = {"w001", "w002"};
  p.trials = 3;
  p.seed = 77;
  p.simulation.stickiness = 0.9;
  p.simulation.max_iterations = 400;
  p.evaluation.bootstrap = 200;
  p.evaluation.regions = 2;
  p.evaluation.neighbors = 5;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_trials(const std::vector<TrialRecord>& a, const std::vector<TrialRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    if (x.word != y.word || x.mode != y.mode || x.trial != y.trial || x.seeds != y.seeds ||
        x.total_uses != y.total_uses || x.termination != y.termination || x.adopter_counts != y.adopter_counts ||
        x.county_uses != y.county_uses || x.config.seed != y.config.seed ||
        x.config.shuffle_seed != y.config.shuffle_seed || x.config.stickiness != y.config.stickiness ||
        x.shuffle_unresolved != y.shuffle_unresolved)
      return false;
  }
  return true;
}

}  // namespace

TEST_CASE("plan validation") {
  ExperimentPlan p;
  CHECK_THROWS_AS(p.validate(), InputError);
  p.words = {"a"};
  CHECK_NOTHROW(p.validate());
  p.trials = 0;
  CHECK_THROWS_AS(p.validate(), InputError);
  p = {};
  p.words = {"a", "a"};
  CHECK_THROWS_AS(p.validate(), InputError);
  p.words = {"a/b", "a_b"};
  CHECK_THROWS_AS(p.validate(), InputError);
  p.words = {"a"};
  p.modes.clear();
  CHECK_THROWS_AS(p.validate(), InputError);
  p.modes = {Mode::null_model, Mode::null_model};
  CHECK_THROWS_AS(p.validate(), InputError);
  p = {};
  p.words = {"a"};
  p.stickiness["a"] = 1.5;
  CHECK_THROWS_AS(p.validate(), InputError);
}

TEST_CASE("plan JSON round-trips and rejects unknown keys") {
  auto p = small_plan();
  p.stickiness["w001"] = 0.42;
  p.modes = {Mode::network_only, Mode::null_model};
  p.calibration.tune_stickiness = true;
  p.calibration.grid.q = {0.8, 0.9};
  const auto back = parse_plan(p.to_json());
  CHECK(back.to_json() == p.to_json());
  CHECK(back.digest() == p.digest());
  CHECK(back.modes == p.modes);
  CHECK(back.stickiness.at("w001") == 0.42);
  auto other = p;
  other.seed += 1;
  CHECK(other.digest() != p.digest());
  CHECK_THROWS_AS(parse_plan(R"({"words":["a"],"tirals":3})"), InputError);
  CHECK_THROWS_AS(parse_plan(R"({"words":["a"],"simulation":{"qq":0.5}})"), InputError);
  CHECK_THROWS_AS(parse_plan(R"({"words":"a"})"), InputError);
  CHECK_THROWS_AS(parse_plan(R"({"words":["a"],"modes":["bogus"]})"), InputError);
  CHECK_THROWS_AS(parse_plan("[1,2"), InputError);
  const auto minimal = parse_plan(R"({"words":["a"]})");
  CHECK(minimal.trials == 5);
  CHECK(minimal.modes.size() == 4);
}

TEST_CASE("one word, five trials, four modes") {
  ExperimentPlan p = small_plan();
  p.words = {"w003"};
  p.trials = 5;
  const auto r = run_experiment(p, world());
  CHECK(r.failures.empty());
  REQUIRE(r.trials.size() == 20);
  std::size_t k = 0;
  for (Mode m : kAllModes)
    for (std::size_t t = 0; t < 5; ++t) {
      CHECK(r.trials[k].word == "w003");
      CHECK(r.trials[k].mode == m);
      CHECK(r.trials[k].trial == t);
      CHECK(r.trials[k].seeds == world().find_word("w003")->seeds);
      CHECK(r.trials[k].total_uses >= r.trials[k].seeds.size());
      ++k;
    }
  REQUIRE(r.mode_summaries.size() == 4);
  for (const auto& m : r.mode_summaries) CHECK(m.trials == 5);
}

TEST_CASE("seed sharing across modes and trials") {
  const auto r = run_experiment(small_plan(), world());
  for (const auto& x : r.trials) {
    CHECK(x.config.seed == adoption_seed(77, x.word, x.trial));
    CHECK(x.config.shuffle_seed == shuffle_seed(77, x.trial));
  }
  CHECK(adoption_seed(77, "w001", 0) != adoption_seed(77, "w001", 1));
  CHECK(adoption_seed(77, "w001", 0) != adoption_seed(77, "w002", 0));
  CHECK(shuffle_seed(77, 0) != shuffle_seed(77, 1));
}

TEST_CASE("results do not depend on the thread count") {
  const auto plan = small_plan();
  TempDir d1("t1"), d3("t3");
  ExperimentOptions o1, o3;
  o1.threads = 1;
  o1.out_dir = d1.path;
  o3.threads = 3;
  o3.out_dir = d3.path;
  const auto a = run_experiment(plan, world(), o1);
  const auto b = run_experiment(plan, world(), o3);
  CHECK(same_trials(a.trials, b.trials));
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(d1.path)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), d1.path);
    REQUIRE(fs::exists(d3.path / rel));
    CHECK_MESSAGE(slurp(e.path()) == slurp(d3.path / rel), rel.string());
    ++files;
  }
  CHECK(files > 20);
}

TEST_CASE("written results reload and re-evaluate identically") {
  const auto plan = small_plan();
  TempDir d("reload");
  ExperimentOptions o;
  o.out_dir = d.path;
  const auto a = run_experiment(plan, world(), o);
  auto b = load_results(d.path, world());
  CHECK(b.digest == a.digest);
  CHECK(same_trials(a.trials, b.trials));
  evaluate_experiment(b, world());
  TempDir e("reeval");
  write_summary_files(b, world(), e.path);
  for (const char* f : {"summary.tsv", "modes.tsv", "trials.tsv", "pathways_network_identity.tsv", "regression.tsv"}) {
    CHECK_MESSAGE(slurp(d.path / f) == slurp(e.path / f), f);
  }
}

TEST_CASE("a trial file from another plan is refused") {
  TempDir d("mismatch");
  ExperimentOptions o;
  o.out_dir = d.path;
  run_experiment(small_plan(), world(), o);
  const auto f = d.path / trial_file("w001", Mode::null_model, 1);
  auto doc = nlohmann::json::parse(slurp(f));
  doc["plan_digest"] = "0000000000000000";
  std::ofstream(f) << doc.dump();
  const auto r = load_results(d.path, world());
  REQUIRE(r.failures.size() == 1);
  CHECK(r.failures[0].stage == "load");
  CHECK(r.failures[0].trial == 1u);
  CHECK(r.failures[0].message.find("different plan") != std::string::npos);
  CHECK(r.trials.size() == 2 * 4 * 3 - 1);
}

TEST_CASE("unknown words fail alone") {
  auto p = small_plan();
  p.words = {"w001", "nonesuch"};
  const auto r = run_experiment(p, world());
  REQUIRE(!r.failures.empty());
  CHECK(r.failures[0].word == "nonesuch");
  CHECK(r.failures[0].stage == "plan");
  CHECK(std::all_of(r.trials.begin(), r.trials.end(), [](const auto& t) { return t.word == "w001"; }));
  CHECK(r.trials.size() == 4 * 3);
}

TEST_CASE("plan stickiness overrides the default") {
  auto p = small_plan();
  p.stickiness["w002"] = 0.3;
  const auto r = run_experiment(p, world());
  for (const auto& t : r.trials) CHECK(t.config.stickiness == (t.word == "w002" ? 0.3 : 0.9));
  CHECK(r.stickiness.at("w002") == 0.3);
}

TEST_CASE("evaluation fills maps and similarity") {
  const auto r = run_experiment(small_plan(), world());
  CHECK(!r.map_counties.empty());
  for (const auto& t : r.trials) {
    if (t.map_degenerate) continue;
    INFO(t.word, " ", to_string(t.mode), " ", t.trial, " uses ", t.total_uses);
    REQUIRE(t.lee_l.has_value());
    CHECK(*t.lee_l >= -1.0);
    CHECK(*t.lee_l <= 1.0);
  }
  CHECK(std::count_if(r.trials.begin(), r.trials.end(), [](const auto& t) { return t.lee_l.has_value(); }) > 0);
  REQUIRE(r.empirical_pathways.has_value());
  CHECK(r.pathways.size() == 4);
  CHECK(r.word_summaries.size() == 2 * 4);
}

TEST_CASE("bootstrap mean") {
  const auto c = bootstrap_mean({2, 2, 2, 2}, 100, 0.95, 1);
  CHECK(c.mean == 2.0);
  CHECK(c.low == 2.0);
  CHECK(c.high == 2.0);
  CHECK(c.n == 4);
  std::vector<double> v;
  CounterRng rng(4);
  for (int i = 0; i < 200; ++i) v.push_back(rng.uniform());
  const auto b = bootstrap_mean(v, 2000, 0.95, 9);
  CHECK(b.low < b.mean);
  CHECK(b.mean < b.high);
  // Normal-theory half-width of the mean of U(0,1) with n = 200.
  CHECK(b.high - b.low == doctest::Approx(2 * 1.96 * std::sqrt(1.0 / 12.0 / 200.0)).epsilon(0.2));
  CHECK(bootstrap_mean(v, 2000, 0.95, 9).low == b.low);
}

TEST_CASE("trial file paths are sanitised") {
  CHECK(trial_file("w001", Mode::null_model, 2) == fs::path("w001") / "null" / "trial_2.json");
  CHECK(trial_file("a/b c", Mode::network_only, 0).begin()->string() == "a_b_c");
  CHECK(trial_file("..", Mode::network_only, 0).begin()->string() == "_..");
}

TEST_CASE("adoption log JSON carries config, termination and county uses") {
  const auto& w = world();
  SimulationConfig c;
  c.seed = 3;
  RunOptions o;
  o.counties = &w.counties;
  const auto log = run(c, w.graph, &w.identities, w.words[0].seeds, o);
  const auto doc = nlohmann::json::parse(adoption_log_json(log, w, w.words[0].word));
  CHECK(doc.at("word") == w.words[0].word);
  CHECK(doc.at("config").at("q") == 0.75);
  CHECK(doc.at("adopter_counts").size() == log.iterations());
  std::uint64_t total = 0;
  for (const auto& it : doc.at("county_uses"))
    for (const auto& [fips, n] : it.items()) total += n.get<std::uint64_t>();
  CHECK(total == log.total_uses);
}

TEST_CASE("windows covering every county leave nothing to compare") {
  auto p = small_plan();
  p.evaluation.neighbors = 25;
  const auto r = run_experiment(p, world());
  for (const auto& t : r.trials) {
    CHECK(t.map_degenerate);
    CHECK(!t.lee_l.has_value());
  }
}
