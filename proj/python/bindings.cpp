#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <string>
#include <vector>

#include "json.hpp"
#include "lexdiff/calibration.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/experiment.hpp"
#include "lexdiff/pathways.hpp"
#include "lexdiff/rng.hpp"
#include "lexdiff/spatial.hpp"
#include "lexdiff/world.hpp"

namespace py = pybind11;
using namespace lexdiff;
using nlohmann::json;

namespace {

py::object to_py(const std::string& json_text) { return py::module_::import("json").attr("loads")(json_text); }

std::vector<County> locations(const std::vector<double>& lat, const std::vector<double>& lon) {
  if (lat.size() != lon.size()) throw InputError("lat and lon must have the same length");
  std::vector<County> out(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    out[i].lat = lat[i];
    out[i].lon = lon[i];
  }
  return out;
}

const WordSeed& word_of(const WorldBundle& w, const std::string& word) {
  const WordSeed* ws = w.find_word(word);
  if (ws == nullptr) throw InputError("word " + word + " is not in the seed file");
  return *ws;
}

py::dict log_dict(const AdoptionLog& log, const WorldBundle& w, const std::string& word) {
  return to_py(adoption_log_json(log, w, word));
}

py::dict simulate(const WorldBundle& w, const std::string& word, const SimulationConfig& config) {
  RunOptions o;
  o.counties = &w.counties;
  o.keep_adopters = false;
  AdoptionLog log;
  {
    py::gil_scoped_release release;
    log = run(config, w.graph, &w.identities, word_of(w, word).seeds, o);
  }
  return log_dict(log, w, word);
}

std::vector<CalibrationTarget> targets_of(const WorldBundle& w, const std::vector<std::string>& words,
                                          double multiplier) {
  std::vector<CalibrationTarget> out;
  for (const auto& ws : w.words) {
    if (!words.empty() && std::find(words.begin(), words.end(), ws.word) == words.end()) continue;
    auto it = w.usage.find(ws.word);
    if (it == w.usage.end()) continue;
    CalibrationTarget t;
    t.word = ws.word;
    t.seeds = ws.seeds;
    t.empirical_uses = static_cast<double>(it->second.size());
    t.multiplier = multiplier;
    out.push_back(std::move(t));
  }
  if (out.empty()) throw InputError("no words with usage logs to tune against");
  return out;
}

py::dict tune_global_py(const WorldBundle& w, const std::vector<std::string>& words, double multiplier,
                        std::size_t trials, std::uint64_t seed, std::size_t threads, const SimulationConfig& base,
                        std::vector<double> q, std::vector<double> r, std::vector<std::uint32_t> theta) {
  CalibrationSettings s{base, trials, seed, threads};
  GlobalGrid g;
  if (!q.empty()) g.q = std::move(q);
  if (!r.empty()) g.r = std::move(r);
  if (!theta.empty()) g.theta = std::move(theta);
  const auto targets = targets_of(w, words, multiplier);
  GlobalCalibration c;
  {
    py::gil_scoped_release release;
    c = tune_global(targets, w.graph, w.identities, g, s);
  }
  return to_py(to_json(c));
}

py::list tune_stickiness_py(const WorldBundle& w, const std::vector<std::string>& words, double multiplier,
                            std::size_t trials, std::uint64_t seed, std::size_t threads, const SimulationConfig& base,
                            std::vector<double> grid) {
  CalibrationSettings s{base, trials, seed, threads};
  if (grid.empty()) grid = default_stickiness_grid();
  py::list out;
  for (const auto& t : targets_of(w, words, multiplier)) {
    StickinessCalibration c;
    {
      py::gil_scoped_release release;
      c = tune_stickiness(t, w.graph, w.identities, grid, s);
    }
    out.append(to_py(to_json(c)));
  }
  return out;
}

py::dict experiment_py(const WorldBundle& w, const py::object& plan, std::size_t threads,
                       const std::optional<std::filesystem::path>& out_dir) {
  const std::string text = py::isinstance<py::str>(plan) ? plan.cast<std::string>()
                                                         : py::module_::import("json").attr("dumps")(plan).cast<std::string>();
  const ExperimentPlan p = parse_plan(text);
  ExperimentResults res;
  {
    py::gil_scoped_release release;
    res = run_experiment(p, w, ExperimentOptions{threads, out_dir});
  }
  py::dict d;
  d["digest"] = res.digest;
  d["stickiness"] = res.stickiness;
  py::list trials;
  for (const auto& t : res.trials) {
    py::dict x;
    x["word"] = t.word;
    x["mode"] = std::string(to_string(t.mode));
    x["trial"] = t.trial;
    x["total_uses"] = t.total_uses;
    x["iterations"] = t.iterations();
    x["termination"] = std::string(to_string(t.termination));
    x["lee_l"] = t.lee_l;
    x["similarity"] = t.similarity ? py::cast(std::string(to_string(*t.similarity))) : py::none();
    trials.append(x);
  }
  d["trials"] = trials;
  py::list modes;
  for (const auto& m : res.mode_summaries) {
    py::dict x;
    x["mode"] = std::string(to_string(m.mode));
    x["trials"] = m.trials;
    x["lee_l"] = m.lee_l ? py::cast(std::vector<double>{m.lee_l->mean, m.lee_l->low, m.lee_l->high}) : py::none();
    x["broadly_similar_share"] = m.broadly_similar_share;
    x["very_similar_share"] = m.very_similar_share;
    x["pathways"] = m.pathways;
    x["likelihood"] = m.likelihood;
    modes.append(x);
  }
  d["modes"] = modes;
  py::list failures;
  for (const auto& f : res.failures) {
    py::dict x;
    x["word"] = f.word;
    x["mode"] = f.mode;
    x["trial"] = f.trial;
    x["stage"] = f.stage;
    x["message"] = f.message;
    failures.append(x);
  }
  d["failures"] = failures;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Agent-based lexical diffusion: simulation, calibration and spatial evaluation";

  static py::exception<InputError> input_error(m, "InputError", PyExc_ValueError);
  static py::exception<ValidationError> validation_error(m, "ValidationError", input_error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ValidationError& e) {
      PyObject* type = validation_error.ptr();
      py::object inst = py::reinterpret_borrow<py::object>(type)(e.what());
      inst.attr("problems") = e.problems();
      PyErr_SetObject(type, inst.ptr());
    } catch (const InputError& e) {
      py::set_error(input_error, e.what());
    }
  });

  py::class_<SimulationConfig>(m, "SimulationConfig")
      .def(py::init<>())
      .def_property(
          "mode", [](const SimulationConfig& c) { return std::string(to_string(c.mode)); },
          [](SimulationConfig& c, const std::string& s) { c.mode = parse_mode(s); })
      .def_readwrite("q", &SimulationConfig::q)
      .def_readwrite("r", &SimulationConfig::r)
      .def_readwrite("theta", &SimulationConfig::theta)
      .def_readwrite("stickiness", &SimulationConfig::stickiness)
      .def_readwrite("seed", &SimulationConfig::seed)
      .def_readwrite("shuffle_seed", &SimulationConfig::shuffle_seed)
      .def_readwrite("min_iterations", &SimulationConfig::min_iterations)
      .def_readwrite("stop_window", &SimulationConfig::stop_window)
      .def_readwrite("stop_growth", &SimulationConfig::stop_growth)
      .def_readwrite("max_iterations", &SimulationConfig::max_iterations)
      .def("validate", &SimulationConfig::validate);

  py::class_<WorldParams>(m, "WorldParams")
      .def(py::init<>())
      .def_readwrite("agents", &WorldParams::agents)
      .def_readwrite("counties", &WorldParams::counties)
      .def_readwrite("words", &WorldParams::words)
      .def_readwrite("seeds_per_word", &WorldParams::seeds_per_word)
      .def_readwrite("homophily", &WorldParams::homophily)
      .def_readwrite("mean_degree", &WorldParams::mean_degree)
      .def_readwrite("county_size_exponent", &WorldParams::county_size_exponent)
      .def_readwrite("tie_length_km", &WorldParams::tie_length_km)
      .def_readwrite("identity_selectivity", &WorldParams::identity_selectivity)
      .def_readwrite("identity_noise", &WorldParams::identity_noise)
      .def_readwrite("seed", &WorldParams::seed);

  py::class_<WorldBundle>(m, "World")
      .def_readonly("agent_ids", &WorldBundle::agent_ids)
      .def_property_readonly("num_agents", [](const WorldBundle& w) { return w.agent_ids.size(); })
      .def_property_readonly("num_counties", [](const WorldBundle& w) { return w.counties.num_counties(); })
      .def_property_readonly("num_edges", [](const WorldBundle& w) { return w.graph.num_edges(); })
      .def_property_readonly("identity_dimension", [](const WorldBundle& w) { return w.identities.dimension(); })
      .def_property_readonly("words",
                             [](const WorldBundle& w) {
                               std::vector<std::string> out;
                               for (const auto& ws : w.words) out.push_back(ws.word);
                               return out;
                             })
      .def("seeds",
           [](const WorldBundle& w, const std::string& word) {
             std::vector<std::string> out;
             for (AgentId a : word_of(w, word).seeds) out.push_back(w.agent_ids[a]);
             return out;
           })
      .def("counties",
           [](const WorldBundle& w) {
             py::list out;
             for (const auto& c : w.counties.counties()) {
               out.append(py::make_tuple(c.fips, c.lat, c.lon, c.urbanized_population));
             }
             return out;
           })
      .def("identity",
           [](const WorldBundle& w, std::size_t agent) {
             if (agent >= w.agent_ids.size()) throw InputError("agent index out of range");
             const auto row = w.identities.row(static_cast<AgentId>(agent));
             return std::vector<double>(row.begin(), row.end());
           })
      .def("usage_count",
           [](const WorldBundle& w, const std::string& word) {
             auto it = w.usage.find(word);
             return it == w.usage.end() ? std::size_t{0} : it->second.size();
           })
      .def(
          "add_usage",
          [](WorldBundle& w, const std::string& word, const SimulationConfig& config) {
            AdoptionLog log;
            {
              py::gil_scoped_release release;
              log = run(config, w.graph, &w.identities, word_of(w, word).seeds, RunOptions{nullptr, true});
            }
            w.usage[word] = usage_from_log(log);
            return w.usage[word].size();
          },
          py::arg("word"), py::arg("config"), "Simulate a usage log for `word` and store it as empirical usage.");

  m.def("generate_world", &generate_world, py::arg("params"), py::call_guard<py::gil_scoped_release>());
  m.def("load_world", &load_world, py::arg("path"));
  m.def("write_world", &write_world, py::arg("world"), py::arg("path"));
  m.def("simulate", &simulate, py::arg("world"), py::arg("word"), py::arg("config"),
        "Run one word; returns the adoption log as a dict.");
  m.def("tune_global", &tune_global_py, py::arg("world"), py::arg("words") = std::vector<std::string>{},
        py::arg("multiplier") = 10.0, py::arg("trials") = 3, py::arg("seed") = 0, py::arg("threads") = 1,
        py::arg("base") = SimulationConfig{}, py::arg("q") = std::vector<double>{},
        py::arg("r") = std::vector<double>{}, py::arg("theta") = std::vector<std::uint32_t>{});
  m.def("tune_stickiness", &tune_stickiness_py, py::arg("world"), py::arg("words") = std::vector<std::string>{},
        py::arg("multiplier") = 10.0, py::arg("trials") = 3, py::arg("seed") = 0, py::arg("threads") = 1,
        py::arg("base") = SimulationConfig{}, py::arg("grid") = std::vector<double>{});
  m.def("run_experiment", &experiment_py, py::arg("world"), py::arg("plan"), py::arg("threads") = 1,
        py::arg("out_dir") = std::optional<std::filesystem::path>{},
        "Run a plan (dict or JSON text); returns trials, mode summaries and failures.");

  m.def(
      "getis_ord",
      [](const std::vector<double>& x, const std::vector<double>& lat, const std::vector<double>& lon, std::size_t k) {
        return getis_ord(x, knn_weights(locations(lat, lon), k));
      },
      py::arg("values"), py::arg("lat"), py::arg("lon"), py::arg("k") = kDefaultNeighborhood);
  m.def(
      "lees_l",
      [](const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& lat,
         const std::vector<double>& lon, std::size_t k) { return lees_l(x, y, knn_weights(locations(lat, lon), k)); },
      py::arg("x"), py::arg("y"), py::arg("lat"), py::arg("lon"), py::arg("k") = kDefaultNeighborhood);
  m.def(
      "classify_similarity", [](double l) { return std::string(to_string(classify_similarity(l))); }, py::arg("l"));
  m.def(
      "kendall_tau_b",
      [](const std::vector<double>& x, const std::vector<double>& y) { return kendall_tau_b(x, y); }, py::arg("x"),
      py::arg("y"));
  m.def(
      "zero_inflated_tau",
      [](const std::vector<double>& u, const std::vector<double>& v) { return zero_inflated_tau(u, v); }, py::arg("u"),
      py::arg("v"));
  m.def("great_circle_km", &great_circle_km);
  m.attr("modes") = std::vector<std::string>{"network_identity", "network_only", "identity_only", "null"};
}
