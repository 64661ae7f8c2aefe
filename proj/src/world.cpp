#include "lexdiff/world.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "lexdiff/error.hpp"
#include "lexdiff/rng.hpp"
#include "lexdiff/spatial.hpp"

namespace lexdiff {

namespace fs = std::filesystem;
using nlohmann::json;

const WordSeed* WorldBundle::find_word(const std::string& word) const {
  for (const auto& w : words) {
    if (w.word == word) return &w;
  }
  return nullptr;
}

namespace {

class Problems {
 public:
  void add(std::string message) { items_.push_back(std::move(message)); }
  void add(const std::string& file, std::size_t line, const std::string& message) {
    items_.push_back(file + ":" + std::to_string(line) + ": " + message);
  }
  bool empty() const noexcept { return items_.empty(); }
  std::vector<std::string> take() { return std::move(items_); }

 private:
  std::vector<std::string> items_;
};

struct Row {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
    if (tab == std::string::npos) break;
    pos = tab + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.pop_back();
    std::size_t lead = 0;
    while (lead < f.size() && f[lead] == ' ') ++lead;
    f.erase(0, lead);
  }
  return out;
}

// Rows of a tab-separated file; blank lines and '#' comments skipped.
std::optional<std::vector<Row>> read_rows(const fs::path& path, Problems& problems, bool required = true) {
  std::ifstream in(path);
  if (!in) {
    if (required) problems.add(path.filename().string() + ": cannot open " + path.string());
    return std::nullopt;
  }
  std::vector<Row> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(Row{n, split_fields(line)});
  }
  return rows;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<std::uint64_t> parse_uint(const std::string& s) {
  if (s.empty() || s[0] == '-' || s[0] == '+') return std::nullopt;
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size()) return std::nullopt;
  return static_cast<std::uint64_t>(v);
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

CategorySchema parse_schema_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("schema is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("categories") || !doc["categories"].is_array()) {
    throw InputError("schema needs a \"categories\" array");
  }
  std::vector<IdentityCategory> cats;
  for (const auto& c : doc["categories"]) {
    if (!c.is_object() || !c.contains("name") || !c["name"].is_string() || !c.contains("registers") ||
        !c["registers"].is_array()) {
      throw InputError("each schema category needs a \"name\" string and a \"registers\" array");
    }
    IdentityCategory cat{c["name"].get<std::string>(), {}};
    for (const auto& r : c["registers"]) {
      if (!r.is_string()) throw InputError("register names must be strings");
      cat.registers.push_back(r.get<std::string>());
    }
    cats.push_back(std::move(cat));
  }
  return CategorySchema(std::move(cats));
}

std::string schema_to_json(const CategorySchema& schema) {
  json cats = json::array();
  for (const auto& c : schema.categories()) cats.push_back({{"name", c.name}, {"registers", c.registers}});
  return json{{"categories", cats}}.dump(2) + "\n";
}

WorldBundle load_world(const fs::path& dir) {
  namespace wf = world_files;
  Problems problems;
  if (!fs::is_directory(dir)) throw ValidationError({"world directory not found: " + dir.string()});

  // Schema.
  std::optional<CategorySchema> schema;
  {
    const fs::path p = dir / wf::kSchema;
    if (!fs::exists(p)) {
      problems.add(std::string(wf::kSchema) + ": missing");
    } else {
      try {
        schema = parse_schema_json(read_text(p));
      } catch (const InputError& e) {
        problems.add(std::string(wf::kSchema) + ": " + e.what());
      }
    }
  }

  // Counties.
  std::vector<County> counties;
  std::unordered_map<std::string, CountyIndex> county_index;
  if (auto rows = read_rows(dir / wf::kCounties, problems)) {
    for (const Row& r : *rows) {
      if (r.fields.size() != 4) {
        problems.add(wf::kCounties, r.line, "expected 4 fields (fips, lat, lon, urbanized_population), got " +
                                                std::to_string(r.fields.size()));
        continue;
      }
      auto lat = parse_double(r.fields[1]), lon = parse_double(r.fields[2]);
      auto pop = parse_uint(r.fields[3]);
      if (!lat || !lon || !pop) {
        problems.add(wf::kCounties, r.line, "malformed number");
        continue;
      }
      if (*lat < -90 || *lat > 90 || *lon < -180 || *lon > 180) {
        problems.add(wf::kCounties, r.line, "coordinates out of range");
        continue;
      }
      if (!county_index.emplace(r.fields[0], static_cast<CountyIndex>(counties.size())).second) {
        problems.add(wf::kCounties, r.line, "duplicate county " + r.fields[0]);
        continue;
      }
      counties.push_back(County{r.fields[0], *lat, *lon, *pop});
    }
    if (counties.empty()) problems.add(std::string(wf::kCounties) + ": no counties");
  }

  // Agents.
  std::vector<std::string> agent_ids;
  std::vector<CountyIndex> agent_county;
  std::unordered_map<std::string, AgentId> agent_index;
  if (auto rows = read_rows(dir / wf::kAgents, problems)) {
    for (const Row& r : *rows) {
      if (r.fields.size() != 2) {
        problems.add(wf::kAgents, r.line, "expected 2 fields (agent_id, fips), got " + std::to_string(r.fields.size()));
        continue;
      }
      auto c = county_index.find(r.fields[1]);
      if (c == county_index.end()) {
        problems.add(wf::kAgents, r.line, "agent " + r.fields[0] + " refers to unknown county " + r.fields[1]);
        continue;
      }
      if (!agent_index.emplace(r.fields[0], static_cast<AgentId>(agent_ids.size())).second) {
        problems.add(wf::kAgents, r.line, "duplicate agent " + r.fields[0]);
        continue;
      }
      agent_ids.push_back(r.fields[0]);
      agent_county.push_back(c->second);
    }
    if (agent_ids.empty()) problems.add(std::string(wf::kAgents) + ": no agents");
  }
  auto lookup = [&](const std::string& id) -> std::optional<AgentId> {
    auto it = agent_index.find(id);
    if (it == agent_index.end()) return std::nullopt;
    return it->second;
  };

  // Graph.
  std::vector<Edge> edges;
  if (auto rows = read_rows(dir / wf::kGraph, problems)) {
    std::unordered_set<std::uint64_t> seen;
    for (const Row& r : *rows) {
      if (r.fields.size() != 3) {
        problems.add(wf::kGraph, r.line, "expected 3 fields (source, target, mentions), got " +
                                             std::to_string(r.fields.size()));
        continue;
      }
      auto s = lookup(r.fields[0]), t = lookup(r.fields[1]);
      auto m = parse_uint(r.fields[2]);
      bool ok = true;
      if (!s) {
        problems.add(wf::kGraph, r.line, "unknown agent " + r.fields[0]);
        ok = false;
      }
      if (!t) {
        problems.add(wf::kGraph, r.line, "unknown agent " + r.fields[1]);
        ok = false;
      }
      if (!m || *m == 0 || *m > 0xFFFFFFFFULL) {
        problems.add(wf::kGraph, r.line, "mention count must be a positive integer");
        ok = false;
      }
      if (!ok) continue;
      if (*s == *t) {
        problems.add(wf::kGraph, r.line, "self-loop on agent " + r.fields[0]);
        continue;
      }
      if (!seen.insert((static_cast<std::uint64_t>(*s) << 32) | *t).second) {
        problems.add(wf::kGraph, r.line, "duplicate edge " + r.fields[0] + " -> " + r.fields[1]);
        continue;
      }
      edges.push_back(Edge{*s, *t, static_cast<std::uint32_t>(*m), 1.0});
    }
  }

  // Identities.
  std::vector<double> identity_values;
  if (schema) {
    const std::size_t d = schema->dimension();
    identity_values.assign(agent_ids.size() * d, 0.0);
    std::vector<std::uint8_t> have(agent_ids.size(), 0);
    if (auto rows = read_rows(dir / wf::kIdentities, problems)) {
      for (const Row& r : *rows) {
        if (r.fields.size() != d + 1) {
          problems.add(wf::kIdentities, r.line,
                       "identity row has " + std::to_string(r.fields.size() - 1) + " values, schema expects " +
                           std::to_string(d));
          continue;
        }
        auto a = lookup(r.fields[0]);
        if (!a) {
          problems.add(wf::kIdentities, r.line, "unknown agent " + r.fields[0]);
          continue;
        }
        if (have[*a]) {
          problems.add(wf::kIdentities, r.line, "second identity row for agent " + r.fields[0]);
          continue;
        }
        bool ok = true;
        for (std::size_t k = 0; k < d; ++k) {
          auto v = parse_double(r.fields[k + 1]);
          if (!v || *v < 0.0 || *v > 1.0) {
            problems.add(wf::kIdentities, r.line, "value " + std::to_string(k + 1) + " must be a number in [0,1]");
            ok = false;
            break;
          }
          identity_values[static_cast<std::size_t>(*a) * d + k] = *v;
        }
        if (ok) have[*a] = 1;
      }
      std::size_t missing = 0;
      for (std::size_t a = 0; a < have.size(); ++a) {
        if (have[a]) continue;
        if (++missing <= 5) problems.add(std::string(wf::kIdentities) + ": no identity row for agent " + agent_ids[a]);
      }
      if (missing > 5) {
        problems.add(std::string(wf::kIdentities) + ": " + std::to_string(missing - 5) + " more agents lack identities");
      }
    }
  }

  // Word seeds.
  std::vector<WordSeed> words;
  if (auto rows = read_rows(dir / wf::kSeeds, problems)) {
    std::set<std::string> names;
    for (const Row& r : *rows) {
      if (r.fields.size() < 2) {
        problems.add(wf::kSeeds, r.line, "expected a word followed by at least one agent id");
        continue;
      }
      if (!names.insert(r.fields[0]).second) {
        problems.add(wf::kSeeds, r.line, "duplicate word " + r.fields[0]);
        continue;
      }
      WordSeed ws{r.fields[0], {}};
      for (std::size_t k = 1; k < r.fields.size(); ++k) {
        if (auto a = lookup(r.fields[k])) {
          ws.seeds.push_back(*a);
        } else {
          problems.add(wf::kSeeds, r.line, "word " + r.fields[0] + " seeds unknown agent " + r.fields[k]);
        }
      }
      words.push_back(std::move(ws));
    }
  }

  // Optional usage log.
  std::map<std::string, std::vector<Use>> usage;
  if (auto rows = read_rows(dir / wf::kUsage, problems, false)) {
    for (const Row& r : *rows) {
      if (r.fields.size() != 3) {
        problems.add(wf::kUsage, r.line, "expected 3 fields (word, agent, time), got " + std::to_string(r.fields.size()));
        continue;
      }
      auto a = lookup(r.fields[1]);
      auto t = parse_double(r.fields[2]);
      if (!a) {
        problems.add(wf::kUsage, r.line, "unknown agent " + r.fields[1]);
        continue;
      }
      if (!t || *t < 0) {
        problems.add(wf::kUsage, r.line, "time must be a nonnegative number");
        continue;
      }
      auto& log = usage[r.fields[0]];
      if (!log.empty() && *t < log.back().time) {
        problems.add(wf::kUsage, r.line, "uses of " + r.fields[0] + " are not in time order");
        continue;
      }
      log.push_back(Use{*a, *t});
    }
  }

  if (!problems.empty()) throw ValidationError(problems.take());

  WorldBundle world;
  world.agent_ids = std::move(agent_ids);
  world.counties = CountyAssignment(std::move(counties), std::move(agent_county));
  world.graph = compute_edge_weights(SocialGraph::from_edges(world.agent_ids.size(), std::move(edges)));
  world.identities = IdentityTable(std::move(*schema), world.agent_ids.size(), std::move(identity_values));
  world.words = std::move(words);
  world.usage = std::move(usage);
  return world;
}

void write_world(const WorldBundle& world, const fs::path& dir) {
  namespace wf = world_files;
  fs::create_directories(dir);
  const auto& ids = world.agent_ids;

  write_text(dir / wf::kSchema, schema_to_json(world.schema()));

  std::string s = "# fips\tlat\tlon\turbanized_population\n";
  for (const County& c : world.counties.counties()) {
    s += c.fips + "\t" + fmt_double(c.lat) + "\t" + fmt_double(c.lon) + "\t" + std::to_string(c.urbanized_population) + "\n";
  }
  write_text(dir / wf::kCounties, s);

  s = "# agent_id\tfips\n";
  for (std::size_t a = 0; a < ids.size(); ++a) {
    s += ids[a] + "\t" + world.counties.county(world.counties.county_of(static_cast<AgentId>(a))).fips + "\n";
  }
  write_text(dir / wf::kAgents, s);

  s = "# source\ttarget\tmentions\n";
  for (const Edge& e : world.graph.edges()) {
    s += ids[e.source] + "\t" + ids[e.target] + "\t" + std::to_string(e.mentions) + "\n";
  }
  write_text(dir / wf::kGraph, s);

  s = "# agent_id";
  for (std::size_t d = 0; d < world.identities.dimension(); ++d) s += "\t" + world.schema().register_label(d);
  s += "\n";
  for (std::size_t a = 0; a < ids.size(); ++a) {
    s += ids[a];
    for (double v : world.identities.row(static_cast<AgentId>(a))) s += "\t" + fmt_double(v);
    s += "\n";
  }
  write_text(dir / wf::kIdentities, s);

  s = "# word\tseed agent ids...\n";
  for (const auto& w : world.words) {
    s += w.word;
    for (AgentId a : w.seeds) s += "\t" + ids[a];
    s += "\n";
  }
  write_text(dir / wf::kSeeds, s);

  if (!world.usage.empty()) {
    s = "# word\tagent_id\ttime\n";
    for (const auto& [word, uses] : world.usage) {
      for (const Use& u : uses) s += word + "\t" + ids[u.agent] + "\t" + fmt_double(u.time) + "\n";
    }
    write_text(dir / wf::kUsage, s);
  } else if (fs::exists(dir / wf::kUsage)) {
    fs::remove(dir / wf::kUsage);
  }
}

CategorySchema default_schema() {
  return CategorySchema({{"politics", {"democrat", "republican"}},
                         {"race", {"white", "black", "hispanic", "asian"}},
                         {"language", {"spanish"}}});
}

namespace {

double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<double> zscores(std::vector<double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / n);
  for (double& x : v) x = sd > 0.0 ? (x - mean) / sd : 0.0;
  return v;
}

std::string county_code(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%05zu", 1001 + 2 * c);
  return buf;
}

// Splits `total` over `weights` by largest remainder.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> out(weights.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = static_cast<double>(total) * weights[i] / sum;
    out[i] = static_cast<std::size_t>(std::floor(exact));
    used += out[i];
    rem.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(rem.begin(), rem.end());
  for (std::size_t k = 0; used < total; ++k, ++used) ++out[rem[k % rem.size()].second];
  return out;
}

}  // namespace

WorldBundle generate_world(const WorldParams& p) {
  if (p.counties < 2) throw InputError("a world needs at least two counties");
  if (p.agents < p.counties) throw InputError("a world needs at least one agent per county");
  if (!(p.homophily >= 0.0 && p.homophily <= 1.0)) throw InputError("homophily must lie in [0,1]");
  if (!(p.mean_degree > 0.0)) throw InputError("mean degree must be positive");
  if (p.mean_degree > static_cast<double>(p.agents - 1) / 2.0) {
    throw InputError("mean degree " + fmt_double(p.mean_degree) + " is infeasible for " + std::to_string(p.agents) +
                     " agents (at most (n-1)/2)");
  }
  if (p.words > 0 && p.seeds_per_word == 0) throw InputError("words need at least one seed");
  if (p.seeds_per_word > p.agents) throw InputError("more seeds per word than agents");
  if (!(p.county_size_exponent > 0.0)) throw InputError("county size exponent must be positive");

  const CategorySchema schema = p.schema.empty() ? default_schema() : CategorySchema(p.schema);
  const std::size_t d = schema.dimension();
  const std::size_t n = p.agents, nc = p.counties;
  const double h = p.homophily;

  // Counties: placement and power-law sizes.
  CounterRng geo(derive_seed(p.seed, {1}));
  std::vector<County> counties(nc);
  std::vector<double> size_weight(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    counties[c].fips = county_code(c);
    counties[c].lat = 30.0 + 18.0 * geo.uniform();
    counties[c].lon = -122.0 + 50.0 * geo.uniform();
    size_weight[c] = std::pow(1.0 - geo.uniform(), -1.0 / p.county_size_exponent);
  }
  auto sizes = apportion(n - nc, size_weight);
  for (auto& s : sizes) ++s;

  // The largest ~13% of counties clear the urban threshold.
  {
    std::vector<std::size_t> sorted(sizes);
    std::sort(sorted.rbegin(), sorted.rend());
    const std::size_t urban = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(0.131 * static_cast<double>(nc))));
    const double scale = 100000.0 / static_cast<double>(sorted[urban - 1]);
    for (std::size_t c = 0; c < nc; ++c) {
      counties[c].urbanized_population = static_cast<std::uint64_t>(std::floor(static_cast<double>(sizes[c]) * scale + 1e-9));
    }
  }

  std::vector<CountyIndex> agent_county;
  agent_county.reserve(n);
  for (std::size_t c = 0; c < nc; ++c) agent_county.insert(agent_county.end(), sizes[c], static_cast<CountyIndex>(c));

  // Pairwise county distances.
  std::vector<double> dist(nc * nc);
  for (std::size_t a = 0; a < nc; ++a) {
    for (std::size_t b = 0; b < nc; ++b) {
      dist[a * nc + b] = great_circle_km(counties[a].lat, counties[a].lon, counties[b].lat, counties[b].lon);
    }
  }

  // Identities: a smooth random field per dimension, agents scattered around
  // their county mean.
  CounterRng idr(derive_seed(p.seed, {2}));
  std::vector<double> county_mean(nc * d);
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t bumps = 4;
    std::vector<std::pair<std::size_t, double>> centers;
    for (std::size_t b = 0; b < bumps; ++b) centers.emplace_back(idr.below(nc), idr.normal());
    const double width = 500.0 + 700.0 * idr.uniform();
    const double base = idr.uniform() * 2.0 - 1.5;
    std::vector<double> field(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
      for (const auto& [center, amp] : centers) {
        const double r = dist[c * nc + center] / width;
        field[c] += amp * std::exp(-0.5 * r * r);
      }
    }
    const auto z = zscores(std::move(field));
    for (std::size_t c = 0; c < nc; ++c) county_mean[c * d + k] = logistic(base + 1.3 * z[c]);
  }
  std::vector<double> values(n * d);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t k = 0; k < d; ++k) {
      const double v = county_mean[agent_county[a] * d + k] + p.identity_noise * idr.normal();
      values[a * d + k] = std::clamp(v, 0.0, 1.0);
    }
  }

  CountyAssignment assignment(counties, agent_county);
  const auto members = assignment.members();

  // Ties: target county by size and distance, then accept by identity similarity.
  CounterRng er(derive_seed(p.seed, {3}));
  std::vector<double> activity(n);
  for (double& a : activity) a = std::exp(0.8 * er.normal());
  const double mean_activity = std::accumulate(activity.begin(), activity.end(), 0.0) / static_cast<double>(n);
  const std::size_t max_degree = std::min<std::size_t>(n - 1, static_cast<std::size_t>(20.0 * p.mean_degree) + 1);

  std::vector<double> cum(nc * nc);
  for (std::size_t a = 0; a < nc; ++a) {
    double run = 0.0;
    for (std::size_t b = 0; b < nc; ++b) {
      run += static_cast<double>(sizes[b]) * std::exp(-h * dist[a * nc + b] / p.tie_length_km);
      cum[a * nc + b] = run;
    }
  }
  auto similarity = [&](std::size_t i, std::size_t j) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += std::abs(values[i * d + k] - values[j * d + k]);
    return 1.0 - s / static_cast<double>(d);
  };

  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(p.mean_degree * static_cast<double>(n) * 1.05));
  std::unordered_set<std::uint64_t> present;
  for (std::size_t i = 0; i < n; ++i) {
    const double want = p.mean_degree * activity[i] / mean_activity;
    std::size_t degree = static_cast<std::size_t>(want);
    if (er.uniform() < want - std::floor(want)) ++degree;
    degree = std::clamp<std::size_t>(degree, 1, max_degree);
    const std::size_t ci = agent_county[i];
    const double* row = cum.data() + ci * nc;
    for (std::size_t e = 0; e < degree; ++e) {
      AgentId chosen = 0;
      bool found = false;
      for (int attempt = 0; attempt < 400 && !found; ++attempt) {
        const double u = er.uniform() * row[nc - 1];
        const std::size_t c = static_cast<std::size_t>(std::upper_bound(row, row + nc, u) - row);
        const auto& pool = members[std::min(c, nc - 1)];
        const AgentId j = pool[er.below(pool.size())];
        if (j == i || present.count((static_cast<std::uint64_t>(i) << 32) | j)) continue;
        const double accept = std::exp(-h * p.identity_selectivity * (1.0 - similarity(i, j)));
        if (attempt < 300 && er.uniform() >= accept) continue;
        chosen = j;
        found = true;
      }
      if (!found) continue;
      present.insert((static_cast<std::uint64_t>(i) << 32) | chosen);
      // Heavy-tailed (discrete Pareto) mention counts.
      const double m = std::floor(std::pow(1.0 - er.uniform(), -1.0 / 1.2));
      edges.push_back(Edge{static_cast<AgentId>(i), chosen, static_cast<std::uint32_t>(std::min(m, 100000.0)), 1.0});
    }
  }

  WorldBundle world;
  world.agent_ids.resize(n);
  for (std::size_t a = 0; a < n; ++a) world.agent_ids[a] = "u" + std::to_string(a);
  world.counties = std::move(assignment);
  world.graph = compute_edge_weights(SocialGraph::from_edges(n, std::move(edges)));
  world.identities = IdentityTable(schema, n, std::move(values));

  // Words: a socially connected snowball from a random origin agent, leaning
  // towards one register.
  CounterRng wr(derive_seed(p.seed, {4}));
  const auto& ident = world.identities;
  const auto& g = world.graph;
  for (std::size_t w = 0; w < p.words; ++w) {
    const std::size_t flavor = wr.below(d);
    std::vector<AgentId> seeds{static_cast<AgentId>(wr.below(n))};
    std::vector<AgentId> frontier;
    while (seeds.size() < p.seeds_per_word) {
      frontier.clear();
      for (AgentId s : seeds) {
        for (std::uint32_t e : g.out_edge_indices(s)) {
          const AgentId t = g.edges()[e].target;
          if (std::find(seeds.begin(), seeds.end(), t) == seeds.end() &&
              std::find(frontier.begin(), frontier.end(), t) == frontier.end()) {
            frontier.push_back(t);
          }
        }
      }
      if (frontier.empty()) {
        // Dead end: continue from a random agent in the origin's county.
        const auto& pool = members[agent_county[seeds.front()]];
        AgentId a = pool[wr.below(pool.size())];
        while (std::find(seeds.begin(), seeds.end(), a) != seeds.end()) a = static_cast<AgentId>(wr.below(n));
        seeds.push_back(a);
        continue;
      }
      std::stable_sort(frontier.begin(), frontier.end(),
                       [&](AgentId x, AgentId y) { return ident.row(x)[flavor] > ident.row(y)[flavor]; });
      seeds.push_back(frontier[wr.below(std::min<std::size_t>(3, frontier.size()))]);
    }
    char name[32];
    std::snprintf(name, sizeof name, "w%03zu", w + 1);
    world.words.push_back(WordSeed{name, seeds});
  }
  return world;
}

std::vector<Use> usage_from_log(const AdoptionLog& log) {
  std::vector<Use> out;
  for (std::size_t t = 0; t < log.adopters.size(); ++t) {
    for (AgentId a : log.adopters[t]) out.push_back(Use{a, static_cast<double>(t)});
  }
  return out;
}

std::vector<std::vector<std::uint32_t>> county_uses_from_usage(const std::vector<Use>& usage,
                                                                const CountyAssignment& counties,
                                                                double block_length) {
  if (!(block_length > 0.0)) throw InputError("block length must be positive");
  std::vector<std::vector<std::uint32_t>> rows;
  for (const Use& u : usage) {
    if (u.agent >= counties.num_agents()) throw InputError("usage refers to an unknown agent");
    const auto block = static_cast<std::size_t>(std::floor(u.time / block_length));
    if (rows.size() <= block) rows.resize(block + 1, std::vector<std::uint32_t>(counties.num_counties(), 0));
    ++rows[block][counties.county_of(u.agent)];
  }
  return rows;
}

}  // namespace lexdiff
