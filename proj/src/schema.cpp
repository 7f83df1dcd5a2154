#include "gcmf/schema.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace gcmf {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string to_string(Likelihood lik) {
  switch (lik) {
    case Likelihood::Gaussian: return "gaussian";
    case Likelihood::Bernoulli: return "bernoulli";
    case Likelihood::Count: return "count";
  }
  throw Error("unknown likelihood enum value");
}

Likelihood likelihood_from_string(const std::string& s) {
  if (s == "gaussian") return Likelihood::Gaussian;
  if (s == "bernoulli") return Likelihood::Bernoulli;
  if (s == "count") return Likelihood::Count;
  throw Error("unknown likelihood '" + s +
              "' (expected gaussian, bernoulli or count)");
}

int Schema::total_entities() const {
  return std::accumulate(entity_sets.begin(), entity_sets.end(), 0,
                         [](int acc, const EntitySet& e) { return acc + e.size; });
}

std::string ValidationReport::str() const {
  std::ostringstream os;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << violations[i];
  }
  return os.str();
}

namespace {

// Union-find over entity set ids for the connectivity check.
struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void merge(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

ValidationReport validate(const Schema& schema) {
  ValidationReport report;
  auto flag = [&](const std::string& msg) { report.violations.push_back(msg); };

  const int E = schema.n_sets();
  if (E == 0) flag("schema has no entity sets");
  if (schema.rank < 1) flag("rank must be at least 1");

  std::set<std::string> names;
  for (int e = 0; e < E; ++e) {
    const EntitySet& s = schema.entity_sets[e];
    if (s.id != e) flag("entity set ids must be contiguous from 0 (set '" +
                        s.name + "' has id " + std::to_string(s.id) + ")");
    if (s.size < 1) flag("entity set '" + s.name + "' has size " +
                         std::to_string(s.size));
    if (!names.insert(s.name).second)
      flag("duplicate entity set name '" + s.name + "'");
  }

  std::vector<bool> used(E, false);
  std::set<std::pair<int, int>> seen_pairs;
  DisjointSets components(std::max(E, 1));
  for (int m = 0; m < schema.n_relations(); ++m) {
    const Relation& r = schema.relations[m];
    const std::string label = "relation " + std::to_string(m);
    if (r.id != m) flag(label + " has non-contiguous id " + std::to_string(r.id));
    const bool row_ok = r.row_set >= 0 && r.row_set < E;
    const bool col_ok = r.col_set >= 0 && r.col_set < E;
    if (!row_ok) flag(label + " references missing row set " +
                      std::to_string(r.row_set));
    if (!col_ok) flag(label + " references missing column set " +
                      std::to_string(r.col_set));
    if (!row_ok || !col_ok) continue;
    if (r.row_set == r.col_set)
      flag(label + " is a self-relation (set '" +
           schema.entity_sets[r.row_set].name + "' on both sides)");
    if (!seen_pairs.insert({r.row_set, r.col_set}).second)
      flag(label + " duplicates an earlier relation between the same ordered "
                   "pair of entity sets");
    used[r.row_set] = used[r.col_set] = true;
    components.merge(r.row_set, r.col_set);
  }

  for (int e = 0; e < E; ++e) {
    if (!used[e])
      flag("entity set '" + schema.entity_sets[e].name +
           "' is unused (participates in no relation)");
  }

  // Only meaningful once every set is attached to something.
  if (E > 1 && std::all_of(used.begin(), used.end(), [](bool u) { return u; })) {
    const int root = components.find(0);
    for (int e = 1; e < E; ++e) {
      if (components.find(e) != root) {
        flag("schema is disconnected: nothing couples entity set '" +
             schema.entity_sets[e].name + "' to set '" +
             schema.entity_sets[0].name + "'");
        break;
      }
    }
  }

  return report;
}

void require_valid(const Schema& schema) {
  const ValidationReport report = validate(schema);
  if (!report.ok()) throw Error("invalid schema: " + report.str());
}

Schema multiview_schema(int n_views, int d_row,
                        const std::vector<int>& col_sizes, int rank) {
  if (n_views < 1) throw Error("multiview schema needs at least one view");
  if (d_row < 1) throw Error("row entity set size must be positive");
  if (static_cast<int>(col_sizes.size()) != n_views)
    throw Error("expected one column size per view");
  for (int s : col_sizes)
    if (s < 1) throw Error("column entity set sizes must be positive");

  Schema schema;
  schema.rank = rank;
  schema.entity_sets.push_back({0, "rows", d_row});
  for (int v = 0; v < n_views; ++v) {
    schema.entity_sets.push_back(
        {v + 1, "cols" + std::to_string(v + 1), col_sizes[v]});
    schema.relations.push_back({v, 0, v + 1, Likelihood::Gaussian});
  }
  return schema;
}

Schema circular_schema(int n_matrices, const std::vector<int>& set_sizes,
                       const std::vector<Likelihood>& likelihoods, int rank) {
  if (n_matrices < 1) throw Error("circular schema needs at least one matrix");
  const int E = n_matrices == 1 ? 2 : n_matrices;
  if (static_cast<int>(set_sizes.size()) != E)
    throw Error("expected " + std::to_string(E) + " entity set sizes");
  if (static_cast<int>(likelihoods.size()) != n_matrices &&
      likelihoods.size() != 1)
    throw Error("expected one likelihood per relation (or a single one)");
  auto lik = [&](int m) {
    return likelihoods.size() == 1 ? likelihoods[0] : likelihoods[m];
  };

  Schema schema;
  schema.rank = rank;
  for (int e = 0; e < E; ++e)
    schema.entity_sets.push_back(
        {e, "set" + std::to_string(e + 1), set_sizes[e]});
  if (n_matrices == 1) {
    schema.relations.push_back({0, 0, 1, lik(0)});
    return schema;
  }
  for (int m = 0; m < n_matrices; ++m)
    schema.relations.push_back({m, m, (m + 1) % E, lik(m)});
  return schema;
}

uint64_t schema_hash(const Schema& schema) {
  // FNV-1a over a canonical rendering.
  uint64_t h = 1469598103934665603ull;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    h ^= 0xff;
    h *= 1099511628211ull;
  };
  mix("rank=" + std::to_string(schema.rank));
  for (const EntitySet& e : schema.entity_sets)
    mix("set:" + e.name + ":" + std::to_string(e.size));
  for (const Relation& r : schema.relations)
    mix("rel:" + std::to_string(r.row_set) + ":" + std::to_string(r.col_set) +
        ":" + to_string(r.likelihood));
  return h;
}

std::string schema_to_json(const Schema& schema) {
  json j;
  j["rank"] = schema.rank;
  j["entity_sets"] = json::array();
  for (const EntitySet& e : schema.entity_sets)
    j["entity_sets"].push_back({{"name", e.name}, {"size", e.size}});
  j["relations"] = json::array();
  for (const Relation& r : schema.relations)
    j["relations"].push_back({{"row", schema.entity_sets[r.row_set].name},
                              {"col", schema.entity_sets[r.col_set].name},
                              {"likelihood", to_string(r.likelihood)}});
  return j.dump(2) + "\n";
}

Schema schema_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("schema is not valid JSON: ") + e.what());
  }
  try {
    Schema schema;
    schema.rank = j.at("rank").get<int>();
    int id = 0;
    for (const auto& e : j.at("entity_sets"))
      schema.entity_sets.push_back(
          {id++, e.at("name").get<std::string>(), e.at("size").get<int>()});
    auto set_index = [&](const std::string& name) {
      for (const EntitySet& e : schema.entity_sets)
        if (e.name == name) return e.id;
      throw ParseError("relation references unknown entity set '" + name + "'");
    };
    id = 0;
    for (const auto& r : j.at("relations")) {
      schema.relations.push_back(
          {id++, set_index(r.at("row").get<std::string>()),
           set_index(r.at("col").get<std::string>()),
           likelihood_from_string(r.at("likelihood").get<std::string>())});
    }
    return schema;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed schema: ") + e.what());
  }
}

Schema load_schema(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return schema_from_json(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void save_schema(const Schema& schema, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write schema file '" + path + "'");
  out << schema_to_json(schema);
}

}  // namespace gcmf
