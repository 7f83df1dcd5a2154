#include "gcmf/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gcmf/likelihoods.hpp"
#include "gcmf/rng.hpp"

namespace gcmf {

using nlohmann::json;

void Hyperparams::check() const {
  if (!(a0 > 0.0 && b0 > 0.0 && p0 > 0.0 && q0 > 0.0))
    throw Error("Gamma prior parameters must be positive");
  if (!(newton_relaxation > 0.0 && newton_relaxation < 1.0))
    throw Error("newton relaxation must lie strictly inside (0, 1)");
  if (max_iters < 1) throw Error("max_iters must be at least 1");
  if (!(tol >= 0.0)) throw Error("tolerance must be non-negative");
}

bool tied_ard(VariantKind k) {
  return k == VariantKind::CMF || k == VariantKind::CMF_MAP;
}

bool is_map(VariantKind k) {
  return k == VariantKind::GCMF_MAP || k == VariantKind::CMF_MAP;
}

std::string to_string(VariantKind k) {
  switch (k) {
    case VariantKind::GCMF: return "gcmf";
    case VariantKind::CMF: return "cmf";
    case VariantKind::GCMF_MAP: return "gcmf-map";
    case VariantKind::CMF_MAP: return "cmf-map";
  }
  throw Error("unknown variant enum value");
}

VariantKind variant_from_string(const std::string& s) {
  if (s == "gcmf") return VariantKind::GCMF;
  if (s == "cmf") return VariantKind::CMF;
  if (s == "gcmf-map") return VariantKind::GCMF_MAP;
  if (s == "cmf-map") return VariantKind::CMF_MAP;
  throw Error("unknown variant '" + s + "'");
}

ModelState init_model(const Schema& schema, const Hyperparams& hyper,
                      ModelVariant variant, uint64_t seed) {
  hyper.check();
  const ValidationReport report = validate(schema);
  // rank 0 is tolerated internally (bias-only models); everything else must
  // hold.
  for (const std::string& v : report.violations)
    if (v != "rank must be at least 1" || schema.rank < 0)
      throw Error("invalid schema: " + v);

  const int K = schema.rank;
  ModelState state;
  state.schema = schema;
  state.variant = variant;
  state.hyper = hyper;
  state.seed = seed;

  const double sd = K > 0 ? 1.0 / std::sqrt(static_cast<double>(K)) : 0.0;
  for (const EntitySet& set : schema.entity_sets) {
    MatrixRM mean(set.size, K), var(set.size, K);
    // One stream per entity set, drawn row-major: growing a set never
    // reshuffles the other sets' draws.
    Rng rng(derive_seed(seed, "init/factors", static_cast<uint64_t>(set.id)));
    for (int i = 0; i < set.size; ++i)
      for (int k = 0; k < K; ++k) mean(i, k) = sd * rng.normal();
    var.setConstant(is_map(variant.kind) ? 0.0 : 1.0);
    state.factors.mean.push_back(std::move(mean));
    state.factors.var.push_back(std::move(var));
    state.ard.shape.push_back(Eigen::ArrayXd::Ones(K));
    state.ard.rate.push_back(Eigen::ArrayXd::Ones(K));
  }

  for (const Relation& rel : schema.relations) {
    state.noise.shape.push_back(1.0);
    state.noise.rate.push_back(1.0);
    RelationBias bias;
    const int rows = schema.entity_sets[rel.row_set].size;
    const int cols = schema.entity_sets[rel.col_set].size;
    const double v0 = is_map(variant.kind) ? 0.0 : 1.0;
    bias.row_mean = Eigen::VectorXd::Zero(rows);
    bias.row_var = Eigen::VectorXd::Constant(rows, v0);
    bias.col_mean = Eigen::VectorXd::Zero(cols);
    bias.col_var = Eigen::VectorXd::Constant(cols, v0);
    state.bias.rel.push_back(std::move(bias));
  }
  return state;
}

double predict_linear(const ModelState& state, int m, int i, int j) {
  if (m < 0 || m >= state.schema.n_relations())
    throw Error("relation id " + std::to_string(m) + " out of range");
  const Relation& rel = state.schema.relations[m];
  if (i < 0 || i >= state.schema.rows_of(m))
    throw Error("row index " + std::to_string(i) + " out of range for relation " +
                std::to_string(m));
  if (j < 0 || j >= state.schema.cols_of(m))
    throw Error("column index " + std::to_string(j) +
                " out of range for relation " + std::to_string(m));
  double xi = state.factors.mean[rel.row_set]
                  .row(i)
                  .dot(state.factors.mean[rel.col_set].row(j));
  if (state.variant.bias_enabled)
    xi += state.bias.rel[m].row_mean[i] + state.bias.rel[m].col_mean[j];
  return xi;
}

double predict_mean(const ModelState& state, int m, int i, int j) {
  const double xi = predict_linear(state, m, i, j);
  const Link link = make_link(state.schema.relations[m].likelihood, 0.0);
  return link.mean(xi);
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json array_to_json(const Eigen::ArrayXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_to_json(const MatrixRM& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::VectorXd vector_from_json(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i];
  return v;
}

Eigen::ArrayXd array_from_json(const json& a) {
  Eigen::ArrayXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i];
  return v;
}

MatrixRM matrix_from_json(const json& a, int rows, int cols) {
  MatrixRM m(rows, cols);
  if (static_cast<int>(a.size()) != rows)
    throw ParseError("checkpoint matrix has wrong row count");
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(a[i].size()) != cols)
      throw ParseError("checkpoint matrix has wrong column count");
    for (int j = 0; j < cols; ++j) m(i, j) = a[i][j];
  }
  return m;
}

}  // namespace

std::string checkpoint_to_json(const ModelState& state) {
  json j;
  j["format"] = "gcmf-checkpoint-v1";
  j["schema"] = json::parse(schema_to_json(state.schema));
  j["schema_hash"] = schema_hash(state.schema);
  j["variant"] = to_string(state.variant.kind);
  j["bias_enabled"] = state.variant.bias_enabled;
  j["seed"] = state.seed;
  j["hyperparams"] = {
      {"a0", state.hyper.a0},
      {"b0", state.hyper.b0},
      {"p0", state.hyper.p0},
      {"q0", state.hyper.q0},
      {"newton_relaxation", state.hyper.newton_relaxation},
      {"max_iters", state.hyper.max_iters},
      {"tol", state.hyper.tol},
      {"newton_rule",
       state.hyper.newton_rule == NewtonRule::Damped ? "damped" : "printed"}};

  json factors = json::array();
  for (int e = 0; e < state.schema.n_sets(); ++e)
    factors.push_back({{"mean", matrix_to_json(state.factors.mean[e])},
                       {"var", matrix_to_json(state.factors.var[e])},
                       {"ard_shape", array_to_json(state.ard.shape[e])},
                       {"ard_rate", array_to_json(state.ard.rate[e])}});
  j["factors"] = std::move(factors);

  json relations = json::array();
  for (int m = 0; m < state.schema.n_relations(); ++m) {
    const RelationBias& b = state.bias.rel[m];
    relations.push_back({{"noise_shape", state.noise.shape[m]},
                         {"noise_rate", state.noise.rate[m]},
                         {"row_bias_mean", vector_to_json(b.row_mean)},
                         {"row_bias_var", vector_to_json(b.row_var)},
                         {"col_bias_mean", vector_to_json(b.col_mean)},
                         {"col_bias_var", vector_to_json(b.col_var)},
                         {"mu_row", b.mu_row},
                         {"mu_row_var", b.mu_row_var},
                         {"mu_col", b.mu_col},
                         {"mu_col_var", b.mu_col_var},
                         {"sigma2_row", b.sigma2_row},
                         {"sigma2_col", b.sigma2_col}});
  }
  j["relations"] = std::move(relations);
  return j.dump(2) + "\n";
}

ModelState checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format") != "gcmf-checkpoint-v1")
      throw ParseError("unsupported checkpoint format");
    ModelState state;
    state.schema = schema_from_json(j.at("schema").dump());
    if (j.at("schema_hash").get<uint64_t>() != schema_hash(state.schema))
      throw ParseError("checkpoint schema hash mismatch");
    state.variant.kind = variant_from_string(j.at("variant"));
    state.variant.bias_enabled = j.at("bias_enabled");
    state.seed = j.at("seed");
    const json& h = j.at("hyperparams");
    state.hyper.a0 = h.at("a0");
    state.hyper.b0 = h.at("b0");
    state.hyper.p0 = h.at("p0");
    state.hyper.q0 = h.at("q0");
    state.hyper.newton_relaxation = h.at("newton_relaxation");
    state.hyper.max_iters = h.at("max_iters");
    state.hyper.tol = h.at("tol");
    state.hyper.newton_rule = h.at("newton_rule") == "damped"
                                  ? NewtonRule::Damped
                                  : NewtonRule::PrintedLiteral;

    const int K = state.schema.rank;
    for (int e = 0; e < state.schema.n_sets(); ++e) {
      const json& f = j.at("factors").at(e);
      const int d = state.schema.entity_sets[e].size;
      state.factors.mean.push_back(matrix_from_json(f.at("mean"), d, K));
      state.factors.var.push_back(matrix_from_json(f.at("var"), d, K));
      state.ard.shape.push_back(array_from_json(f.at("ard_shape")));
      state.ard.rate.push_back(array_from_json(f.at("ard_rate")));
    }
    for (int m = 0; m < state.schema.n_relations(); ++m) {
      const json& r = j.at("relations").at(m);
      state.noise.shape.push_back(r.at("noise_shape"));
      state.noise.rate.push_back(r.at("noise_rate"));
      RelationBias b;
      b.row_mean = vector_from_json(r.at("row_bias_mean"));
      b.row_var = vector_from_json(r.at("row_bias_var"));
      b.col_mean = vector_from_json(r.at("col_bias_mean"));
      b.col_var = vector_from_json(r.at("col_bias_var"));
      b.mu_row = r.at("mu_row");
      b.mu_row_var = r.at("mu_row_var");
      b.mu_col = r.at("mu_col");
      b.mu_col_var = r.at("mu_col_var");
      b.sigma2_row = r.at("sigma2_row");
      b.sigma2_col = r.at("sigma2_col");
      state.bias.rel.push_back(std::move(b));
    }
    return state;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const ModelState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(state);
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return checkpoint_from_json(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

bool FactorActivity::survives(const Schema& schema, int k) const {
  for (const Relation& rel : schema.relations)
    if (active[rel.row_set][k] && active[rel.col_set][k]) return true;
  return false;
}

int FactorActivity::n_surviving(const Schema& schema) const {
  int count = 0;
  for (int k = 0; k < n_factors; ++k)
    if (survives(schema, k)) ++count;
  return count;
}

bool FactorActivity::shared_across_all(int k) const {
  for (int e = 0; e < n_sets; ++e)
    if (!active[e][k]) return false;
  return true;
}

bool FactorActivity::private_to(const Schema& schema, int m, int k) const {
  const Relation& rel = schema.relations[m];
  for (int e = 0; e < n_sets; ++e) {
    const bool should = (e == rel.row_set || e == rel.col_set);
    if (active[e][k] != should) return false;
  }
  return true;
}

FactorActivity factor_activity(const ModelState& state, double ratio,
                               double min_variance) {
  const int E = state.schema.n_sets();
  const int K = state.schema.rank;
  FactorActivity out;
  out.n_sets = E;
  out.n_factors = K;
  out.alpha.assign(E, std::vector<double>(K, 0.0));
  out.active.assign(E, std::vector<bool>(K, false));
  for (int k = 0; k < K; ++k) {
    double min_alpha = std::numeric_limits<double>::infinity();
    for (int e = 0; e < E; ++e) {
      out.alpha[e][k] = state.ard.mean(e, k);
      min_alpha = std::min(min_alpha, out.alpha[e][k]);
    }
    for (int e = 0; e < E; ++e)
      out.active[e][k] = out.alpha[e][k] < ratio * min_alpha &&
                         1.0 / out.alpha[e][k] > min_variance;
  }
  return out;
}

}  // namespace gcmf
