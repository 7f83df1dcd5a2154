#include "gcmf/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace gcmf {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kPrecisionFloor = 1e-12;  // clamp for MAP Gamma modes
constexpr double kSigma2Floor = 1e-8;

double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double gamma_entropy(double shape, double rate) {
  return shape - std::log(rate) + std::lgamma(shape) +
         (1.0 - shape) * digamma(shape);
}

double gamma_e_log(double shape, double rate) {
  return digamma(shape) - std::log(rate);
}

}  // namespace

IndexedData index_dataset(const Schema& schema, const Dataset& data) {
  const int M = schema.n_relations();
  IndexedData out;
  out.rel.resize(M);
  for (int m = 0; m < M; ++m) {
    out.rel[m].m = m;
    out.rel[m].row_count.assign(schema.rows_of(m), 0);
    out.rel[m].col_count.assign(schema.cols_of(m), 0);
  }

  std::vector<bool> filled(M, false);
  for (const ObservedMatrix& matrix : data) {
    const int m = matrix.relation_id;
    if (m < 0 || m >= M)
      throw Error("observed matrix references relation " + std::to_string(m) +
                  " not present in the schema");
    if (filled[m])
      throw Error("two observed matrices share relation id " +
                  std::to_string(m));
    filled[m] = true;
    RelationData& rel = out.rel[m];
    const int rows = schema.rows_of(m);
    const int cols = schema.cols_of(m);
    const Likelihood lik = schema.relations[m].likelihood;
    std::set<std::pair<int, int>> seen;
    double x_max = 0.0;
    rel.row.reserve(matrix.entries.size());
    rel.col.reserve(matrix.entries.size());
    rel.x.reserve(matrix.entries.size());
    for (const Triplet& t : matrix.entries) {
      if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
        throw Error("entry (" + std::to_string(t.row) + "," +
                    std::to_string(t.col) + ") out of bounds for relation " +
                    std::to_string(m));
      const std::string domain = domain_violation(lik, t.value);
      if (!domain.empty())
        throw Error("relation " + std::to_string(m) + ": " + domain);
      if (!seen.insert({t.row, t.col}).second)
        throw Error("duplicate entry (" + std::to_string(t.row) + "," +
                    std::to_string(t.col) + ") in relation " +
                    std::to_string(m));
      rel.row.push_back(t.row);
      rel.col.push_back(t.col);
      rel.x.push_back(t.value);
      ++rel.row_count[t.row];
      ++rel.col_count[t.col];
      x_max = std::max(x_max, t.value);
    }
    rel.link = make_link(lik, x_max);
  }
  for (int m = 0; m < M; ++m)
    if (!filled[m])
      out.rel[m].link = make_link(schema.relations[m].likelihood, 0.0);
  return out;
}

Engine::Engine(const Schema& schema, const Dataset& data, ModelState state)
    : schema_(schema),
      data_(index_dataset(schema, data)),
      state_(std::move(state)) {
  if (schema_hash(schema_) != schema_hash(state_.schema))
    throw Error("model state was initialized for a different schema");
  state_.hyper.check();
  map_ = is_map(state_.variant.kind);
  tied_ = tied_ard(state_.variant.kind);

  bool all_gaussian = true;
  for (const RelationData& rel : data_.rel)
    all_gaussian = all_gaussian && rel.gaussian();
  // Gaussian-only VB sweeps and every MAP sweep are exact coordinate ascent,
  // so a decreasing objective there is an implementation bug.
  check_monotone_ = all_gaussian || map_;

  dot_.resize(schema_.n_relations());
  pseudo_.resize(schema_.n_relations());
  refresh_dots();
  for (int m = 0; m < schema_.n_relations(); ++m)
    if (!data_.rel[m].gaussian()) update_pseudodata(m);
}

void Engine::refresh_dots() {
  for (int m = 0; m < schema_.n_relations(); ++m) {
    const RelationData& rel = data_.rel[m];
    const Relation& r = schema_.relations[m];
    const MatrixRM& U = state_.factors.mean[r.row_set];
    const MatrixRM& V = state_.factors.mean[r.col_set];
    Eigen::VectorXd& dot = dot_[m];
    dot.resize(rel.n());
    for (int t = 0; t < rel.n(); ++t)
      dot[t] = U.row(rel.row[t]).dot(V.row(rel.col[t]));
  }
}

void Engine::refresh() { refresh_dots(); }

double Engine::effective_tau(int m) const {
  const RelationData& rel = data_.rel[m];
  return rel.gaussian() ? state_.noise.mean(m) : rel.link.kappa;
}

double Engine::target(const RelationData& rel, int t) const {
  return rel.gaussian() ? rel.x[t] : pseudo_[rel.m].z[t];
}

Engine::ColumnStats Engine::column_stats(int e, int k) const {
  const int d = schema_.entity_sets[e].size;
  const double alpha = state_.ard.mean(e, k);
  ColumnStats stats;
  stats.grad = alpha * state_.factors.mean[e].col(k);
  stats.curv = Eigen::VectorXd::Constant(d, alpha);

  const bool bias_on = state_.variant.bias_enabled;
  for (int m = 0; m < schema_.n_relations(); ++m) {
    const Relation& r = schema_.relations[m];
    if (r.row_set != e && r.col_set != e) continue;
    const RelationData& rel = data_.rel[m];
    if (rel.n() == 0) continue;
    const double tau = effective_tau(m);
    const RelationBias& bias = state_.bias.rel[m];
    const Eigen::VectorXd& dot = dot_[m];
    const bool on_rows = (r.row_set == e);
    const int other = on_rows ? r.col_set : r.row_set;
    const MatrixRM& self_mean = state_.factors.mean[e];
    const MatrixRM& other_mean = state_.factors.mean[other];
    const MatrixRM& other_var = state_.factors.var[other];
    for (int t = 0; t < rel.n(); ++t) {
      const int i = rel.row[t];
      const int j = rel.col[t];
      double resid = target(rel, t) - dot[t];
      if (bias_on) resid -= bias.row_mean[i] + bias.col_mean[j];
      const int self = on_rows ? i : j;
      const int peer = on_rows ? j : i;
      const double om = other_mean(peer, k);
      const double ov = other_var(peer, k);
      stats.grad[self] += tau * (-resid * om + self_mean(self, k) * ov);
      stats.curv[self] += tau * (om * om + ov);
    }
  }
  return stats;
}

MatrixRM Engine::factor_gradient(int e) const {
  const int d = schema_.entity_sets[e].size;
  MatrixRM grad(d, state_.rank());
  for (int k = 0; k < state_.rank(); ++k) grad.col(k) = column_stats(e, k).grad;
  return grad;
}

MatrixRM Engine::factor_variance(int e) const {
  const int d = schema_.entity_sets[e].size;
  MatrixRM var(d, state_.rank());
  for (int k = 0; k < state_.rank(); ++k)
    var.col(k) = column_stats(e, k).curv.cwiseInverse();
  return var;
}

void Engine::apply_column_delta(int e, int k, const Eigen::VectorXd& delta) {
  for (int m = 0; m < schema_.n_relations(); ++m) {
    const Relation& r = schema_.relations[m];
    if (r.row_set != e && r.col_set != e) continue;
    const RelationData& rel = data_.rel[m];
    const bool on_rows = (r.row_set == e);
    const MatrixRM& other_mean =
        state_.factors.mean[on_rows ? r.col_set : r.row_set];
    Eigen::VectorXd& dot = dot_[m];
    for (int t = 0; t < rel.n(); ++t) {
      const int self = on_rows ? rel.row[t] : rel.col[t];
      const int peer = on_rows ? rel.col[t] : rel.row[t];
      dot[t] += delta[self] * other_mean(peer, k);
    }
  }
}

void Engine::newton_column(int e, int k, const ColumnStats& stats) {
  const int d = schema_.entity_sets[e].size;
  const double lambda = state_.hyper.newton_relaxation;
  MatrixRM& mean = state_.factors.mean[e];
  if (!map_) state_.factors.var[e].col(k) = stats.curv.cwiseInverse();

  Eigen::VectorXd delta(d);
  if (state_.hyper.newton_rule == NewtonRule::Damped) {
    for (int i = 0; i < d; ++i) delta[i] = -lambda * stats.grad[i] / stats.curv[i];
  } else {
    // Literal printed rule, kept for comparison: (1-l)*u + l*curv*g.
    for (int i = 0; i < d; ++i)
      delta[i] = -lambda * mean(i, k) + lambda * stats.curv[i] * stats.grad[i];
  }
  for (int i = 0; i < d; ++i) {
    mean(i, k) += delta[i];
    max_delta_ = std::max(max_delta_, std::abs(delta[i]));
  }
  apply_column_delta(e, k, delta);
}

void Engine::newton_step(int e, const MatrixRM& grad) {
  const double lambda = state_.hyper.newton_relaxation;
  MatrixRM& mean = state_.factors.mean[e];
  const MatrixRM& var = state_.factors.var[e];
  if (state_.hyper.newton_rule == NewtonRule::Damped) {
    mean -= lambda * var.cwiseProduct(grad);
  } else {
    mean = (1.0 - lambda) * mean + lambda * var.cwiseInverse().cwiseProduct(grad);
  }
  refresh_dots();
}

void Engine::update_bias(int m) {
  if (!state_.variant.bias_enabled) return;
  const RelationData& rel = data_.rel[m];
  const double tau = effective_tau(m);
  RelationBias& bias = state_.bias.rel[m];
  const int n_rows = schema_.rows_of(m);
  const int n_cols = schema_.cols_of(m);

  // Rows: residuals exclude the row bias being updated.
  Eigen::VectorXd row_sum = Eigen::VectorXd::Zero(n_rows);
  for (int t = 0; t < rel.n(); ++t)
    row_sum[rel.row[t]] +=
        target(rel, t) - dot_[m][t] - bias.col_mean[rel.col[t]];
  for (int i = 0; i < n_rows; ++i) {
    const double prec = tau * rel.row_count[i] + 1.0 / bias.sigma2_row;
    const double mean =
        (tau * row_sum[i] + bias.mu_row / bias.sigma2_row) / prec;
    max_delta_ = std::max(max_delta_, std::abs(mean - bias.row_mean[i]));
    bias.row_mean[i] = mean;
    bias.row_var[i] = map_ ? 0.0 : 1.0 / prec;
  }
  // Hyper-mean (point estimate, prior N(0,1)); its posterior variance is
  // kept for reporting only.
  const double dr = static_cast<double>(n_rows);
  bias.mu_row =
      (bias.row_mean.sum() / bias.sigma2_row) / (1.0 + dr / bias.sigma2_row);
  bias.mu_row_var = 1.0 / (1.0 + dr / bias.sigma2_row);
  double scatter = 0.0;
  for (int i = 0; i < n_rows; ++i) {
    const double c = bias.row_mean[i] - bias.mu_row;
    scatter += c * c + bias.row_var[i];
  }
  bias.sigma2_row = std::max(kSigma2Floor, scatter / dr);

  // Columns, using the updated row biases.
  Eigen::VectorXd col_sum = Eigen::VectorXd::Zero(n_cols);
  for (int t = 0; t < rel.n(); ++t)
    col_sum[rel.col[t]] +=
        target(rel, t) - dot_[m][t] - bias.row_mean[rel.row[t]];
  for (int j = 0; j < n_cols; ++j) {
    const double prec = tau * rel.col_count[j] + 1.0 / bias.sigma2_col;
    const double mean =
        (tau * col_sum[j] + bias.mu_col / bias.sigma2_col) / prec;
    max_delta_ = std::max(max_delta_, std::abs(mean - bias.col_mean[j]));
    bias.col_mean[j] = mean;
    bias.col_var[j] = map_ ? 0.0 : 1.0 / prec;
  }
  const double dc = static_cast<double>(n_cols);
  bias.mu_col =
      (bias.col_mean.sum() / bias.sigma2_col) / (1.0 + dc / bias.sigma2_col);
  bias.mu_col_var = 1.0 / (1.0 + dc / bias.sigma2_col);
  scatter = 0.0;
  for (int j = 0; j < n_cols; ++j) {
    const double c = bias.col_mean[j] - bias.mu_col;
    scatter += c * c + bias.col_var[j];
  }
  bias.sigma2_col = std::max(kSigma2Floor, scatter / dc);
}

void Engine::update_ard_set(int e) {
  const int d = schema_.entity_sets[e].size;
  const Hyperparams& h = state_.hyper;
  for (int k = 0; k < state_.rank(); ++k) {
    double moment = 0.0;
    for (int i = 0; i < d; ++i) {
      const double u = state_.factors.mean[e](i, k);
      moment += u * u + state_.factors.var[e](i, k);
    }
    const double shape = h.a0 + 0.5 * d;
    const double rate = h.b0 + 0.5 * moment;
    if (map_) {
      state_.ard.shape[e][k] = std::max((shape - 1.0) / rate, kPrecisionFloor);
      state_.ard.rate[e][k] = 1.0;
    } else {
      state_.ard.shape[e][k] = shape;
      state_.ard.rate[e][k] = rate;
    }
  }
}

void Engine::update_ard() {
  if (!tied_) {
    for (int e = 0; e < schema_.n_sets(); ++e) update_ard_set(e);
    return;
  }
  // CMF variants share one precision per factor across every entity set.
  const Hyperparams& h = state_.hyper;
  double d_total = 0.0;
  for (int e = 0; e < schema_.n_sets(); ++e)
    d_total += schema_.entity_sets[e].size;
  for (int k = 0; k < state_.rank(); ++k) {
    double moment = 0.0;
    for (int e = 0; e < schema_.n_sets(); ++e) {
      const int d = schema_.entity_sets[e].size;
      for (int i = 0; i < d; ++i) {
        const double u = state_.factors.mean[e](i, k);
        moment += u * u + state_.factors.var[e](i, k);
      }
    }
    const double shape = h.a0 + 0.5 * d_total;
    const double rate = h.b0 + 0.5 * moment;
    for (int e = 0; e < schema_.n_sets(); ++e) {
      if (map_) {
        state_.ard.shape[e][k] = std::max((shape - 1.0) / rate, kPrecisionFloor);
        state_.ard.rate[e][k] = 1.0;
      } else {
        state_.ard.shape[e][k] = shape;
        state_.ard.rate[e][k] = rate;
      }
    }
  }
}

double Engine::expected_sq_residual_sum(int m) const {
  const RelationData& rel = data_.rel[m];
  const Relation& r = schema_.relations[m];
  const bool bias_on = state_.variant.bias_enabled;
  const RelationBias& bias = state_.bias.rel[m];
  const MatrixRM& U = state_.factors.mean[r.row_set];
  const MatrixRM& V = state_.factors.mean[r.col_set];
  const MatrixRM& Uv = state_.factors.var[r.row_set];
  const MatrixRM& Vv = state_.factors.var[r.col_set];
  const int K = state_.rank();

  double sum = 0.0;
  for (int t = 0; t < rel.n(); ++t) {
    const int i = rel.row[t];
    const int j = rel.col[t];
    double resid = target(rel, t) - dot_[m][t];
    if (bias_on) resid -= bias.row_mean[i] + bias.col_mean[j];
    double v = resid * resid;
    if (!map_) {
      if (bias_on) v += bias.row_var[i] + bias.col_var[j];
      for (int k = 0; k < K; ++k)
        v += U(i, k) * U(i, k) * Vv(j, k) + V(j, k) * V(j, k) * Uv(i, k) +
             Uv(i, k) * Vv(j, k);
    }
    sum += v;
  }
  return sum;
}

void Engine::update_tau(int m) {
  const RelationData& rel = data_.rel[m];
  if (!rel.gaussian())
    throw Error("update_tau applies to Gaussian relations only");
  const Hyperparams& h = state_.hyper;
  const double shape = h.p0 + 0.5 * rel.n();
  const double rate = h.q0 + 0.5 * expected_sq_residual_sum(m);
  if (map_) {
    state_.noise.shape[m] = std::max((shape - 1.0) / rate, kPrecisionFloor);
    state_.noise.rate[m] = 1.0;
  } else {
    state_.noise.shape[m] = shape;
    state_.noise.rate[m] = rate;
  }
}

PseudoData Engine::compute_pseudodata(int m) const {
  const RelationData& rel = data_.rel[m];
  if (rel.gaussian())
    throw Error("pseudo-data applies to non-Gaussian relations only");
  const bool bias_on = state_.variant.bias_enabled;
  const RelationBias& bias = state_.bias.rel[m];
  PseudoData pd;
  pd.kappa = rel.link.kappa;
  pd.xi.resize(rel.n());
  pd.z.resize(rel.n());
  for (int t = 0; t < rel.n(); ++t) {
    double xi = dot_[m][t];
    if (bias_on) xi += bias.row_mean[rel.row[t]] + bias.col_mean[rel.col[t]];
    pd.xi[t] = xi;
    pd.z[t] = xi - rel.link.dnll(xi, rel.x[t]) / pd.kappa;
  }
  return pd;
}

void Engine::update_pseudodata(int m) { pseudo_[m] = compute_pseudodata(m); }

void Engine::check_finite(double v, const std::string& term) const {
  if (!std::isfinite(v))
    throw EngineError("objective is not finite in term '" + term + "'");
}

ElboTerms Engine::elbo_terms() const {
  if (map_) throw Error("elbo_terms applies to variational variants only");
  const Hyperparams& h = state_.hyper;
  const int K = state_.rank();
  ElboTerms terms;

  // Likelihood contributions (exact Gaussian; quadratic surrogate otherwise).
  for (int m = 0; m < schema_.n_relations(); ++m) {
    const RelationData& rel = data_.rel[m];
    if (rel.n() == 0) continue;
    if (rel.gaussian()) {
      const double p = state_.noise.shape[m];
      const double q = state_.noise.rate[m];
      terms.likelihood += 0.5 * rel.n() * (gamma_e_log(p, q) - kLog2Pi) -
                          0.5 * state_.noise.mean(m) * expected_sq_residual_sum(m);
    } else {
      const PseudoData& pd = pseudo_[m];
      const double kappa = pd.kappa;
      const Relation& r = schema_.relations[m];
      const bool bias_on = state_.variant.bias_enabled;
      const RelationBias& bias = state_.bias.rel[m];
      const MatrixRM& U = state_.factors.mean[r.row_set];
      const MatrixRM& V = state_.factors.mean[r.col_set];
      const MatrixRM& Uv = state_.factors.var[r.row_set];
      const MatrixRM& Vv = state_.factors.var[r.col_set];
      for (int t = 0; t < rel.n(); ++t) {
        const int i = rel.row[t];
        const int j = rel.col[t];
        double xi_bar = dot_[m][t];
        if (bias_on) xi_bar += bias.row_mean[i] + bias.col_mean[j];
        double var_xi = 0.0;
        if (bias_on) var_xi += bias.row_var[i] + bias.col_var[j];
        for (int k = 0; k < K; ++k)
          var_xi += U(i, k) * U(i, k) * Vv(j, k) + V(j, k) * V(j, k) * Uv(i, k) +
                    Uv(i, k) * Vv(j, k);
        const double fp = rel.link.dnll(pd.xi[t], rel.x[t]);
        const double dz = pd.z[t] - xi_bar;
        terms.likelihood += -rel.link.nll(pd.xi[t], rel.x[t]) +
                            fp * fp / (2.0 * kappa) -
                            0.5 * kappa * (dz * dz + var_xi);
      }
    }
  }
  check_finite(terms.likelihood, "likelihood");

  // Factor priors and entropies.
  for (int e = 0; e < schema_.n_sets(); ++e) {
    const int d = schema_.entity_sets[e].size;
    for (int k = 0; k < K; ++k) {
      const double alpha = state_.ard.mean(e, k);
      const double e_log_alpha =
          gamma_e_log(state_.ard.shape[e][k], state_.ard.rate[e][k]);
      for (int i = 0; i < d; ++i) {
        const double u = state_.factors.mean[e](i, k);
        const double v = state_.factors.var[e](i, k);
        terms.factor +=
            0.5 * (e_log_alpha - alpha * (u * u + v) + std::log(v) + 1.0);
      }
    }
  }
  check_finite(terms.factor, "factor");

  // ARD priors and entropies; tied variants own one Gamma per factor.
  const int ard_sets = tied_ ? 1 : schema_.n_sets();
  for (int e = 0; e < ard_sets; ++e) {
    for (int k = 0; k < K; ++k) {
      const double a = state_.ard.shape[e][k];
      const double b = state_.ard.rate[e][k];
      terms.ard += h.a0 * std::log(h.b0) - std::lgamma(h.a0) +
                   (h.a0 - 1.0) * gamma_e_log(a, b) - h.b0 * (a / b) +
                   gamma_entropy(a, b);
    }
  }
  check_finite(terms.ard, "ard");

  // Noise priors and entropies (Gaussian relations only; non-Gaussian
  // precisions are pinned to the curvature bound).
  for (int m = 0; m < schema_.n_relations(); ++m) {
    if (!data_.rel[m].gaussian()) continue;
    const double p = state_.noise.shape[m];
    const double q = state_.noise.rate[m];
    terms.noise += h.p0 * std::log(h.q0) - std::lgamma(h.p0) +
                   (h.p0 - 1.0) * gamma_e_log(p, q) - h.q0 * (p / q) +
                   gamma_entropy(p, q);
  }
  check_finite(terms.noise, "noise");

  if (state_.variant.bias_enabled) {
    for (int m = 0; m < schema_.n_relations(); ++m) {
      const RelationBias& bias = state_.bias.rel[m];
      auto side = [&](const Eigen::VectorXd& mean, const Eigen::VectorXd& var,
                      double mu, double sigma2) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
          const double c = mean[i] - mu;
          acc += -0.5 * (kLog2Pi + std::log(sigma2)) -
                 (c * c + var[i]) / (2.0 * sigma2) +
                 0.5 * (kLog2Pi + std::log(var[i]) + 1.0);
        }
        // Hyper-mean prior N(0,1) at its point estimate.
        acc += -0.5 * kLog2Pi - 0.5 * mu * mu;
        return acc;
      };
      terms.bias += side(bias.row_mean, bias.row_var, bias.mu_row,
                         bias.sigma2_row);
      terms.bias += side(bias.col_mean, bias.col_var, bias.mu_col,
                         bias.sigma2_col);
    }
  }
  check_finite(terms.bias, "bias");
  return terms;
}

double Engine::log_posterior() const {
  if (!map_) throw Error("log_posterior applies to MAP variants only");
  const Hyperparams& h = state_.hyper;
  double obj = 0.0;

  for (int m = 0; m < schema_.n_relations(); ++m) {
    const RelationData& rel = data_.rel[m];
    if (rel.gaussian()) {
      const double tau = state_.noise.mean(m);
      if (rel.n() > 0)
        obj += 0.5 * rel.n() * (std::log(tau) - kLog2Pi) -
               0.5 * tau * expected_sq_residual_sum(m);
      obj += log_gamma_pdf(tau, h.p0, h.q0);
    } else {
      const PseudoData& pd = pseudo_[m];
      const bool bias_on = state_.variant.bias_enabled;
      const RelationBias& bias = state_.bias.rel[m];
      for (int t = 0; t < rel.n(); ++t) {
        double xi = dot_[m][t];
        if (bias_on)
          xi += bias.row_mean[rel.row[t]] + bias.col_mean[rel.col[t]];
        const double fp = rel.link.dnll(pd.xi[t], rel.x[t]);
        const double dz = pd.z[t] - xi;
        obj += -rel.link.nll(pd.xi[t], rel.x[t]) +
               fp * fp / (2.0 * pd.kappa) - 0.5 * pd.kappa * dz * dz;
      }
    }
  }

  for (int e = 0; e < schema_.n_sets(); ++e) {
    const int d = schema_.entity_sets[e].size;
    for (int k = 0; k < state_.rank(); ++k) {
      const double alpha = state_.ard.mean(e, k);
      for (int i = 0; i < d; ++i) {
        const double u = state_.factors.mean[e](i, k);
        obj += 0.5 * (std::log(alpha) - kLog2Pi) - 0.5 * alpha * u * u;
      }
    }
  }
  const int ard_sets = tied_ ? 1 : schema_.n_sets();
  for (int e = 0; e < ard_sets; ++e)
    for (int k = 0; k < state_.rank(); ++k)
      obj += log_gamma_pdf(state_.ard.mean(e, k), h.a0, h.b0);

  if (state_.variant.bias_enabled) {
    for (int m = 0; m < schema_.n_relations(); ++m) {
      const RelationBias& bias = state_.bias.rel[m];
      auto side = [&](const Eigen::VectorXd& mean, double mu, double sigma2) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < mean.size(); ++i) {
          const double c = mean[i] - mu;
          acc += -0.5 * (kLog2Pi + std::log(sigma2)) - c * c / (2.0 * sigma2);
        }
        acc += -0.5 * kLog2Pi - 0.5 * mu * mu;
        return acc;
      };
      obj += side(bias.row_mean, bias.mu_row, bias.sigma2_row);
      obj += side(bias.col_mean, bias.mu_col, bias.sigma2_col);
    }
  }
  check_finite(obj, "log_posterior");
  return obj;
}

double Engine::objective() const { return map_ ? log_posterior() : elbo(); }

double Engine::train_rmse(int m) const {
  const RelationData& rel = data_.rel[m];
  if (rel.n() == 0) return 0.0;
  const bool bias_on = state_.variant.bias_enabled;
  const RelationBias& bias = state_.bias.rel[m];
  double sum = 0.0;
  for (int t = 0; t < rel.n(); ++t) {
    double xi = dot_[m][t];
    if (bias_on) xi += bias.row_mean[rel.row[t]] + bias.col_mean[rel.col[t]];
    const double err = rel.link.mean(xi) - rel.x[t];
    sum += err * err;
  }
  return std::sqrt(sum / rel.n());
}

void Engine::sweep() {
  max_delta_ = 0.0;
  // 1-2: factor means and variances, one column at a time per set.
  for (int e = 0; e < schema_.n_sets(); ++e)
    for (int k = 0; k < state_.rank(); ++k)
      newton_column(e, k, column_stats(e, k));
  // 3: biases.
  if (state_.variant.bias_enabled)
    for (int m = 0; m < schema_.n_relations(); ++m) update_bias(m);
  // 4: ARD precisions.
  update_ard();
  // 5: noise precisions / pseudo-data.
  for (int m = 0; m < schema_.n_relations(); ++m) {
    if (data_.rel[m].gaussian())
      update_tau(m);
    else
      update_pseudodata(m);
  }
}

FitResult Engine::run() {
  const int M = schema_.n_relations();
  FitResult result;
  double prev = objective();
  bool converged = false;
  for (int iter = 1; iter <= state_.hyper.max_iters && !converged; ++iter) {
    sweep();
    const double obj = objective();
    const double scale = std::max(std::abs(prev), 1e-12);
    if (check_monotone_ && obj < prev - 1e-8 * scale)
      throw EngineError("objective decreased from " + format_double(prev) +
                        " to " + format_double(obj) + " at sweep " +
                        std::to_string(iter) +
                        " (coordinate ascent must be monotone here)");
    TraceRecord rec;
    rec.iteration = iter;
    rec.elbo = obj;
    rec.max_delta = max_delta_;
    for (int m = 0; m < M; ++m) rec.train_rmse.push_back(train_rmse(m));
    result.trace.push_back(std::move(rec));
    if (std::abs(obj - prev) < state_.hyper.tol * scale) converged = true;
    prev = obj;
  }
  result.state = state_;
  result.converged = converged;
  return result;
}

FitResult fit(const Schema& schema, const Dataset& data,
              const Hyperparams& hyper, ModelVariant variant, uint64_t seed) {
  if (is_map(variant.kind))
    throw Error("fit() runs variational variants; use fit_map() for " +
                to_string(variant.kind));
  Engine engine(schema, data, init_model(schema, hyper, variant, seed));
  return engine.run();
}

void save_trace_csv(const std::vector<TraceRecord>& trace,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace '" + path + "'");
  const size_t M = trace.empty() ? 0 : trace.front().train_rmse.size();
  out << "iteration,elbo";
  for (size_t m = 0; m < M; ++m) out << ",train_rmse_" << m;
  out << ",max_delta\n";
  for (const TraceRecord& rec : trace) {
    out << rec.iteration << ',' << format_double(rec.elbo);
    for (double r : rec.train_rmse) out << ',' << format_double(r);
    out << ',' << format_double(rec.max_delta) << "\n";
  }
}

}  // namespace gcmf
