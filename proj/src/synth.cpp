#include "gcmf/synth.hpp"

#include <cmath>

#include "gcmf/likelihoods.hpp"
#include "gcmf/rng.hpp"

namespace gcmf {

namespace {

// Knuth's product method; rates here stay small (softplus of O(1) logits).
int sample_poisson(Rng& rng, double rate) {
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

double sample_value(Rng& rng, Likelihood lik, double xi, double noise_sd) {
  switch (lik) {
    case Likelihood::Gaussian:
      return xi + noise_sd * rng.normal();
    case Likelihood::Bernoulli:
      return rng.bernoulli(sigmoid(xi)) ? 1.0 : 0.0;
    case Likelihood::Count:
      return sample_poisson(rng, softplus(xi));
  }
  throw Error("unknown likelihood enum value");
}

}  // namespace

void CircularSynthSpec::check() const {
  if (n_matrices < 1) throw Error("need at least one matrix");
  if (size_lo < 1 || size_hi < size_lo) throw Error("bad entity size range");
  if (n_shared < 0 || n_private < 0 || true_rank() < 1)
    throw Error("need at least one planted factor");
  if (likelihoods.size() != 1 &&
      static_cast<int>(likelihoods.size()) != n_matrices)
    throw Error("expected one likelihood per matrix (or a single one)");
  if (!(loading_scale > 0.0) || noise_sd < 0.0)
    throw Error("bad scale parameters");
}

CircularSynthData gen_circular(const CircularSynthSpec& spec) {
  spec.check();
  const int M = spec.n_matrices;
  const int E = M == 1 ? 2 : M;
  const int R = spec.true_rank();

  Rng size_rng(derive_seed(spec.seed, "circular/sizes"));
  std::vector<int> sizes(E);
  for (int e = 0; e < E; ++e)
    sizes[e] = size_rng.uniform_int(spec.size_lo, spec.size_hi);

  CircularSynthData out;
  out.schema =
      circular_schema(M, sizes, spec.likelihoods, spec.fit_rank());

  // Planted mask: shared factors load on every set, private factor p of
  // matrix m only on that matrix's two sets.
  out.factor_on_set.assign(E, std::vector<bool>(R, false));
  for (int e = 0; e < E; ++e)
    for (int r = 0; r < spec.n_shared; ++r) out.factor_on_set[e][r] = true;
  for (int m = 0; m < M; ++m) {
    const Relation& rel = out.schema.relations[m];
    for (int p = 0; p < spec.n_private; ++p) {
      const int r = spec.n_shared + m * spec.n_private + p;
      out.factor_on_set[rel.row_set][r] = true;
      out.factor_on_set[rel.col_set][r] = true;
    }
  }

  for (int e = 0; e < E; ++e) {
    MatrixRM factors = MatrixRM::Zero(sizes[e], R);
    Rng rng(derive_seed(spec.seed, "circular/factors", static_cast<uint64_t>(e)));
    for (int i = 0; i < sizes[e]; ++i)
      for (int r = 0; r < R; ++r)
        if (out.factor_on_set[e][r])
          factors(i, r) = spec.loading_scale * rng.normal();
    out.true_factors.push_back(std::move(factors));
  }

  for (int m = 0; m < M; ++m) {
    const Relation& rel = out.schema.relations[m];
    const MatrixRM& U = out.true_factors[rel.row_set];
    const MatrixRM& V = out.true_factors[rel.col_set];
    Rng rng(derive_seed(spec.seed, "circular/matrix", static_cast<uint64_t>(m)));
    ObservedMatrix matrix;
    matrix.relation_id = m;
    matrix.entries.reserve(static_cast<size_t>(U.rows()) * V.rows());
    for (int i = 0; i < U.rows(); ++i)
      for (int j = 0; j < V.rows(); ++j) {
        const double xi = U.row(i).dot(V.row(j));
        matrix.entries.push_back(
            {i, j, sample_value(rng, rel.likelihood, xi, spec.noise_sd)});
      }
    out.data.push_back(std::move(matrix));
  }
  return out;
}

void ProximitySpec::check() const {
  if (row_locations.empty() || col_locations.empty())
    throw Error("proximity locations must be non-empty");
  if (!(width > 0.0)) throw Error("kernel width must be positive");
}

double proximity_probability(const ProximitySpec& spec, int i, int j) {
  const double d = std::abs(spec.row_locations[i] - spec.col_locations[j]);
  switch (spec.kernel) {
    case ProximitySpec::Kernel::Exponential:
      return std::exp(-d / spec.width);
    case ProximitySpec::Kernel::Gaussian:
      return std::exp(-d * d / (2.0 * spec.width * spec.width));
  }
  throw Error("unknown kernel");
}

std::vector<double> grid_locations(int n, double lo, double hi) {
  std::vector<double> loc(n);
  if (n == 1) {
    loc[0] = 0.5 * (lo + hi);
    return loc;
  }
  for (int i = 0; i < n; ++i) loc[i] = lo + (hi - lo) * i / (n - 1);
  return loc;
}

void MultiviewSynthSpec::check() const {
  if (n_rows < 1 || d1 < 1 || d2 < 1) throw Error("bad multiview sizes");
  if (n_shared < 0 || n_private < 0 || n_shared + n_private < 1)
    throw Error("need at least one planted factor");
  if (view_obs_fraction <= 0.0 || view_obs_fraction > 1.0 ||
      prox_obs_fraction <= 0.0 || prox_obs_fraction > 1.0)
    throw Error("observation fractions must lie in (0, 1]");
  if (fit_rank < 1) throw Error("fit rank must be positive");
}

MultiviewSynthData gen_augmented_multiview(const MultiviewSynthSpec& spec,
                                           const ProximitySpec& prox) {
  spec.check();
  prox.check();
  if (static_cast<int>(prox.row_locations.size()) != spec.d1 ||
      static_cast<int>(prox.col_locations.size()) != spec.d2)
    throw Error("proximity locations must match the view column counts");

  MultiviewSynthData out;
  out.locations1 = prox.row_locations;
  out.locations2 = prox.col_locations;
  Schema& schema = out.schema;
  schema.rank = spec.fit_rank;
  schema.entity_sets = {{0, "rows", spec.n_rows},
                        {1, "cols1", spec.d1},
                        {2, "cols2", spec.d2}};
  schema.relations = {{0, 0, 1, Likelihood::Gaussian},
                      {1, 0, 2, Likelihood::Gaussian},
                      {2, 1, 2, Likelihood::Bernoulli}};

  // Shared factors: the same smooth function of location loads the columns
  // of both views, so proximity in location implies similar loadings.
  Rng wave_rng(derive_seed(spec.seed, "multiview/waves"));
  std::vector<double> omega(spec.n_shared), phase(spec.n_shared);
  for (int s = 0; s < spec.n_shared; ++s) {
    omega[s] = wave_rng.uniform(0.4, 1.2);
    phase[s] = wave_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  }
  auto smooth_loading = [&](int s, double l) {
    return spec.loading_scale * std::sin(omega[s] * l + phase[s]);
  };

  Rng row_rng(derive_seed(spec.seed, "multiview/rows"));
  MatrixRM shared_rows(spec.n_rows, spec.n_shared);
  for (int i = 0; i < spec.n_rows; ++i)
    for (int s = 0; s < spec.n_shared; ++s) shared_rows(i, s) = row_rng.normal();

  auto gen_view = [&](int view, int d, const std::vector<double>& loc) {
    Rng rng(derive_seed(spec.seed, "multiview/view", static_cast<uint64_t>(view)));
    MatrixRM private_rows(spec.n_rows, spec.n_private);
    MatrixRM private_cols(d, spec.n_private);
    for (int i = 0; i < spec.n_rows; ++i)
      for (int p = 0; p < spec.n_private; ++p) private_rows(i, p) = rng.normal();
    for (int j = 0; j < d; ++j)
      for (int p = 0; p < spec.n_private; ++p)
        private_cols(j, p) = spec.loading_scale * rng.normal();

    ObservedMatrix matrix;
    matrix.relation_id = view;
    matrix.entries.reserve(static_cast<size_t>(spec.n_rows) * d);
    for (int i = 0; i < spec.n_rows; ++i)
      for (int j = 0; j < d; ++j) {
        double xi = 0.0;
        for (int s = 0; s < spec.n_shared; ++s)
          xi += shared_rows(i, s) * smooth_loading(s, loc[j]);
        for (int p = 0; p < spec.n_private; ++p)
          xi += private_rows(i, p) * private_cols(j, p);
        matrix.entries.push_back({i, j, xi + spec.noise_sd * rng.normal()});
      }
    return matrix;
  };
  ObservedMatrix x1 = gen_view(0, spec.d1, out.locations1);
  ObservedMatrix x2 = gen_view(1, spec.d2, out.locations2);

  Rng prox_rng(derive_seed(spec.seed, "multiview/proximity"));
  ObservedMatrix x3;
  x3.relation_id = 2;
  for (int i = 0; i < spec.d1; ++i)
    for (int j = 0; j < spec.d2; ++j) {
      const double p = proximity_probability(prox, i, j);
      x3.entries.push_back({i, j, prox_rng.bernoulli(p) ? 1.0 : 0.0});
    }

  auto subsample = [&](ObservedMatrix matrix, double fraction,
                       const char* label) {
    if (fraction >= 1.0) return matrix;
    auto [kept, dropped] = holdout_split(
        matrix, 1.0 - fraction, derive_seed(spec.seed, label));
    return kept;
  };
  out.data.push_back(subsample(std::move(x1), spec.view_obs_fraction,
                               "multiview/subsample1"));
  out.data.push_back(subsample(std::move(x2), spec.view_obs_fraction,
                               "multiview/subsample2"));
  out.data.push_back(subsample(std::move(x3), spec.prox_obs_fraction,
                               "multiview/subsample3"));
  return out;
}

MultiviewSynthData gen_augmented_multiview(const MultiviewSynthSpec& spec,
                                           ProximitySpec::Kernel kernel,
                                           double width) {
  ProximitySpec prox;
  // Interleaved grids: the two views' columns sit at offset locations, so a
  // vanishing width yields an (almost) all-zero proximity matrix.
  prox.row_locations = grid_locations(spec.d1, 0.0, 10.0);
  const double offset = spec.d2 > 1 ? 0.5 * 10.0 / (spec.d2 - 1) : 0.25;
  prox.col_locations = grid_locations(spec.d2, offset, 10.0 + offset);
  prox.kernel = kernel;
  prox.width = width;
  return gen_augmented_multiview(spec, prox);
}

BiasSynthData gen_bias_only(int n_rows, int n_cols, double noise_sd,
                            uint64_t seed) {
  if (n_rows < 1 || n_cols < 1) throw Error("bad bias-only sizes");
  BiasSynthData out;
  out.schema.rank = 1;
  out.schema.entity_sets = {{0, "rows", n_rows}, {1, "cols", n_cols}};
  out.schema.relations = {{0, 0, 1, Likelihood::Gaussian}};

  Rng rng(derive_seed(seed, "bias-only"));
  out.row_bias.resize(n_rows);
  out.col_bias.resize(n_cols);
  for (int i = 0; i < n_rows; ++i) out.row_bias[i] = rng.normal();
  for (int j = 0; j < n_cols; ++j) out.col_bias[j] = rng.normal();

  ObservedMatrix matrix;
  matrix.relation_id = 0;
  for (int i = 0; i < n_rows; ++i)
    for (int j = 0; j < n_cols; ++j)
      matrix.entries.push_back(
          {i, j, out.row_bias[i] + out.col_bias[j] + noise_sd * rng.normal()});
  out.data.push_back(std::move(matrix));
  return out;
}

}  // namespace gcmf
