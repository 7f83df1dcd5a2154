#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcmf/common.hpp"

namespace gcmf {

// Benchmark protocols:
//   circular-likelihood  binary circular data; gCMF/CMF x Bernoulli/Gaussian,
//                        relative errors scaled so CMF+Gaussian is 1.
//   circular-map-vs-vb   Gaussian circular data, M in {1, 3}; single VB fit
//                        with vague priors vs cross-validated MAP.
//   augmented-multiview  kernel-width sweep; gCMF on the augmented schema vs
//                        the two-matrix restrictions (CCA/PCA).
struct ProtocolOptions {
  uint64_t seed = 1;
  int n_seeds = 3;
  bool small = false;  // shrink sizes for quick runs
  int threads = 1;
};

struct ReportRow {
  std::string method;
  std::string setting;
  uint64_t seed = 0;
  double rmse = 0.0;
  double rel_error = 0.0;
};

struct ProtocolReport {
  std::string id;
  std::vector<ReportRow> rows;
  std::string summary;
};

std::vector<std::string> protocol_ids();

ProtocolReport run_protocol(const std::string& id,
                            const ProtocolOptions& options);

void save_report_csv(const ProtocolReport& report, const std::string& path);

}  // namespace gcmf
