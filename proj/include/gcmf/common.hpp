#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace gcmf {

// Factor matrices are accessed row-wise in the inner loops (one row per
// entity), so keep them row-major.
using MatrixRM =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input files; carries the offending line when known.
struct ParseError : Error {
  using Error::Error;
};

// Numerical failure inside an inference run (non-finite objective,
// objective decrease on a Gaussian-only schema).
struct EngineError : Error {
  using Error::Error;
};

// Formats a double with enough digits to round-trip exactly; used for all
// text outputs so reruns are byte-identical.
std::string format_double(double v);

}  // namespace gcmf
