#pragma once

#include <Eigen/Dense>

#include <vector>

#include "rsdr/errors.hpp"

namespace rsdr {

/// Predictor matrix (samples as rows) plus a univariate response, the
/// universal input of every estimator in this library.
struct Dataset {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd Y;  // length n

  Eigen::Index n() const { return X.rows(); }
  Eigen::Index p() const { return X.cols(); }

  void validate() const {
    if (X.rows() != Y.size())
      throw InputError("dataset: X and Y must have the same number of rows");
    if (X.rows() < 2) throw InputError("dataset: need at least 2 samples");
    if (!X.allFinite() || !Y.allFinite())
      throw InputError("dataset: entries must be finite");
  }

  Dataset rows(const std::vector<int>& idx) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    out.Y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
      out.Y(static_cast<Eigen::Index>(i)) = Y(idx[i]);
    }
    return out;
  }
};

}  // namespace rsdr
