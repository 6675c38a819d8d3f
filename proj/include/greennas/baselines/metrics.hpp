#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "greennas/dataset/windows.hpp"

namespace greennas {

// [N x F] predictions or targets; row-major so a row is one forecast.
using Predictions = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline Eigen::Map<const Predictions> targets_of(const WindowedDataset& ds) {
  return {ds.y.data(), static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(ds.features)};
}

namespace detail {
template <class A, class B>
void check_pair(const Eigen::DenseBase<A>& pred, const Eigen::DenseBase<B>& truth, const char* what) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw PreconditionError(std::string(what) + ": shape mismatch");
  if (pred.size() == 0) throw PreconditionError(std::string(what) + ": empty input");
}
}  // namespace detail

// Mean of squared errors over every element (all samples, all features).
template <class A, class B>
double loss_mse(const Eigen::DenseBase<A>& pred, const Eigen::DenseBase<B>& truth) {
  detail::check_pair(pred, truth, "loss_mse");
  double sum = 0.0;
  for (Eigen::Index r = 0; r < pred.rows(); ++r)
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      const double d = static_cast<double>(pred(r, c)) - static_cast<double>(truth(r, c));
      sum += d * d;
    }
  return sum / static_cast<double>(pred.size());
}

// Pooled RMSE over all features jointly, in whatever space the inputs are in
// (scaled space for reported model scores).
template <class A, class B>
double rmse(const Eigen::DenseBase<A>& pred, const Eigen::DenseBase<B>& truth) {
  detail::check_pair(pred, truth, "rmse");
  return std::sqrt(loss_mse(pred, truth));
}

template <class A, class B>
std::vector<double> rmse_per_feature(const Eigen::DenseBase<A>& pred, const Eigen::DenseBase<B>& truth) {
  detail::check_pair(pred, truth, "rmse_per_feature");
  std::vector<double> out(static_cast<std::size_t>(pred.cols()));
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    double sum = 0.0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      const double d = static_cast<double>(pred(r, c)) - static_cast<double>(truth(r, c));
      sum += d * d;
    }
    out[static_cast<std::size_t>(c)] = std::sqrt(sum / static_cast<double>(pred.rows()));
  }
  return out;
}

}  // namespace greennas
