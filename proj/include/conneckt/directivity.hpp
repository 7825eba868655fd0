#pragma once

// Direction heuristic layered on a symmetric association matrix.
//
// s(i,j) counts the samples where neuron j rises, one step after neuron i,
// by an amount inside [phi1, phi2]; z = s - s^T is its antisymmetric part.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "conneckt/error.hpp"
#include "conneckt/io.hpp"
#include "conneckt/parallel.hpp"
#include "conneckt/pipeline.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

struct DirectivityConfig {
  double phi1 = 0.2;
  double phi2 = 0.5;
  /// Threshold on z for the r matrix. No tuned value is published.
  double phi3 = 1.0;
  double weight = 0.997;
  /// Divide z by T' - 1 before blending.
  bool z_normalize = false;
  /// Filtered signal the activation counts are taken from.
  PipelineConfig signal = {LowPass::F1, 0.15, 1.0, Regularizer::W, PiecewiseLinear::constant(1.0)};

  void validate() const {
    if (!std::isfinite(phi1) || !std::isfinite(phi2) || !(phi1 < phi2)) {
      fail(ErrorKind::Parameter, "activation window needs finite phi1 < phi2, got [" +
                                     format_real(phi1) + ", " + format_real(phi2) + "]");
    }
    if (!(phi3 > 0.0)) {
      fail(ErrorKind::Parameter, "phi3 must be > 0, got " + format_real(phi3));
    }
    if (!(weight >= 0.0 && weight <= 1.0)) {
      fail(ErrorKind::Parameter, "blend weight must lie in [0, 1], got " + format_real(weight));
    }
  }
};

struct ActivationCounts {
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic> s;
  /// s - s^T, possibly rescaled; antisymmetric.
  Eigen::MatrixXd z;
  std::size_t samples = 0;

  std::size_t size() const { return static_cast<std::size_t>(s.rows()); }
};

inline ActivationCounts activation_counts(const Recording& rec, double phi1, double phi2,
                                          std::size_t threads = 1) {
  const auto T = rec.values.cols();
  if (T < 2) {
    fail(ErrorKind::Shape,
         "activation counts need at least 2 samples, got " + std::to_string(T));
  }
  if (!(phi1 <= phi2)) fail(ErrorKind::Parameter, "activation window needs phi1 <= phi2");
  const auto p = rec.values.rows();

  ActivationCounts counts;
  counts.samples = static_cast<std::size_t>(T);
  counts.s.setZero(p, p);
  parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t row) {
    const auto i = static_cast<Eigen::Index>(row);
    const double* xi = rec.values.row(i).data();
    for (Eigen::Index j = 0; j < p; ++j) {
      const double* xj = rec.values.row(j).data();
      std::int64_t n = 0;
      // x_j(t+1) - x_i(t) in [phi1, phi2], tested against shifted bounds so
      // that decimal inputs such as 1.2 - 1.0 land where exact arithmetic puts them.
      for (Eigen::Index t = 0; t + 1 < T; ++t) {
        const double next = xj[t + 1];
        n += (next >= xi[t] + phi1 && next <= xi[t] + phi2) ? 1 : 0;
      }
      counts.s(i, j) = n;
    }
  });

  counts.z.resize(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) {
      counts.z(i, j) = static_cast<double>(counts.s(i, j) - counts.s(j, i));
    }
  }
  return counts;
}

inline ActivationCounts activation_counts(const Recording& rec, const DirectivityConfig& cfg,
                                          std::size_t threads = 1) {
  cfg.validate();
  return activation_counts(rec, cfg.phi1, cfg.phi2, threads);
}

/// z / (T' - 1). Keeps antisymmetry exact since negation commutes with division.
inline ActivationCounts normalized(ActivationCounts counts) {
  const double scale = static_cast<double>(counts.samples - 1);
  counts.z /= scale;
  return counts;
}

namespace detail {

inline void require_same_size(const AssociationMatrix& m, const ActivationCounts& c) {
  if (m.size() != c.size()) {
    fail(ErrorKind::Dimension, "association matrix has " + std::to_string(m.size()) +
                                   " neurons, activation counts have " +
                                   std::to_string(c.size()));
  }
}

}  // namespace detail

/// r(i,j) = p(i,j) where z(i,j) > phi3, else 0.
inline AssociationMatrix thresholded_association(const AssociationMatrix& m,
                                                 const ActivationCounts& counts,
                                                 double phi3) {
  detail::require_same_size(m, counts);
  if (!(phi3 > 0.0)) fail(ErrorKind::Parameter, "phi3 must be > 0, got " + format_real(phi3));
  AssociationMatrix out;
  out.scores = (counts.z.array() > phi3).select(m.scores.array(), 0.0).matrix();
  out.scores.diagonal().setZero();
  out.symmetric = false;
  return out;
}

/// q = weight * p + (1 - weight) * z.
inline AssociationMatrix blended_association(const AssociationMatrix& m,
                                             const ActivationCounts& counts,
                                             double weight) {
  detail::require_same_size(m, counts);
  if (!(weight >= 0.0 && weight <= 1.0)) {
    fail(ErrorKind::Parameter, "blend weight must lie in [0, 1], got " + format_real(weight));
  }
  AssociationMatrix out;
  out.scores = weight * m.scores + (1.0 - weight) * counts.z;
  out.scores.diagonal().setZero();
  out.symmetric = false;
  return out;
}

}  // namespace conneckt
