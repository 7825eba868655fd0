#pragma once

// Covariance, precision and correlation statistics over filtered recordings.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include "conneckt/error.hpp"
#include "conneckt/io.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

struct CovarianceEstimate {
  Eigen::MatrixXd sigma;
  std::size_t sample_count = 0;

  std::size_t size() const { return static_cast<std::size_t>(sigma.rows()); }
};

struct PrecisionEstimate {
  Eigen::MatrixXd omega;
  std::size_t components_used = 0;

  std::size_t size() const { return static_cast<std::size_t>(omega.rows()); }
};

/// Eigenvalues at or below this fraction of the largest one are never
/// inverted by invert_pca.
inline constexpr double kEigenvalueFloor = 1e-12;

/// Default share of principal components kept by the truncated inverse.
inline constexpr double kDefaultPcaFraction = 0.8;

namespace detail {

inline std::string neuron_label(std::size_t i) {
  return "neuron " + std::to_string(i + 1);
}

}  // namespace detail

/// Unbiased sample covariance (divisor n - 1). Only the upper triangle is
/// accumulated; the lower one is a copy, so the result is exactly symmetric.
inline CovarianceEstimate empirical_covariance(const Recording& rec) {
  const auto n = rec.values.cols();
  if (n < 2) {
    fail(ErrorKind::Shape, "covariance needs at least 2 samples, got " +
                               std::to_string(n));
  }
  const auto p = rec.values.rows();
  const Eigen::VectorXd mean = rec.values.rowwise().mean();
  const SeriesMatrix centered = rec.values.colwise() - mean;

  CovarianceEstimate cov;
  cov.sample_count = static_cast<std::size_t>(n);
  cov.sigma = Eigen::MatrixXd::Zero(p, p);
  cov.sigma.selfadjointView<Eigen::Upper>().rankUpdate(
      centered, 1.0 / static_cast<double>(n - 1));
  mirror_upper(cov.sigma);
  return cov;
}

/// Rescales to unit variances (the correlation matrix).
inline CovarianceEstimate standardized(const CovarianceEstimate& cov) {
  const auto p = cov.sigma.rows();
  Eigen::VectorXd scale(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const double v = cov.sigma(i, i);
    if (!(v > 0.0)) {
      throw DegeneracyError(static_cast<std::size_t>(i),
                            detail::neuron_label(static_cast<std::size_t>(i)) +
                                " has zero variance and cannot be standardized");
    }
    scale(i) = 1.0 / std::sqrt(v);
  }
  CovarianceEstimate out = cov;
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      out.sigma(i, j) = i == j ? 1.0 : cov.sigma(i, j) * scale(i) * scale(j);
    }
  }
  mirror_upper(out.sigma);
  return out;
}

/// Adds lambda to the diagonal.
inline CovarianceEstimate with_ridge(const CovarianceEstimate& cov, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    fail(ErrorKind::Parameter, "ridge must be a finite value >= 0, got " +
                                   format_real(lambda));
  }
  CovarianceEstimate out = cov;
  if (lambda > 0.0) out.sigma.diagonal().array() += lambda;
  return out;
}

/// Exact inverse through a Cholesky factorization.
inline PrecisionEstimate invert_exact(const CovarianceEstimate& cov) {
  const auto p = cov.sigma.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(cov.sigma);
  if (llt.info() != Eigen::Success ||
      !(llt.rcond() > std::numeric_limits<double>::epsilon())) {
    fail(ErrorKind::Conditioning,
         "covariance matrix is singular or not positive definite; use the "
         "truncated PCA inverse or add a ridge term");
  }
  PrecisionEstimate prec;
  prec.omega = llt.solve(Eigen::MatrixXd::Identity(p, p));
  mirror_upper(prec.omega);
  if (!prec.omega.allFinite()) {
    fail(ErrorKind::Conditioning, "inverse covariance has non-finite entries");
  }
  prec.components_used = static_cast<std::size_t>(p);
  return prec;
}

/// Spectral inverse from the leading `components` eigenpairs of the
/// covariance: sum_k v_k v_k^T / lambda_k over the largest eigenvalues, skipping
/// any eigenvalue not above kEigenvalueFloor * lambda_max.
inline PrecisionEstimate invert_pca(const CovarianceEstimate& cov, std::size_t components) {
  const auto p = static_cast<std::size_t>(cov.sigma.rows());
  if (components < 1 || components > p) {
    fail(ErrorKind::Parameter, "PCA component count must lie in [1, " +
                                   std::to_string(p) + "], got " +
                                   std::to_string(components));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.sigma);
  if (eig.info() != Eigen::Success) {
    fail(ErrorKind::Conditioning, "eigendecomposition of the covariance failed");
  }
  // Eigen sorts eigenvalues ascending.
  const Eigen::VectorXd& values = eig.eigenvalues();
  const Eigen::MatrixXd& vectors = eig.eigenvectors();
  const double largest = values(static_cast<Eigen::Index>(p) - 1);
  const double floor = kEigenvalueFloor * largest;

  std::size_t used = 0;
  Eigen::MatrixXd scaled(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(components));
  for (std::size_t r = 0; r < components; ++r) {
    const auto k = static_cast<Eigen::Index>(p - 1 - r);
    if (!(largest > 0.0) || !(values(k) > floor)) break;
    scaled.col(static_cast<Eigen::Index>(used)) = vectors.col(k) / std::sqrt(values(k));
    ++used;
  }

  PrecisionEstimate prec;
  prec.omega = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  if (used > 0) {
    prec.omega.selfadjointView<Eigen::Upper>().rankUpdate(
        scaled.leftCols(static_cast<Eigen::Index>(used)));
  }
  mirror_upper(prec.omega);
  prec.components_used = used;
  return prec;
}

/// -omega_ij / sqrt(omega_ii * omega_jj) off the diagonal, 0 on it.
inline AssociationMatrix partial_correlation(const PrecisionEstimate& prec) {
  const auto p = prec.omega.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    const double d = prec.omega(i, i);
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw DegeneracyError(
          static_cast<std::size_t>(i),
          detail::neuron_label(static_cast<std::size_t>(i)) +
              " has a nonpositive precision diagonal (constant after filtering?)");
    }
  }
  AssociationMatrix out;
  out.scores = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      out.scores(i, j) =
          -prec.omega(i, j) / std::sqrt(prec.omega(i, i) * prec.omega(j, j));
    }
  }
  mirror_upper(out.scores);
  out.symmetric = true;
  return out;
}

inline AssociationMatrix pearson_correlation(const CovarianceEstimate& cov) {
  const auto p = cov.sigma.rows();
  for (Eigen::Index i = 0; i < p; ++i) {
    if (!(cov.sigma(i, i) > 0.0)) {
      throw DegeneracyError(static_cast<std::size_t>(i),
                            detail::neuron_label(static_cast<std::size_t>(i)) +
                                " has zero variance");
    }
  }
  AssociationMatrix out;
  out.scores = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      out.scores(i, j) =
          cov.sigma(i, j) / std::sqrt(cov.sigma(i, i) * cov.sigma(j, j));
    }
  }
  mirror_upper(out.scores);
  out.symmetric = true;
  return out;
}

inline AssociationMatrix pearson_correlation(const Recording& rec) {
  return pearson_correlation(empirical_covariance(rec));
}

// ---------------------------------------------------------------------------
// Options shared by single-configuration and ensemble inference

/// How many principal components the precision estimate keeps.
class PcaSetting {
 public:
  enum class Mode { Off, Count, Fraction };

  static PcaSetting off() { return PcaSetting(Mode::Off, 0.0); }
  static PcaSetting count(std::size_t m) {
    if (m < 1) fail(ErrorKind::Parameter, "PCA component count must be >= 1");
    return PcaSetting(Mode::Count, static_cast<double>(m));
  }
  static PcaSetting fraction(double f) {
    if (!(f > 0.0 && f <= 1.0)) {
      fail(ErrorKind::Parameter, "PCA fraction must lie in (0, 1], got " + format_real(f));
    }
    return PcaSetting(Mode::Fraction, f);
  }

  /// Accepts "off", an integer count ("800") or a fraction of p ("0.8p").
  static PcaSetting parse(std::string_view text) {
    if (text == "off") return off();
    const std::string original(text);
    try {
      if (!text.empty() && text.back() == 'p') {
        text.remove_suffix(1);
        return fraction(detail::parse_real(text, 1, 1));
      }
      const auto m = detail::parse_integer(text, 1, 1);
      if (m < 1) fail(ErrorKind::Parameter, "PCA component count must be >= 1");
      return count(static_cast<std::size_t>(m));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Parse) throw;
      fail(ErrorKind::Parameter, "PCA setting '" + original +
                                     "' is not off, a component count, or a fraction like 0.8p");
    }
  }

  Mode mode() const noexcept { return mode_; }

  /// Component count for p neurons, or nullopt for the exact inverse.
  std::optional<std::size_t> components(std::size_t p) const {
    switch (mode_) {
      case Mode::Off: return std::nullopt;
      case Mode::Count: {
        const auto m = static_cast<std::size_t>(value_);
        if (m > p) {
          fail(ErrorKind::Parameter, "PCA component count " + std::to_string(m) +
                                         " exceeds neuron count " + std::to_string(p));
        }
        return m;
      }
      case Mode::Fraction: {
        const auto m = static_cast<std::size_t>(std::llround(value_ * static_cast<double>(p)));
        return std::clamp<std::size_t>(m, 1, p);
      }
    }
    return std::nullopt;
  }

  std::string to_string() const {
    switch (mode_) {
      case Mode::Off: return "off";
      case Mode::Count: return std::to_string(static_cast<std::size_t>(value_));
      case Mode::Fraction: return format_real(value_) + "p";
    }
    return "?";
  }

  friend bool operator==(const PcaSetting&, const PcaSetting&) = default;

 private:
  PcaSetting(Mode mode, double value) : mode_(mode), value_(value) {}

  Mode mode_;
  double value_;
};

struct InferenceOptions {
  PcaSetting pca = PcaSetting::fraction(kDefaultPcaFraction);
  double ridge = 0.0;
  bool standardize = false;
};

/// Covariance -> [standardize] -> [ridge] -> exact or truncated inverse.
inline PrecisionEstimate estimate_precision(const CovarianceEstimate& cov,
                                            const InferenceOptions& opts) {
  CovarianceEstimate prepared = opts.standardize ? standardized(cov) : cov;
  prepared = with_ridge(prepared, opts.ridge);
  if (const auto m = opts.pca.components(prepared.size())) {
    return invert_pca(prepared, *m);
  }
  return invert_exact(prepared);
}

inline AssociationMatrix partial_correlation(const Recording& filtered,
                                             const InferenceOptions& opts) {
  return partial_correlation(estimate_precision(empirical_covariance(filtered), opts));
}

}  // namespace conneckt
