#pragma once

// Averaged partial correlation over a (low-pass filter, threshold) grid.
//
// For each filter f the partial-correlation matrices P(f, tau) are averaged
// uniformly over the tau grid; the per-filter means are then combined with
// the filter weights. Accumulation always runs filter-major and
// tau-ascending, so the result does not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "conneckt/error.hpp"
#include "conneckt/inference.hpp"
#include "conneckt/parallel.hpp"
#include "conneckt/pipeline.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

enum class EnsembleMode { Simplified, Full };

inline const char* to_string(EnsembleMode mode) {
  return mode == EnsembleMode::Simplified ? "simplified" : "full";
}

inline EnsembleMode parse_ensemble_mode(std::string_view name) {
  if (name == "simplified") return EnsembleMode::Simplified;
  if (name == "full") return EnsembleMode::Full;
  fail(ErrorKind::Parameter, "unknown ensemble mode '" + std::string(name) + "'");
}

struct WeightedFilter {
  LowPass lowpass;
  double weight;
};

struct EnsembleConfig {
  std::vector<double> tau_grid;
  std::vector<WeightedFilter> filters;
  /// tau and lowpass are overridden per grid point.
  PipelineConfig pipeline_template;
  InferenceOptions inference;
  /// Drop grid points whose covariance is degenerate instead of aborting.
  bool skip_degenerate = false;

  void validate() const {
    if (tau_grid.empty()) fail(ErrorKind::Parameter, "tau grid is empty");
    for (std::size_t i = 0; i < tau_grid.size(); ++i) {
      if (!(tau_grid[i] > 0.0)) {
        fail(ErrorKind::Parameter, "tau grid values must be > 0");
      }
      if (i > 0 && !(tau_grid[i] > tau_grid[i - 1])) {
        fail(ErrorKind::Parameter, "tau grid must be strictly increasing");
      }
    }
    if (filters.empty()) fail(ErrorKind::Parameter, "ensemble needs at least one filter");
    double total = 0.0;
    for (const auto& f : filters) {
      if (!(f.weight >= 0.0) || !std::isfinite(f.weight)) {
        fail(ErrorKind::Parameter, "filter weights must be finite and >= 0");
      }
      total += f.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      fail(ErrorKind::Parameter,
           "filter weights must sum to 1, got " + format_real(total));
    }
  }
};

/// first, first + step, ... up to and including `last`. When all three are
/// short decimals the grid is built in integer units of the finest decimal
/// place, so 0.1:0.21:0.001 yields exactly the doubles 100/1000 ... 210/1000.
inline std::vector<double> tau_range(double first, double last, double step) {
  if (!(step > 0.0) || !(last >= first) || !std::isfinite(last - first)) {
    fail(ErrorKind::Parameter, "tau range needs first <= last and step > 0");
  }
  auto integral = [](double v) { return std::abs(v - std::round(v)) < 1e-6 * std::max(1.0, std::abs(v)); };
  double scale = 1.0;
  for (int d = 0; d <= 9; ++d, scale *= 10.0) {
    if (integral(first * scale) && integral(last * scale) && integral(step * scale)) {
      const auto a = std::llround(first * scale);
      const auto b = std::llround(last * scale);
      const auto s = std::llround(step * scale);
      if (s <= 0) break;
      std::vector<double> grid;
      for (long long v = a; v <= b; v += s) grid.push_back(static_cast<double>(v) / scale);
      return grid;
    }
  }
  const auto count =
      static_cast<std::size_t>(std::floor((last - first) / step + 1e-9)) + 1;
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = first + static_cast<double>(i) * step;
  }
  return grid;
}

/// Thresholds 0.100, 0.101, ..., 0.210 with the published filter weights.
/// Simplified mode keeps f1/f2 and rescales their weights to sum to 1; full
/// mode uses all four filters with magnitude smoothing (c = 0.9) and the
/// k-modulated regularizer.
inline EnsembleConfig default_grid(EnsembleMode mode) {
  EnsembleConfig cfg;
  cfg.tau_grid.reserve(111);
  for (int i = 100; i <= 210; ++i) cfg.tau_grid.push_back(i / 1000.0);

  constexpr double w1 = 0.383, w2 = 0.345, w3 = 0.004, w4 = 0.268;
  if (mode == EnsembleMode::Simplified) {
    cfg.filters = {{LowPass::F1, w1 / (w1 + w2)}, {LowPass::F2, w2 / (w1 + w2)}};
    cfg.pipeline_template.c = 1.0;
    cfg.pipeline_template.regularizer = Regularizer::W;
  } else {
    cfg.filters = {{LowPass::F1, w1}, {LowPass::F2, w2}, {LowPass::F3, w3}, {LowPass::F4, w4}};
    cfg.pipeline_template.c = 0.9;
    cfg.pipeline_template.regularizer = Regularizer::WStar;
  }
  return cfg;
}

struct SkippedPoint {
  LowPass lowpass;
  double tau;
  std::string reason;
};

struct EnsembleResult {
  AssociationMatrix scores;
  std::vector<SkippedPoint> skipped;
  std::size_t evaluated = 0;
};

namespace detail {

inline std::string grid_label(LowPass f, double tau) {
  return std::string("(") + to_string(f) + ", tau=" + format_real(tau) + ")";
}

[[noreturn]] inline void rethrow_annotated(const Error& e, LowPass f, double tau) {
  const std::string what = "grid point " + grid_label(f, tau) + ": " + e.what();
  if (const auto* d = dynamic_cast<const DegeneracyError*>(&e)) {
    throw DegeneracyError(d->neuron(), what);
  }
  throw Error(e.kind(), what);
}

inline bool is_degenerate(const Error& e) {
  return e.kind() == ErrorKind::Degeneracy || e.kind() == ErrorKind::Conditioning;
}

}  // namespace detail

inline EnsembleResult run_ensemble(const Recording& rec, const EnsembleConfig& cfg,
                                   std::size_t threads = 1) {
  cfg.validate();
  cfg.pipeline_template.validate();
  const auto p = static_cast<Eigen::Index>(rec.neurons());

  struct PointResult {
    std::optional<Eigen::MatrixXd> scores;
    std::exception_ptr error;
    bool degenerate = false;
    std::string message;
  };

  EnsembleResult result;
  std::vector<Eigen::MatrixXd> filter_means;
  std::vector<double> surviving_weights;

  for (const auto& filter : cfg.filters) {
    const Recording diff = differenced(rec, filter.lowpass);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(p, p);
    std::size_t survivors = 0;

    const std::size_t batch = std::max<std::size_t>(1, threads);
    for (std::size_t start = 0; start < cfg.tau_grid.size(); start += batch) {
      const std::size_t count = std::min(batch, cfg.tau_grid.size() - start);
      std::vector<PointResult> points(count);
      parallel_for(count, threads, [&](std::size_t k) {
        PipelineConfig point = cfg.pipeline_template;
        point.lowpass = filter.lowpass;
        point.tau = cfg.tau_grid[start + k];
        try {
          const Recording filtered = finish_pipeline(diff, point);
          points[k].scores = partial_correlation(filtered, cfg.inference).scores;
        } catch (const Error& e) {
          points[k].error = std::current_exception();
          points[k].degenerate = detail::is_degenerate(e);
          points[k].message = e.what();
        }
      });

      for (std::size_t k = 0; k < count; ++k) {
        const double tau = cfg.tau_grid[start + k];
        ++result.evaluated;
        if (points[k].error) {
          if (!cfg.skip_degenerate || !points[k].degenerate) {
            try {
              std::rethrow_exception(points[k].error);
            } catch (const Error& e) {
              detail::rethrow_annotated(e, filter.lowpass, tau);
            }
          }
          result.skipped.push_back({filter.lowpass, tau, points[k].message});
          continue;
        }
        sum += *points[k].scores;
        ++survivors;
      }
    }

    if (survivors > 0) {
      filter_means.push_back(sum / static_cast<double>(survivors));
      surviving_weights.push_back(filter.weight);
    }
  }

  if (filter_means.empty()) {
    fail(ErrorKind::Degeneracy, "every ensemble grid point was degenerate");
  }

  double total = 0.0;
  for (double w : surviving_weights) total += w;
  if (!(total > 0.0)) {
    fail(ErrorKind::Degeneracy, "surviving ensemble filters carry zero total weight");
  }

  result.scores.scores = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t f = 0; f < filter_means.size(); ++f) {
    result.scores.scores += (surviving_weights[f] / total) * filter_means[f];
  }
  result.scores.symmetric = true;
  return result;
}

inline AssociationMatrix averaged_partial_correlation(const Recording& rec,
                                                      const EnsembleConfig& cfg,
                                                      std::size_t threads = 1) {
  return run_ensemble(rec, cfg, threads).scores;
}

}  // namespace conneckt
