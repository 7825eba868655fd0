#pragma once

// Spike-extraction filters applied to raw fluorescence:
//
//   lowpass -> backward_difference -> hard_threshold
//           -> [magnitude_smooth] -> [global_regularize]
//
// Window filters emit only the samples whose full window exists; the number
// of head samples dropped is added to Recording::time_offset.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conneckt/error.hpp"
#include "conneckt/io.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

enum class LowPass { None, F1, F2, F3, F4 };
enum class Regularizer { None, W, WStar };

inline const char* to_string(LowPass kind) {
  switch (kind) {
    case LowPass::None: return "none";
    case LowPass::F1: return "f1";
    case LowPass::F2: return "f2";
    case LowPass::F3: return "f3";
    case LowPass::F4: return "f4";
  }
  return "?";
}

inline const char* to_string(Regularizer kind) {
  switch (kind) {
    case Regularizer::None: return "none";
    case Regularizer::W: return "w";
    case Regularizer::WStar: return "wstar";
  }
  return "?";
}

inline LowPass parse_lowpass(std::string_view name) {
  for (auto k : {LowPass::None, LowPass::F1, LowPass::F2, LowPass::F3, LowPass::F4}) {
    if (name == to_string(k)) return k;
  }
  fail(ErrorKind::Parameter, "unknown low-pass filter '" + std::string(name) + "'");
}

inline Regularizer parse_regularizer(std::string_view name) {
  for (auto k : {Regularizer::None, Regularizer::W, Regularizer::WStar}) {
    if (name == to_string(k)) return k;
  }
  fail(ErrorKind::Parameter, "unknown regularizer '" + std::string(name) + "'");
}

/// Piecewise linear map on [0, inf), clamped to the end values outside the
/// knot range.
class PiecewiseLinear {
 public:
  using Knot = std::pair<double, double>;

  PiecewiseLinear() : PiecewiseLinear(constant(1.0)) {}

  explicit PiecewiseLinear(std::vector<Knot> knots) : knots_(std::move(knots)) {
    if (knots_.empty()) fail(ErrorKind::Parameter, "piecewise function needs a knot");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const auto [x, y] = knots_[i];
      if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0) {
        fail(ErrorKind::Parameter, "knot " + std::to_string(i + 1) +
                                       " must be finite with x >= 0 and y >= 0");
      }
      if (i > 0 && !(x > knots_[i - 1].first)) {
        fail(ErrorKind::Parameter, "knot x values must be strictly increasing");
      }
    }
  }

  static PiecewiseLinear constant(double y) {
    return PiecewiseLinear(std::vector<Knot>{{0.0, y}});
  }

  double operator()(double x) const {
    if (x <= knots_.front().first) return knots_.front().second;
    if (x >= knots_.back().first) return knots_.back().second;
    std::size_t hi = 1;
    while (knots_[hi].first < x) ++hi;
    const auto [x0, y0] = knots_[hi - 1];
    const auto [x1, y1] = knots_[hi];
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
  }

  bool is_constant_one() const {
    for (const auto& [x, y] : knots_) {
      if (y != 1.0) return false;
    }
    return true;
  }

  const std::vector<Knot>& knots() const noexcept { return knots_; }

  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

 private:
  std::vector<Knot> knots_;
};

/// Reads "x,y" knot lines.
inline PiecewiseLinear parse_piecewise_linear(std::string_view text) {
  std::vector<PiecewiseLinear::Knot> knots;
  const auto lines = detail::split_lines(text);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (detail::is_blank(lines[l])) continue;
    const auto fields = detail::split_fields(lines[l]);
    if (fields.size() != 2) {
      fail(ErrorKind::Parse, "line " + std::to_string(l + 1) + ": expected 'x,y'");
    }
    knots.emplace_back(detail::parse_real(fields[0], l + 1, 1),
                       detail::parse_real(fields[1], l + 1, 2));
  }
  return PiecewiseLinear(std::move(knots));
}

inline PiecewiseLinear load_piecewise_linear(const std::string& path) {
  return parse_piecewise_linear(detail::read_file(path));
}

struct PipelineConfig {
  LowPass lowpass = LowPass::F1;
  double tau = 0.15;
  /// Magnitude-smoothing exponent; the stage is skipped when c == 1.
  double c = 1.0;
  Regularizer regularizer = Regularizer::W;
  PiecewiseLinear k = PiecewiseLinear::constant(1.0);

  void validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
      fail(ErrorKind::Parameter, "tau must be > 0, got " + format_real(tau));
    }
    if (!(c > 0.0 && c <= 1.0)) {
      fail(ErrorKind::Parameter, "c must lie in (0, 1], got " + format_real(c));
    }
  }
};

// ---------------------------------------------------------------------------
// Stages

namespace detail {

struct Window {
  int first_offset;                // offset of the first tap relative to t
  std::vector<double> taps;        // coefficients, ascending offset
  std::size_t head() const { return first_offset < 0 ? static_cast<std::size_t>(-first_offset) : 0; }
  std::size_t span() const { return taps.size(); }
};

inline Window window_for(LowPass kind) {
  switch (kind) {
    case LowPass::F1: return {-1, {1.0, 1.0, 1.0}};
    case LowPass::F2: return {-3, {0.4, 0.8, 1.0, 1.0}};
    case LowPass::F3: return {-1, {1.0, 1.0, 1.0, 1.0}};
    case LowPass::F4: return {0, {1.0, 1.0, 1.0, 1.0}};
    case LowPass::None: break;
  }
  return {0, {1.0}};
}

inline void require_nonnegative(const Recording& rec, const char* stage) {
  const auto& v = rec.values;
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    for (Eigen::Index t = 0; t < v.cols(); ++t) {
      if (v(i, t) < 0.0) {
        fail(ErrorKind::Contract,
             std::string(stage) + " requires nonnegative input; neuron " +
                 std::to_string(i) + " has " + format_real(v(i, t)) +
                 " at sample " + std::to_string(t));
      }
    }
  }
}

}  // namespace detail

/// Moving-window low-pass filter. Output length is T - span + 1.
inline Recording lowpass(const Recording& rec, LowPass kind) {
  if (kind == LowPass::None) return rec;
  const auto window = detail::window_for(kind);
  const std::size_t T = rec.samples();
  if (T < window.span()) {
    fail(ErrorKind::Shape, std::string("low-pass filter ") + to_string(kind) +
                               " needs at least " + std::to_string(window.span()) +
                               " samples, got " + std::to_string(T));
  }
  const auto out_len = static_cast<Eigen::Index>(T - window.span() + 1);
  Recording out;
  out.values.resize(rec.values.rows(), out_len);
  out.time_offset = rec.time_offset + window.head();
  for (Eigen::Index i = 0; i < rec.values.rows(); ++i) {
    const double* x = rec.values.row(i).data();
    double* y = out.values.row(i).data();
    for (Eigen::Index t = 0; t < out_len; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < window.taps.size(); ++k) {
        acc += window.taps[k] * x[t + static_cast<Eigen::Index>(k)];
      }
      y[t] = acc;
    }
  }
  return out;
}

/// x[t] - x[t-1]; drops the first sample.
inline Recording backward_difference(const Recording& rec) {
  const std::size_t T = rec.samples();
  if (T < 2) {
    fail(ErrorKind::Shape,
         "backward difference needs at least 2 samples, got " + std::to_string(T));
  }
  Recording out;
  const auto n = static_cast<Eigen::Index>(T - 1);
  out.values = rec.values.rightCols(n) - rec.values.leftCols(n);
  out.time_offset = rec.time_offset + 1;
  return out;
}

/// Keeps values >= tau, zeroes the rest.
inline Recording hard_threshold(const Recording& rec, double tau) {
  if (!(tau > 0.0)) {
    fail(ErrorKind::Parameter, "threshold tau must be > 0, got " + format_real(tau));
  }
  Recording out;
  out.values = (rec.values.array() >= tau).select(rec.values.array(), 0.0).matrix();
  out.time_offset = rec.time_offset;
  return out;
}

/// Elementwise x^c on a nonnegative recording, with 0^c = 0.
inline Recording magnitude_smooth(const Recording& rec, double c) {
  if (!(c > 0.0 && c <= 1.0)) {
    fail(ErrorKind::Parameter, "exponent c must lie in (0, 1], got " + format_real(c));
  }
  detail::require_nonnegative(rec, "magnitude smoothing");
  Recording out;
  out.values = rec.values.unaryExpr(
      [c](double x) { return x == 0.0 ? 0.0 : std::pow(x, c); });
  out.time_offset = rec.time_offset;
  return out;
}

/// Rescales each sample by the network-wide activity S_t = sum_j x_j^t:
///   W:     (x + 1)^(1 + 1/S_t)
///   WStar: ((x + 1)^(1 + 1/S_t))^k(S_t)
/// Every neuron gets 1 at samples where S_t == 0.
inline Recording global_regularize(const Recording& rec, Regularizer mode,
                                   const PiecewiseLinear& k = PiecewiseLinear::constant(1.0)) {
  if (mode == Regularizer::None) return rec;
  detail::require_nonnegative(rec, "global regularization");
  const auto p = rec.values.rows();
  const auto T = rec.values.cols();
  Recording out;
  out.values.resize(p, T);
  out.time_offset = rec.time_offset;
  for (Eigen::Index t = 0; t < T; ++t) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) total += rec.values(j, t);
    if (total == 0.0) {
      out.values.col(t).setOnes();
      continue;
    }
    const double exponent = 1.0 + 1.0 / total;
    const double modifier = mode == Regularizer::WStar ? k(total) : 1.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      double v = std::pow(rec.values(j, t) + 1.0, exponent);
      if (mode == Regularizer::WStar) v = std::pow(v, modifier);
      out.values(j, t) = v;
    }
  }
  return out;
}

/// lowpass followed by backward_difference; the part of the pipeline that
/// does not depend on tau.
inline Recording differenced(const Recording& rec, LowPass kind) {
  return backward_difference(lowpass(rec, kind));
}

/// Threshold onward, applied to the output of differenced().
inline Recording finish_pipeline(const Recording& diff, const PipelineConfig& cfg) {
  cfg.validate();
  Recording out = hard_threshold(diff, cfg.tau);
  if (cfg.c < 1.0) out = magnitude_smooth(out, cfg.c);
  if (cfg.regularizer != Regularizer::None) {
    out = global_regularize(out, cfg.regularizer, cfg.k);
  }
  return out;
}

inline FilteredRecording apply_pipeline(const Recording& rec, const PipelineConfig& cfg) {
  cfg.validate();
  return finish_pipeline(differenced(rec, cfg.lowpass), cfg);
}

}  // namespace conneckt
