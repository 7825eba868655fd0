#pragma once

#include <cmath>
#include <cstddef>
#include <set>
#include <string>
#include <utility>

#include <Eigen/Core>

#include "conneckt/error.hpp"

namespace conneckt {

/// Neuron-major sample storage: row i holds the series of neuron i.
using SeriesMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fluorescence samples for p neurons over T time steps.
///
/// `time_offset` counts the head samples dropped by filtering, so column t of
/// a filtered recording corresponds to original sample `t + time_offset`.
struct Recording {
  SeriesMatrix values;
  std::size_t time_offset = 0;

  std::size_t neurons() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t samples() const { return static_cast<std::size_t>(values.cols()); }
};

using FluorescenceRecording = Recording;
using FilteredRecording = Recording;

/// Directed graph over p neurons; edges are 0-based ordered pairs, no self-loops.
class Network {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  explicit Network(std::size_t p = 0) : p_(p) {}

  std::size_t size() const noexcept { return p_; }
  const std::set<Edge>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  void add_edge(std::size_t from, std::size_t to) {
    if (from >= p_ || to >= p_) {
      fail(ErrorKind::Range, "edge (" + std::to_string(from) + ", " +
                                 std::to_string(to) + ") outside [0, " +
                                 std::to_string(p_) + ")");
    }
    if (from == to) {
      fail(ErrorKind::Parameter,
           "self-loop on neuron " + std::to_string(from) + " is not allowed");
    }
    edges_.emplace(from, to);
  }

  bool has_edge(std::size_t from, std::size_t to) const {
    return edges_.count({from, to}) != 0;
  }

  friend bool operator==(const Network&, const Network&) = default;

 private:
  std::size_t p_;
  std::set<Edge> edges_;
};

/// p x p edge scores. The diagonal carries no meaning and is kept at 0.
struct AssociationMatrix {
  Eigen::MatrixXd scores;
  bool symmetric = false;

  std::size_t size() const { return static_cast<std::size_t>(scores.rows()); }
};

/// Copies the upper triangle onto the lower one so that m(i,j) == m(j,i)
/// holds bitwise.
template <typename Derived>
void mirror_upper(Eigen::MatrixBase<Derived>& m) {
  const auto n = m.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 1; i < n; ++i) {
      m(i, j) = m(j, i);
    }
  }
}

}  // namespace conneckt
