#pragma once

// Ranking metrics of an association matrix against a ground-truth network.
//
// The pair universe is every ordered pair (i, j) with i != j. Tied scores
// get average ranks for AUROC (a tie between a positive and a negative counts
// one half) and are consumed as one block for AUPRC.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "conneckt/error.hpp"
#include "conneckt/io.hpp"
#include "conneckt/types.hpp"

namespace conneckt {

/// Pair label: nonzero marks a true edge.
using Label = std::uint8_t;

struct ScoredPair {
  std::size_t from;
  std::size_t to;
  double score;
};

struct RocResult {
  double auroc = 0.0;
  std::vector<CurvePoint> points;  // (fpr, tpr)
};

struct PrResult {
  double auprc = 0.0;
  std::vector<CurvePoint> points;  // (recall, precision)
};

struct EvalReport {
  double auroc = 0.0;
  double auprc = 0.0;
  std::vector<CurvePoint> roc_points;
  std::vector<CurvePoint> pr_points;
  std::size_t positives = 0;
  std::size_t pairs = 0;
};

/// All off-diagonal pairs, highest score first; ties in (from, to) order.
inline std::vector<ScoredPair> rank_pairs(const AssociationMatrix& m) {
  const std::size_t p = m.size();
  std::vector<ScoredPair> pairs;
  pairs.reserve(p > 0 ? p * (p - 1) : 0);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (i != j) {
        pairs.push_back({i, j, m.scores(static_cast<Eigen::Index>(i),
                                        static_cast<Eigen::Index>(j))});
      }
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const ScoredPair& a, const ScoredPair& b) { return a.score > b.score; });
  return pairs;
}

namespace detail {

inline void require_mixed_labels(std::size_t positives, std::size_t total) {
  if (positives == 0 || positives == total) {
    fail(ErrorKind::Evaluation,
         "evaluation needs at least one edge and one non-edge, got " +
             std::to_string(positives) + " positives among " + std::to_string(total) +
             " pairs");
  }
}

inline std::size_t count_positives(std::span<const Label> labels) {
  return static_cast<std::size_t>(
      std::count_if(labels.begin(), labels.end(), [](Label l) { return l != 0; }));
}

/// Indices sorted by descending score (stable).
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace detail

/// Mann-Whitney AUROC with average ranks, plus the ROC curve swept over
/// distinct thresholds from (0, 0) to (1, 1).
inline RocResult roc_curve(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::Dimension, "scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  const auto positives = detail::count_positives(labels);
  detail::require_mixed_labels(positives, n);
  const std::size_t negatives = n - positives;

  const auto order = detail::descending_order(scores);

  // Walk tie groups from the top. With descending order, the ascending rank
  // of a group occupying descending positions [a, b) is [n - b + 1, n - a];
  // twice the average rank is therefore (n - b + 1) + (n - a).
  RocResult out;
  out.points.emplace_back(0.0, 0.0);
  std::int64_t twice_rank_sum = 0;
  std::size_t tp = 0, fp = 0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a + 1;
    while (b < n && scores[order[b]] == scores[order[a]]) ++b;
    std::size_t group_pos = 0;
    for (std::size_t k = a; k < b; ++k) group_pos += labels[order[k]] != 0 ? 1 : 0;
    const auto twice_avg = static_cast<std::int64_t>((n - b + 1) + (n - a));
    twice_rank_sum += twice_avg * static_cast<std::int64_t>(group_pos);
    tp += group_pos;
    fp += (b - a) - group_pos;
    out.points.emplace_back(static_cast<double>(fp) / static_cast<double>(negatives),
                            static_cast<double>(tp) / static_cast<double>(positives));
    a = b;
  }
  const auto np = static_cast<std::int64_t>(positives);
  const std::int64_t twice_u = twice_rank_sum - np * (np + 1);
  out.auroc = static_cast<double>(twice_u) /
              (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
  return out;
}

/// Average precision. Each tie group contributes its recall increment times
/// the precision reached at the end of the group.
inline PrResult pr_curve(std::span<const double> scores, std::span<const Label> labels) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::Dimension, "scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  const auto positives = detail::count_positives(labels);
  detail::require_mixed_labels(positives, n);

  const auto order = detail::descending_order(scores);
  PrResult out;
  std::size_t tp = 0;
  double area = 0.0;
  for (std::size_t a = 0; a < n;) {
    std::size_t b = a + 1;
    while (b < n && scores[order[b]] == scores[order[a]]) ++b;
    std::size_t group_pos = 0;
    for (std::size_t k = a; k < b; ++k) group_pos += labels[order[k]] != 0 ? 1 : 0;
    tp += group_pos;
    const double precision = static_cast<double>(tp) / static_cast<double>(b);
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    area += precision * static_cast<double>(group_pos);
    out.points.emplace_back(recall, precision);
    a = b;
  }
  out.auprc = area / static_cast<double>(positives);
  return out;
}

namespace detail {

struct LabeledPairs {
  std::vector<double> scores;
  std::vector<Label> labels;
};

inline LabeledPairs label_pairs(const AssociationMatrix& m, const Network& net) {
  if (m.size() != net.size()) {
    fail(ErrorKind::Dimension, "association matrix covers " + std::to_string(m.size()) +
                                   " neurons but the network has " +
                                   std::to_string(net.size()));
  }
  LabeledPairs out;
  const std::size_t p = m.size();
  out.scores.reserve(p * (p > 0 ? p - 1 : 0));
  out.labels.reserve(out.scores.capacity());
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (i == j) continue;
      out.scores.push_back(m.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out.labels.push_back(net.has_edge(i, j) ? 1 : 0);
    }
  }
  return out;
}

}  // namespace detail

inline RocResult auroc(const AssociationMatrix& m, const Network& net) {
  const auto lp = detail::label_pairs(m, net);
  return roc_curve(lp.scores, lp.labels);
}

inline PrResult auprc(const AssociationMatrix& m, const Network& net) {
  const auto lp = detail::label_pairs(m, net);
  return pr_curve(lp.scores, lp.labels);
}

inline EvalReport evaluate(const AssociationMatrix& m, const Network& net) {
  const auto lp = detail::label_pairs(m, net);
  auto roc = roc_curve(lp.scores, lp.labels);
  auto pr = pr_curve(lp.scores, lp.labels);
  EvalReport report;
  report.auroc = roc.auroc;
  report.auprc = pr.auprc;
  report.roc_points = std::move(roc.points);
  report.pr_points = std::move(pr.points);
  report.positives = net.edge_count();
  report.pairs = lp.scores.size();
  return report;
}

/// Scores 1 for (i, j) when either direction is an edge, 0 otherwise.
inline AssociationMatrix undirected_oracle(const Network& net) {
  const auto p = static_cast<Eigen::Index>(net.size());
  AssociationMatrix m;
  m.scores = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [from, to] : net.edges()) {
    m.scores(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = 1.0;
    m.scores(static_cast<Eigen::Index>(to), static_cast<Eigen::Index>(from)) = 1.0;
  }
  m.symmetric = true;
  return m;
}

/// Scores 1 exactly on the edges.
inline AssociationMatrix directed_oracle(const Network& net) {
  const auto p = static_cast<Eigen::Index>(net.size());
  AssociationMatrix m;
  m.scores = Eigen::MatrixXd::Zero(p, p);
  for (const auto& [from, to] : net.edges()) {
    m.scores(static_cast<Eigen::Index>(from), static_cast<Eigen::Index>(to)) = 1.0;
  }
  m.symmetric = false;
  return m;
}

}  // namespace conneckt
