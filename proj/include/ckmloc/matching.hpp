// Observation-to-map matching.
//
// Stage 1 (coarse): every map node is scored by the cosine similarity
// between its peak-normalized angle-delay power map and the observation's
// map; the top-K nodes form the candidate set and their similarity-
// weighted barycenter is the coarse position fix.
//
// Stage 2 (path level): within each candidate node, observed paths are
// assigned one-to-one to stored signatures by minimum total dissimilarity
// in continuous (angle-bin, delay-bin) coordinates. Each observed path
// then keeps its globally best match across candidates, weighted by
// w = 1/(1+D); matches with w < 0.5 are treated as mismatches and
// discarded. Survivors carry the matched node's derived scatterer as a
// location prior for the joint estimator.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ckmloc/assignment.hpp"
#include "ckmloc/channel.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/detail/parallel.hpp"
#include "ckmloc/spectrum.hpp"

namespace ckmloc {

struct Candidate {
  int linear_index = -1; // node index within the map grid
  Point2 location;
  double similarity = 0.0;
};
using CandidateSet = std::vector<Candidate>;

/// Per-path location prior selected from the map.
struct ScattererPrior {
  Point2 location;      // derived scatterer of the matched signature
  double weight = 0.0;  // 1/(1+D), kept only when >= 0.5
  int obs_path_index = -1;
  int node_linear_index = -1;
  int ckm_path_index = -1;
};

/// Optional per-axis rescaling of the dissimilarity metric (1 = the bin
/// coordinates as-is).
struct DissimilarityScales {
  double angle = 1.0;
  double delay = 1.0;
};

/// Euclidean distance between two paths in continuous (angle-bin,
/// delay-bin) coordinates.
inline double pair_dissimilarity(const PathParam& observed, const PathParam& stored,
                                 const DictConfig& dict,
                                 const DissimilarityScales& scales = {}) {
  const double da = scales.angle * (dict.angle_bin_coord(observed.aoa) - dict.angle_bin_coord(stored.aoa));
  const double dd = scales.delay * (dict.delay_bin_coord(observed.toa) - dict.delay_bin_coord(stored.toa));
  return std::hypot(da, dd);
}

namespace detail {

inline CandidateSet sort_and_truncate(std::vector<Candidate> scored, int k) {
  std::sort(scored.begin(), scored.end(), [](const Candidate& a, const Candidate& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.linear_index < b.linear_index;
  });
  if (static_cast<int>(scored.size()) > k) scored.resize(k);
  return scored;
}

// Blockwise float dot with double accumulation across blocks.
inline double block_dot(const float* a, const float* b, std::int64_t n) {
  constexpr std::int64_t kBlock = 4096;
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; i += kBlock) {
    const auto len = static_cast<Eigen::Index>(std::min(kBlock, n - i));
    acc += static_cast<double>(Eigen::Map<const Eigen::VectorXf>(a + i, len)
                                   .dot(Eigen::Map<const Eigen::VectorXf>(b + i, len)));
  }
  return acc;
}

} // namespace detail

/// Scores every non-empty map node against the observation and returns
/// the top-k by similarity (all nodes if k exceeds the grid). Exact
/// double-precision route.
inline CandidateSet rank_candidates(const ObservationSet& obs, const Ckm& map,
                                    const DictConfig& dict, int k) {
  if (k < 1) throw std::invalid_argument("rank_candidates: k must be >= 1");
  if (obs.empty()) throw std::invalid_argument("rank_candidates: empty observation");
  const AngleDelayMap obs_map = peak_normalize(dirichlet_map(obs, dict));

  std::vector<Candidate> scored(map.entries.size());
  detail::parallel_for(map.entries.size(), [&](std::size_t i) {
    const CkmEntry& e = map.entries[i];
    Candidate c;
    if (!e.paths.empty()) {
      c.linear_index = static_cast<int>(i);
      c.location = e.location;
      c.similarity = cosine_similarity(obs_map, peak_normalize(dirichlet_map(e.paths, dict)));
    }
    scored[i] = c;
  });
  std::erase_if(scored, [](const Candidate& c) { return c.linear_index < 0; });
  if (scored.empty()) throw std::invalid_argument("rank_candidates: map has no usable entries");
  return detail::sort_and_truncate(std::move(scored), k);
}

/// Precomputed single-precision map cache for fast repeated ranking of
/// many observations against one fixed map. Similarities agree with
/// rank_candidates to float rounding; the unit tests pin the agreement.
class RankingEngine {
 public:
  RankingEngine(const Ckm& map, const DictConfig& dict) : dict_(dict) {
    dict_.validate();
    n_bins_ = static_cast<std::int64_t>(dict.n_theta) * dict.n_tau;
    for (std::size_t i = 0; i < map.entries.size(); ++i)
      if (!map.entries[i].paths.empty()) {
        node_index_.push_back(static_cast<int>(i));
        locations_.push_back(map.entries[i].location);
      }
    if (node_index_.empty())
      throw std::invalid_argument("RankingEngine: map has no usable entries");
    const std::size_t bytes = node_index_.size() * static_cast<std::size_t>(n_bins_) * sizeof(float);
    if (bytes > std::size_t{6} * 1024 * 1024 * 1024)
      throw std::runtime_error("RankingEngine: map cache would exceed 6 GiB");
    maps_.resize(node_index_.size() * static_cast<std::size_t>(n_bins_));
    norms_.resize(node_index_.size());

    detail::parallel_for(node_index_.size(), [&](std::size_t slot) {
      const CkmEntry& e = map.entries[static_cast<std::size_t>(node_index_[slot])];
      const AngleDelayMap m = peak_normalize(dirichlet_map(e.paths, dict_));
      float* dst = maps_.data() + slot * static_cast<std::size_t>(n_bins_);
      Eigen::Map<Eigen::MatrixXf>(dst, m.values.rows(), m.values.cols()) =
          m.values.cast<float>();
      norms_[slot] = std::sqrt(detail::block_dot(dst, dst, n_bins_));
    });
  }

  CandidateSet rank(const ObservationSet& obs, int k) const {
    if (k < 1) throw std::invalid_argument("RankingEngine::rank: k must be >= 1");
    if (obs.empty()) throw std::invalid_argument("RankingEngine::rank: empty observation");
    const AngleDelayMap obs_map = peak_normalize(dirichlet_map(obs, dict_));
    std::vector<float> q(static_cast<std::size_t>(n_bins_));
    Eigen::Map<Eigen::MatrixXf>(q.data(), obs_map.values.rows(), obs_map.values.cols()) =
        obs_map.values.cast<float>();
    const double qnorm = std::sqrt(detail::block_dot(q.data(), q.data(), n_bins_));
    if (!(qnorm > 0.0)) throw std::invalid_argument("RankingEngine::rank: zero observation map");

    std::vector<Candidate> scored(node_index_.size());
    for (std::size_t slot = 0; slot < node_index_.size(); ++slot) {
      const float* node = maps_.data() + slot * static_cast<std::size_t>(n_bins_);
      const double sim = detail::block_dot(q.data(), node, n_bins_) / (qnorm * norms_[slot]);
      scored[slot] = {node_index_[slot], locations_[slot], std::min(1.0, std::max(0.0, sim))};
    }
    return detail::sort_and_truncate(std::move(scored), k);
  }

  const DictConfig& dict() const { return dict_; }

 private:
  DictConfig dict_;
  std::int64_t n_bins_ = 0;
  std::vector<int> node_index_;
  std::vector<Point2> locations_;
  std::vector<float> maps_;
  std::vector<double> norms_;
};

/// Similarity-weighted mean of the candidate locations.
inline Point2 barycenter(const CandidateSet& cands) {
  if (cands.empty()) throw std::invalid_argument("barycenter: empty candidate set");
  double wsum = 0.0;
  Point2 acc{0.0, 0.0};
  for (const Candidate& c : cands) {
    acc = acc + c.similarity * c.location;
    wsum += c.similarity;
  }
  if (!(wsum > 0.0)) throw std::invalid_argument("barycenter: zero similarity mass");
  return {acc.x / wsum, acc.y / wsum};
}

/// For each observed path, finds its best-matching stored signature over
/// all candidate nodes (optimal one-to-one assignment per node, then the
/// minimum matched distance across nodes), converts the distance to a
/// weight w = 1/(1+D), and keeps matches with w >= 0.5. Observed paths
/// that cannot be matched (more observations than signatures) count as
/// infinitely distant and are dropped.
inline std::vector<ScattererPrior> select_priors(const ObservationSet& obs,
                                                 const CandidateSet& cands, const Ckm& map,
                                                 const DictConfig& dict,
                                                 const DissimilarityScales& scales = {}) {
  if (obs.empty()) throw std::invalid_argument("select_priors: empty observation");
  if (cands.empty()) throw std::invalid_argument("select_priors: empty candidate set");
  const int n_obs = static_cast<int>(obs.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best_dist(n_obs, inf);
  std::vector<int> best_node(n_obs, -1), best_path(n_obs, -1);

  for (const Candidate& cand : cands) {
    const CkmEntry& entry = map.entries[static_cast<std::size_t>(cand.linear_index)];
    if (entry.paths.empty()) continue;
    const int n_ckm = static_cast<int>(entry.paths.size());
    Eigen::MatrixXd cost(n_obs, n_ckm);
    for (int l = 0; l < n_obs; ++l)
      for (int m = 0; m < n_ckm; ++m)
        cost(l, m) = pair_dissimilarity(obs[l], entry.paths[m], dict, scales);
    const Assignment asn = solve_assignment(cost);
    for (int l = 0; l < n_obs; ++l) {
      const int m = asn.row_to_col[l];
      if (m < 0) continue; // unmatched: infinite distance
      const double d = cost(l, m);
      if (d < best_dist[l]) {
        best_dist[l] = d;
        best_node[l] = cand.linear_index;
        best_path[l] = m;
      }
    }
  }

  std::vector<ScattererPrior> priors;
  for (int l = 0; l < n_obs; ++l) {
    if (best_node[l] < 0) continue;
    const double w = 1.0 / (1.0 + best_dist[l]);
    if (w < 0.5) continue;
    const CkmEntry& entry = map.entries[static_cast<std::size_t>(best_node[l])];
    ScattererPrior prior;
    prior.location = entry.derived_scatterers[static_cast<std::size_t>(best_path[l])];
    prior.weight = w;
    prior.obs_path_index = l;
    prior.node_linear_index = best_node[l];
    prior.ckm_path_index = best_path[l];
    priors.push_back(prior);
  }
  return priors;
}

} // namespace ckmloc
