// Comparison methods: coarse map matching (the proposed pipeline stopped
// after its barycenter init) and classical AoA-RSS fingerprinting.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ckmloc/channel.hpp"
#include "ckmloc/ckm.hpp"
#include "ckmloc/matching.hpp"

namespace ckmloc {

// Feature layout: the strongest `slots` paths, their arrival angles
// sorted ascending (RSS reordered to match), angles first then RSS in dB.
// Empty slots carry sentinels so records with different path counts stay
// comparable.
inline constexpr double kFingerprintAoaPad = 4.0;    // outside (-pi, pi]
inline constexpr double kFingerprintRssPad = -100.0; // dB, below any model gain

struct FingerprintDb {
  int slots = 0; // paths per record; feature length is 2 * slots
  std::vector<int> node_index;
  std::vector<Point2> locations;
  Eigen::MatrixXd features; // one row per record
};

/// AoA/RSS feature of a path list.
inline Eigen::VectorXd fingerprint_feature(const std::vector<PathParam>& paths, int slots) {
  if (slots < 1) throw std::invalid_argument("fingerprint_feature: slots must be >= 1");
  std::vector<PathParam> strongest = paths;
  std::stable_sort(strongest.begin(), strongest.end(), [](const PathParam& a, const PathParam& b) {
    return std::norm(a.gain.value_or(1.0)) > std::norm(b.gain.value_or(1.0));
  });
  if (static_cast<int>(strongest.size()) > slots) strongest.resize(slots);
  std::stable_sort(strongest.begin(), strongest.end(),
                   [](const PathParam& a, const PathParam& b) { return a.aoa < b.aoa; });

  Eigen::VectorXd f(2 * slots);
  for (int i = 0; i < slots; ++i) {
    if (i < static_cast<int>(strongest.size())) {
      f(i) = strongest[i].aoa;
      f(slots + i) = 20.0 * std::log10(std::max(std::abs(strongest[i].gain.value_or(1.0)), 1e-30));
    } else {
      f(i) = kFingerprintAoaPad;
      f(slots + i) = kFingerprintRssPad;
    }
  }
  return f;
}

/// Builds the reference database on the same grid the map uses, from the
/// same per-node signatures, so both prior-based methods see identical
/// offline data.
inline FingerprintDb build_fingerprint_db(const Ckm& map, int slots) {
  FingerprintDb db;
  db.slots = slots;
  std::vector<Eigen::VectorXd> rows;
  for (std::size_t i = 0; i < map.entries.size(); ++i) {
    const CkmEntry& e = map.entries[i];
    if (e.paths.empty()) continue;
    db.node_index.push_back(static_cast<int>(i));
    db.locations.push_back(e.location);
    rows.push_back(fingerprint_feature(e.paths, slots));
  }
  if (rows.empty()) throw std::invalid_argument("build_fingerprint_db: map has no usable entries");
  db.features.resize(static_cast<Eigen::Index>(rows.size()), 2 * slots);
  for (std::size_t r = 0; r < rows.size(); ++r) db.features.row(static_cast<Eigen::Index>(r)) = rows[r];
  return db;
}

/// Nearest record by Euclidean feature distance; ties go to the lower
/// grid index (records are stored in grid order).
inline Point2 fingerprint_localize(const Eigen::VectorXd& feature, const FingerprintDb& db) {
  if (db.locations.empty()) throw std::invalid_argument("fingerprint_localize: empty database");
  if (feature.size() != db.features.cols())
    throw std::invalid_argument("fingerprint_localize: feature length mismatch");
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < db.features.rows(); ++r) {
    const double d = (db.features.row(r).transpose() - feature).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return db.locations[static_cast<std::size_t>(best)];
}

/// Map-matching baseline: the similarity-weighted barycenter of the top-k
/// candidates, i.e. the proposed method truncated before the path-level
/// stages. Shares the ranking code, so it equals the full pipeline's
/// initialization bit-exactly on the same inputs.
inline Point2 coarse_localize(const ObservationSet& obs, const Ckm& map, const DictConfig& dict,
                              int k, const RankingEngine* engine = nullptr) {
  const CandidateSet cands = engine ? engine->rank(obs, k) : rank_candidates(obs, map, dict, k);
  return barycenter(cands);
}

} // namespace ckmloc
