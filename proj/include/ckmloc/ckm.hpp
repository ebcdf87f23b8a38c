// Channel knowledge map: an offline database that maps every node of a
// spatial grid to the multipath (aoa, toa) signature a transmitter at
// that node would produce, plus the equivalent single-bounce scatterer of
// each stored path (a cache; the signature list is canonical).
//
// Two construction modes:
//   - true-geometry: signatures computed exactly from the scenario
//     scatterers, bypassing the front end;
//   - estimated: a channel matrix is synthesized per node, noise added at
//     the offline SNR, and signatures taken from the extraction front end
//     exactly as online observations are.
#pragma once

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ckmloc/channel.hpp"
#include "ckmloc/detail/parallel.hpp"
#include "ckmloc/geometry.hpp"
#include "ckmloc/rng.hpp"

namespace ckmloc {

enum class CkmMode { kTrueGeometry, kEstimated };

inline std::string to_string(CkmMode m) {
  return m == CkmMode::kTrueGeometry ? "true-geometry" : "estimated";
}
inline CkmMode ckm_mode_from_string(const std::string& s) {
  if (s == "true-geometry" || s == "true") return CkmMode::kTrueGeometry;
  if (s == "estimated") return CkmMode::kEstimated;
  throw std::invalid_argument("unknown ckm mode: " + s);
}

/// Path gain model: two-segment free-space magnitude decay with an
/// externally supplied phase. Segment lengths are floored at 0.1 m to
/// keep grazing geometries finite.
inline std::complex<double> path_gain(Point2 bs, Point2 ue, Point2 scatterer, double phase) {
  const double d1 = std::max(distance(ue, scatterer), 0.1);
  const double d2 = std::max(distance(scatterer, bs), 0.1);
  return std::polar(1.0 / (d1 * d2), phase);
}

/// Ground-truth paths for a transmitter at ue, one per scatterer, with
/// model gains. Phases are drawn in scatterer order before sorting, so
/// the result is a pure function of (geometry, phase_rng state). Sorted
/// by descending power.
inline std::vector<PathParam> true_paths(Point2 bs, Point2 ue,
                                         const std::vector<Point2>& scatterers,
                                         Rng& phase_rng) {
  std::vector<PathParam> paths;
  paths.reserve(scatterers.size());
  for (const Point2& s : scatterers) {
    PathParam p = forward_path(bs, ue, s);
    p.gain = path_gain(bs, ue, s, phase_rng.uniform(0.0, 2.0 * kPi));
    paths.push_back(p);
  }
  std::stable_sort(paths.begin(), paths.end(), [](const PathParam& a, const PathParam& b) {
    return std::norm(*a.gain) > std::norm(*b.gain);
  });
  return paths;
}

struct CkmEntry {
  Point2 location;
  std::vector<PathParam> paths;            // empty = node excluded from ranking
  std::vector<Point2> derived_scatterers;  // aligned with paths
};

struct Ckm {
  Point2 bs;
  Rect region;
  double grid_spacing = 1.0;
  CkmMode mode = CkmMode::kEstimated;
  std::uint64_t master_seed = 0;
  int nx = 0, ny = 0;
  std::vector<CkmEntry> entries; // dense, linear index iy * nx + ix

  int linear_index(int ix, int iy) const { return iy * nx + ix; }
  Point2 node_location(int ix, int iy) const {
    return {region.xmin + ix * grid_spacing, region.ymin + iy * grid_spacing};
  }
};

struct CkmBuildConfig {
  Point2 bs;
  Rect region;                    // transmitter grid bounds, inclusive
  double grid_spacing = 1.0;
  std::vector<Point2> scatterers; // environment scatterers the map learns
  RfConfig rf;
  DictConfig dict;
  CkmMode mode = CkmMode::kEstimated;
  double offline_snr_db = 30.0;   // estimated mode only
  int max_paths = 24;
  double peak_threshold_rel = 0.05;
  std::uint64_t master_seed = 0;
};

inline Ckm build_ckm(const CkmBuildConfig& cfg) {
  cfg.region.validate("CkmBuildConfig.region");
  if (!(cfg.grid_spacing > 0.0))
    throw std::invalid_argument("build_ckm: grid spacing must be positive");
  if (cfg.scatterers.empty())
    throw std::invalid_argument("build_ckm: no scatterers");

  Ckm map;
  map.bs = cfg.bs;
  map.region = cfg.region;
  map.grid_spacing = cfg.grid_spacing;
  map.mode = cfg.mode;
  map.master_seed = cfg.master_seed;
  map.nx = static_cast<int>(std::floor(cfg.region.width() / cfg.grid_spacing + 1e-9)) + 1;
  map.ny = static_cast<int>(std::floor(cfg.region.height() / cfg.grid_spacing + 1e-9)) + 1;
  if (map.nx < 1 || map.ny < 1) throw std::invalid_argument("build_ckm: empty grid");
  map.entries.resize(static_cast<std::size_t>(map.nx) * map.ny);

  detail::parallel_for(map.entries.size(), [&](std::size_t idx) {
    const int ix = static_cast<int>(idx) % map.nx;
    const int iy = static_cast<int>(idx) / map.nx;
    CkmEntry entry;
    entry.location = map.node_location(ix, iy);

    const std::uint64_t node_seed = derive_seed(cfg.master_seed, SeedStream::kCkmNode, idx);
    Rng phase_rng(derive_seed(node_seed, SeedStream::kGainPhase, 0));
    const std::vector<PathParam> truth = true_paths(cfg.bs, entry.location, cfg.scatterers, phase_rng);

    std::vector<PathParam> signatures;
    if (cfg.mode == CkmMode::kTrueGeometry) {
      signatures = truth;
    } else {
      const ChannelMatrix h =
          add_awgn(synth_channel(truth, cfg.rf), cfg.offline_snr_db,
                   derive_seed(node_seed, SeedStream::kNoise, 0));
      try {
        signatures = estimate_paths(h, cfg.dict, cfg.max_paths, cfg.peak_threshold_rel);
      } catch (const std::runtime_error&) {
        signatures.clear(); // node recorded with an empty entry
      }
    }

    for (const PathParam& p : signatures) {
      try {
        const Point2 s = scatterer_from_path(cfg.bs, entry.location, p.aoa, p.toa);
        entry.paths.push_back(p);
        entry.derived_scatterers.push_back(s);
      } catch (const std::invalid_argument&) {
        // signature fails the inversion feasibility guards: dropped
      }
    }
    map.entries[idx] = std::move(entry);
  });
  return map;
}

// ---------------------------------------------------------------------------
// Persistence. Versioned JSON; doubles survive save/load bit-exactly
// (shortest-round-trip formatting). Entries are stored densely in linear
// grid order; a path is [aoa, toa] or [aoa, toa, gain_re, gain_im].

inline constexpr int kCkmFormatVersion = 1;

inline void save_ckm(const Ckm& map, const std::string& path) {
  nlohmann::json j;
  j["format"] = "ckm";
  j["version"] = kCkmFormatVersion;
  j["bs"] = {map.bs.x, map.bs.y};
  j["region"] = {map.region.xmin, map.region.xmax, map.region.ymin, map.region.ymax};
  j["grid_spacing_m"] = map.grid_spacing;
  j["mode"] = to_string(map.mode);
  j["master_seed"] = map.master_seed;
  j["nx"] = map.nx;
  j["ny"] = map.ny;
  nlohmann::json entries = nlohmann::json::array();
  for (const CkmEntry& e : map.entries) {
    nlohmann::json je;
    nlohmann::json paths = nlohmann::json::array();
    for (const PathParam& p : e.paths) {
      if (p.gain)
        paths.push_back({p.aoa, p.toa, p.gain->real(), p.gain->imag()});
      else
        paths.push_back({p.aoa, p.toa});
    }
    je["paths"] = std::move(paths);
    nlohmann::json scat = nlohmann::json::array();
    for (const Point2& s : e.derived_scatterers) scat.push_back({s.x, s.y});
    je["scatterers"] = std::move(scat);
    entries.push_back(std::move(je));
  }
  j["entries"] = std::move(entries);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_ckm: cannot open " + path);
  out << j.dump();
  if (!out) throw std::runtime_error("save_ckm: write failed for " + path);
}

inline Ckm load_ckm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_ckm: cannot open " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("load_ckm: " + path + ": " + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != "ckm")
      throw std::runtime_error("load_ckm: " + path + ": not a ckm file");
    if (j.at("version").get<int>() != kCkmFormatVersion)
      throw std::runtime_error("load_ckm: " + path + ": unsupported version " +
                               std::to_string(j.at("version").get<int>()));
    Ckm map;
    map.bs = {j.at("bs").at(0).get<double>(), j.at("bs").at(1).get<double>()};
    const auto& r = j.at("region");
    map.region = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>(),
                  r.at(3).get<double>()};
    map.grid_spacing = j.at("grid_spacing_m").get<double>();
    map.mode = ckm_mode_from_string(j.at("mode").get<std::string>());
    map.master_seed = j.at("master_seed").get<std::uint64_t>();
    map.nx = j.at("nx").get<int>();
    map.ny = j.at("ny").get<int>();
    const auto& entries = j.at("entries");
    if (static_cast<int>(entries.size()) != map.nx * map.ny)
      throw std::runtime_error("load_ckm: " + path + ": entry count does not match grid");
    map.entries.reserve(entries.size());
    int idx = 0;
    for (const auto& je : entries) {
      CkmEntry e;
      e.location = map.node_location(idx % map.nx, idx / map.nx);
      for (const auto& jp : je.at("paths")) {
        PathParam p;
        p.aoa = jp.at(0).get<double>();
        p.toa = jp.at(1).get<double>();
        if (jp.size() == 4)
          p.gain = std::complex<double>(jp.at(2).get<double>(), jp.at(3).get<double>());
        else if (jp.size() != 2)
          throw std::runtime_error("load_ckm: " + path + ": malformed path tuple");
        e.paths.push_back(p);
      }
      for (const auto& js : je.at("scatterers"))
        e.derived_scatterers.push_back({js.at(0).get<double>(), js.at(1).get<double>()});
      if (e.derived_scatterers.size() != e.paths.size())
        throw std::runtime_error("load_ckm: " + path + ": scatterer/path length mismatch");
      map.entries.push_back(std::move(e));
      ++idx;
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("load_ckm: " + path + ": " + e.what());
  }
}

} // namespace ckmloc
