#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dsmfuse/raster.hpp"
#include "dsmfuse/register.hpp"
#include "dsmfuse/rpc.hpp"

namespace dsmfuse {

struct PairGate {
  double min_angle = 10.0;  // degrees, inclusive
  double max_angle = 30.0;  // degrees, inclusive
  int top_k = 10;

  void validate() const;
  bool admits(double angle_deg) const { return angle_deg >= min_angle && angle_deg <= max_angle; }
};

struct PairRecord {
  std::string id_a;
  std::string id_b;
  double angle = 0.0;  // degrees
  std::optional<double> rank_rmse;
  std::string dsm_path;
  bool selected = false;
  bool insufficient_overlap = false;
};

struct NamedModel {
  std::string id;
  RpcModel model;
};

struct GateReport {
  std::vector<PairRecord> kept;      // id_a < id_b, ascending by angle
  std::vector<std::string> dropped;  // one human-readable reason per rejected pair
};

GateReport gate_pairs(const std::vector<NamedModel>& models, const GroundPoint& at,
                      const PairGate& gate, const RayOptions& rays = {});

struct PairCandidate {
  PairRecord record;
  RasterGrid dsm;
};

// Aligns each candidate DSM to the truth patch and orders by inlier RMSE
// (ties broken by ids). Candidates that fail to overlap go last, flagged.
// The first top_k ranked candidates are marked selected.
std::vector<PairRecord> rank_pairs(const std::vector<PairCandidate>& candidates,
                                   const RasterGrid& truth, const AlignConfig& cfg,
                                   const PairGate& gate);

struct ManifestRow {
  std::string id_a;
  std::string id_b;
  std::string rpc_a_path;
  std::string rpc_b_path;
  std::string dsm_path;
};

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// CSV with header id_a,id_b,rpc_a_path,rpc_b_path,dsm_path.
std::vector<ManifestRow> parse_pair_manifest(const std::string& text);

}  // namespace dsmfuse
