#include "dsmfuse/pairsel.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <omp.h>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

namespace dsmfuse {

void PairGate::validate() const {
  if (!(min_angle >= 0.0 && min_angle < max_angle && max_angle <= 180.0)) {
    throw std::invalid_argument("pair gate: need 0 <= min_angle < max_angle <= 180");
  }
  if (top_k < 0) throw std::invalid_argument("pair gate: top_k must be non-negative");
}

GateReport gate_pairs(const std::vector<NamedModel>& models, const GroundPoint& at,
                      const PairGate& gate, const RayOptions& rays) {
  gate.validate();
  if (models.size() < 2) throw std::invalid_argument("gate_pairs: need at least two models");

  std::vector<const NamedModel*> sorted;
  for (const auto& m : models) sorted.push_back(&m);
  std::sort(sorted.begin(), sorted.end(),
            [](const NamedModel* a, const NamedModel* b) { return a->id < b->id; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->id == sorted[i - 1]->id) {
      throw std::invalid_argument("gate_pairs: duplicate image id '" + sorted[i]->id + "'");
    }
  }

  GateReport report;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    for (std::size_t j = i + 1; j < sorted.size(); ++j) {
      const NamedModel& a = *sorted[i];
      const NamedModel& b = *sorted[j];
      double angle = 0.0;
      try {
        angle = intersection_angle(a.model, b.model, at, rays);
      } catch (const std::exception& e) {
        report.dropped.push_back(a.id + "," + b.id + ": " + e.what());
        continue;
      }
      if (!gate.admits(angle)) {
        std::ostringstream why;
        why << a.id << "," << b.id << ": angle " << angle << " deg outside [" << gate.min_angle
            << ", " << gate.max_angle << "]";
        report.dropped.push_back(why.str());
        continue;
      }
      PairRecord rec;
      rec.id_a = a.id;
      rec.id_b = b.id;
      rec.angle = angle;
      report.kept.push_back(std::move(rec));
    }
  }
  std::sort(report.kept.begin(), report.kept.end(), [](const PairRecord& x, const PairRecord& y) {
    return std::tie(x.angle, x.id_a, x.id_b) < std::tie(y.angle, y.id_a, y.id_b);
  });
  return report;
}

std::vector<PairRecord> rank_pairs(const std::vector<PairCandidate>& candidates,
                                   const RasterGrid& truth, const AlignConfig& cfg,
                                   const PairGate& gate) {
  gate.validate();
  std::vector<PairRecord> out(candidates.size());
  AlignConfig inner = cfg;
  inner.jobs = 1;
  const auto n = static_cast<std::ptrdiff_t>(candidates.size());
#pragma omp parallel for num_threads(cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads()) \
    schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    PairRecord rec = candidates[idx].record;
    rec.selected = false;
    rec.rank_rmse.reset();
    rec.insufficient_overlap = false;
    try {
      rec.rank_rmse = align(candidates[idx].dsm, truth, inner).rmse_inliers;
    } catch (const InsufficientOverlapError&) {
      rec.insufficient_overlap = true;
    }
    out[idx] = std::move(rec);
  }

  std::sort(out.begin(), out.end(), [](const PairRecord& x, const PairRecord& y) {
    const double rx = x.rank_rmse.value_or(std::numeric_limits<double>::infinity());
    const double ry = y.rank_rmse.value_or(std::numeric_limits<double>::infinity());
    return std::tie(x.insufficient_overlap, rx, x.id_a, x.id_b) <
           std::tie(y.insufficient_overlap, ry, y.id_a, y.id_b);
  });
  int picked = 0;
  for (auto& rec : out) {
    if (picked >= gate.top_k || rec.insufficient_overlap) break;
    rec.selected = true;
    ++picked;
  }
  return out;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<ManifestRow> parse_pair_manifest(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<ManifestRow> rows;
  bool header_seen = false;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (!header_seen) {
      const std::vector<std::string> expected = {"id_a", "id_b", "rpc_a_path", "rpc_b_path",
                                                 "dsm_path"};
      if (fields != expected) {
        throw ManifestError("pair manifest: header must be id_a,id_b,rpc_a_path,rpc_b_path,dsm_path");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) {
      throw ManifestError("pair manifest: line " + std::to_string(line_no) + " needs 5 fields");
    }
    if (fields[0] == fields[1]) {
      throw ManifestError("pair manifest: line " + std::to_string(line_no) +
                          " pairs an image with itself");
    }
    rows.push_back({fields[0], fields[1], fields[2], fields[3], fields[4]});
  }
  if (!header_seen) throw ManifestError("pair manifest: empty file");
  return rows;
}

}  // namespace dsmfuse
