#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace dsmfuse {

// Cubic monomial order shared with RPC00B files:
//   1, U, V, Z, UV, UZ, VZ, U^2, V^2, Z^2, UVZ, U^3, UV^2, UZ^2, U^2V, V^3, VZ^2, U^2Z, V^2Z, Z^3
inline constexpr int kRpcTerms = 20;
using RpcCoeffs = std::array<double, kRpcTerms>;

std::array<double, kRpcTerms> rpc_monomials(double u, double v, double z);
double rpc_polynomial(const RpcCoeffs& c, double u, double v, double z);

struct GroundPoint {
  double u = 0.0;
  double v = 0.0;
  double z = 0.0;
};

struct ImagePoint {
  double s = 0.0;
  double l = 0.0;
};

struct ObjectShift {
  double du = 0.0;
  double dv = 0.0;
  double dz = 0.0;
};

// Object-space shift together with the image-space correction it induces at
// one evaluation point.
struct BiasCorrection {
  double du = 0.0;
  double dv = 0.0;
  double dz = 0.0;
  double ds = 0.0;
  double dl = 0.0;
};

struct Normalization {
  double offset = 0.0;
  double scale = 1.0;

  double forward(double x) const { return (x - offset) / scale; }
  double backward(double n) const { return n * scale + offset; }
};

class DegenerateModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InversionError : public std::runtime_error {
 public:
  InversionError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  // Normalized image-space residual at the last iterate.
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct Projection {
  ImagePoint point;
  // False when a normalized ground coordinate exceeds 1.5 in magnitude.
  bool in_domain = true;
};

struct RpcModel {
  RpcCoeffs num_s{};
  RpcCoeffs den_s{};
  RpcCoeffs num_l{};
  RpcCoeffs den_l{};
  Normalization u, v, z, s, l;

  // Throws DegenerateModelError when a denominator constant or scale is zero.
  void validate() const;

  Projection project_checked(const GroundPoint& p) const;
  ImagePoint project(const GroundPoint& p) const { return project_checked(p).point; }
};

struct InvertOptions {
  int max_iterations = 50;
  double jacobian_step = 1e-6;       // normalized ground units
  double tolerance = 1e-9;           // normalized image units
  double pixel_tolerance = 1e-8;     // pixels; tightens `tolerance` for large scales
};

// Ground point at height `z` whose projection is `ip` (Newton iteration on U, V).
GroundPoint invert(const RpcModel& model, const ImagePoint& ip, double z,
                   const InvertOptions& opts = {});

// Model evaluated with an object-space shift substituted into the ground
// coordinates: project(p) == base.project(p + shift).
class BiasedRpcModel {
 public:
  BiasedRpcModel(RpcModel base, ObjectShift shift) : base_(std::move(base)), shift_(shift) {}

  const RpcModel& base() const { return base_; }
  const ObjectShift& shift() const { return shift_; }

  ImagePoint project(const GroundPoint& p) const;
  GroundPoint invert(const ImagePoint& ip, double z, const InvertOptions& opts = {}) const;
  BiasCorrection correction_at(const GroundPoint& p) const;

 private:
  RpcModel base_;
  ObjectShift shift_;
};

BiasedRpcModel apply_bias(const RpcModel& model, const ObjectShift& shift);

struct RayOptions {
  double dz_probe = 100.0;
  // Ground units to meters; 1.0 for projected coordinates.
  double meters_per_u = 111320.0;
  double meters_per_v = 111320.0;
  InvertOptions invert;
};

// Viewing-ray direction in meters at `at`, pointing upward.
std::array<double, 3> viewing_ray(const RpcModel& model, const GroundPoint& at,
                                  const RayOptions& opts = {});

// Angle in degrees between the two models' viewing rays at `at`.
double intersection_angle(const RpcModel& a, const RpcModel& b, const GroundPoint& at,
                          const RayOptions& opts = {});

// ---- RPC text files (KEY: value) ----

class RpcFileError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

RpcModel parse_rpc(const std::string& text);
std::string format_rpc(const RpcModel& model);
RpcModel read_rpc(const std::string& path);
void write_rpc(const std::string& path, const RpcModel& model);

}  // namespace dsmfuse
