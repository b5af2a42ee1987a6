#include "dsmfuse/rpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dsmfuse {

std::array<double, kRpcTerms> rpc_monomials(double u, double v, double z) {
  return {1.0,       u,         v,         z,         u * v,     u * z,     v * z,
          u * u,     v * v,     z * z,     u * v * z, u * u * u, u * v * v, u * z * z,
          u * u * v, v * v * v, v * z * z, u * u * z, v * v * z, z * z * z};
}

double rpc_polynomial(const RpcCoeffs& c, double u, double v, double z) {
  const auto m = rpc_monomials(u, v, z);
  double sum = 0.0;
  for (int i = 0; i < kRpcTerms; ++i) sum += c[i] * m[i];
  return sum;
}

void RpcModel::validate() const {
  for (const Normalization* n : {&u, &v, &z, &s, &l}) {
    if (n->scale == 0.0 || !std::isfinite(n->scale) || !std::isfinite(n->offset)) {
      throw DegenerateModelError("rpc: normalization scales must be finite and nonzero");
    }
  }
  if (den_s[0] == 0.0 || den_l[0] == 0.0) {
    throw DegenerateModelError("rpc: denominator constant terms must be nonzero");
  }
}

namespace {

constexpr double kMinDenominator = 1e-12;
constexpr double kDomainBound = 1.5;

struct NormalizedImage {
  double s;
  double l;
};

NormalizedImage evaluate_normalized(const RpcModel& m, double un, double vn, double zn) {
  const auto mono = rpc_monomials(un, vn, zn);
  double ns = 0.0, ds = 0.0, nl = 0.0, dl = 0.0;
  for (int i = 0; i < kRpcTerms; ++i) {
    ns += m.num_s[i] * mono[i];
    ds += m.den_s[i] * mono[i];
    nl += m.num_l[i] * mono[i];
    dl += m.den_l[i] * mono[i];
  }
  if (std::abs(ds) < kMinDenominator || std::abs(dl) < kMinDenominator) {
    throw DegenerateModelError("rpc: denominator vanishes at the evaluation point");
  }
  return {ns / ds, nl / dl};
}

}  // namespace

Projection RpcModel::project_checked(const GroundPoint& p) const {
  const double un = u.forward(p.u);
  const double vn = v.forward(p.v);
  const double zn = z.forward(p.z);
  const NormalizedImage n = evaluate_normalized(*this, un, vn, zn);
  Projection out;
  out.point = {s.backward(n.s), l.backward(n.l)};
  out.in_domain = std::abs(un) <= kDomainBound && std::abs(vn) <= kDomainBound &&
                  std::abs(zn) <= kDomainBound;
  return out;
}

GroundPoint invert(const RpcModel& model, const ImagePoint& ip, double z,
                   const InvertOptions& opts) {
  if (!std::isfinite(z) || !std::isfinite(ip.s) || !std::isfinite(ip.l)) {
    throw InversionError("rpc invert: non-finite input", std::numeric_limits<double>::quiet_NaN());
  }
  const double ts = model.s.forward(ip.s);
  const double tl = model.l.forward(ip.l);
  const double zn = model.z.forward(z);
  const double tol = std::min(
      opts.tolerance,
      opts.pixel_tolerance / std::max(std::abs(model.s.scale), std::abs(model.l.scale)));
  const double h = opts.jacobian_step;

  auto residual = [&](double un, double vn) {
    const NormalizedImage n = evaluate_normalized(model, un, vn, zn);
    return std::array<double, 2>{n.s - ts, n.l - tl};
  };

  double un = 0.0, vn = 0.0;
  double last = std::numeric_limits<double>::infinity();
  try {
    for (int it = 0; it <= opts.max_iterations; ++it) {
      const auto f = residual(un, vn);
      last = std::max(std::abs(f[0]), std::abs(f[1]));
      if (last < tol) {
        return {model.u.backward(un), model.v.backward(vn), z};
      }
      if (it == opts.max_iterations) break;
      const auto fu_p = residual(un + h, vn);
      const auto fu_m = residual(un - h, vn);
      const auto fv_p = residual(un, vn + h);
      const auto fv_m = residual(un, vn - h);
      const double j00 = (fu_p[0] - fu_m[0]) / (2.0 * h);
      const double j10 = (fu_p[1] - fu_m[1]) / (2.0 * h);
      const double j01 = (fv_p[0] - fv_m[0]) / (2.0 * h);
      const double j11 = (fv_p[1] - fv_m[1]) / (2.0 * h);
      const double det = j00 * j11 - j01 * j10;
      const double jscale = std::max({std::abs(j00), std::abs(j01), std::abs(j10), std::abs(j11)});
      if (!(std::abs(det) > 1e-14 * std::max(1.0, jscale * jscale))) {
        throw InversionError("rpc invert: singular Jacobian", last);
      }
      un -= (j11 * f[0] - j01 * f[1]) / det;
      vn -= (-j10 * f[0] + j00 * f[1]) / det;
      if (!std::isfinite(un) || !std::isfinite(vn)) {
        throw InversionError("rpc invert: iteration diverged", last);
      }
    }
  } catch (const DegenerateModelError& e) {
    throw InversionError(std::string("rpc invert: ") + e.what(), last);
  }
  throw InversionError("rpc invert: no convergence within " +
                           std::to_string(opts.max_iterations) + " iterations",
                       last);
}

ImagePoint BiasedRpcModel::project(const GroundPoint& p) const {
  return base_.project({p.u + shift_.du, p.v + shift_.dv, p.z + shift_.dz});
}

GroundPoint BiasedRpcModel::invert(const ImagePoint& ip, double z,
                                   const InvertOptions& opts) const {
  const GroundPoint g = dsmfuse::invert(base_, ip, z + shift_.dz, opts);
  return {g.u - shift_.du, g.v - shift_.dv, z};
}

BiasCorrection BiasedRpcModel::correction_at(const GroundPoint& p) const {
  const ImagePoint biased = project(p);
  const ImagePoint plain = base_.project(p);
  return {shift_.du, shift_.dv, shift_.dz, biased.s - plain.s, biased.l - plain.l};
}

BiasedRpcModel apply_bias(const RpcModel& model, const ObjectShift& shift) {
  if (!std::isfinite(shift.du) || !std::isfinite(shift.dv) || !std::isfinite(shift.dz)) {
    throw std::invalid_argument("apply_bias: shift must be finite");
  }
  return BiasedRpcModel(model, shift);
}

std::array<double, 3> viewing_ray(const RpcModel& model, const GroundPoint& at,
                                  const RayOptions& opts) {
  if (!(opts.dz_probe > 0.0)) throw std::invalid_argument("viewing_ray: dz_probe must be > 0");
  const ImagePoint ip = model.project(at);
  const GroundPoint lo = invert(model, ip, at.z, opts.invert);
  const GroundPoint hi = invert(model, ip, at.z + opts.dz_probe, opts.invert);
  return {(hi.u - lo.u) * opts.meters_per_u, (hi.v - lo.v) * opts.meters_per_v, opts.dz_probe};
}

double intersection_angle(const RpcModel& a, const RpcModel& b, const GroundPoint& at,
                          const RayOptions& opts) {
  const auto ra = viewing_ray(a, at, opts);
  const auto rb = viewing_ray(b, at, opts);
  const double cx = ra[1] * rb[2] - ra[2] * rb[1];
  const double cy = ra[2] * rb[0] - ra[0] * rb[2];
  const double cz = ra[0] * rb[1] - ra[1] * rb[0];
  const double cross = std::sqrt(cx * cx + cy * cy + cz * cz);
  const double dot = ra[0] * rb[0] + ra[1] * rb[1] + ra[2] * rb[2];
  return std::atan2(cross, dot) * 180.0 / std::numbers::pi;
}

}  // namespace dsmfuse
