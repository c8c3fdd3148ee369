#pragma once

#include <Eigen/QR>

#include <utility>
#include <vector>

#include "dgopt/problem.hpp"
#include "dgopt/projections.hpp"

namespace dgopt {

/// One projectable piece of a ConvexSetSpec. Gather/scatter over cached index
/// lists keeps the per-sweep cost allocation-free for the cone slices.
class ProjectionTarget {
 public:
  enum class Kind { kBox, kHalfspace, kAffine, kSoc, kBall, kRotatedSoc, kPsd, kHermitianPsd };

  static ProjectionTarget box(Vec lo, Vec hi) {
    ProjectionTarget t;
    t.kind_ = Kind::kBox;
    t.lo_ = std::move(lo);
    t.hi_ = std::move(hi);
    return t;
  }
  static ProjectionTarget halfspace(Vec a, double b) {
    ProjectionTarget t;
    t.kind_ = Kind::kHalfspace;
    t.a_ = std::move(a);
    t.b_ = b;
    t.a_sqnorm_ = t.a_.squaredNorm();
    return t;
  }
  static ProjectionTarget affine(const Mat& c, Vec d) {
    ProjectionTarget t;
    t.kind_ = Kind::kAffine;
    t.c_ = c;
    t.d_ = std::move(d);
    // Pseudoinverse handles rank-deficient row sets exactly.
    t.pinv_ = c.completeOrthogonalDecomposition().pseudoInverse();
    return t;
  }
  static ProjectionTarget soc(SocSlice s) {
    ProjectionTarget t;
    t.kind_ = s.is_ball() ? Kind::kBall : Kind::kSoc;
    t.soc_ = std::move(s);
    return t;
  }
  static ProjectionTarget rotated_soc(RotatedSocSlice s) {
    ProjectionTarget t;
    t.kind_ = Kind::kRotatedSoc;
    t.rot_ = std::move(s);
    return t;
  }
  static ProjectionTarget psd(PsdSlice s) {
    ProjectionTarget t;
    t.kind_ = s.embedding == PsdEmbedding::kRealSymmetric ? Kind::kPsd
                                                          : Kind::kHermitianPsd;
    t.psd_ = std::move(s);
    return t;
  }

  Kind kind() const { return kind_; }

  void project_in_place(Vec& x) const {
    switch (kind_) {
      case Kind::kBox:
        x = x.cwiseMax(lo_).cwiseMin(hi_);
        return;
      case Kind::kHalfspace: {
        const double viol = a_.dot(x) - b_;
        if (viol > 0.0) x -= (viol / a_sqnorm_) * a_;
        return;
      }
      case Kind::kAffine: {
        x -= pinv_ * (c_ * x - d_);
        return;
      }
      case Kind::kSoc: {
        Vec u(static_cast<Index>(soc_.u_idx.size()));
        for (Index i = 0; i < u.size(); ++i) u(i) = x(soc_.u_idx[i]);
        const SocPoint p = project_soc(u, x(soc_.s_idx));
        for (Index i = 0; i < u.size(); ++i) x(soc_.u_idx[i]) = p.u(i);
        x(soc_.s_idx) = p.s;
        return;
      }
      case Kind::kBall: {
        Vec u(static_cast<Index>(soc_.u_idx.size()));
        for (Index i = 0; i < u.size(); ++i) u(i) = x(soc_.u_idx[i]);
        const Vec p = project_ball(u, soc_.radius);
        for (Index i = 0; i < u.size(); ++i) x(soc_.u_idx[i]) = p(i);
        return;
      }
      case Kind::kRotatedSoc: {
        Vec u(static_cast<Index>(rot_.u_idx.size()));
        for (Index i = 0; i < u.size(); ++i) u(i) = x(rot_.u_idx[i]);
        const RotatedSocPoint p =
            project_rotated_soc(x(rot_.a_idx), x(rot_.b_idx), u);
        x(rot_.a_idx) = p.a;
        x(rot_.b_idx) = p.b;
        for (Index i = 0; i < u.size(); ++i) x(rot_.u_idx[i]) = p.u(i);
        return;
      }
      case Kind::kPsd: {
        const Index n = psd_.order;
        Mat m(n, n);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) m(i, j) = x(psd_.idx[i * n + j]);
        const Mat p = project_psd(m);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) x(psd_.idx[i * n + j]) = p(i, j);
        return;
      }
      case Kind::kHermitianPsd: {
        const Index n = psd_.order;
        Mat re(n, n), im(n, n);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) {
            re(i, j) = x(psd_.idx[i * n + j]);
            im(i, j) = x(psd_.idx[n * n + i * n + j]);
          }
        const auto [pre, pim] = project_hermitian_psd(re, im);
        for (Index i = 0; i < n; ++i)
          for (Index j = 0; j < n; ++j) {
            x(psd_.idx[i * n + j]) = pre(i, j);
            x(psd_.idx[n * n + i * n + j]) = pim(i, j);
          }
        return;
      }
    }
  }

 private:
  Kind kind_ = Kind::kBox;
  Vec lo_, hi_;
  Vec a_;
  double b_ = 0.0;
  double a_sqnorm_ = 1.0;
  Mat c_, pinv_;
  Vec d_;
  SocSlice soc_;
  RotatedSocSlice rot_;
  PsdSlice psd_;
};

/// Build the full target list realizing a ConvexSetSpec intersection. The PSD
/// and cone slices come last so the returned Dykstra iterate, which is the
/// output of the final projection in a sweep, satisfies them exactly.
inline std::vector<ProjectionTarget> make_targets(const ConvexSetSpec& s) {
  std::vector<ProjectionTarget> targets;
  if (s.c_eq.rows() > 0) targets.push_back(ProjectionTarget::affine(s.c_eq, s.d_eq));
  for (Index r = 0; r < s.a_ineq.rows(); ++r)
    targets.push_back(ProjectionTarget::halfspace(s.a_ineq.row(r).transpose(),
                                                  s.b_ineq(r)));
  targets.push_back(ProjectionTarget::box(s.lower, s.upper));
  for (const auto& sl : s.soc_slices) targets.push_back(ProjectionTarget::soc(sl));
  for (const auto& sl : s.rotated_soc_slices)
    targets.push_back(ProjectionTarget::rotated_soc(sl));
  for (const auto& sl : s.psd_slices) targets.push_back(ProjectionTarget::psd(sl));
  return targets;
}

struct DykstraOptions {
  double tolerance = 1e-10;
  int max_sweeps = 5000;
};

struct DykstraResult {
  Vec point;
  double change = 0.0;  // max-norm change over the final sweep
  int sweeps = 0;
  bool converged = false;
};

/// Dykstra's alternating projections with correction terms; converges to the
/// exact Euclidean projection onto the intersection. A single target
/// degenerates to the direct projection.
inline DykstraResult dykstra_project(Vec point,
                                     const std::vector<ProjectionTarget>& targets,
                                     const DykstraOptions& opt = {}) {
  DykstraResult res;
  if (targets.empty()) {
    res.point = std::move(point);
    res.converged = true;
    return res;
  }
  if (targets.size() == 1) {
    targets[0].project_in_place(point);
    res.point = std::move(point);
    res.sweeps = 1;
    res.converged = true;
    return res;
  }
  const Index n = point.size();
  std::vector<Vec> corrections(targets.size(), Vec::Zero(n));
  Vec prev(n), z(n);
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    prev = point;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      z = point + corrections[i];
      point = z;
      targets[i].project_in_place(point);
      corrections[i] = z - point;
    }
    res.sweeps = sweep;
    res.change = (point - prev).cwiseAbs().maxCoeff();
    if (res.change <= opt.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.point = std::move(point);
  return res;
}

/// Projection onto the whole set; box-only sets skip Dykstra.
inline DykstraResult project_onto_set(const ConvexSetSpec& s, Vec point,
                                      const std::vector<ProjectionTarget>& targets,
                                      const DykstraOptions& opt = {}) {
  if (s.is_box_only()) {
    DykstraResult res;
    res.point = project_box(point, s.lower, s.upper);
    res.sweeps = 1;
    res.converged = true;
    return res;
  }
  return dykstra_project(std::move(point), targets, opt);
}

}  // namespace dgopt
