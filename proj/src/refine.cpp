#include "planstitch/refine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "planstitch/error.hpp"

namespace planstitch {

namespace {

// 0 for a Y-aligned segment, 1 for Z-aligned.
int axis_of(const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  return std::abs(d.x()) >= std::abs(d.y()) ? 0 : 1;
}

double dir_of(const Vec2& a, const Vec2& b, int axis) { return b[axis] - a[axis] >= 0 ? 1.0 : -1.0; }

}  // namespace

JointKind classify_joint(std::span<const Vec2> prev, std::span<const Vec2> next) {
  if (prev.size() < 2 || next.size() < 2) throw PreconditionError("joint paths need two keypoints");
  const int ai = axis_of(prev[prev.size() - 2], prev.back());
  const int aj = axis_of(next[0], next[1]);
  return ai == aj ? JointKind::Parallel : JointKind::Perpendicular;
}

std::vector<Joint> chain_joints(int slots, bool includeWrapAround) {
  std::vector<Joint> joints;
  for (int k = 0; k + 1 < slots; ++k) joints.push_back({k, k + 1});
  if (includeWrapAround && slots > 1) joints.push_back({slots - 1, 0});
  return joints;
}

ConstraintBuild build_constraints(const PlacedPaths& placed, std::span<const Joint> joints, double eps) {
  ConstraintBuild out;
  for (const auto& jt : joints) {
    const auto& fi = placed[jt.slotI];
    const auto& fj = placed[jt.slotJ];
    const Vec2& q = fi.back();
    const Vec2& qp = fi[fi.size() - 2];
    const Vec2& p = fj[0];
    const Vec2& pp = fj[1];
    const int ai = axis_of(qp, q);
    const int aj = axis_of(p, pp);
    const double di = dir_of(qp, q, ai);
    const double dj = dir_of(p, pp, aj);

    JointConstraint base;
    base.slotI = jt.slotI;
    base.slotJ = jt.slotJ;

    if (ai == aj) {
      const int a = ai;
      const int o = 1 - a;
      JointConstraint eq = base;
      eq.kind = ConstraintKind::ParallelEquality;
      eq.equality = true;
      eq.coeffs[o] = 1.0;
      eq.coeffs[2 + o] = -1.0;
      eq.constant = q[o] - p[o];
      out.constraints.push_back(eq);

      if (fi.size() < 3 || fj.size() < 3) {
        ++out.droppedNonOverlap;
        continue;
      }
      const double li = (q - qp).norm();
      const double lj = (pp - p).norm();
      const double alpha = std::min(li, lj);
      const double d0 = pp[a] - qp[a];
      const double s = std::abs(d0) > 1e-12 ? (d0 > 0 ? 1.0 : -1.0) : di;
      JointConstraint no = base;
      no.kind = ConstraintKind::ParallelNonOverlap;
      no.equality = false;
      no.coeffs[a] = s;
      no.coeffs[2 + a] = -s;
      no.constant = (li + lj - alpha + eps) - s * d0;
      out.constraints.push_back(no);
    } else {
      for (const auto& [axis, d] : {std::pair{ai, di}, std::pair{aj, dj}}) {
        JointConstraint c = base;
        c.kind = ConstraintKind::PerpendicularOrder;
        c.equality = false;
        c.coeffs[axis] = d;
        c.coeffs[2 + axis] = -d;
        c.constant = eps - d * (p[axis] - q[axis]);
        out.constraints.push_back(c);
      }
    }
  }
  return out;
}

double joint_objective(const PlacedPaths& placed, std::span<const Joint> joints, std::span<const Vec2> t) {
  double sum = 0.0;
  for (const auto& jt : joints) {
    sum += ((placed[jt.slotI].back() + t[jt.slotI]) - (placed[jt.slotJ].front() + t[jt.slotJ])).squaredNorm();
  }
  return sum;
}

QuadraticProgram refinement_qp(const PlacedPaths& placed, std::span<const Joint> joints,
                               std::span<const JointConstraint> constraints, int gauge) {
  const int slots = static_cast<int>(placed.size());
  const int nv = 2 * (slots - 1);
  auto var = [&](int slot, int coord) { return slot == gauge ? -1 : 2 * (slot < gauge ? slot : slot - 1) + coord; };

  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(2 * static_cast<int>(joints.size()), nv);
  Eigen::VectorXd e(2 * static_cast<int>(joints.size()));
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const auto& jt = joints[k];
    const Vec2 d = placed[jt.slotI].back() - placed[jt.slotJ].front();
    for (int c = 0; c < 2; ++c) {
      const int row = 2 * static_cast<int>(k) + c;
      if (int v = var(jt.slotI, c); v >= 0) B(row, v) += 1.0;
      if (int v = var(jt.slotJ, c); v >= 0) B(row, v) -= 1.0;
      e[row] = d[c];
    }
  }
  QuadraticProgram qp;
  qp.H = 2.0 * B.transpose() * B;
  qp.c = 2.0 * B.transpose() * e;

  int me = 0, mi = 0;
  for (const auto& c : constraints) (c.equality ? me : mi)++;
  qp.Aeq = Eigen::MatrixXd::Zero(me, nv);
  qp.beq = Eigen::VectorXd::Zero(me);
  qp.G = Eigen::MatrixXd::Zero(mi, nv);
  qp.h = Eigen::VectorXd::Zero(mi);
  int ie = 0, ii = 0;
  for (const auto& c : constraints) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nv);
    for (int k = 0; k < 4; ++k) {
      const int slot = k < 2 ? c.slotI : c.slotJ;
      if (int v = var(slot, k % 2); v >= 0) row[v] += c.coeffs[k];
    }
    if (c.equality) {
      qp.Aeq.row(ie) = row;
      qp.beq[ie++] = -c.constant;
    } else {
      qp.G.row(ii) = row;
      qp.h[ii++] = -c.constant;
    }
  }
  return qp;
}

RefinementResult solve_refinement(const PlacedPaths& placed, std::span<const Joint> joints,
                                  std::span<const JointConstraint> constraints, int gauge) {
  const int slots = static_cast<int>(placed.size());
  RefinementResult res;
  res.constraints.assign(constraints.begin(), constraints.end());
  res.translations.assign(slots, Vec2::Zero());
  res.initialObjective = joint_objective(placed, joints, res.translations);
  if (slots <= 1) {
    res.refined = true;
    res.objective = res.initialObjective;
    return res;
  }
  const QuadraticProgram qp = refinement_qp(placed, joints, constraints, gauge);
  const QpResult sol = solve_qp(qp);
  if (sol.status != QpStatus::Optimal) {
    std::vector<int> eqIdx, inIdx;
    for (std::size_t k = 0; k < constraints.size(); ++k) {
      (constraints[k].equality ? eqIdx : inIdx).push_back(static_cast<int>(k));
    }
    std::vector<int> conflict;
    for (int i : conflicting_constraints(qp)) {
      conflict.push_back(i < static_cast<int>(eqIdx.size()) ? eqIdx[i] : inIdx[i - eqIdx.size()]);
    }
    std::sort(conflict.begin(), conflict.end());
    throw RefinementError("joint constraints are infeasible", conflict);
  }
  for (int s = 0; s < slots; ++s) {
    if (s == gauge) continue;
    const int v = 2 * (s < gauge ? s : s - 1);
    res.translations[s] = Vec2(sol.x[v], sol.x[v + 1]);
  }
  res.objective = joint_objective(placed, joints, res.translations);
  for (const auto& c : constraints) {
    const double val = c.evaluate(res.translations[c.slotI], res.translations[c.slotJ]);
    if (c.equality) {
      res.maxEqualityResidual = std::max(res.maxEqualityResidual, std::abs(val));
    } else {
      res.maxInequalityViolation = std::max(res.maxInequalityViolation, val);
    }
  }
  res.refined = true;
  return res;
}

RefinementResult refine_placement(const PlacedPaths& placed, double closure, const RefineConfig& config) {
  const int n = static_cast<int>(placed.size());
  const bool wrap = n > 1 && closure < config.closureGate;
  const auto joints = chain_joints(n, wrap);
  const auto full = build_constraints(placed, joints, config.eps);
  std::vector<int> conflict;
  try {
    auto res = solve_refinement(placed, joints, full.constraints);
    res.wrapIncluded = wrap;
    res.wrapConstrained = wrap;
    res.droppedNonOverlap = full.droppedNonOverlap;
    return res;
  } catch (const RefinementError& e) {
    conflict = e.conflicting();
  }
  if (wrap) {
    const auto open = build_constraints(placed, chain_joints(n, false), config.eps);
    try {
      auto res = solve_refinement(placed, joints, open.constraints);
      res.wrapIncluded = true;
      res.wrapConstrained = false;
      res.droppedNonOverlap = open.droppedNonOverlap;
      res.conflicting = conflict;
      return res;
    } catch (const RefinementError&) {
    }
  }
  RefinementResult res;
  res.translations.assign(n, Vec2::Zero());
  res.initialObjective = joint_objective(placed, joints, res.translations);
  res.objective = res.initialObjective;
  res.refined = false;
  res.wrapIncluded = wrap;
  res.conflicting = conflict;
  res.constraints = full.constraints;
  res.droppedNonOverlap = full.droppedNonOverlap;
  return res;
}

GlobalLayout finalize_layout(const PlacedPaths& placed, std::span<const Vec2> translations, double snapTol) {
  GlobalLayout out;
  std::vector<Vec2> chain;
  for (std::size_t s = 0; s < placed.size(); ++s) {
    std::vector<Vec2> k;
    for (const auto& v : placed[s]) k.push_back(v + translations[s]);
    if (chain.empty()) {
      chain = k;
      continue;
    }
    const Vec2 q = chain.back();
    const Vec2 p = k.front();
    if ((q - p).norm() > 1e-9) {
      const int ai = axis_of(chain[chain.size() - 2], q);
      const int aj = axis_of(p, k[1]);
      if (ai != aj) {
        Vec2 c;
        c[ai] = p[ai];
        c[1 - ai] = q[1 - ai];
        chain.push_back(c);
      } else if (std::abs(q[1 - ai] - p[1 - ai]) > 1e-9) {
        const double m = 0.5 * (q[ai] + p[ai]);
        Vec2 c1, c2;
        c1[ai] = m;
        c1[1 - ai] = q[1 - ai];
        c2[ai] = m;
        c2[1 - ai] = p[1 - ai];
        chain.push_back(c1);
        chain.push_back(c2);
      }
    }
    chain.insert(chain.end(), k.begin() + 1, k.end());
  }
  chain = merge_collinear(chain, false, 1e-9);
  if (chain.size() < 2) {
    out.polygon.vertices = chain;
    return out;
  }
  out.residualGap = manhattan_distance(chain.front(), chain.back());
  if (out.residualGap > snapTol) {
    out.polygon.vertices = chain;
    return out;
  }
  if (out.residualGap > 1e-9) {
    const std::size_t n = chain.size();
    if (n >= 3) {
      const int a = axis_of(chain[n - 2], chain[n - 1]);
      chain[n - 2][1 - a] = chain.front()[1 - a];
    }
    chain.back() = chain.front();
    out.snapped = true;
  }
  chain.pop_back();
  out.polygon.vertices = merge_collinear(chain, true, 1e-9);
  out.closed = is_valid_rectilinear(out.polygon);
  return out;
}

std::string format_obj(const GlobalLayout& layout, double wallHeight) {
  std::ostringstream out;
  out.precision(10);
  const auto& v = layout.polygon.vertices;
  const std::size_t n = v.size();
  for (const auto& p : v) out << "v 0 " << p.x() << ' ' << p.y() << '\n';
  for (const auto& p : v) out << "v " << wallHeight << ' ' << p.x() << ' ' << p.y() << '\n';
  const std::size_t edges = layout.closed ? n : (n == 0 ? 0 : n - 1);
  for (std::size_t i = 0; i < edges; ++i) {
    const std::size_t a = i + 1;
    const std::size_t b = (i + 1) % n + 1;
    out << "f " << a << ' ' << b << ' ' << b + n << ' ' << a + n << '\n';
  }
  if (layout.closed && n >= 3) {
    out << 'f';
    for (std::size_t i = 0; i < n; ++i) out << ' ' << i + 1;
    out << '\n';
  }
  return out.str();
}

}  // namespace planstitch
