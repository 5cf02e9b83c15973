#include "planstitch/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>

namespace planstitch {

namespace {

struct Reduced {
  Eigen::VectorXd x0;
  Eigen::MatrixXd Z;
  bool consistent = true;
};

Reduced eliminate_equalities(const QuadraticProgram& qp, double tol) {
  const int n = qp.variables();
  Reduced r;
  if (qp.Aeq.rows() == 0) {
    r.x0 = Eigen::VectorXd::Zero(n);
    r.Z = Eigen::MatrixXd::Identity(n, n);
    return r;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(qp.Aeq);
  r.x0 = cod.solve(qp.beq);
  const double res = (qp.Aeq * r.x0 - qp.beq).cwiseAbs().maxCoeff();
  if (!(res <= 1e3 * tol * (1.0 + qp.beq.cwiseAbs().maxCoeff()))) {
    r.consistent = false;
    return r;
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(qp.Aeq);
  if (lu.dimensionOfKernel() == 0) {
    r.Z = Eigen::MatrixXd::Zero(n, 0);
  } else {
    const Eigen::MatrixXd k = lu.kernel();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(k);
    r.Z = qr.householderQ() * Eigen::MatrixXd::Identity(n, k.cols());
  }
  return r;
}

}  // namespace

QpResult solve_qp(const QuadraticProgram& qp, double tol) {
  QpResult out;
  const Reduced red = eliminate_equalities(qp, tol);
  if (!red.consistent) return out;

  const int nr = static_cast<int>(red.Z.cols());
  const int m = static_cast<int>(qp.G.rows());
  // Constraints as N_j . y >= b_j.
  Eigen::MatrixXd Nc = m > 0 ? Eigen::MatrixXd(-(qp.G * red.Z)) : Eigen::MatrixXd(0, nr);
  Eigen::VectorXd bc = m > 0 ? Eigen::VectorXd(-(qp.h - qp.G * red.x0)) : Eigen::VectorXd(0);

  if (nr == 0) {
    for (int j = 0; j < m; ++j) {
      if (bc[j] > tol) return out;
    }
    out.status = QpStatus::Optimal;
    out.x = red.x0;
    return out;
  }

  const Eigen::MatrixXd Hr = red.Z.transpose() * qp.H * red.Z;
  const Eigen::VectorXd cr = red.Z.transpose() * (qp.H * red.x0 + qp.c);
  Eigen::VectorXd y = -Hr.ldlt().solve(cr);

  std::vector<int> active;
  std::vector<double> u;
  const double inf = std::numeric_limits<double>::infinity();
  const int maxIter = 1000 + 50 * m;
  int iter = 0;

  while (true) {
    if (++iter > maxIter) return out;
    int p = -1;
    double sMin = -tol;
    for (int j = 0; j < m; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) continue;
      const double s = Nc.row(j).dot(y) - bc[j];
      if (s < sMin) {
        sMin = s;
        p = j;
      }
    }
    if (p < 0) break;

    double up = 0.0;
    while (true) {
      if (++iter > maxIter) return out;
      const int k = static_cast<int>(active.size());
      const Eigen::VectorXd np = Nc.row(p).transpose();
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(nr + k, nr + k);
      kkt.topLeftCorner(nr, nr) = Hr;
      for (int a = 0; a < k; ++a) {
        kkt.block(0, nr + a, nr, 1) = Nc.row(active[a]).transpose();
        kkt.block(nr + a, 0, 1, nr) = Nc.row(active[a]);
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nr + k);
      rhs.head(nr) = np;
      const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
      const Eigen::VectorXd z = sol.head(nr);
      const Eigen::VectorXd r = sol.tail(k);

      double t1 = inf;
      int drop = -1;
      for (int a = 0; a < k; ++a) {
        if (r[a] > tol) {
          const double ratio = u[a] / r[a];
          if (ratio < t1) {
            t1 = ratio;
            drop = a;
          }
        }
      }
      const double s = np.dot(y) - bc[p];
      const double zn = z.dot(np);
      const double t2 = (z.norm() <= 1e-12 || zn <= 1e-14) ? inf : -s / zn;
      const double t = std::min(t1, t2);
      if (t == inf) return out;  // infeasible
      for (int a = 0; a < k; ++a) u[a] -= t * r[a];
      up += t;
      if (t2 < inf) y += t * z;
      if (t == t2) {
        active.push_back(p);
        u.push_back(up);
        break;
      }
      active.erase(active.begin() + drop);
      u.erase(u.begin() + drop);
    }
  }
  out.status = QpStatus::Optimal;
  out.x = red.x0 + red.Z * y;
  out.iterations = iter;
  out.activeSet = active;
  return out;
}

std::vector<int> conflicting_constraints(const QuadraticProgram& qp, double tol) {
  if (solve_qp(qp, tol).status == QpStatus::Optimal) return {};
  const int me = static_cast<int>(qp.Aeq.rows());
  const int mi = static_cast<int>(qp.G.rows());
  std::vector<int> keep;
  for (int i = 0; i < me + mi; ++i) keep.push_back(i);
  auto subset = [&](const std::vector<int>& idx) {
    QuadraticProgram s;
    s.H = qp.H;
    s.c = qp.c;
    std::vector<int> eq, in;
    for (int i : idx) (i < me ? eq : in).push_back(i < me ? i : i - me);
    s.Aeq.resize(static_cast<int>(eq.size()), qp.variables());
    s.beq.resize(static_cast<int>(eq.size()));
    for (std::size_t r = 0; r < eq.size(); ++r) {
      s.Aeq.row(r) = qp.Aeq.row(eq[r]);
      s.beq[r] = qp.beq[eq[r]];
    }
    s.G.resize(static_cast<int>(in.size()), qp.variables());
    s.h.resize(static_cast<int>(in.size()));
    for (std::size_t r = 0; r < in.size(); ++r) {
      s.G.row(r) = qp.G.row(in[r]);
      s.h[r] = qp.h[in[r]];
    }
    return s;
  };
  for (std::size_t pos = 0; pos < keep.size();) {
    std::vector<int> trial = keep;
    trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(pos));
    if (solve_qp(subset(trial), tol).status == QpStatus::Infeasible) {
      keep = std::move(trial);
    } else {
      ++pos;
    }
  }
  return keep;
}

}  // namespace planstitch
