#include "deckland/qp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace deckland {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-sided view of constraint row vid/2: the lower side (even vid) reads
// a' x >= lower, the upper side (odd vid) reads -a' x >= -upper, so every
// working constraint has the form n' x >= b with multiplier >= 0.
struct Sides {
  const QpProblem& p;
  Eigen::VectorXd normal(int vid) const {
    const int row = vid / 2;
    return (vid % 2 == 0) ? p.A.row(row).transpose().eval()
                          : (-p.A.row(row)).transpose().eval();
  }
  double bound(int vid) const {
    const int row = vid / 2;
    return (vid % 2 == 0) ? p.lower(row) : -p.upper(row);
  }
};

// Factorization state of the dual method. J spans the variable space in the
// metric of H (J' H J = I); the first q columns of R hold the triangular
// factor of the active normals expressed in that basis.
struct Workspace {
  Eigen::MatrixXd J;
  Eigen::MatrixXd R;
  std::vector<int> active;       // vids, equalities first
  std::vector<bool> is_equality;
  Eigen::VectorXd u;             // multipliers of the active set
  int q = 0;
};

void rotate_columns(Eigen::MatrixXd& m, int a, int b, double c, double s) {
  const Eigen::VectorXd tmp = c * m.col(a) + s * m.col(b);
  m.col(b) = -s * m.col(a) + c * m.col(b);
  m.col(a) = tmp;
}

// Appends the constraint whose coordinates in the J basis are d, rotating
// the trailing coordinates into position q so R stays upper triangular.
void add_to_basis(Workspace& w, Eigen::VectorXd d, int vid, bool equality,
                  double multiplier) {
  const int n = static_cast<int>(d.size());
  for (int j = n - 1; j > w.q; --j) {
    const double h = std::hypot(d(j - 1), d(j));
    if (h == 0.0) continue;
    const double c = d(j - 1) / h, s = d(j) / h;
    d(j - 1) = h;
    d(j) = 0.0;
    rotate_columns(w.J, j - 1, j, c, s);
  }
  w.R.col(w.q).setZero();
  w.R.col(w.q).head(w.q + 1) = d.head(w.q + 1);
  w.active.push_back(vid);
  w.is_equality.push_back(equality);
  w.u.conservativeResize(w.q + 1);
  w.u(w.q) = multiplier;
  ++w.q;
}

// Removes active-set position k and restores the triangular structure.
void drop_from_basis(Workspace& w, int k) {
  for (int j = k; j < w.q - 1; ++j) {
    w.R.col(j) = w.R.col(j + 1);
    w.active[j] = w.active[j + 1];
    w.is_equality[j] = w.is_equality[j + 1];
    w.u(j) = w.u(j + 1);
  }
  --w.q;
  w.active.pop_back();
  w.is_equality.pop_back();
  w.u.conservativeResize(w.q);
  w.R.col(w.q).setZero();
  for (int j = k; j < w.q; ++j) {
    const double h = std::hypot(w.R(j, j), w.R(j + 1, j));
    if (h == 0.0) continue;
    const double c = w.R(j, j) / h, s = w.R(j + 1, j) / h;
    const Eigen::RowVectorXd tmp = c * w.R.row(j) + s * w.R.row(j + 1);
    w.R.row(j + 1) = -s * w.R.row(j) + c * w.R.row(j + 1);
    w.R.row(j) = tmp;
    w.R(j + 1, j) = 0.0;
    rotate_columns(w.J, j, j + 1, c, s);
  }
}

struct StepDirections {
  Eigen::VectorXd z;  // primal direction
  Eigen::VectorXd r;  // rate of change of the active multipliers
};

StepDirections directions(const Workspace& w, const Eigen::VectorXd& normal) {
  const int n = static_cast<int>(normal.size());
  const Eigen::VectorXd d = w.J.transpose() * normal;
  StepDirections s;
  s.z = w.J.rightCols(n - w.q) * d.tail(n - w.q);
  s.r = w.R.topLeftCorner(w.q, w.q)
            .triangularView<Eigen::Upper>()
            .solve(d.head(w.q));
  return s;
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, const QpSettings& settings,
                    const std::vector<int>& warm_start) {
  const int n = static_cast<int>(p.H.rows());
  const int m = static_cast<int>(p.A.rows());
  if (p.H.cols() != n || p.g.size() != n ||
      (m > 0 && p.A.cols() != n) || p.lower.size() != m ||
      p.upper.size() != m) {
    throw std::invalid_argument("inconsistent problem dimensions");
  }

  Eigen::MatrixXd h = 0.5 * (p.H + p.H.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  bool regularized = false;
  if (llt.info() == Eigen::Success) {
    // Gershgorin bound times the reciprocal condition estimate stands in
    // for the smallest eigenvalue; exact spectra are not worth a dense
    // eigensolve on every call.
    const double upper_eig = h.cwiseAbs().rowwise().sum().maxCoeff();
    if (llt.rcond() * upper_eig < settings.eigenvalue_floor) regularized = true;
  } else {
    regularized = true;
  }
  if (regularized) {
    h.diagonal().array() += settings.regularization;
    llt.compute(h);
    if (llt.info() != Eigen::Success) {
      throw std::invalid_argument("cost matrix is not positive definite");
    }
  }

  QpSolution sol;
  sol.x = -llt.solve(p.g);
  sol.lambda = Eigen::VectorXd::Zero(m);
  double f = 0.5 * p.g.dot(sol.x);
  sol.objective_trace.push_back(f);

  Workspace w;
  w.J = llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));
  w.R = Eigen::MatrixXd::Zero(n, n);

  const Sides sides{p};
  std::vector<bool> active_flag(2 * m, false);
  const double tol = settings.feasibility_tol;

  auto finish = [&](QpStatus status) {
    sol.status = status;
    for (int k = 0; k < w.q; ++k) {
      const int row = w.active[k] / 2;
      sol.lambda(row) += (w.active[k] % 2 == 0) ? w.u(k) : -w.u(k);
      if (!w.is_equality[k]) sol.active.push_back(w.active[k]);
    }
    return sol;
  };

  // Equality rows enter the active set once and never leave; their
  // multipliers may take either sign.
  for (int row = 0; row < m; ++row) {
    if (!(p.lower(row) == p.upper(row)) || !std::isfinite(p.lower(row))) {
      continue;
    }
    const int vid = 2 * row;
    const Eigen::VectorXd np = sides.normal(vid);
    const auto dir = directions(w, np);
    const double zdot = dir.z.dot(np);
    const double s = np.dot(sol.x) - sides.bound(vid);
    if (zdot > std::numeric_limits<double>::epsilon()) {
      const double t = -s / zdot;
      sol.x += t * dir.z;
      f += t * zdot * (0.5 * t);
      w.u.head(w.q) -= t * dir.r;
      add_to_basis(w, w.J.transpose() * np, vid, true, t);
      active_flag[vid] = true;
      sol.objective_trace.push_back(f);
    } else if (std::abs(s) > tol) {
      return finish(QpStatus::kInfeasible);  // inconsistent equalities
    }
    // A dependent but consistent equality is already satisfied; skip it.
  }

  std::size_t warm_cursor = 0;

  while (true) {
    if (++sol.iterations > settings.max_iterations) {
      return finish(QpStatus::kIterationLimit);
    }

    // Pick the next violated constraint: warm-start entries first, in the
    // order given, then the most violated row overall (lowest id on ties).
    int pick = -1;
    double worst = -tol;
    const Eigen::VectorXd ax = m > 0 ? (p.A * sol.x).eval() : Eigen::VectorXd();
    for (; warm_cursor < warm_start.size(); ++warm_cursor) {
      const int vid = warm_start[warm_cursor];
      if (vid < 0 || vid >= 2 * m || active_flag[vid]) continue;
      const int row = vid / 2;
      if (p.lower(row) == p.upper(row)) continue;
      const double s = (vid % 2 == 0) ? ax(row) - p.lower(row)
                                      : p.upper(row) - ax(row);
      if (s < -tol) {
        pick = vid;
        ++warm_cursor;
        break;
      }
    }
    if (pick < 0) {
      for (int row = 0; row < m; ++row) {
        if (p.lower(row) == p.upper(row)) continue;
        if (std::isfinite(p.lower(row)) && !active_flag[2 * row]) {
          const double s = ax(row) - p.lower(row);
          if (s < worst) {
            worst = s;
            pick = 2 * row;
          }
        }
        if (std::isfinite(p.upper(row)) && !active_flag[2 * row + 1]) {
          const double s = p.upper(row) - ax(row);
          if (s < worst) {
            worst = s;
            pick = 2 * row + 1;
          }
        }
      }
    }
    if (pick < 0) return finish(QpStatus::kOptimal);

    const Eigen::VectorXd np = sides.normal(pick);
    double s = np.dot(sol.x) - sides.bound(pick);
    double u_plus = 0.0;

    while (true) {
      if (++sol.iterations > settings.max_iterations) {
        return finish(QpStatus::kIterationLimit);
      }
      const auto dir = directions(w, np);

      // Longest step the active multipliers allow before one hits zero.
      double t1 = kInf;
      int blocking = -1;
      for (int k = 0; k < w.q; ++k) {
        if (w.is_equality[k] || dir.r(k) <= 0.0) continue;
        const double ratio = w.u(k) / dir.r(k);
        if (ratio < t1) {
          t1 = ratio;
          blocking = k;
        }
      }

      const double zdot = dir.z.dot(np);
      const bool z_usable = zdot > std::numeric_limits<double>::epsilon();
      const double t2 = z_usable ? -s / zdot : kInf;
      const double t = std::min(t1, t2);

      if (!std::isfinite(t)) {
        return finish(QpStatus::kInfeasible);
      }

      if (!z_usable) {
        // Pure dual step: trade multiplier mass, drop the blocker, retry.
        w.u.head(w.q) -= t * dir.r;
        u_plus += t;
        active_flag[w.active[blocking]] = false;
        drop_from_basis(w, blocking);
        sol.objective_trace.push_back(f);
        continue;
      }

      sol.x += t * dir.z;
      f += t * zdot * (0.5 * t + u_plus);
      w.u.head(w.q) -= t * dir.r;
      u_plus += t;
      sol.objective_trace.push_back(f);

      if (t == t2) {
        add_to_basis(w, w.J.transpose() * np, pick, false, u_plus);
        active_flag[pick] = true;
        break;
      }
      active_flag[w.active[blocking]] = false;
      drop_from_basis(w, blocking);
      s = np.dot(sol.x) - sides.bound(pick);
    }
  }
}

KktResiduals kkt_residuals(const QpProblem& p, const QpSolution& sol) {
  KktResiduals r;
  const Eigen::VectorXd stat =
      p.H * sol.x + p.g -
      (p.A.rows() > 0 ? (p.A.transpose() * sol.lambda).eval()
                      : Eigen::VectorXd::Zero(p.g.size()).eval());
  r.stationarity = stat.cwiseAbs().maxCoeff();
  for (int i = 0; i < p.A.rows(); ++i) {
    const double v = p.A.row(i).dot(sol.x);
    if (std::isfinite(p.lower(i))) {
      r.primal = std::max(r.primal, p.lower(i) - v);
    }
    if (std::isfinite(p.upper(i))) {
      r.primal = std::max(r.primal, v - p.upper(i));
    }
    if (p.lower(i) == p.upper(i)) continue;  // equality: no slack condition
    const double lam = sol.lambda(i);
    if (lam > 0.0 && std::isfinite(p.lower(i))) {
      r.complementarity = std::max(r.complementarity, lam * (v - p.lower(i)));
    } else if (lam < 0.0 && std::isfinite(p.upper(i))) {
      r.complementarity = std::max(r.complementarity, -lam * (p.upper(i) - v));
    }
  }
  return r;
}

}  // namespace deckland
