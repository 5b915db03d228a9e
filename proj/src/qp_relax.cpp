#include "miqpc/qp_relax.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>

namespace miqpc {

namespace {

constexpr double kRankThreshold = 1e-10;

enum VarState : signed char { kFree = 0, kAtLower = 1, kAtUpper = 2, kFixed = 3 };
enum RowKind : signed char { kRowEq = 0, kRowIneq = 1, kRowSkip = 2 };

// Finds antiparallel row pairs (a, b) vs (-a, -b): the encoding used for
// equality rows. The first member becomes an equality, the twin is skipped.
void detect_equality_pairs(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           std::vector<signed char>& kind) {
  const int m = static_cast<int>(b.size());
  kind.assign(m, kRowIneq);
  if (m == 0 || A.cols() == 0) return;
  std::vector<std::pair<std::uint64_t, int>> sig(m);
  for (int r = 0; r < m; ++r) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mixd = [&h](double v) {
      const double a = std::abs(v);
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(a));
      std::memcpy(&bits, &a, sizeof(bits));
      h = (h ^ bits) * 1099511628211ULL;
    };
    for (int j = 0; j < A.cols(); ++j) mixd(A(r, j));
    mixd(b[r]);
    sig[r] = {h, r};
  }
  std::sort(sig.begin(), sig.end());
  for (std::size_t i = 0; i < sig.size(); ++i) {
    const int r = sig[i].second;
    if (kind[r] != kRowIneq) continue;
    for (std::size_t jdx = i + 1; jdx < sig.size() && sig[jdx].first == sig[i].first; ++jdx) {
      const int r2 = sig[jdx].second;
      if (kind[r2] != kRowIneq) continue;
      if (b[r2] == -b[r] && A.row(r2) == -A.row(r)) {
        kind[std::min(r, r2)] = kRowEq;
        kind[std::max(r, r2)] = kRowSkip;
        break;
      }
    }
  }
}

struct EngineProblem {
  const Eigen::MatrixXd* rows = nullptr;
  const Eigen::VectorXd* rhs = nullptr;
  const std::vector<signed char>* kind = nullptr;
  const Eigen::MatrixXd* Qs = nullptr;  // null => zero quadratic term
  const Eigen::VectorXd* q_diag = nullptr;
  const Eigen::VectorXd* c = nullptr;
  Eigen::VectorXd lb, ub;
  double kkt_tol = 1e-8;
  double early_exit_objective = -kInf;  // stop once f(y) <= this
};

struct EngineState {
  Eigen::VectorXd y;
  std::vector<signed char> var_state;
  std::vector<char> row_active;
};

enum class EngineStatus { Stationary, IterLimit, Unbounded, EarlyExit };

class Engine {
 public:
  Engine(const EngineProblem& p, EngineState& s, int max_pivots, int& pivots)
      : p_(p), s_(s), max_pivots_(max_pivots), pivots_(pivots) {
    n_ = static_cast<int>(s_.y.size());
    m_ = static_cast<int>(p_.rhs->size());
    row_norm_.resize(m_);
    for (int r = 0; r < m_; ++r)
      row_norm_[r] = std::max(1.0, p_.rows->row(r).cwiseAbs().maxCoeff());
  }

  EngineStatus run() {
    int zero_streak = 0;
    bool bland = false;
    while (true) {
      if (pivots_ >= max_pivots_) return EngineStatus::IterLimit;
      if (objective() <= p_.early_exit_objective) return EngineStatus::EarlyExit;

      build_working_view();
      const Eigen::VectorXd g = gradient();
      const double gscale = 1.0 + (g.size() ? g.cwiseAbs().maxCoeff() : 0.0);

      Eigen::VectorXd p_dir;
      bool is_ray = false;
      const bool stationary = !compute_direction(g, gscale, p_dir, is_ray);

      if (stationary) {
        int leave_key = -1;
        if (check_multipliers(g, gscale, bland, leave_key)) return EngineStatus::Stationary;
        ++pivots_;
        release(leave_key);
        if (++zero_streak > 2 * (m_ + n_) + 50) bland = true;
        continue;
      }

      ++pivots_;
      const double step = ratio_and_step(p_dir, is_ray);
      if (step < 0.0) return EngineStatus::Unbounded;
      if (step > 1e-14)
        zero_streak = 0;
      else if (++zero_streak > 2 * (m_ + n_) + 50)
        bland = true;
    }
  }

  double objective() const {
    double f = p_.c->dot(s_.y);
    if (p_.q_diag)
      f += s_.y.dot(p_.q_diag->cwiseProduct(s_.y));
    else if (p_.Qs)
      f += s_.y.dot(*p_.Qs * s_.y);
    return f;
  }

 private:
  Eigen::VectorXd gradient() const {
    Eigen::VectorXd g = *p_.c;
    if (p_.q_diag)
      g += 2.0 * p_.q_diag->cwiseProduct(s_.y);
    else if (p_.Qs)
      g += 2.0 * (*p_.Qs * s_.y);
    return g;
  }

  // Collects free variables and the working rows that touch at least one
  // free variable. Rows whose support is entirely fixed/at-bound impose no
  // restriction on the step and are left out of the KKT system.
  void build_working_view() {
    free_.clear();
    for (int i = 0; i < n_; ++i)
      if (s_.var_state[i] == kFree) free_.push_back(i);
    work_rows_.clear();
    for (int r = 0; r < m_; ++r) {
      const auto k = (*p_.kind)[r];
      if (k == kRowSkip) continue;
      if (k == kRowEq || s_.row_active[r]) {
        bool support = false;
        for (int f : free_)
          if ((*p_.rows)(r, f) != 0.0) {
            support = true;
            break;
          }
        if (support)
          work_rows_.push_back(r);
        else if (k == kRowIneq)
          s_.row_active[r] = 0;  // tight constant row; treat as nonbasic
      }
    }
  }

  // Returns false when the point is stationary on the current working set.
  // Otherwise fills p_dir (full length, zero outside free vars).
  bool compute_direction(const Eigen::VectorXd& g, double gscale,
                         Eigen::VectorXd& p_dir, bool& is_ray) {
    const int nf = static_cast<int>(free_.size());
    if (nf == 0) return false;
    const int nr = static_cast<int>(work_rows_.size());

    Eigen::VectorXd g_f(nf);
    for (int i = 0; i < nf; ++i) g_f[i] = g[free_[i]];

    Eigen::MatrixXd Z;
    if (nr == 0) {
      Z = Eigen::MatrixXd::Identity(nf, nf);
      qr_valid_ = false;
    } else {
      Eigen::MatrixXd Wt(nf, nr);
      for (int j = 0; j < nr; ++j)
        for (int i = 0; i < nf; ++i) Wt(i, j) = (*p_.rows)(work_rows_[j], free_[i]);
      qr_.compute(Wt);
      qr_.setThreshold(kRankThreshold);
      qr_valid_ = true;
      const int rank = static_cast<int>(qr_.rank());
      if (rank >= nf) return false;  // fully determined
      Eigen::MatrixXd Qm = Eigen::MatrixXd::Identity(nf, nf);
      Qm.applyOnTheLeft(qr_.householderQ());
      Z = Qm.rightCols(nf - rank);
    }

    const int nz = static_cast<int>(Z.cols());
    const Eigen::VectorXd g_r = Z.transpose() * g_f;
    const double stat_tol = 0.5 * p_.kkt_tol * gscale;

    Eigen::VectorXd w;
    is_ray = false;
    if (!p_.Qs && !p_.q_diag) {
      if (g_r.cwiseAbs().maxCoeff() <= stat_tol) return false;
      w = -g_r;
      is_ray = true;
    } else {
      Eigen::MatrixXd H(nz, nz);
      if (p_.q_diag) {
        Eigen::MatrixXd DZ = Z;
        for (int i = 0; i < nf; ++i) DZ.row(i) *= (*p_.q_diag)[free_[i]];
        H.noalias() = Z.transpose() * DZ;
      } else {
        Eigen::MatrixXd Qff(nf, nf);
        for (int i = 0; i < nf; ++i)
          for (int j = 0; j < nf; ++j) Qff(i, j) = (*p_.Qs)(free_[i], free_[j]);
        H.noalias() = Z.transpose() * Qff * Z;
      }
      H = 0.5 * (H + H.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
      const double hmax = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() < -1e-8 * hmax)
        throw IndefiniteError("negative curvature in reduced Hessian");
      const double eig_tol = 1e-12 * hmax;

      Eigen::VectorXd vg = es.eigenvectors().transpose() * g_r;
      Eigen::VectorXd null_part = Eigen::VectorXd::Zero(nz);
      Eigen::VectorXd newton = Eigen::VectorXd::Zero(nz);
      for (int i = 0; i < nz; ++i) {
        if (es.eigenvalues()[i] <= eig_tol)
          null_part[i] = vg[i];
        else
          newton[i] = -0.5 * vg[i] / es.eigenvalues()[i];
      }
      if (null_part.cwiseAbs().maxCoeff() > stat_tol) {
        w = -(es.eigenvectors() * null_part);
        is_ray = true;
      } else {
        w = es.eigenvectors() * newton;
      }
    }

    Eigen::VectorXd pf = Z * w;
    const double pinf = pf.size() ? pf.cwiseAbs().maxCoeff() : 0.0;
    if (is_ray) {
      if (pinf <= 0.0) return false;
      pf /= pinf;  // unit ray, scale-free ratio test
    } else if (pinf <= 1e-11 * (1.0 + s_.y.cwiseAbs().maxCoeff())) {
      return false;
    }
    p_dir = Eigen::VectorXd::Zero(n_);
    for (int i = 0; i < nf; ++i) p_dir[free_[i]] = pf[i];
    return true;
  }

  // Ratio test along p_dir, step, and working-set update. Returns the step
  // length taken, or -1 when a ray hits no blocking constraint (unbounded).
  double ratio_and_step(const Eigen::VectorXd& p_dir, bool is_ray) {
    const double pinf = p_dir.cwiseAbs().maxCoeff();
    const double a_full = is_ray ? kInf : 1.0;
    double alpha = a_full;
    int block_key = -1;  // rows: r, lower bound: m+i, upper bound: m+n+i

    const Eigen::VectorXd d_all = (*p_.rows) * p_dir;
    const Eigen::VectorXd s_all = *p_.rhs - (*p_.rows) * s_.y;
    for (int r = 0; r < m_; ++r) {
      if ((*p_.kind)[r] != kRowIneq || s_.row_active[r]) continue;
      const double thresh = 1e-11 * row_norm_[r] * std::max(1.0, pinf);
      if (d_all[r] <= thresh) continue;
      const double a = std::max(0.0, s_all[r]) / d_all[r];
      if (a < alpha || (a == alpha && (block_key == -1 || r < block_key))) {
        alpha = a;
        block_key = r;
      }
    }
    const double bthresh = 1e-11 * std::max(1.0, pinf);
    for (int i = 0; i < n_; ++i) {
      if (s_.var_state[i] != kFree || p_dir[i] == 0.0) continue;
      if (p_dir[i] > bthresh && std::isfinite(p_.ub[i])) {
        const double a = std::max(0.0, p_.ub[i] - s_.y[i]) / p_dir[i];
        const int key = m_ + n_ + i;
        if (a < alpha || (a == alpha && (block_key == -1 || key < block_key))) {
          alpha = a;
          block_key = key;
        }
      } else if (p_dir[i] < -bthresh && std::isfinite(p_.lb[i])) {
        const double a = std::max(0.0, p_.lb[i] - s_.y[i]) / p_dir[i];
        const int key = m_ + i;
        if (a < alpha || (a == alpha && (block_key == -1 || key < block_key))) {
          alpha = a;
          block_key = key;
        }
      }
    }

    if (is_ray && block_key == -1) return -1.0;
    if (!std::isfinite(alpha)) alpha = a_full;

    s_.y += alpha * p_dir;
    if (block_key >= 0 && alpha < a_full) {
      if (block_key < m_) {
        s_.row_active[block_key] = 1;
      } else if (block_key < m_ + n_) {
        const int i = block_key - m_;
        s_.y[i] = p_.lb[i];
        s_.var_state[i] = kAtLower;
      } else {
        const int i = block_key - m_ - n_;
        s_.y[i] = p_.ub[i];
        s_.var_state[i] = kAtUpper;
      }
    }
    return alpha;
  }

  // Least-squares multipliers over the working set; true when the point is
  // optimal. Otherwise leave_key names the constraint to release (most
  // negative multiplier; smallest index under Bland's rule).
  bool check_multipliers(const Eigen::VectorXd& g, double gscale, bool bland,
                         int& leave_key) {
    const int nr = static_cast<int>(work_rows_.size());
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(nr);
    if (nr > 0) {
      const int nf = static_cast<int>(free_.size());
      Eigen::VectorXd g_f(nf);
      for (int i = 0; i < nf; ++i) g_f[i] = g[free_[i]];
      if (!qr_valid_) {
        Eigen::MatrixXd Wt(nf, nr);
        for (int j = 0; j < nr; ++j)
          for (int i = 0; i < nf; ++i) Wt(i, j) = (*p_.rows)(work_rows_[j], free_[i]);
        qr_.compute(Wt);
        qr_.setThreshold(kRankThreshold);
        qr_valid_ = true;
      }
      lambda = qr_.solve(-g_f);
    }

    Eigen::VectorXd gky = g;
    for (int j = 0; j < nr; ++j) gky += lambda[j] * p_.rows->row(work_rows_[j]).transpose();

    const double tol = p_.kkt_tol * gscale;
    double worst = -tol;
    leave_key = -1;
    auto consider = [&](double value, int key) {
      if (bland) {
        if (value < -tol && (leave_key == -1 || key < leave_key)) {
          leave_key = key;
          worst = value;
        }
      } else if (value < worst || (value == worst && leave_key >= 0 && key < leave_key)) {
        worst = value;
        leave_key = key;
      }
    };
    for (int j = 0; j < nr; ++j)
      if ((*p_.kind)[work_rows_[j]] == kRowIneq) consider(lambda[j], work_rows_[j]);
    for (int i = 0; i < n_; ++i) {
      if (s_.var_state[i] == kAtLower)
        consider(gky[i], m_ + i);
      else if (s_.var_state[i] == kAtUpper)
        consider(-gky[i], m_ + n_ + i);
    }
    return leave_key == -1;
  }

  void release(int key) {
    if (key < m_)
      s_.row_active[key] = 0;
    else if (key < m_ + n_)
      s_.var_state[key - m_] = kFree;
    else
      s_.var_state[key - m_ - n_] = kFree;
  }

  const EngineProblem& p_;
  EngineState& s_;
  int max_pivots_;
  int& pivots_;
  int n_ = 0, m_ = 0;
  std::vector<double> row_norm_;
  std::vector<int> free_;
  std::vector<int> work_rows_;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  bool qr_valid_ = false;
};

// Snaps y into [lb, ub] and derives the variable states.
void clamp_and_tag(const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
                   Eigen::VectorXd& y, std::vector<signed char>& state) {
  const int n = static_cast<int>(y.size());
  state.assign(n, kFree);
  for (int i = 0; i < n; ++i) {
    if (lb[i] == ub[i]) {
      y[i] = lb[i];
      state[i] = kFixed;
    } else if (y[i] <= lb[i]) {
      y[i] = lb[i];
      state[i] = std::isfinite(lb[i]) ? kAtLower : kFree;
    } else if (y[i] >= ub[i]) {
      y[i] = ub[i];
      state[i] = std::isfinite(ub[i]) ? kAtUpper : kFree;
    }
  }
}

// Seeds the active row set with rows tight at y, keeping the working-set
// gradients independent on the free variables (modified Gram-Schmidt test).
void seed_active_rows(const Eigen::MatrixXd& rows, const Eigen::VectorXd& rhs,
                      const std::vector<signed char>& kind,
                      const std::vector<signed char>& var_state,
                      const Eigen::VectorXd& y, std::vector<char>& row_active) {
  const int m = static_cast<int>(rhs.size());
  const int n = static_cast<int>(y.size());
  row_active.assign(m, 0);
  if (m == 0) return;
  std::vector<int> free_idx;
  for (int i = 0; i < n; ++i)
    if (var_state[i] == kFree) free_idx.push_back(i);
  const int nf = static_cast<int>(free_idx.size());
  if (nf == 0) return;
  std::vector<Eigen::VectorXd> basis;
  auto try_add = [&](int r) -> bool {
    Eigen::VectorXd v(nf);
    for (int i = 0; i < nf; ++i) v[i] = rows(r, free_idx[i]);
    const double nrm0 = v.norm();
    if (nrm0 <= 0.0) return false;
    for (const auto& q : basis) v -= q.dot(v) * q;
    if (v.norm() <= 1e-8 * nrm0) return false;
    basis.push_back(v / v.norm());
    return true;
  };
  const double bscale = std::max(1.0, rhs.cwiseAbs().maxCoeff());
  for (int r = 0; r < m; ++r)
    if (kind[r] == kRowEq) try_add(r);  // equalities are always working rows
  for (int r = 0; r < m; ++r) {
    if (kind[r] != kRowIneq) continue;
    const double slack = rhs[r] - rows.row(r).dot(y);
    if (std::abs(slack) <= 1e-9 * bscale && try_add(r)) row_active[r] = 1;
  }
}

}  // namespace

ActiveSetQp::ActiveSetQp(const MiqpProblem& base) : base_(&base) {
  Qs_ = 0.5 * (base.Q + base.Q.transpose());
  const double qmax = Qs_.size() ? Qs_.cwiseAbs().maxCoeff() : 0.0;
  q_is_zero_ = qmax == 0.0;
  if (!q_is_zero_) {
    q_is_diagonal_ = true;
    for (int r = 0; r < base.n && q_is_diagonal_; ++r)
      for (int c = 0; c < base.n; ++c)
        if (r != c && Qs_(r, c) != 0.0) {
          q_is_diagonal_ = false;
          break;
        }
    if (q_is_diagonal_) q_diag_ = Qs_.diagonal();
  }
  std::vector<signed char> kind;
  detect_equality_pairs(base.A, base.b, kind);
  kind_ = std::move(kind);
}

QpResult ActiveSetQp::solve(const QpSubproblem& sub, const QpOptions& opts,
                            const Eigen::VectorXd* y_start) {
  if (sub.base != base_)
    throw std::invalid_argument("QpSubproblem bound to a different base problem");
  const int n = base_->n;
  const int m = base_->m;
  const int max_iters = opts.max_inner_iters > 0 ? opts.max_inner_iters : 200 * std::max(1, n);

  QpResult res;
  res.inner_iterations = 0;

  const Eigen::VectorXd lb = sub.effective_lb();
  const Eigen::VectorXd ub = sub.effective_ub();
  for (int i = 0; i < n; ++i)
    if (lb[i] > ub[i] + 1e-12) {
      res.status = QpStatus::Infeasible;
      res.y = Eigen::VectorXd::Zero(n);
      return res;
    }

  EngineState st;
  st.y = y_start ? *y_start : Eigen::VectorXd::Zero(n);
  if (st.y.size() != n) throw DimensionError("warm start has wrong length");
  clamp_and_tag(lb, ub, st.y, st.var_state);

  const double bscale = m > 0 ? std::max(1.0, base_->b.cwiseAbs().maxCoeff()) : 1.0;
  double viol = 0.0;
  if (m > 0) viol = std::max(0.0, (base_->A * st.y - base_->b).maxCoeff());
  int pivots = 0;

  if (viol > 1e-11 * bscale) {
    // Phase 1: minimize t subject to Ay - t <= b, bounds, t >= 0.
    Eigen::MatrixXd rows1(m, n + 1);
    rows1.leftCols(n) = base_->A;
    rows1.col(n).setConstant(-1.0);
    std::vector<signed char> kind1(m, kRowIneq);
    Eigen::VectorXd c1 = Eigen::VectorXd::Zero(n + 1);
    c1[n] = 1.0;
    EngineProblem p1;
    p1.rows = &rows1;
    p1.rhs = &base_->b;
    p1.kind = &kind1;
    p1.c = &c1;
    p1.lb = Eigen::VectorXd(n + 1);
    p1.ub = Eigen::VectorXd(n + 1);
    p1.lb.head(n) = lb;
    p1.ub.head(n) = ub;
    p1.lb[n] = 0.0;
    p1.ub[n] = kInf;
    p1.kkt_tol = opts.kkt_tol;
    p1.early_exit_objective = 1e-12 * bscale;

    EngineState st1;
    st1.y = Eigen::VectorXd(n + 1);
    st1.y.head(n) = st.y;
    st1.y[n] = viol;
    clamp_and_tag(p1.lb, p1.ub, st1.y, st1.var_state);
    seed_active_rows(rows1, base_->b, kind1, st1.var_state, st1.y, st1.row_active);

    Engine eng1(p1, st1, max_iters, pivots);
    const EngineStatus es1 = eng1.run();
    res.inner_iterations = pivots;
    total_pivots_ += pivots;
    st.y = st1.y.head(n);
    if (es1 == EngineStatus::IterLimit) {
      res.status = QpStatus::IterLimit;
      res.y = st.y;
      res.objective = eval_objective(*base_, st.y);
      res.kkt_residual = kkt_residual(sub, st.y);
      return res;
    }
    const double t_final = st1.y[n];
    if (es1 == EngineStatus::Stationary && t_final >= opts.feas_tol) {
      res.status = QpStatus::Infeasible;
      res.y = st.y;
      return res;
    }
    clamp_and_tag(lb, ub, st.y, st.var_state);
  }

  // Phase 2 from a feasible point.
  seed_active_rows(base_->A, base_->b, kind_, st.var_state, st.y, st.row_active);

  EngineProblem p2;
  p2.rows = &base_->A;
  p2.rhs = &base_->b;
  p2.kind = &kind_;
  p2.c = &base_->c;
  if (!q_is_zero_) {
    if (q_is_diagonal_)
      p2.q_diag = &q_diag_;
    else
      p2.Qs = &Qs_;
  }
  p2.lb = lb;
  p2.ub = ub;
  p2.kkt_tol = opts.kkt_tol;

  const int before = pivots;
  Engine eng2(p2, st, max_iters, pivots);
  EngineStatus es2 = EngineStatus::Stationary;
  try {
    es2 = eng2.run();
  } catch (const IndefiniteError&) {
    total_pivots_ += pivots - before;
    throw;
  }
  total_pivots_ += pivots - before;
  res.inner_iterations = pivots;
  res.y = st.y;
  res.objective = eval_objective(*base_, st.y);
  res.kkt_residual = kkt_residual(sub, st.y);
  switch (es2) {
    case EngineStatus::Stationary:
    case EngineStatus::EarlyExit:
      res.status = QpStatus::Optimal;
      break;
    case EngineStatus::IterLimit:
      res.status = QpStatus::IterLimit;
      break;
    case EngineStatus::Unbounded:
      res.status = QpStatus::Unbounded;
      res.objective = -kInf;
      break;
  }
  return res;
}

QpResult solve_qp(const QpSubproblem& sub, double kkt_tol, int max_inner_iters) {
  ActiveSetQp solver(*sub.base);
  QpOptions opts;
  opts.kkt_tol = kkt_tol;
  opts.max_inner_iters = max_inner_iters;
  return solver.solve(sub, opts);
}

double kkt_residual(const QpSubproblem& sub, const Eigen::VectorXd& y) {
  const MiqpProblem& p = *sub.base;
  if (y.size() != p.n) throw DimensionError("kkt_residual: len(y) != n");
  const Eigen::MatrixXd Qs = 0.5 * (p.Q + p.Q.transpose());
  const Eigen::VectorXd g = 2.0 * (Qs * y) + p.c;
  const double gscale = 1.0 + (g.size() ? g.cwiseAbs().maxCoeff() : 0.0);

  std::vector<signed char> kind;
  detect_equality_pairs(p.A, p.b, kind);
  const Eigen::VectorXd lb = sub.effective_lb();
  const Eigen::VectorXd ub = sub.effective_ub();
  const double bscale =
      p.m > 0 ? std::max(1.0, p.b.cwiseAbs().maxCoeff()) : 1.0;
  const double act_tol = 1e-7 * bscale;

  // Columns: active rows (+a), lower bounds (-e_i), upper bounds (+e_i).
  std::vector<std::pair<int, int>> cols;  // (type 0 row / 1 lo / 2 up, index)
  for (int r = 0; r < p.m; ++r) {
    if (kind[r] == kRowSkip) continue;
    const double slack = p.b[r] - p.A.row(r).dot(y);
    if (kind[r] == kRowEq || std::abs(slack) <= act_tol) cols.push_back({0, r});
  }
  for (int i = 0; i < p.n; ++i) {
    const bool fixed = lb[i] == ub[i];
    if (std::isfinite(lb[i]) && y[i] - lb[i] <= act_tol * 1e-2 + 1e-9)
      cols.push_back({1, i});
    if (!fixed && std::isfinite(ub[i]) && ub[i] - y[i] <= act_tol * 1e-2 + 1e-9)
      cols.push_back({2, i});
  }

  const int k = static_cast<int>(cols.size());
  Eigen::VectorXd lambda;
  Eigen::VectorXd resid = g;
  if (k > 0) {
    Eigen::MatrixXd W(p.n, k);
    for (int j = 0; j < k; ++j) {
      W.col(j).setZero();
      if (cols[j].first == 0)
        W.col(j) = p.A.row(cols[j].second).transpose();
      else if (cols[j].first == 1)
        W.col(j)[cols[j].second] = -1.0;
      else
        W.col(j)[cols[j].second] = 1.0;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(W);
    qr.setThreshold(kRankThreshold);
    lambda = qr.solve(-g);
    resid = g + W * lambda;
  }

  double dual_viol = 0.0;
  for (int j = 0; j < k; ++j) {
    const auto [type, idx] = cols[j];
    const bool sign_free =
        (type == 0 && kind[idx] == kRowEq) || (type != 0 && lb[idx] == ub[idx]);
    if (!sign_free) dual_viol = std::max(dual_viol, -lambda[j]);
  }
  return std::max(resid.cwiseAbs().maxCoeff(), dual_viol) / gscale;
}

}  // namespace miqpc
