#include "miqpc/miqp_model.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace miqpc {

namespace {

double max_abs(const Eigen::MatrixXd& M) {
  return M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
}

}  // namespace

MiqpProblem::MiqpProblem(Eigen::MatrixXd Q_in, Eigen::VectorXd c_in,
                         Eigen::MatrixXd A_in, Eigen::VectorXd b_in,
                         std::vector<bool> mask_in, Eigen::VectorXd lb_in,
                         Eigen::VectorXd ub_in)
    : Q(std::move(Q_in)),
      c(std::move(c_in)),
      A(std::move(A_in)),
      b(std::move(b_in)),
      int_mask(std::move(mask_in)),
      lb(std::move(lb_in)),
      ub(std::move(ub_in)) {
  n = static_cast<int>(c.size());
  m = static_cast<int>(b.size());
  if (Q.rows() != n || Q.cols() != n)
    throw DimensionError("Q must be n x n with n = len(c)");
  if (A.rows() != m || (m > 0 && A.cols() != n) || (m == 0 && A.cols() != 0 && A.cols() != n))
    throw DimensionError("A must be m x n with m = len(b)");
  if (static_cast<int>(int_mask.size()) != n)
    throw DimensionError("int_mask must have length n");
  if (lb.size() != n || ub.size() != n)
    throw DimensionError("bounds must have length n");
  if (m == 0 && A.cols() == 0) A.resize(0, n);

  const double qscale = max_abs(Q);
  if (n > 0) {
    const double asym = max_abs(Q - Q.transpose());
    if (asym > 1e-12 * std::max(1.0, qscale))
      throw std::invalid_argument("Q is not symmetric to 1e-12 relative");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Q + Q.transpose()),
                                                      Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    const double norm_q = es.eigenvalues().cwiseAbs().maxCoeff();
    if (min_eig < -1e-9 * std::max(norm_q, 1e-300))
      throw IndefiniteError("Q has negative curvature beyond tolerance");
  }
  for (int i = 0; i < n; ++i) {
    if (std::isnan(lb[i]) || std::isnan(ub[i]))
      throw std::invalid_argument("bounds must not be NaN");
    if (lb[i] > ub[i])
      throw std::invalid_argument("lb exceeds ub at variable " + std::to_string(i));
    if (int_mask[i] && (!std::isfinite(lb[i]) || !std::isfinite(ub[i])))
      throw std::invalid_argument("integer variable " + std::to_string(i) +
                                  " must have finite bounds");
  }
}

int MiqpProblem::num_integer() const {
  int s = 0;
  for (bool f : int_mask) s += f ? 1 : 0;
  return s;
}

double eval_objective(const MiqpProblem& p, const Eigen::VectorXd& y) {
  if (y.size() != p.n) throw DimensionError("eval_objective: len(y) != n");
  return y.dot(p.Q * y) + p.c.dot(y);
}

MiqpSolution check_feasibility(const MiqpProblem& p, const Eigen::VectorXd& y,
                               double feas_tol, double int_tol) {
  if (y.size() != p.n) throw DimensionError("check_feasibility: len(y) != n");
  if (feas_tol <= 0.0 || int_tol <= 0.0)
    throw std::invalid_argument("tolerances must be positive");
  MiqpSolution s;
  s.y = y;
  s.objective = eval_objective(p, y);
  double viol = 0.0;
  if (p.m > 0) viol = std::max(viol, (p.A * y - p.b).maxCoeff());
  for (int i = 0; i < p.n; ++i) {
    if (std::isfinite(p.lb[i])) viol = std::max(viol, p.lb[i] - y[i]);
    if (std::isfinite(p.ub[i])) viol = std::max(viol, y[i] - p.ub[i]);
  }
  s.max_violation = std::max(0.0, viol);
  double ir = 0.0;
  for (int i = 0; i < p.n; ++i)
    if (p.int_mask[i]) ir = std::max(ir, std::abs(y[i] - std::round(y[i])));
  s.integrality_residual = ir;
  s.feasible = s.max_violation <= feas_tol && s.integrality_residual <= int_tol;
  return s;
}

namespace {

nlohmann::json bound_to_json(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  return v;
}

double bound_from_json(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_null()) throw std::invalid_argument("null bound; use \"inf\"/\"-inf\"");
  const std::string s = j.get<std::string>();
  if (s == "inf" || s == "+inf") return kInf;
  if (s == "-inf") return -kInf;
  throw std::invalid_argument("unrecognized bound value: " + s);
}

}  // namespace

std::string to_json_text(const MiqpProblem& p) {
  nlohmann::json j;
  j["n"] = p.n;
  j["m"] = p.m;
  std::vector<double> q(p.n * p.n), a(p.m * p.n);
  for (int r = 0; r < p.n; ++r)
    for (int cidx = 0; cidx < p.n; ++cidx) q[r * p.n + cidx] = p.Q(r, cidx);
  for (int r = 0; r < p.m; ++r)
    for (int cidx = 0; cidx < p.n; ++cidx) a[r * p.n + cidx] = p.A(r, cidx);
  j["Q"] = q;
  j["A"] = a;
  j["c"] = std::vector<double>(p.c.data(), p.c.data() + p.n);
  j["b"] = std::vector<double>(p.b.data(), p.b.data() + p.m);
  j["int_mask"] = p.int_mask;
  nlohmann::json lbj = nlohmann::json::array(), ubj = nlohmann::json::array();
  for (int i = 0; i < p.n; ++i) {
    lbj.push_back(bound_to_json(p.lb[i]));
    ubj.push_back(bound_to_json(p.ub[i]));
  }
  j["lb"] = lbj;
  j["ub"] = ubj;
  return j.dump(2);
}

MiqpProblem miqp_from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const int n = j.at("n").get<int>();
  const int m = j.at("m").get<int>();
  const auto q = j.at("Q").get<std::vector<double>>();
  const auto a = j.at("A").get<std::vector<double>>();
  const auto c = j.at("c").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  if (static_cast<int>(q.size()) != n * n) throw DimensionError("Q has wrong length");
  if (static_cast<int>(a.size()) != m * n) throw DimensionError("A has wrong length");
  if (static_cast<int>(c.size()) != n) throw DimensionError("c has wrong length");
  if (static_cast<int>(b.size()) != m) throw DimensionError("b has wrong length");
  Eigen::MatrixXd Q(n, n), A(m, n);
  for (int r = 0; r < n; ++r)
    for (int cidx = 0; cidx < n; ++cidx) Q(r, cidx) = q[r * n + cidx];
  for (int r = 0; r < m; ++r)
    for (int cidx = 0; cidx < n; ++cidx) A(r, cidx) = a[r * n + cidx];
  Eigen::VectorXd cv = Eigen::Map<const Eigen::VectorXd>(c.data(), n);
  Eigen::VectorXd bv = Eigen::Map<const Eigen::VectorXd>(b.data(), m);
  const auto mask = j.at("int_mask").get<std::vector<bool>>();
  const auto& lbj = j.at("lb");
  const auto& ubj = j.at("ub");
  if (static_cast<int>(lbj.size()) != n || static_cast<int>(ubj.size()) != n)
    throw DimensionError("bounds have wrong length");
  Eigen::VectorXd lb(n), ub(n);
  for (int i = 0; i < n; ++i) {
    lb[i] = bound_from_json(lbj[i]);
    ub[i] = bound_from_json(ubj[i]);
  }
  return MiqpProblem(std::move(Q), std::move(cv), std::move(A), std::move(bv),
                     mask, std::move(lb), std::move(ub));
}

}  // namespace miqpc
