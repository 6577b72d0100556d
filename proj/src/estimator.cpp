// Copyright 2026 The sensmhe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sensmhe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sensmhe {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_spd(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-10)) return false;
  Eigen::LLT<Mat> llt(m);
  return llt.info() == Eigen::Success;
}

std::vector<int> positive_diagonal(const Mat& Q) {
  std::vector<int> idx;
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    if (Q(i, i) > 0.0) idx.push_back(static_cast<int>(i));
  return idx;
}

// A zero diagonal entry marks a component that takes no disturbance; its row
// and column must vanish and the remaining block must be positive definite.
bool valid_disturbance_covariance(const Mat& Q) {
  if (Q.rows() != Q.cols() || Q.rows() == 0) return false;
  if (!Q.isApprox(Q.transpose(), 1e-10)) return false;
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    if (Q(i, i) < 0.0) return false;
    if (Q(i, i) == 0.0 && (Q.row(i).array() != 0.0).any()) return false;
  }
  const std::vector<int> idx = positive_diagonal(Q);
  if (idx.empty()) return true;
  Mat sub(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = Q(idx[a], idx[b]);
  return is_spd(sub);
}

// Inverse on the positive block, zero elsewhere.
Mat disturbance_precision(const Mat& Q) {
  const std::vector<int> idx = positive_diagonal(Q);
  Mat sub(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = Q(idx[a], idx[b]);
  const Mat inv = sub.llt().solve(Mat::Identity(sub.rows(), sub.cols()));
  Mat out = Mat::Zero(Q.rows(), Q.cols());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) out(idx[a], idx[b]) = inv(a, b);
  return out;
}

Vec or_fill(const Vec& v, Eigen::Index n, double fill) {
  return v.size() == 0 ? Vec::Constant(n, fill) : v;
}

// Per-solve constants.
struct Setup {
  int na = 0;
  int r = 0;
  int N = 0;
  Mat Qinv;
  Mat Rinv;
  std::vector<int> free_idx;  // x0 components being estimated
  std::vector<int> w_idx;     // free components that take a disturbance
  std::vector<char> is_free;
  Vec scale;
  Vec lo, hi;
  Vec wlo, whi;
  double mu = 0.0;

  Setup(const MheProblem& pb, const MheConfig& cfg, const SystemModel& m)
      : na(m.state_dim), r(m.output_dim), N(pb.horizon()) {
    Qinv = disturbance_precision(cfg.Q);
    Rinv = cfg.R.llt().solve(Mat::Identity(r, r));
    is_free.assign(na, 1);
    for (int l : pb.unselected) is_free[l] = 0;
    for (int i = 0; i < na; ++i) {
      if (!is_free[i]) continue;
      free_idx.push_back(i);
      if (cfg.Q(i, i) > 0.0) w_idx.push_back(i);
    }
    scale = or_fill(cfg.scale, na, 1.0);
    lo = or_fill(cfg.lower, na, -kInf);
    hi = or_fill(cfg.upper, na, kInf);
    wlo = or_fill(cfg.w_lower, na, -kInf);
    whi = or_fill(cfg.w_upper, na, kInf);
    mu = cfg.solver.penalty_weight;
  }

  int nf() const { return static_cast<int>(free_idx.size()); }
  int nw() const { return static_cast<int>(w_idx.size()); }

  static Mat rows(const std::vector<int>& idx, const Mat& m) {
    Mat out(idx.size(), m.cols());
    for (std::size_t a = 0; a < idx.size(); ++a) out.row(a) = m.row(idx[a]);
    return out;
  }
  static Vec rows(const std::vector<int>& idx, const Vec& v) {
    Vec out(idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a) out(a) = v(idx[a]);
    return out;
  }
  static Mat block(const std::vector<int>& idx, const Mat& m) {
    Mat out(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) out(a, b) = m(idx[a], idx[b]);
    return out;
  }
  Vec scatter(const std::vector<int>& idx, const Vec& reduced) const {
    Vec out = Vec::Zero(na);
    for (std::size_t a = 0; a < idx.size(); ++a) out(idx[a]) = reduced(a);
    return out;
  }

  // Signed distance outside [lo, hi] for one component.
  double excess(int c, double v) const {
    if (v > hi(c)) return v - hi(c);
    if (v < lo(c)) return v - lo(c);
    return 0.0;
  }
};

std::vector<Vec> rollout(const SystemModel& m, const MheProblem& pb,
                         const Vec& x0, const std::vector<Vec>& ws) {
  const Vec none(0);
  std::vector<Vec> xs;
  xs.reserve(ws.size() + 1);
  xs.push_back(x0);
  for (std::size_t i = 0; i < ws.size(); ++i)
    xs.push_back(m.step_fn(xs.back(), pb.inputs[i], none) + ws[i]);
  return xs;
}

double cost_of(const Setup& s, const SystemModel& m, const MheProblem& pb,
               const std::vector<Vec>& xs, const std::vector<Vec>& ws) {
  const Vec none(0);
  double J = 0.0;
  for (const Vec& w : ws) J += w.dot(s.Qinv * w);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const Vec e = pb.outputs[j] - m.output_fn(xs[j], none);
    J += e.dot(s.Rinv * e);
    if (s.mu > 0.0) {
      for (int c = 0; c < s.na; ++c) {
        const double d = s.excess(c, xs[j](c)) / s.scale(c);
        J += s.mu * d * d;
      }
    }
  }
  if (pb.arrival.active) J += pb.arrival(xs.front());
  return std::isfinite(J) ? J : kInf;
}

double safe_cost(const Setup& s, const SystemModel& m, const MheProblem& pb,
                 const Vec& x0, const std::vector<Vec>& ws,
                 std::vector<Vec>* states) {
  try {
    std::vector<Vec> xs = rollout(m, pb, x0, ws);
    for (const Vec& x : xs)
      if (!x.allFinite()) return kInf;
    const double J = cost_of(s, m, pb, xs, ws);
    if (states) *states = std::move(xs);
    return J;
  } catch (const DomainError&) {
    return kInf;
  }
}

struct Linearization {
  std::vector<Mat> A;  // dF_a/dx_a(i), i < N
  std::vector<Mat> C;  // dH_a/dx_a(i), i <= N
};

Linearization linearize(const SystemModel& m, const MheProblem& pb,
                        const std::vector<Vec>& xs) {
  const Vec none(0);
  Linearization lin;
  lin.A.reserve(pb.inputs.size());
  lin.C.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool last = i + 1 == xs.size();
    if (m.step_jacobian_fn && m.output_jacobian_fn) {
      lin.C.push_back(m.output_jacobian_fn(xs[i], none).first);
      if (!last) lin.A.push_back(m.step_jacobian_fn(xs[i], pb.inputs[i], none).first);
    } else {
      const Vec u = last ? Vec::Zero(m.input_dim) : pb.inputs[i];
      JacobianBundle jb = jacobians(m, xs[i], u, none, pb.anchor + static_cast<int>(i));
      lin.C.push_back(std::move(jb.dH_dx));
      if (!last) lin.A.push_back(std::move(jb.dF_dx));
    }
    if (!lin.C.back().allFinite() || (!last && !lin.A.back().allFinite())) {
      std::ostringstream os;
      os << "non-finite linearization at window step " << i;
      throw NumericalFailure(os.str());
    }
  }
  return lin;
}

// Quadratic model of the cost terms attached to state x_i:
//   d' Pxx d - 2 q' d.
void add_stage_terms(const Setup& s, const SystemModel& m, const MheProblem& pb,
                     const std::vector<Vec>& xs, const Linearization& lin,
                     std::size_t i, Mat& P, Vec& q) {
  const Vec none(0);
  const Mat& C = lin.C[i];
  const Vec e = pb.outputs[i] - m.output_fn(xs[i], none);
  const Mat CtRinv = C.transpose() * s.Rinv;
  P.noalias() += CtRinv * C;
  q.noalias() += CtRinv * e;
  if (s.mu > 0.0) {
    for (int c = 0; c < s.na; ++c) {
      const double d = s.excess(c, xs[i](c));
      if (d == 0.0) continue;
      const double w = s.mu / (s.scale(c) * s.scale(c));
      P(c, c) += w;
      q(c) -= w * d;
    }
  }
}

struct Step {
  Vec dx0;
  std::vector<Vec> dw;  // full length na, zero outside w_idx
  Vec grad_x0;          // full gradient wrt x0 (unprojected)
  std::vector<Vec> grad_w;
};

// Solves the linearized window problem by a backward Riccati sweep over the
// chain d x_{i+1} = A_i d x_i + E d w_i (E selects the w_idx rows), then rolls the
// increments forward. The gradient of J at the current point is produced by
// the accompanying adjoint recursion.
Step gauss_newton_step(const Setup& s, const SystemModel& m, const MheProblem& pb,
                       double damping, const std::vector<Vec>& xs,
                       const std::vector<Vec>& ws, const Linearization& lin) {
  const int na = s.na;
  const int N = s.N;
  const int nf = s.nf();
  const int nw = s.nw();
  const std::vector<int>& wi = s.w_idx;

  std::vector<Mat> K(N);
  std::vector<Vec> kff(N);
  Step st;
  st.grad_w.assign(N, Vec::Zero(na));

  Mat P = Mat::Zero(na, na);
  Vec q = Vec::Zero(na);
  add_stage_terms(s, m, pb, xs, lin, N, P, q);
  Vec costate = -2.0 * q;  // dJ/dx_N

  const Mat Qinv_ww = Setup::block(wi, s.Qinv);
  for (int i = N - 1; i >= 0; --i) {
    const Mat& A = lin.A[i];
    // Gradient wrt w_i uses the costate of x_{i+1}.
    st.grad_w[i] = 2.0 * (s.Qinv * ws[i]) + costate;

    Mat Pn = Mat::Zero(na, na);
    Vec qn = Vec::Zero(na);
    if (nw > 0) {
      const Mat PA = P * A;
      const Mat Hww = Qinv_ww + Setup::block(wi, P);
      const Mat Hwx = Setup::rows(wi, PA);
      const Vec gw = Setup::rows(wi, q) - Qinv_ww * Setup::rows(wi, ws[i]);
      Eigen::LLT<Mat> llt(Hww);
      if (llt.info() != Eigen::Success)
        throw NumericalFailure("disturbance block of the Gauss-Newton system is not positive definite");
      K[i] = llt.solve(Hwx);
      kff[i] = llt.solve(gw);
      Pn.noalias() = A.transpose() * PA - Hwx.transpose() * K[i];
      qn.noalias() = A.transpose() * q - Hwx.transpose() * kff[i];
    } else {
      Pn.noalias() = A.transpose() * P * A;
      qn.noalias() = A.transpose() * q;
    }
    Mat Ps = Mat::Zero(na, na);
    Vec qs = Vec::Zero(na);
    add_stage_terms(s, m, pb, xs, lin, static_cast<std::size_t>(i), Ps, qs);
    costate = -2.0 * qs + A.transpose() * costate;
    P = Pn + Ps;
    P = 0.5 * (P + P.transpose());
    q = qn + qs;
  }

  if (pb.arrival.active) {
    P += pb.arrival.P_inv;
    q -= pb.arrival.P_inv * (xs.front() - pb.arrival.prior);
    costate += pb.arrival.gradient(xs.front());
  }
  st.grad_x0 = costate;

  st.dx0 = Vec::Zero(na);
  if (nf > 0) {
    Mat H0 = Setup::block(s.free_idx, P);
    Vec scale_f = Setup::rows(s.free_idx, s.scale);
    double diag_max = 0.0;
    for (int a = 0; a < nf; ++a)
      diag_max = std::max(diag_max, H0(a, a) * scale_f(a) * scale_f(a));
    const double lambda = damping * (diag_max > 0.0 ? diag_max : 1.0);
    for (int a = 0; a < nf; ++a) H0(a, a) += lambda / (scale_f(a) * scale_f(a));
    Eigen::LDLT<Mat> ldlt(H0);
    if (ldlt.info() != Eigen::Success)
      throw NumericalFailure("initial-state block of the Gauss-Newton system is singular");
    st.dx0 = s.scatter(s.free_idx, ldlt.solve(Setup::rows(s.free_idx, q)));
  }

  st.dw.assign(N, Vec::Zero(na));
  Vec dx = st.dx0;
  for (int i = 0; i < N; ++i) {
    if (nw > 0) st.dw[i] = s.scatter(wi, kff[i] - K[i] * dx);
    dx = lin.A[i] * dx + st.dw[i];
  }
  return st;
}

double projected_gradient_norm(const Setup& s, const Step& st, const Vec& x0,
                               const std::vector<Vec>& ws) {
  double g = 0.0;
  auto consider = [&](double grad, double v, double lo, double hi, double sc) {
    if (v <= lo && grad > 0.0) return;
    if (v >= hi && grad < 0.0) return;
    g = std::max(g, std::abs(grad * sc));
  };
  for (int c : s.free_idx) consider(st.grad_x0(c), x0(c), s.lo(c), s.hi(c), s.scale(c));
  for (int c : s.w_idx)
    for (int i = 0; i < s.N; ++i)
      consider(st.grad_w[i](c), ws[i](c), s.wlo(c), s.whi(c), s.scale(c));
  return g;
}

std::vector<Vec> window_residuals(const SystemModel& m, const MheProblem& pb,
                                  const std::vector<Vec>& xs) {
  const Vec none(0);
  std::vector<Vec> v;
  v.reserve(xs.size());
  for (std::size_t j = 0; j < xs.size(); ++j)
    v.push_back(pb.outputs[j] - m.output_fn(xs[j], none));
  return v;
}

}  // namespace

void MheConfig::validate(int na, int r) const {
  require(full_information || window >= 1, "MHE window must be at least 1");
  require(Q.rows() == na && Q.cols() == na, "Q must be n_a x n_a");
  require(valid_disturbance_covariance(Q),
          "Q must be symmetric, positive definite on its nonzero diagonal entries and "
          "zero in the rows of zero-variance components");
  require(R.rows() == r && is_spd(R), "R must be symmetric positive definite r x r");
  require(solver.penalty_weight >= 0.0, "penalty weight must be non-negative");
  require(solver.max_iterations >= 0 && solver.max_backtracks >= 0,
          "iteration limits must be non-negative");
  require(solver.damping >= 0.0 && solver.max_damping >= solver.damping,
          "damping must be non-negative and not exceed max_damping");
  auto check_box = [&](const Vec& lo, const Vec& hi, int n, const char* name) {
    require((lo.size() == 0 || lo.size() == n) && (hi.size() == 0 || hi.size() == n),
            std::string(name) + " bounds have the wrong length");
    if (lo.size() == n && hi.size() == n)
      require((lo.array() <= hi.array()).all(), std::string(name) + " lower bound exceeds upper");
  };
  check_box(lower, upper, na, "state");
  check_box(w_lower, w_upper, na, "disturbance");
  check_box(v_lower, v_upper, r, "measurement noise");
  require(scale.size() == 0 || (scale.size() == na && (scale.array() > 0).all()),
          "scale must be positive with one entry per augmented state");
  if (!full_information && arrival_P.size() > 0)
    require(arrival_P.rows() == na && arrival_P.cols() == na,
            "arrival-cost P must be n_a x n_a");
}

double ArrivalCost::operator()(const Vec& x) const {
  if (!active) return 0.0;
  const Vec d = x - prior;
  return d.dot(P_inv * d);
}

Vec ArrivalCost::gradient(const Vec& x) const {
  if (!active) return Vec::Zero(x.size());
  return 2.0 * (P_inv * (x - prior));
}

ArrivalCost arrival_cost(const MheConfig& config, const Vec& prior) {
  ArrivalCost ac;
  if (config.full_information || config.arrival_P.size() == 0) return ac;
  Eigen::LDLT<Mat> ldlt(config.arrival_P);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive(),
          "arrival-cost P must be positive semi-definite");
  ac.active = true;
  ac.prior = prior;
  // Pseudo-inverse handles a semi-definite P.
  Eigen::SelfAdjointEigenSolver<Mat> eig(config.arrival_P);
  const Vec ev = eig.eigenvalues();
  const double tol = ev.cwiseAbs().maxCoeff() * 1e-12;
  Vec inv = Vec::Zero(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev(i) > tol) inv(i) = 1.0 / ev(i);
  ac.P_inv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  return ac;
}

int MheProblem::free_variable_count() const {
  const int na = static_cast<int>(initial_state.size());
  const int nf = na - static_cast<int>(unselected.size());
  return nf + horizon() * nf;
}

MheProblem assemble_problem(const MheConfig& config, const SystemModel& augmented,
                            const std::vector<Vec>& outputs,
                            const std::vector<Vec>& inputs,
                            const SelectionResult& selection,
                            const EstimateTrajectory* previous,
                            const Vec& initial_guess) {
  require(augmented.param_dim == 0, "MHE runs on an augmented model");
  require(!outputs.empty(), "no measurements");
  const int na = augmented.state_dim;
  const int k = static_cast<int>(outputs.size()) - 1;
  require(static_cast<int>(inputs.size()) >= k, "need inputs u(0..k-1)");

  MheProblem pb;
  pb.anchor = config.full_information ? 0 : std::max(0, k - config.window);
  pb.outputs.assign(outputs.begin() + pb.anchor, outputs.end());
  pb.inputs.assign(inputs.begin() + pb.anchor, inputs.begin() + k);
  const int N = k - pb.anchor;

  pb.unselected = unselected_set(selection, na);

  if (previous && !previous->states.empty()) {
    const int offset = pb.anchor - previous->anchor;
    require(offset >= 0 && offset < static_cast<int>(previous->states.size()),
            "previous estimate does not cover the new window start");
    pb.initial_state = previous->states[offset];
    for (int i = offset; i < static_cast<int>(previous->disturbances.size()) &&
                         static_cast<int>(pb.disturbances.size()) < N;
         ++i)
      pb.disturbances.push_back(previous->disturbances[i]);
  } else {
    require(initial_guess.size() == na, "initial guess has the wrong length");
    Vec x = initial_guess;
    const Vec none(0);
    for (int i = 0; i < pb.anchor; ++i) x = augmented.step_fn(x, inputs[i], none);
    pb.initial_state = x;
  }
  while (static_cast<int>(pb.disturbances.size()) < N)
    pb.disturbances.push_back(Vec::Zero(na));

  for (int l : pb.unselected)
    for (Vec& w : pb.disturbances) w(l) = 0.0;
  if (config.Q.rows() == na)
    for (int c = 0; c < na; ++c)
      if (config.Q(c, c) == 0.0)
        for (Vec& w : pb.disturbances) w(c) = 0.0;

  // Free components start inside the admissible box.
  if (config.lower.size() == na && config.upper.size() == na) {
    for (int c = 0; c < na; ++c) {
      if (std::find(pb.unselected.begin(), pb.unselected.end(), c) != pb.unselected.end())
        continue;
      pb.initial_state(c) = std::clamp(pb.initial_state(c), config.lower(c), config.upper(c));
    }
  }
  pb.arrival = arrival_cost(config, pb.initial_state);
  return pb;
}

double objective(const MheProblem& problem, const MheConfig& config,
                 const SystemModel& augmented, const Vec& initial_state,
                 const std::vector<Vec>& disturbances) {
  const Setup s(problem, config, augmented);
  return safe_cost(s, augmented, problem, initial_state, disturbances, nullptr);
}

EstimateTrajectory solve(const MheProblem& problem, const MheConfig& config,
                         const SystemModel& augmented) {
  config.validate(augmented.state_dim, augmented.output_dim);
  require(static_cast<int>(problem.outputs.size()) == problem.horizon() + 1,
          "window needs N+1 outputs for N inputs");
  require(static_cast<int>(problem.disturbances.size()) == problem.horizon(),
          "warm start needs one disturbance per transition");
  const Setup s(problem, config, augmented);
  const SolverSettings& opt = config.solver;

  Vec x0 = problem.initial_state;
  std::vector<Vec> ws = problem.disturbances;
  std::vector<Vec> xs;
  double J = safe_cost(s, augmented, problem, x0, ws, &xs);
  if (!std::isfinite(J))
    throw NumericalFailure("warm start leaves the model domain or is non-finite");

  EstimateTrajectory est;
  est.anchor = problem.anchor;
  est.objective_history.push_back(J);

  int iter = 0;
  bool converged = s.nf() == 0;
  double damping = opt.damping;
  while (!converged && iter < opt.max_iterations) {
    const Linearization lin = linearize(augmented, problem, xs);
    Step st = gauss_newton_step(s, augmented, problem, damping, xs, ws, lin);
    if (projected_gradient_norm(s, st, x0, ws) <= opt.gradient_tolerance * std::max(1.0, J)) {
      converged = true;
      break;
    }
    ++iter;

    // Backtrack along the projected step; if that fails, raise the damping
    // (shorter, more gradient-like x0 steps) and try again.
    bool accepted = false;
    while (true) {
      double t = 1.0;
      for (int bt = 0; bt <= opt.max_backtracks && !accepted; ++bt, t *= 0.5) {
        Vec x0_trial = x0;
        for (int c : s.free_idx)
          x0_trial(c) = std::clamp(x0(c) + t * st.dx0(c), s.lo(c), s.hi(c));
        std::vector<Vec> ws_trial = ws;
        for (int i = 0; i < s.N; ++i)
          for (int c : s.w_idx)
            ws_trial[i](c) = std::clamp(ws[i](c) + t * st.dw[i](c), s.wlo(c), s.whi(c));
        std::vector<Vec> xs_trial;
        const double J_trial = safe_cost(s, augmented, problem, x0_trial, ws_trial, &xs_trial);
        if (J_trial < J) {
          const double decrease = (J - J_trial) / std::max(1.0, J);
          x0 = std::move(x0_trial);
          ws = std::move(ws_trial);
          xs = std::move(xs_trial);
          J = J_trial;
          est.objective_history.push_back(J);
          accepted = true;
          if (decrease < opt.function_tolerance) converged = true;
        }
      }
      if (accepted || damping >= opt.max_damping) break;
      damping = std::min(opt.max_damping, std::max(damping, 1e-12) * 100.0);
      st = gauss_newton_step(s, augmented, problem, damping, xs, ws, lin);
    }
    if (!accepted) break;
    damping = std::max(opt.damping, damping * 0.1);
  }

  est.states = std::move(xs);
  est.disturbances = std::move(ws);
  est.residuals = window_residuals(augmented, problem, est.states);
  est.objective = J;
  est.iterations = iter;
  est.converged = converged;
  if (config.v_lower.size() > 0 || config.v_upper.size() > 0) {
    const Vec vlo = or_fill(config.v_lower, s.r, -kInf);
    const Vec vhi = or_fill(config.v_upper, s.r, kInf);
    for (const Vec& v : est.residuals)
      if ((v.array() < vlo.array()).any() || (v.array() > vhi.array()).any())
        est.v_bounds_violated = true;
  }
  return est;
}

MovingHorizonEstimator::MovingHorizonEstimator(SystemModel augmented,
                                               EstimatorOptions options)
    : model_(std::move(augmented)), options_(std::move(options)) {
  require(model_.param_dim == 0, "estimator expects an augmented model");
  options_.mhe.validate(model_.state_dim, model_.output_dim);
  require(options_.initial_guess.size() == model_.state_dim,
          "initial guess has the wrong length");
  require(options_.output_floor.size() == 0 ||
              options_.output_floor.size() == model_.output_dim,
          "output floor has the wrong length");
  require(options_.rank_scale > 0.0, "rank scale must be positive");
  require(options_.sensitivity_window >= 0, "sensitivity window must be non-negative");
  if (options_.selection) options_.selection->validate(model_.state_dim);
}

std::pair<SelectionResult, EstimateTrajectory> MovingHorizonEstimator::advance(const Vec& y) {
  require(outputs_.empty(), "advance(y) without an input is only valid for the first step");
  require(y.size() == model_.output_dim, "measurement has the wrong length");
  outputs_.push_back(y);
  return cycle();
}

std::pair<SelectionResult, EstimateTrajectory> MovingHorizonEstimator::advance(
    const Vec& y, const Vec& u_prev) {
  require(!outputs_.empty(), "the first step takes no input");
  require(y.size() == model_.output_dim, "measurement has the wrong length");
  require(u_prev.size() == model_.input_dim, "input has the wrong length");
  outputs_.push_back(y);
  inputs_.push_back(u_prev);
  return cycle();
}

std::pair<SelectionResult, EstimateTrajectory> MovingHorizonEstimator::cycle() {
  const int k = static_cast<int>(outputs_.size()) - 1;
  const int na = model_.state_dim;
  const MheConfig& cfg = options_.mhe;
  const Vec none(0);
  const int anchor = cfg.full_information ? 0 : std::max(0, k - cfg.window);

  // Window trajectory: previous-cycle estimates plus a one-step prediction,
  // or an open-loop run from the initial guess before any estimate exists.
  std::vector<Vec> traj;
  if (last_) {
    const int offset = anchor - last_->anchor;
    for (int i = offset; i < static_cast<int>(last_->states.size()); ++i)
      traj.push_back(last_->states[i]);
    traj.push_back(model_.step_fn(last_->states.back(), inputs_[k - 1], none));
  } else {
    Vec x = options_.initial_guess;
    for (int i = 0; i <= k; ++i) {
      if (i >= anchor) traj.push_back(x);
      if (i < k) x = model_.step_fn(x, inputs_[i], none);
    }
  }

  const int sens_anchor = options_.sensitivity_window > 0
                              ? std::max(anchor, k - options_.sensitivity_window)
                              : anchor;
  const std::vector<Vec> sens_states(traj.begin() + (sens_anchor - anchor), traj.end());
  const std::vector<Vec> sens_inputs(inputs_.begin() + sens_anchor, inputs_.begin() + k);
  const std::vector<Vec> sens_outputs(outputs_.begin() + sens_anchor, outputs_.end());

  EstimationRecord rec;
  rec.step = k;
  const SensitivityWindow raw =
      build_window_sensitivity(model_, sens_states, sens_inputs, sens_anchor);
  const SensitivityWindow window = normalize_sensitivity(
      raw, sens_states.front(), sens_outputs, options_.output_floor);
  rec.rank = numeric_rank(window.stacked(), options_.rank_scale);
  if (!window.floored_rows.empty()) rec.note = "normalization floor applied";

  SelectionResult sel = options_.selection
                            ? select_variables(*options_.selection, window, rec.rank, k)
                            : select_all(na, k);
  sel.unselected = unselected_set(sel, na);

  const MheProblem pb = assemble_problem(cfg, model_, outputs_, inputs_, sel,
                                         last_ ? &*last_ : nullptr,
                                         options_.initial_guess);
  rec.free_variables = pb.free_variable_count();

  EstimateTrajectory est;
  try {
    est = solve(pb, cfg, model_);
  } catch (const Error& e) {
    // Keep the warm start so the loop can continue.
    est.anchor = pb.anchor;
    est.disturbances = pb.disturbances;
    est.states.push_back(pb.initial_state);
    for (int i = 0; i < pb.horizon(); ++i)
      est.states.push_back(model_.step_fn(est.states.back(), pb.inputs[i], none) +
                           pb.disturbances[i]);
    est.residuals = window_residuals(model_, pb, est.states);
    est.objective = std::numeric_limits<double>::quiet_NaN();
    est.converged = false;
    rec.solve_failed = true;
    rec.note = e.what();
  }

  rec.estimate = est.current();
  rec.selection = sel;
  rec.objective = est.objective;
  rec.iterations = est.iterations;
  rec.converged = est.converged;
  records_.push_back(rec);
  last_ = est;
  return {sel, est};
}

}  // namespace sensmhe
