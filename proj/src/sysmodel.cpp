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

#include "sensmhe/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sensmhe {

namespace {

void check_dim(const Vec& v, int expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream os;
    os << what << " has length " << v.size() << ", expected " << expected;
    throw ContractViolation(os.str());
  }
}

void check_finite(const Mat& m, const char* name) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (!std::isfinite(m(i, j))) {
        std::ostringstream os;
        os << "non-finite derivative " << name << "(" << i << "," << j << ")";
        throw NumericalFailure(os.str());
      }
    }
  }
}

double fd_step(double z, const FiniteDifferenceOptions& o) {
  return o.epsilon * std::max(std::abs(z), o.z_floor);
}

// Central differences of f with respect to v.
template <typename Fn>
Mat central_difference(Fn&& f, const Vec& v, int rows,
                       const FiniteDifferenceOptions& o) {
  Mat J(rows, v.size());
  Vec work = v;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const double h = fd_step(v(j), o);
    work(j) = v(j) + h;
    const Vec plus = f(work);
    work(j) = v(j) - h;
    const Vec minus = f(work);
    work(j) = v(j);
    // Use the representable step actually taken.
    const double span = (v(j) + h) - (v(j) - h);
    J.col(j) = (plus - minus) / span;
  }
  return J;
}

}  // namespace

SystemModel make_model(int state_dim, int input_dim, int output_dim,
                       int param_dim, StepFn step, OutputFn output,
                       StepJacobianFn step_jacobian,
                       OutputJacobianFn output_jacobian) {
  require(state_dim > 0, "state_dim must be positive");
  require(input_dim >= 0 && output_dim > 0 && param_dim >= 0,
          "invalid model dimensions");
  require(static_cast<bool>(step) && static_cast<bool>(output),
          "step and output functions are required");
  SystemModel m;
  m.state_dim = state_dim;
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  m.param_dim = param_dim;
  m.step_fn = std::move(step);
  m.output_fn = std::move(output);
  m.step_jacobian_fn = std::move(step_jacobian);
  m.output_jacobian_fn = std::move(output_jacobian);
  m.physical_state_dim = state_dim;
  m.augmented_param_dim = 0;
  return m;
}

Vec step(const SystemModel& model, const Vec& x, const Vec& u,
         const Vec& theta) {
  check_dim(x, model.state_dim, "state");
  check_dim(u, model.input_dim, "input");
  check_dim(theta, model.param_dim, "parameter vector");
  Vec next = model.step_fn(x, u, theta);
  check_dim(next, model.state_dim, "step output");
  return next;
}

Vec output(const SystemModel& model, const Vec& x, const Vec& theta) {
  check_dim(x, model.state_dim, "state");
  check_dim(theta, model.param_dim, "parameter vector");
  Vec y = model.output_fn(x, theta);
  check_dim(y, model.output_dim, "output");
  return y;
}

JacobianBundle jacobians(const SystemModel& model, const Vec& x, const Vec& u,
                         const Vec& theta, int k,
                         const FiniteDifferenceOptions& options) {
  check_dim(x, model.state_dim, "state");
  check_dim(u, model.input_dim, "input");
  check_dim(theta, model.param_dim, "parameter vector");
  const int n = model.state_dim;
  const int r = model.output_dim;
  const int p = model.param_dim;

  JacobianBundle jb;
  jb.x = x;
  jb.u = u;
  jb.theta = theta;
  jb.k = k;

  if (model.step_jacobian_fn && !options.force_finite_difference) {
    auto [fx, ft] = model.step_jacobian_fn(x, u, theta);
    jb.dF_dx = std::move(fx);
    jb.dF_dtheta = std::move(ft);
  } else {
    jb.dF_dx = central_difference(
        [&](const Vec& z) { return model.step_fn(z, u, theta); }, x, n,
        options);
    jb.dF_dtheta = p == 0 ? Mat(n, 0)
                          : central_difference(
                                [&](const Vec& z) { return model.step_fn(x, u, z); },
                                theta, n, options);
  }
  if (model.output_jacobian_fn && !options.force_finite_difference) {
    auto [hx, ht] = model.output_jacobian_fn(x, theta);
    jb.dH_dx = std::move(hx);
    jb.dH_dtheta = std::move(ht);
  } else {
    jb.dH_dx = central_difference(
        [&](const Vec& z) { return model.output_fn(z, theta); }, x, r, options);
    jb.dH_dtheta = p == 0 ? Mat(r, 0)
                          : central_difference(
                                [&](const Vec& z) { return model.output_fn(x, z); },
                                theta, r, options);
  }

  require(jb.dF_dx.rows() == n && jb.dF_dx.cols() == n, "dF/dx must be n x n");
  require(jb.dF_dtheta.rows() == n && jb.dF_dtheta.cols() == p,
          "dF/dtheta must be n x p");
  require(jb.dH_dx.rows() == r && jb.dH_dx.cols() == n, "dH/dx must be r x n");
  require(jb.dH_dtheta.rows() == r && jb.dH_dtheta.cols() == p,
          "dH/dtheta must be r x p");
  check_finite(jb.dF_dx, "dF/dx");
  check_finite(jb.dF_dtheta, "dF/dtheta");
  check_finite(jb.dH_dx, "dH/dx");
  check_finite(jb.dH_dtheta, "dH/dtheta");
  return jb;
}

SystemModel augment(const SystemModel& model) {
  if (model.param_dim == 0) return model;
  require(!model.is_augmented(), "model is already augmented");

  const int n = model.state_dim;
  const int p = model.param_dim;
  const Vec no_params(0);

  SystemModel base = model;
  SystemModel a;
  a.state_dim = n + p;
  a.input_dim = model.input_dim;
  a.output_dim = model.output_dim;
  a.param_dim = 0;
  a.physical_state_dim = n;
  a.augmented_param_dim = p;

  a.step_fn = [base, n, p](const Vec& xa, const Vec& u, const Vec&) {
    Vec next(n + p);
    const Vec theta = xa.tail(p);
    next.head(n) = base.step_fn(xa.head(n), u, theta);
    next.tail(p) = theta;
    return next;
  };
  a.output_fn = [base, n, p](const Vec& xa, const Vec&) {
    return base.output_fn(xa.head(n), xa.tail(p));
  };
  a.step_jacobian_fn = [base, n, p](const Vec& xa, const Vec& u, const Vec&) {
    Mat A = Mat::Zero(n + p, n + p);
    if (base.step_jacobian_fn) {
      auto [fx, ft] = base.step_jacobian_fn(xa.head(n), u, xa.tail(p));
      A.topLeftCorner(n, n) = fx;
      A.topRightCorner(n, p) = ft;
    } else {
      const JacobianBundle jb = jacobians(base, xa.head(n), u, xa.tail(p));
      A.topLeftCorner(n, n) = jb.dF_dx;
      A.topRightCorner(n, p) = jb.dF_dtheta;
    }
    A.bottomRightCorner(p, p).setIdentity();
    return std::make_pair(std::move(A), Mat(n + p, 0));
  };
  const int r = model.output_dim;
  a.output_jacobian_fn = [base, n, p, r](const Vec& xa, const Vec&) {
    Mat C(r, n + p);
    if (base.output_jacobian_fn) {
      auto [hx, ht] = base.output_jacobian_fn(xa.head(n), xa.tail(p));
      C << hx, ht;
    } else {
      // Input is irrelevant to H; any vector of the right size will do.
      const JacobianBundle jb = jacobians(base, xa.head(n),
                                          Vec::Zero(base.input_dim), xa.tail(p));
      C << jb.dH_dx, jb.dH_dtheta;
    }
    return std::make_pair(std::move(C), Mat(r, 0));
  };
  return a;
}

std::vector<Vec> simulate(const SystemModel& model, const Vec& x0,
                          const std::vector<Vec>& inputs, const Vec& theta) {
  std::vector<Vec> xs;
  xs.reserve(inputs.size() + 1);
  xs.push_back(x0);
  for (const Vec& u : inputs) xs.push_back(step(model, xs.back(), u, theta));
  return xs;
}

}  // namespace sensmhe
