#include "qlflow/stationary_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qlflow/errors.hpp"
#include "qlflow/linear_solve.hpp"

namespace qlflow {

namespace {

double l2_of(const Eigen::VectorXd& r, double cell) { return std::sqrt(r.squaredNorm() * cell); }

Field clipped(Field z) {
  for (int n : z.grid().interior_nodes())
    if (z[n] < 0.0) z[n] = 0.0;
  return z;
}

struct Problem {
  const CoefficientModel& cm;
  const NonlinearityModel& nm;
  RegularizationParams reg;
  double cell;

  Eigen::VectorXd R(const Field& z) const { return residual(z, cm, nm, reg).interior_vector(); }
  double norm(const Field& z) const { return l2_of(R(z), cell); }
};

// One energy-descent step along -K^{-1} R (or the Newton direction when it
// descends). Returns false when no decrease was found.
bool descent_step(const Problem& pb, Field& z, const Eigen::VectorXd& r, const Eigen::VectorXd* newton_dir,
                  bool clip) {
  Eigen::VectorXd d;
  if (newton_dir && newton_dir->dot(r) < 0.0) {
    d = *newton_dir;
  } else {
    SparseMatrix K = frozen_diffusion_matrix(z, pb.cm, pb.nm.p, pb.reg);
    SymmetricSolver solver;
    if (!solver.factorize(K)) return false;
    d = -solver.solve(r);
  }
  const double slope = d.dot(r) * pb.cell;
  if (!(slope < 0.0)) return false;
  const double E0 = energy(z, pb.cm, pb.nm, pb.reg);
  const Eigen::VectorXd z_vec = z.interior_vector();
  for (double alpha = 1.0; alpha > 1e-8; alpha *= 0.5) {
    Field trial = Field::from_interior(z.grid_ptr(), z_vec + alpha * d);
    if (clip) trial = clipped(std::move(trial));
    double E1;
    try {
      E1 = energy(trial, pb.cm, pb.nm, pb.reg);
    } catch (const EvaluationError&) {
      continue;
    }
    if (E1 <= E0 + 1e-4 * alpha * slope) {
      z = std::move(trial);
      return true;
    }
  }
  return false;
}

}  // namespace

StationaryResult solve_stationary(const Field& guess, const CoefficientModel& cm, const NonlinearityModel& nm,
                                  const RegularizationParams& reg, const StationaryOptions& opts) {
  reg.validate(nm.p);
  if (guess.min_interior() < 0.0) throw PreconditionError("initial guess must be nonnegative");
  if (!(opts.tol > 0.0) || opts.max_iter < 1 || opts.eps_stages < 1)
    throw PreconditionError("bad stationary solver options");

  const Grid& g = guess.grid();
  const double cell = g.cell_measure();
  StationaryResult res;
  res.z = guess;
  res.z.pin_boundary();

  if (res.z.max_abs() == 0.0 && nm.f(0.0) == 0.0) {
    res.eps_path.push_back(reg.eps);
    res.converged = true;
    res.message = "zero is an exact root";
    return res;
  }
  if (res.z.max_abs() == 0.0) {
    SparseMatrix K = frozen_diffusion_matrix(res.z, make_coefficient("const"), 2.0, RegularizationParams{0.0});
    SymmetricSolver solver;
    if (solver.factorize(K)) {
      const Eigen::VectorXd load = Eigen::VectorXd::Constant(g.interior_count(), nm.f(0.0));
      res.z = Field::from_interior(guess.grid_ptr(), solver.solve(load));
    }
  }

  std::vector<double> path;
  if (nm.p == 2.0 || opts.eps_stages == 1 || reg.eps >= opts.eps_start) {
    path.push_back(reg.eps);
  } else {
    const double ratio = std::pow(reg.eps / opts.eps_start, 1.0 / (opts.eps_stages - 1));
    double e = opts.eps_start;
    for (int k = 0; k + 1 < opts.eps_stages; ++k, e *= ratio) path.push_back(e);
    path.push_back(reg.eps);
  }

  int iters = 0;
  for (std::size_t stage = 0; stage < path.size(); ++stage) {
    const bool last = stage + 1 == path.size();
    Problem pb{cm, nm, RegularizationParams{path[stage]}, cell};
    res.eps_path.push_back(path[stage]);
    const double stage_tol = last ? opts.tol : std::max(opts.tol, 1e-6);

    Eigen::VectorXd r = pb.R(res.z);
    double rn = l2_of(r, cell);
    while (rn > stage_tol && iters < opts.max_iter) {
      ++iters;
      SparseMatrix J = residual_jacobian(res.z, cm, nm, pb.reg);
      SymmetricSolver solver;
      Eigen::VectorXd delta;
      bool have_dir = solver.factorize(J);
      if (have_dir) {
        delta = -solver.solve(r);
        have_dir = delta.allFinite();
      }

      bool moved = false;
      if (have_dir) {
        const Eigen::VectorXd z_vec = res.z.interior_vector();
        for (double alpha = 1.0; alpha >= 1.0 / 1024.0; alpha *= 0.5) {
          Field trial = Field::from_interior(res.z.grid_ptr(), z_vec + alpha * delta);
          if (opts.clip_negative) trial = clipped(std::move(trial));
          Eigen::VectorXd tr;
          try {
            tr = pb.R(trial);
          } catch (const EvaluationError&) {
            continue;
          }
          const double tn = l2_of(tr, cell);
          if (tn <= (1.0 - 1e-4 * alpha) * rn) {
            res.z = std::move(trial);
            r = std::move(tr);
            rn = tn;
            moved = true;
            break;
          }
        }
      }
      if (!moved && opts.allow_descent) {
        moved = descent_step(pb, res.z, r, have_dir ? &delta : nullptr, opts.clip_negative);
        if (moved) {
          ++res.descent_steps;
          r = pb.R(res.z);
          rn = l2_of(r, cell);
        }
      }
      if (!moved) break;
    }
    res.residual_norm = rn;
    if (rn > stage_tol) {
      std::ostringstream msg;
      msg << "stalled at eps = " << path[stage] << " with residual " << rn << " after " << iters << " iterations";
      res.message = msg.str();
      res.iterations = iters;
      return res;
    }
  }
  res.iterations = iters;
  res.converged = res.residual_norm <= opts.tol;
  res.message = res.converged ? "converged" : "iteration limit";
  return res;
}

double verify_stationary(const Field& z, const CoefficientModel& cm, const NonlinearityModel& nm,
                         const RegularizationParams& reg) {
  const double bv = z.boundary_violation();
  if (bv != 0.0) {
    std::ostringstream msg;
    msg << "nonzero boundary value (max |u| = " << bv << " off the interior)";
    throw BoundaryViolation(msg.str());
  }
  return l2_norm(residual(z, cm, nm, reg));
}

Field exact_p_torsion(const GridPtr& grid, double p) {
  if (grid->domain().kind != DomainKind::disk) throw PreconditionError("exact p-torsion needs a disk grid");
  if (!(p > 1.0)) throw PreconditionError("p must exceed 1");
  const double R = grid->domain().radius;
  const double q = p / (p - 1.0);
  const double c = (p - 1.0) / p * std::pow(0.5, 1.0 / (p - 1.0));
  const double Rq = std::pow(R, q);
  return Field::sample(grid, [&](double x, double y) {
    return c * (Rq - std::pow(std::hypot(x, y), q));
  });
}

}  // namespace qlflow
