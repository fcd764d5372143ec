#include "flowgp/esgp.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "flowgp/dense_gp.hpp"
#include "flowgp/kron.hpp"
#include "flowgp/sparse_gp.hpp"

namespace flowgp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kVarianceFloor = 1e-12;

// Build-time state for one subspace; q is large (m_i x n_i) and is released
// once the global reductions over the observations are done.
struct SubBuild {
  EsgpSub sub;
  Eigen::MatrixXd q;  // Q^i_mn = C^-1 K^i_mn
  Eigen::MatrixXd g;  // Q^i_mn Q^i_nm
  double trq = 0.0;
  double trk = 0.0;
};

SubBuild build_sub(const Eigen::MatrixXd& x, const InducingGrid::Subspace& gsub,
                   const KernelSpec& subspec, const Hyperparameters& h,
                   std::size_t index) {
  if (gsub.dims() != x.cols()) {
    throw ShapeError("esgp: inducing subspace " + std::to_string(index) +
                     " has " + std::to_string(gsub.dims()) +
                     " dimensions, data subspace has " +
                     std::to_string(x.cols()));
  }
  SubBuild b;
  if (gsub.is_grid()) {
    FactoredKmm f = inner_grid_kmm(gsub, subspec, h);
    b.sub.axis_chol = std::move(f.axis_chol);
    b.sub.chol = kron_dense(b.sub.axis_chol);
    b.sub.jitter = f.max_jitter;
    b.sub.xu = gsub.expanded();
  } else {
    b.sub.xu = gsub.points;
    LowerTriangular c =
        cholesky_with_jitter(eval_symmetric(subspec, h, b.sub.xu));
    b.sub.chol = std::move(c.L);
    b.sub.jitter = c.jitter;
  }

  const Eigen::MatrixXd kmn = eval_cross(subspec, h, b.sub.xu, x);
  if (b.sub.axis_chol.empty()) {
    b.q = b.sub.chol.triangularView<Eigen::Lower>().solve(kmn);
  } else {
    // Axis-wise triangular solves: much cheaper than the assembled factor
    // when the subspace grid has more than one axis.
    b.q.resize(kmn.rows(), kmn.cols());
    for (Eigen::Index c = 0; c < kmn.cols(); ++c) {
      b.q.col(c) = kron_solve_lower(b.sub.axis_chol, kmn.col(c));
    }
  }

  Eigen::MatrixXd g = b.q * b.q.transpose();
  b.g = 0.5 * (g + g.transpose());
  EigenFactorization ef = kron_eigendecompose(KronMatrix({b.g}));
  b.sub.w = std::move(ef.vectors[0]);
  b.sub.e = std::move(ef.values[0]);
  b.trq = b.q.squaredNorm();
  b.trk = static_cast<double>(x.rows()) * diagonal_value(subspec, h);
  return b;
}

struct Reduced {
  std::vector<KernelSpec> subspecs;
  std::vector<SubBuild> subs;
  std::vector<Eigen::MatrixXd> qlist;  // owns each Q^i_mn, same order
  Eigen::VectorXd p;                   // Q_mn y
  Eigen::VectorXd ejoint;
  double trk = 1.0;
  double trq = 1.0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
};

Reduced reduce(const ProductInputs& inputs, const StructuredObservations& obs,
               const InducingGrid& grid, const KernelSpec& spec,
               const Hyperparameters& h, const char* op) {
  if (grid.count() != inputs.count()) {
    throw ShapeError(std::string(op) + ": " + std::to_string(grid.count()) +
                     " inducing subspaces for " +
                     std::to_string(inputs.count()) + " data subspaces");
  }
  if (spec.dims() != inputs.total_dims()) {
    throw ShapeError(std::string(op) + ": spec covers " +
                     std::to_string(spec.dims()) + " columns, inputs have " +
                     std::to_string(inputs.total_dims()));
  }
  Reduced r;
  r.subspecs = spec.split(inputs.subspace_dims());
  r.n = inputs.total_points();
  r.m = grid.total_points();
  std::vector<Eigen::VectorXd> elist;
  for (std::size_t i = 0; i < inputs.count(); ++i) {
    SubBuild b = build_sub(inputs.subspaces()[i], grid.subspaces()[i],
                           r.subspecs[i], h, i);
    r.trk *= b.trk;
    r.trq *= b.trq;
    elist.push_back(b.sub.e);
    r.qlist.push_back(std::move(b.q));
    r.subs.push_back(std::move(b));
  }
  r.p = kron_matvec(r.qlist, obs.y);
  r.ejoint = kron_vector(elist);
  return r;
}

double elbo_from(const Reduced& r, double s2, double kdiag, double ynorm2) {
  std::vector<Eigen::MatrixXd> wt;
  wt.reserve(r.subs.size());
  for (const auto& b : r.subs) wt.push_back(b.sub.w.transpose());
  const Eigen::VectorXd z = kron_matvec(wt, r.p);
  const Eigen::ArrayXd shifted = r.ejoint.array() + s2;

  const double nn = static_cast<double>(r.n);
  const double corr = (z.array().square() / shifted).sum();
  const double tr_reg = nn * kdiag - r.trq;
  return -0.5 * nn * kLog2Pi - 0.5 * ynorm2 / s2 -
         0.5 * static_cast<double>(r.n - r.m) * std::log(s2) +
         0.5 * corr / s2 - 0.5 * shifted.log().sum() - 0.5 * tr_reg / s2;
}

Eigen::VectorXd whiten_vec(const EsgpSub& s,
                           const Eigen::Ref<const Eigen::VectorXd>& v) {
  if (!s.axis_chol.empty()) {
    return kron_solve_lower(s.axis_chol, v);
  }
  return s.chol.triangularView<Eigen::Lower>().solve(v);
}

Eigen::MatrixXd whiten_mat(const EsgpSub& s, const Eigen::MatrixXd& v) {
  if (!s.axis_chol.empty()) {
    Eigen::MatrixXd out(v.rows(), v.cols());
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      out.col(c) = whiten_vec(s, v.col(c));
    }
    return out;
  }
  return s.chol.triangularView<Eigen::Lower>().solve(v);
}

}  // namespace

int InducingGrid::Subspace::dims() const {
  return is_grid() ? static_cast<int>(axes.size())
                   : static_cast<int>(points.cols());
}

Eigen::Index InducingGrid::Subspace::count() const {
  if (!is_grid()) return points.rows();
  Eigen::Index m = 1;
  for (const auto& a : axes) m *= a.size();
  return m;
}

Eigen::MatrixXd InducingGrid::Subspace::expanded() const {
  if (!is_grid()) return points;
  std::vector<Eigen::MatrixXd> cols;
  cols.reserve(axes.size());
  for (const auto& a : axes) cols.push_back(a);
  return ProductInputs(std::move(cols)).expand();
}

InducingGrid::Subspace InducingGrid::from_points(Eigen::MatrixXd pts) {
  if (pts.rows() < 1 || pts.cols() < 1) {
    throw ShapeError("InducingGrid: explicit subspace needs at least one "
                     "point and one column");
  }
  if (!pts.allFinite()) {
    throw NumericError("InducingGrid: non-finite inducing coordinates");
  }
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < pts.rows(); ++j) {
      if ((pts.row(i) - pts.row(j)).norm() == 0.0) {
        throw ConfigError("InducingGrid: inducing rows " + std::to_string(i) +
                          " and " + std::to_string(j) + " coincide");
      }
    }
  }
  Subspace s;
  s.points = std::move(pts);
  return s;
}

InducingGrid::Subspace InducingGrid::from_axes(
    std::vector<Eigen::VectorXd> axes) {
  if (axes.empty()) {
    throw ShapeError("InducingGrid: axis list is empty");
  }
  for (std::size_t j = 0; j < axes.size(); ++j) {
    const auto& a = axes[j];
    if (a.size() < 1) {
      throw ShapeError("InducingGrid: axis " + std::to_string(j) + " is empty");
    }
    if (!a.allFinite()) {
      throw NumericError("InducingGrid: axis " + std::to_string(j) +
                         " has non-finite values");
    }
    for (Eigen::Index i = 0; i + 1 < a.size(); ++i) {
      if (!(a(i) < a(i + 1))) {
        throw ConfigError("InducingGrid: axis " + std::to_string(j) +
                          " must be strictly increasing (violated at entry " +
                          std::to_string(i + 1) + ")");
      }
    }
  }
  Subspace s;
  s.axes = std::move(axes);
  return s;
}

InducingGrid::InducingGrid(std::vector<Subspace> subs)
    : subs_(std::move(subs)) {
  if (subs_.empty()) {
    throw ShapeError("InducingGrid: no subspaces");
  }
}

Eigen::Index InducingGrid::total_points() const {
  Eigen::Index m = 1;
  for (const auto& s : subs_) m *= s.count();
  return m;
}

FactoredKmm inner_grid_kmm(const InducingGrid::Subspace& sub,
                           const KernelSpec& subspec,
                           const Hyperparameters& h) {
  if (!sub.is_grid()) {
    throw ShapeError("inner_grid_kmm: subspace holds explicit points, not axes");
  }
  if (static_cast<int>(sub.axes.size()) != subspec.dims()) {
    throw ShapeError("inner_grid_kmm: " + std::to_string(sub.axes.size()) +
                     " axes for a spec over " + std::to_string(subspec.dims()) +
                     " columns");
  }
  const std::vector<KernelSpec> axis_specs =
      subspec.split(std::vector<int>(sub.axes.size(), 1));
  FactoredKmm f;
  for (std::size_t j = 0; j < sub.axes.size(); ++j) {
    const Eigen::MatrixXd pts = sub.axes[j];
    Eigen::MatrixXd k = eval_symmetric(axis_specs[j], h, pts);
    LowerTriangular c = cholesky_with_jitter(k);
    f.axis_k.push_back(std::move(k));
    f.axis_chol.push_back(std::move(c.L));
    f.max_jitter = std::max(f.max_jitter, c.jitter);
  }
  return f;
}

double esgp_elbo(const ProductInputs& inputs, const StructuredObservations& obs,
                 const InducingGrid& grid, const KernelSpec& spec,
                 const Hyperparameters& h) {
  const Reduced r = reduce(inputs, obs, grid, spec, h, "esgp_elbo");
  return elbo_from(r, h.noise_variance(), diagonal_value(spec, h),
                   obs.y.squaredNorm());
}

EsgpFit esgp_fit(const ProductInputs& inputs, const StructuredObservations& obs,
                 const InducingGrid& grid, const KernelSpec& spec,
                 const Hyperparameters& h, const EsgpOptions& opts) {
  Reduced r = reduce(inputs, obs, grid, spec, h, "esgp_fit");
  const double s2 = h.noise_variance();
  const double kdiag = diagonal_value(spec, h);

  EsgpFit fit{spec,
              std::move(r.subspecs),
              h,
              {},
              {},
              {},
              {},
              {},
              s2,
              kdiag,
              elbo_from(r, s2, kdiag, obs.y.squaredNorm()),
              -1.0,
              false};
  fit.dinv = (r.ejoint.array() + s2).inverse().matrix();
  fit.vcoef = (r.ejoint.array() * fit.dinv.array()).matrix();

  // Whitened prediction pieces, plus the explicit weight vector for the
  // dense cross-check below.  The weight applies C^-T outright, so it is
  // only trustworthy when K_mm is well conditioned; predictions go through
  // proj and vcoef instead.
  std::vector<Eigen::MatrixXd> chol_flat;
  std::vector<Eigen::MatrixXd> wlist, wtlist;
  for (auto& b : r.subs) {
    if (b.sub.axis_chol.empty()) {
      chol_flat.push_back(b.sub.chol);
    } else {
      for (const auto& l : b.sub.axis_chol) chol_flat.push_back(l);
    }
    wlist.push_back(b.sub.w);
    wtlist.push_back(b.sub.w.transpose());
  }

  fit.proj = kron_matvec(wtlist, r.p).cwiseProduct(fit.dinv);
  fit.weight =
      kron_solve_lower_transposed(chol_flat, kron_matvec(wlist, fit.proj));

  for (auto& b : r.subs) fit.subs.push_back(std::move(b.sub));

  if (opts.validate_dense) {
    if (r.n > opts.dense_cap) {
      throw ConfigError("esgp_fit: dense validation requested for n = " +
                        std::to_string(r.n) + " beyond the cap " +
                        std::to_string(opts.dense_cap));
    }
    std::vector<Eigen::MatrixXd> xs;
    for (const auto& s : fit.subs) xs.push_back(s.xu);
    const Eigen::MatrixXd xu_all = ProductInputs(std::move(xs)).expand();
    const DenseGpProblem dp{inputs.expand(), obs.y, spec, h};
    const VariationalPosterior q =
        optimal_q_direct(dp, InducingSet(xu_all, opts.dense_cap));
    const LowerTriangular ck =
        cholesky_with_jitter(eval_symmetric(spec, h, xu_all));
    const auto lower = ck.L.triangularView<Eigen::Lower>();
    const Eigen::VectorXd wd =
        lower.transpose().solve(Eigen::VectorXd(lower.solve(q.mu)));
    const double scale = std::max(fit.weight.norm(), wd.norm());
    fit.dense_weight_gap =
        scale > 0.0 ? (fit.weight - wd).norm() / scale : 0.0;
    if (fit.dense_weight_gap > opts.tolerance) {
      fit.weight = wd;
      fit.dense_fallback = true;
    }
  }
  return fit;
}

Prediction esgp_predict(const EsgpFit& fit,
                        const Eigen::Ref<const Eigen::MatrixXd>& xstar) {
  Eigen::Index dims = 0;
  for (const auto& s : fit.subs) dims += s.xu.cols();
  if (xstar.cols() != dims) {
    throw ShapeError("esgp_predict: queries have " +
                     std::to_string(xstar.cols()) + " columns, model has " +
                     std::to_string(dims));
  }
  const Eigen::Index t = xstar.rows();

  Prediction out;
  out.mean.resize(t);
  out.variance.resize(t);
  for (Eigen::Index j = 0; j < t; ++j) {
    std::vector<Eigen::MatrixXd> krows, brows, b2rows;
    krows.reserve(fit.subs.size());
    brows.reserve(fit.subs.size());
    b2rows.reserve(fit.subs.size());
    Eigen::Index coff = 0;
    for (std::size_t i = 0; i < fit.subs.size(); ++i) {
      const EsgpSub& s = fit.subs[i];
      const Eigen::Index di = s.xu.cols();
      const Eigen::MatrixXd point = xstar.block(j, coff, 1, di);
      coff += di;
      Eigen::MatrixXd krow = eval_cross(fit.subspecs[i], fit.hyp, point, s.xu);
      const Eigen::VectorXd b =
          s.w.transpose() * whiten_vec(s, krow.transpose());
      brows.push_back(b.transpose());
      b2rows.push_back(b.array().square().matrix().transpose());
      krows.push_back(std::move(krow));
    }
    out.mean(j) = fit.dense_fallback ? kron_matvec(krows, fit.weight)(0)
                                     : kron_matvec(brows, fit.proj)(0);
    out.variance(j) =
        std::max(fit.kdiag - kron_matvec(b2rows, fit.vcoef)(0),
                 kVarianceFloor);
  }
  return out;
}

Prediction esgp_predict_grid(const EsgpFit& fit, const ProductInputs& xstar) {
  if (xstar.count() != fit.subs.size()) {
    throw ShapeError("esgp_predict_grid: query product has " +
                     std::to_string(xstar.count()) + " subspaces, model has " +
                     std::to_string(fit.subs.size()));
  }
  std::vector<Eigen::MatrixXd> kslist, blist, b2list;
  for (std::size_t i = 0; i < fit.subs.size(); ++i) {
    const EsgpSub& s = fit.subs[i];
    if (xstar.subspaces()[i].cols() != s.xu.cols()) {
      throw ShapeError("esgp_predict_grid: subspace " + std::to_string(i) +
                       " has mismatched dimension");
    }
    Eigen::MatrixXd ks =
        eval_cross(fit.subspecs[i], fit.hyp, xstar.subspaces()[i], s.xu);
    const Eigen::MatrixXd b = s.w.transpose() * whiten_mat(s, ks.transpose());
    blist.push_back(b.transpose());
    b2list.push_back(b.array().square().matrix().transpose());
    kslist.push_back(std::move(ks));
  }
  Prediction out;
  out.mean = fit.dense_fallback ? kron_matvec(kslist, fit.weight)
                                : kron_matvec(blist, fit.proj);
  out.variance = (fit.kdiag - kron_matvec(b2list, fit.vcoef).array())
                     .cwiseMax(kVarianceFloor)
                     .matrix();
  return out;
}

}  // namespace flowgp
