#include "beo/subspace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "beo/detail/binio.hpp"
#include "beo/rng.hpp"

namespace beo {

namespace {

void check_data(const std::vector<FlatObjectVector>& data, const char* who) {
  if (data.size() < 2) throw std::invalid_argument(std::string(who) + ": need at least 2 vectors");
  const Eigen::Index v = data.front().size();
  for (const auto& x : data) {
    if (x.size() != v) throw std::invalid_argument(std::string(who) + ": inconsistent vector lengths");
  }
}

Eigen::MatrixXd stack_rows(const std::vector<FlatObjectVector>& data) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), data.front().size());
  for (std::size_t i = 0; i < data.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = data[i];
  return x;
}

}  // namespace

ThinSvd jacobi_svd_left(Eigen::MatrixXd a, int max_sweeps, double tol) {
  const Eigen::Index n = a.cols();

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double aii = a.col(i).squaredNorm();
        const double ajj = a.col(j).squaredNorm();
        const double aij = a.col(i).dot(a.col(j));
        if (aii == 0.0 || ajj == 0.0) continue;
        const double rel = std::abs(aij) / std::sqrt(aii * ajj);
        off = std::max(off, rel);
        if (rel <= tol) continue;
        // Rotation angle that zeroes the (i,j) inner product.
        const double zeta = (ajj - aii) / (2.0 * aij);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        Eigen::VectorXd ci = a.col(i);
        a.col(i) = cs * ci - sn * a.col(j);
        a.col(j) = sn * ci + cs * a.col(j);
      }
    }
    if (off <= tol) break;
  }

  ThinSvd out;
  out.sigma.resize(n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms[j] = a.col(j).norm();
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index p, Eigen::Index q) { return norms[p] > norms[q]; });
  out.u.resize(a.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index src = order[static_cast<std::size_t>(j)];
    out.sigma[j] = norms[src];
    if (norms[src] > 0.0) {
      out.u.col(j) = a.col(src) / norms[src];
    } else {
      out.u.col(j).setZero();
    }
  }
  return out;
}

SubspaceModel orthonormalize(const Eigen::MatrixXd& w_raw, const Eigen::VectorXd& mu,
                             int resolution, double rel_tol) {
  if (w_raw.rows() != mu.size()) {
    throw std::invalid_argument("orthonormalize: basis rows and mean length differ");
  }
  Eigen::MatrixXd b(w_raw.rows(), w_raw.cols() + 1);
  b.leftCols(w_raw.cols()) = w_raw;
  b.col(w_raw.cols()) = mu;

  ThinSvd svd = jacobi_svd_left(std::move(b));
  const double smax = svd.sigma.size() > 0 ? svd.sigma[0] : 0.0;
  if (smax <= 0.0) throw std::invalid_argument("orthonormalize: all-zero input");
  Eigen::Index rank = 0;
  while (rank < svd.sigma.size() && svd.sigma[rank] > rel_tol * smax) ++rank;

  SubspaceModel model;
  model.basis = svd.u.leftCols(rank);
  model.resolution = resolution;
  return model;
}

SubspaceModel fit_pca(const std::vector<FlatObjectVector>& data, int k, int resolution) {
  check_data(data, "fit_pca");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index v = data.front().size();
  if (k < 1 || k > std::min<Eigen::Index>(v, n)) {
    throw std::invalid_argument("fit_pca: k out of range [1, min(V, n)]");
  }

  Eigen::MatrixXd x = stack_rows(data);
  Eigen::VectorXd mu = x.colwise().mean();
  x.rowwise() -= mu.transpose();

  ThinSvd svd = jacobi_svd_left(x.transpose());
  const double total = svd.sigma.squaredNorm();
  const double retained = svd.sigma.head(k).squaredNorm();

  SubspaceModel model = orthonormalize(svd.u.leftCols(k), mu, resolution);
  model.variance_captured = total > 0.0 ? retained / total : 1.0;
  return model;
}

SubspaceModel fit_vbpca(const std::vector<FlatObjectVector>& data, int k_max,
                        const VbpcaConfig& cfg, int resolution) {
  check_data(data, "fit_vbpca");
  const Eigen::Index n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index v = data.front().size();
  if (k_max < 1 || k_max > std::min<Eigen::Index>(v, n)) {
    throw std::invalid_argument("fit_vbpca: k_max out of range [1, min(V, n)]");
  }

  Eigen::MatrixXd x = stack_rows(data);
  Eigen::VectorXd mu = x.colwise().mean();
  x.rowwise() -= mu.transpose();

  const double tr_xsq = x.squaredNorm();
  const double per_coord_var = tr_xsq / static_cast<double>(n * v);
  if (per_coord_var == 0.0) {
    // All points identical: the subspace is just the mean direction.
    SubspaceModel model = orthonormalize(Eigen::MatrixXd::Zero(v, 0), mu, resolution);
    return model;
  }
  const double sigma2_floor = std::max(1e-12 * per_coord_var, 1e-300);

  Eigen::Index k = k_max;
  Rng rng(cfg.init_seed);
  Eigen::MatrixXd w(v, k);
  const double init_scale = std::sqrt(per_coord_var / static_cast<double>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < v; ++i) w(i, j) = rng.normal() * init_scale;
  }
  double sigma2 = 0.5 * per_coord_var;
  Eigen::VectorXd alpha = Eigen::VectorXd::Ones(k);

  double free_energy_prev = 0.0;
  bool have_prev = false;
  bool converged = false;

  const Eigen::MatrixXd identity_k = Eigen::MatrixXd::Identity(k_max, k_max);

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    // E-step: posterior moments of the latent coordinates.
    Eigen::MatrixXd m = w.transpose() * w;
    m.diagonal().array() += sigma2;
    Eigen::LDLT<Eigen::MatrixXd> m_ldlt(m);
    Eigen::MatrixXd minv = m_ldlt.solve(identity_k.topLeftCorner(k, k));
    Eigen::MatrixXd xw = x * w;              // n x k
    Eigen::MatrixXd xbar = xw * minv;        // E[z] rows
    Eigen::MatrixXd sxx = static_cast<double>(n) * sigma2 * minv + xbar.transpose() * xbar;

    // M-step: ridge-regularized by the ARD precisions.
    Eigen::MatrixXd g = x.transpose() * xbar;  // V x k
    Eigen::MatrixXd reg = sxx;
    reg.diagonal() += sigma2 * alpha;
    w = reg.ldlt().solve(g.transpose()).transpose();

    Eigen::VectorXd col_sq = w.colwise().squaredNorm();
    for (Eigen::Index j = 0; j < k; ++j) {
      alpha[j] = static_cast<double>(v) / std::max(col_sq[j], 1e-300);
    }

    const double tr_wg = (w.array() * g.array()).sum();
    Eigen::MatrixXd wtw = w.transpose() * w;
    const double tr_wtw_sxx = (wtw.array() * sxx.array()).sum();
    sigma2 = (tr_xsq - 2.0 * tr_wg + tr_wtw_sxx) / static_cast<double>(n * v);
    sigma2 = std::max(sigma2, sigma2_floor);

    // Penalized marginal likelihood, evaluated with the Woodbury identity so
    // only k x k factorizations are needed.
    Eigen::MatrixXd mf = wtw;
    mf.diagonal().array() += sigma2;
    Eigen::LDLT<Eigen::MatrixXd> mf_ldlt(mf);
    const double lndet_c = static_cast<double>(v - k) * std::log(sigma2) +
                           mf_ldlt.vectorD().array().log().sum();
    Eigen::MatrixXd gw = x * w;  // n x k
    const double tr_proj = (mf_ldlt.solve(gw.transpose() * gw)).trace();
    const double tr_cinv_s = (tr_xsq - tr_proj) / (static_cast<double>(n) * sigma2);
    const double loglik = -0.5 * static_cast<double>(n) *
                          (static_cast<double>(v) * std::log(2.0 * M_PI) + lndet_c + tr_cinv_s);
    double log_prior = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      log_prior += -0.5 * (alpha[j] * col_sq[j] - static_cast<double>(v) * std::log(alpha[j]));
    }
    const double free_energy = loglik + log_prior;

    if (have_prev) {
      const double rel = std::abs(free_energy - free_energy_prev) /
                         (std::abs(free_energy_prev) + 1e-12);
      if (rel < cfg.tol) {
        converged = true;
      }
    }
    free_energy_prev = free_energy;
    have_prev = true;

    // Prune columns whose precision has diverged (relative squared norm
    // below threshold). A short burn-in avoids cutting on init noise.
    if (iter >= 5 || converged) {
      const double max_sq = col_sq.maxCoeff();
      std::vector<Eigen::Index> keep;
      for (Eigen::Index j = 0; j < k; ++j) {
        if (col_sq[j] >= cfg.prune_threshold * max_sq) keep.push_back(j);
      }
      if (static_cast<Eigen::Index>(keep.size()) < k) {
        Eigen::MatrixXd w2(v, static_cast<Eigen::Index>(keep.size()));
        Eigen::VectorXd a2(static_cast<Eigen::Index>(keep.size()));
        for (std::size_t j = 0; j < keep.size(); ++j) {
          w2.col(static_cast<Eigen::Index>(j)) = w.col(keep[j]);
          a2[static_cast<Eigen::Index>(j)] = alpha[keep[j]];
        }
        w = std::move(w2);
        alpha = std::move(a2);
        k = w.cols();
      }
    }
    if (converged) break;
  }

  SubspaceModel model = orthonormalize(w, mu, resolution);
  model.converged = converged;

  // Centered-variance ratio of the retained directions (mean excluded).
  ThinSvd wsvd = jacobi_svd_left(w);
  Eigen::Index rank = 0;
  const double smax = wsvd.sigma.size() > 0 ? wsvd.sigma[0] : 0.0;
  while (rank < wsvd.sigma.size() && smax > 0.0 && wsvd.sigma[rank] > 1e-12 * smax) ++rank;
  if (rank > 0) {
    model.variance_captured = (x * wsvd.u.leftCols(rank)).squaredNorm() / tr_xsq;
  } else {
    model.variance_captured = 0.0;
  }
  return model;
}

ShapeEmbedding project(const SubspaceModel& model, const FlatObjectVector& o) {
  if (o.size() != model.basis.rows()) {
    throw std::invalid_argument("project: vector length " + std::to_string(o.size()) +
                                " does not match subspace dimension " +
                                std::to_string(model.basis.rows()));
  }
  return model.basis.transpose() * o;
}

FlatObjectVector backproject(const SubspaceModel& model, const ShapeEmbedding& e) {
  if (e.size() != model.basis.cols()) {
    throw std::invalid_argument("backproject: embedding length " + std::to_string(e.size()) +
                                " does not match k = " + std::to_string(model.basis.cols()));
  }
  return model.basis * e;
}

double explained_variance(const SubspaceModel& model, const std::vector<FlatObjectVector>& data) {
  if (data.empty()) throw std::invalid_argument("explained_variance: empty data");
  double total = 0.0;
  double captured = 0.0;
  for (const auto& t : data) {
    if (t.size() != model.basis.rows()) {
      throw std::invalid_argument("explained_variance: vector length mismatch");
    }
    total += t.squaredNorm();
    captured += (model.basis.transpose() * t).squaredNorm();
  }
  if (total == 0.0) return 1.0;
  return captured / total;
}

void save_subspace(const SubspaceModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  detail::write_magic(out, "BEOS");
  detail::write_u32le(out, static_cast<std::uint32_t>(model.basis.rows()));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.basis.cols()));
  detail::write_u32le(out, static_cast<std::uint32_t>(model.resolution));
  detail::write_f64le(out, model.variance_captured);
  detail::write_bytes(out, model.basis.data(),
                      sizeof(double) * static_cast<std::size_t>(model.basis.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

SubspaceModel load_subspace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open subspace file");
  detail::expect_magic(in, "BEOS", path);
  const std::uint32_t v = detail::read_u32le(in, "V");
  const std::uint32_t k = detail::read_u32le(in, "k");
  const std::uint32_t resolution = detail::read_u32le(in, "resolution");
  SubspaceModel model;
  model.variance_captured = detail::read_f64le(in, "variance_captured");
  model.resolution = static_cast<int>(resolution);
  model.basis.resize(v, k);
  detail::read_bytes(in, model.basis.data(),
                     sizeof(double) * static_cast<std::size_t>(model.basis.size()), "basis");
  return model;
}

}  // namespace beo
