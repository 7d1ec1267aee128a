#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "beo/voxel.hpp"

namespace beo {

/// Coordinate of an object in the learned subspace (the BEO vector).
using ShapeEmbedding = Eigen::VectorXd;

/// Orthonormal basis over flattened voxel space. The training mean is
/// absorbed into the basis during fitting, so projection and back-projection
/// are plain matrix products with no explicit mean term.
struct SubspaceModel {
  Eigen::MatrixXd basis;          // V x k, orthonormal columns
  int resolution = 0;             // source grid R; 0 when not grid-backed
  double variance_captured = 1.0; // fraction of centered training variance retained
  bool converged = true;          // false when VBPCA hit max_iters before tol

  Eigen::Index dim() const { return basis.rows(); }
  int k() const { return static_cast<int>(basis.cols()); }
};

/// Thin SVD computed by one-sided (Hestenes) Jacobi rotations: A = U * diag(sigma) * V^T
/// with U column-orthonormal and sigma sorted descending. Only the left
/// factor is accumulated; that is all the fitting paths need.
struct ThinSvd {
  Eigen::MatrixXd u;       // m x n
  Eigen::VectorXd sigma;   // n, descending, >= 0
};
ThinSvd jacobi_svd_left(Eigen::MatrixXd a, int max_sweeps = 100, double tol = 1e-14);

/// Orthonormal basis for span([w_raw, mu]), rank-trimmed at
/// rel_tol * sigma_max. Throws std::invalid_argument if the input is all zero.
SubspaceModel orthonormalize(const Eigen::MatrixXd& w_raw, const Eigen::VectorXd& mu,
                             int resolution = 0, double rel_tol = 1e-12);

/// Classical PCA fit: the returned basis spans the top-k principal directions
/// of the centered data plus the mean. variance_captured is the centered
/// spectrum ratio for the k requested directions.
SubspaceModel fit_pca(const std::vector<FlatObjectVector>& data, int k, int resolution = 0);

struct VbpcaConfig {
  int max_iters = 500;
  double tol = 1e-9;              // relative free-energy change
  double prune_threshold = 1e-8;  // drop column j when ||w_j||^2 < threshold * max_j ||w_j||^2
  std::uint64_t init_seed = 0xBE0BA5E5ULL;
};

/// Variational Bayesian PCA, EM-style with a per-column automatic-relevance
/// precision prior. Columns whose precision diverges are pruned, so the
/// effective dimension adapts to the data; the result is orthonormalized with
/// the mean absorbed. Non-convergence sets model.converged = false rather
/// than throwing.
SubspaceModel fit_vbpca(const std::vector<FlatObjectVector>& data, int k_max,
                        const VbpcaConfig& cfg = {}, int resolution = 0);

/// Embedding of a fully observed object: basis^T * o.
ShapeEmbedding project(const SubspaceModel& model, const FlatObjectVector& o);

/// Back-projection to voxel space: basis * e.
FlatObjectVector backproject(const SubspaceModel& model, const ShapeEmbedding& e);

/// Fraction of the data's second moment about the origin captured by the
/// basis projector (the mean is part of the basis, so moments are not
/// re-centered here).
double explained_variance(const SubspaceModel& model, const std::vector<FlatObjectVector>& data);

/// Subspace model file: magic "BEOS", u32 V, u32 k, u32 resolution,
/// f64 variance_captured, then V*k little-endian f64 (column-major).
void save_subspace(const SubspaceModel& model, const std::string& path);
SubspaceModel load_subspace(const std::string& path);

}  // namespace beo
