#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SparseCholesky>

#include "bllab/forward.hpp"

namespace bllab {

namespace {

// Block Krylov subspace of (A - sigma)^{-1} with full reorthogonalization and
// Rayleigh-Ritz extraction. Block size bounds the multiplicity it resolves in
// one sweep; larger clusters still converge as the basis grows.
void block_shift_invert(const SpMat& a, int k, double sigma, const EigenOptions& opt, RVec& values,
                        RMat& vectors) {
  const Eigen::Index n = a.rows();
  SpMat shifted = a;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  Eigen::SimplicialLDLT<SpMat> ldlt(shifted);
  if (ldlt.info() != Eigen::Success) throw NumericalError("shift-invert factorization failed");

  const int b = std::max(1, opt.block);
  const Eigen::Index max_dim = std::min<Eigen::Index>(n, 6 * k + 20 * b);
  RMat basis(n, 0), image(n, 0);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss;
  RMat block(n, b);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int c = 0; c < b; ++c) block(i, c) = gauss(rng);

  auto orthonormalize = [&](RMat& w) {
    for (int pass = 0; pass < 2; ++pass)
      if (basis.cols() > 0) w -= basis * (basis.transpose() * w);
    Eigen::HouseholderQR<RMat> qr(w);
    RMat q = qr.householderQ() * RMat::Identity(n, w.cols());
    return q;
  };

  block = orthonormalize(block);
  double worst = 0.0;
  while (true) {
    RMat img(n, block.cols());
    for (Eigen::Index c = 0; c < block.cols(); ++c) img.col(c) = ldlt.solve(block.col(c).eval());
    Eigen::Index d = basis.cols();
    basis.conservativeResize(n, d + block.cols());
    image.conservativeResize(n, d + block.cols());
    basis.rightCols(block.cols()) = block;
    image.rightCols(block.cols()) = img;

    const Eigen::Index dim = basis.cols();
    if (dim >= std::min<Eigen::Index>(n, k + 2 * b)) {
      RMat t = basis.transpose() * image;
      t = 0.5 * (t + t.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<RMat> es(t);
      // largest theta <-> smallest lambda
      RVec theta = es.eigenvalues().reverse();
      RMat s = es.eigenvectors().rowwise().reverse();
      RMat y = basis * s.leftCols(k);
      RMat oy = image * s.leftCols(k);
      worst = 0.0;
      for (int c = 0; c < k; ++c) {
        double r = (oy.col(c) - theta(c) * y.col(c)).norm();
        worst = std::max(worst, r / std::abs(theta(c)));
      }
      if (worst <= opt.tol || dim >= max_dim) {
        values.resize(k);
        for (int c = 0; c < k; ++c) values(c) = sigma + 1.0 / theta(c);
        vectors = y;
        if (worst > opt.tol * 1e3)
          throw NumericalError("block Lanczos did not converge: relative Ritz residual " +
                               std::to_string(worst));
        return;
      }
    }
    RMat next = img;
    block = orthonormalize(next);
  }
}

}  // namespace

std::vector<EigenPair> eigen_decompose(DiscreteOperator& op, int k, const EigenOptions& opt) {
  const int n = op.grid.interior_count();
  if (k < 1 || k > n) throw ArgumentError("requested eigenpair count outside [1, unknowns]");
  RVec values;
  RMat vectors;
  if (n <= opt.dense_limit) {
    RMat dense = RMat(op.matrix);
    Eigen::SelfAdjointEigenSolver<RMat> es(dense);
    if (es.info() != Eigen::Success) throw NumericalError("dense eigensolver failed");
    values = es.eigenvalues().head(k);
    vectors = es.eigenvectors().leftCols(k);
  } else {
    double qmin = op.q.size() ? op.q.minCoeff() : 0.0;
    double sigma = std::min(0.0, qmin) - 1.0;
    block_shift_invert(op.matrix, k, sigma, opt, values, vectors);
    // ascending order
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int x, int y) { return values(x) < values(y); });
    RVec v2(k);
    RMat w2(n, k);
    for (int i = 0; i < k; ++i) {
      v2(i) = values(idx[i]);
      w2.col(i) = vectors.col(idx[i]);
    }
    values = v2;
    vectors = w2;
  }

  const double h = op.grid.h();
  std::vector<EigenPair> out;
  out.reserve(k);
  for (int c = 0; c < k; ++c) {
    RVec v = vectors.col(c);
    v.normalize();
    // first component within round-off of the maximum magnitude decides the sign
    const double vmax = v.cwiseAbs().maxCoeff();
    Eigen::Index imax = 0;
    while (std::abs(v(imax)) < (1.0 - 1e-8) * vmax) ++imax;
    if (v(imax) < 0) v = -v;
    double res = (op.matrix * v - values(c) * v).norm();
    if (res > 1e-8 * (1.0 + std::abs(values(c))))
      throw NumericalError("eigenpair " + std::to_string(c + 1) + " residual " + std::to_string(res) +
                           " exceeds tolerance");
    out.push_back({c + 1, values(c), v / h});
  }
  op.certified_lambda0 = out.front().lambda - 1.0;
  op.lambda0_from_spectrum = true;
  return out;
}

}  // namespace bllab
