#include "dpcr/decomposition.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace dpcr {

EigenResult eigen_decompose(const CovarianceSurface& surface, int max_K, const InnerProduct& ip) {
    const Matrix& c = surface.values;
    const Eigen::Index p = c.rows();
    if (c.cols() != p) throw std::invalid_argument("eigen_decompose: surface not square");
    const double scale = std::max(1.0, c.cwiseAbs().maxCoeff());
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::domain_error("eigen_decompose: surface not symmetric");
    if (ip.weights.size() != p) throw std::invalid_argument("eigen_decompose: weight size mismatch");

    // Operator eigenproblem C W phi = lambda phi reduced to the symmetric
    // problem B v = lambda v with B = W^{1/2} C W^{1/2}, phi = W^{-1/2} v.
    const Vector sqw = ip.weights.cwiseSqrt();
    const Matrix b = sqw.asDiagonal() * (0.5 * (c + c.transpose())) * sqw.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(b);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigen_decompose: eigensolver failed");

    // Eigen returns ascending order; flip to descending and clip negatives.
    EigenResult res;
    res.eigenvalues = solver.eigenvalues().reverse();
    for (Eigen::Index k = 0; k < p; ++k)
        if (res.eigenvalues(k) < 0.0) res.eigenvalues(k) = 0.0;

    const Eigen::Index K = std::min<Eigen::Index>(max_K, p);
    res.components.resize(p, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        Vector phi = solver.eigenvectors().col(p - 1 - k).cwiseQuotient(sqw);
        // sign convention: largest-magnitude entry positive
        Eigen::Index imax = 0;
        phi.cwiseAbs().maxCoeff(&imax);
        if (phi(imax) < 0.0) phi = -phi;
        res.components.col(k) = phi;
    }
    return res;
}

int select_K(const Vector& eigenvalues, double threshold) {
    double total = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
        if (eigenvalues(k) > 0.0) total += eigenvalues(k);
    if (total <= 0.0) throw std::domain_error("select_K: all eigenvalues are zero");
    double cum = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k) {
        cum += std::max(eigenvalues(k), 0.0);
        if (cum / total >= threshold) return static_cast<int>(k) + 1;
    }
    return static_cast<int>(eigenvalues.size());
}

Matrix project_scores(const Matrix& z, const Vector& mean, const Matrix& components,
                      const InnerProduct& ip) {
    if (z.rows() != mean.size() || z.rows() != components.rows())
        throw std::domain_error("project_scores: grid mismatch");
    if (ip.weights.size() != z.rows())
        throw std::domain_error("project_scores: weight size mismatch");
    const Matrix centered = z.colwise() - mean;
    // beta (n x K) = (W zc)' Phi
    return centered.transpose() * ip.weights.asDiagonal() * components;
}

BasisDecomposition decompose(const Matrix& z, const std::vector<int>& grid,
                             const InnerProduct& ip, const DecomposeOptions& opts) {
    const Eigen::Index p = z.rows();
    const Eigen::Index n = z.cols();
    if (n < 10) throw std::domain_error("decompose: need at least 10 years");
    if (!z.allFinite()) throw std::domain_error("decompose: input has missing cells");

    BasisDecomposition out;
    out.mode = opts.mode;
    out.ip = ip;
    out.mean = opts.center ? Vector(z.rowwise().mean()) : Vector(Vector::Zero(p));

    CovarianceSurface surface;
    if (opts.mode == PcaMode::static_pca) {
        surface = empirical_autocov(z, 0, grid, opts.center);
    } else {
        double h = opts.bandwidth;
        if (h <= 0.0) h = plugin_bandwidth(z, grid, KernelSpec::flat_top(),
                                           KernelSpec::bartlett(), 0.0, opts.center)
                               .h_opt;
        surface = longrun_cov(z, h, KernelSpec::bartlett(), grid, opts.center);
        out.bandwidth = h;
    }

    int max_K = opts.max_K;
    if (max_K <= 0) max_K = static_cast<int>(std::min<Eigen::Index>({n - 1, p, 10}));

    EigenResult eig = eigen_decompose(surface, max_K, ip);
    out.eigenvalues = eig.eigenvalues;

    int K = opts.force_K > 0 ? opts.force_K : select_K(eig.eigenvalues, opts.threshold);
    K = std::min(K, max_K);
    out.K = K;
    out.components = eig.components.leftCols(K);
    out.scores = project_scores(z, out.mean, out.components, ip);
    out.residuals = (z.colwise() - out.mean) - out.components * out.scores.transpose();
    return out;
}

}  // namespace dpcr
