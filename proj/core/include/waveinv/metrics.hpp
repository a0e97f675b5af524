#pragma once

#include <cstdint>
#include <memory>

#include <Eigen/SparseCholesky>

#include "waveinv/mesh.hpp"
#include "waveinv/quadrature.hpp"

namespace waveinv {

/// sqrt(c^T M c)
double l2_norm(const SparseMatrix& mass, const Vector& coefficients);

/// Discrete H^{-1} norm on V_h: sup over v in V_h of (e, v) / |v|_{H^1_0},
/// which equals sqrt(r^T K^{-1} r) with r = M e. The stiffness matrix is
/// factorized once per instance.
class DualNorm {
public:
    DualNorm(const SparseMatrix& mass, const SparseMatrix& stiffness);
    double operator()(const Vector& coefficients) const;

private:
    SparseMatrix mass_;
    std::shared_ptr<const Eigen::SimplicialLDLT<SparseMatrix>> stiffness_factor_;
};

double h_minus1_norm(const SparseMatrix& mass, const SparseMatrix& stiffness, const Vector& coefficients);

struct ProjectionOptions {
    /// Geometric subdivision levels for 1D elements touching the boundary.
    int boundary_grading_levels = 30;
};

/// Load vector b_j = (f, phi_j) by element quadrature: 20-point Gauss per
/// segment (graded on boundary segments) or a collapsed 20x20 Gauss rule per
/// triangle.
Vector load_vector(const Mesh& mesh, const SpatialFunction& f, const ProjectionOptions& options = {});

/// Coefficients of the L2 projection P_h f: solves M c = b.
Vector project_l2(const Mesh& mesh, const SparseMatrix& mass, const SpatialFunction& f,
                  const ProjectionOptions& options = {});

struct ErrorReport {
    /// ||G f* - G_{tau,h} f_h||_n
    double empirical_error = 0.0;
    /// ||P_h f* - f_h||_{L^2}
    double l2_error = 0.0;
    /// ||P_h f* - f_h||_{H^{-1}}
    double h_minus1_error = 0.0;

    struct Metadata {
        double h = 0.0;
        double tau = 0.0;
        int n = 0;
        double sigma = 0.0;
        double alpha = 0.0;
        std::uint64_t seed = 0;
    } metadata;
};

}  // namespace waveinv
