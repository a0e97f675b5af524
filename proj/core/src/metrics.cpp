#include "waveinv/metrics.hpp"

#include <cmath>

#include "waveinv/errors.hpp"

namespace waveinv {

double l2_norm(const SparseMatrix& mass, const Vector& coefficients) {
    if (coefficients.size() != mass.rows()) {
        throw InvalidArgument("l2_norm: coefficient vector has wrong length");
    }
    return std::sqrt(std::max(0.0, coefficients.dot(mass * coefficients)));
}

DualNorm::DualNorm(const SparseMatrix& mass, const SparseMatrix& stiffness) : mass_(mass) {
    if (mass.rows() != stiffness.rows() || mass.cols() != stiffness.cols()) {
        throw InvalidArgument("DualNorm: mass and stiffness shapes differ");
    }
    auto factor = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(stiffness);
    if (factor->info() != Eigen::Success || (factor->vectorD().array() <= 0.0).any()) {
        throw NumericalError("DualNorm: stiffness matrix is not positive definite");
    }
    stiffness_factor_ = std::move(factor);
}

double DualNorm::operator()(const Vector& coefficients) const {
    if (coefficients.size() != mass_.rows()) {
        throw InvalidArgument("h_minus1_norm: coefficient vector has wrong length");
    }
    const Vector functional = mass_ * coefficients;
    const Vector riesz = stiffness_factor_->solve(functional);
    if (stiffness_factor_->info() != Eigen::Success) {
        throw NumericalError("h_minus1_norm: stiffness solve failed");
    }
    return std::sqrt(std::max(0.0, functional.dot(riesz)));
}

double h_minus1_norm(const SparseMatrix& mass, const SparseMatrix& stiffness, const Vector& coefficients) {
    return DualNorm(mass, stiffness)(coefficients);
}

Vector load_vector(const Mesh& mesh, const SpatialFunction& f, const ProjectionOptions& options) {
    Vector load = Vector::Zero(mesh.num_dofs());
    const auto vertices = mesh.vertices();
    const auto vertex_dof = mesh.vertex_dof();

    if (mesh.dimension() == 1) {
        for (const auto& element : mesh.elements()) {
            const double a = vertices[element[0]].x;
            const double b = vertices[element[1]].x;
            std::vector<quadrature::Node> rule;
            if (a <= 0.0) {
                rule = quadrature::graded_rule(a, b, true, options.boundary_grading_levels);
            } else if (b >= 1.0) {
                rule = quadrature::graded_rule(a, b, false, options.boundary_grading_levels);
            } else {
                rule = quadrature::graded_rule(a, b, true, 0);
            }
            double left = 0.0;
            double right = 0.0;
            for (const auto& node : rule) {
                const double value = node.weight * f({node.x, 0.0});
                const double s = (node.x - a) / (b - a);
                left += value * (1.0 - s);
                right += value * s;
            }
            if (vertex_dof[element[0]] >= 0) {
                load[vertex_dof[element[0]]] += left;
            }
            if (vertex_dof[element[1]] >= 0) {
                load[vertex_dof[element[1]]] += right;
            }
        }
        return load;
    }

    // Collapsed (Duffy) rule: lambda_1 = u, lambda_2 = (1-u) v, weight (1-u).
    const auto gauss = quadrature::gauss_legendre_20();
    for (int e = 0; e < static_cast<int>(mesh.elements().size()); ++e) {
        const auto& element = mesh.elements()[e];
        const Point& p0 = vertices[element[0]];
        const Point& p1 = vertices[element[1]];
        const Point& p2 = vertices[element[2]];
        const double twice_area = 2.0 * mesh.element_measure(e);
        std::array<double, 3> local{0.0, 0.0, 0.0};
        for (const auto& gu : gauss) {
            const double u = 0.5 * (gu.x + 1.0);
            for (const auto& gv : gauss) {
                const double v = 0.5 * (gv.x + 1.0);
                const double l1 = u;
                const double l2 = (1.0 - u) * v;
                const double l0 = 1.0 - l1 - l2;
                const Point x{l0 * p0.x + l1 * p1.x + l2 * p2.x, l0 * p0.y + l1 * p1.y + l2 * p2.y};
                const double weight = 0.25 * gu.weight * gv.weight * (1.0 - u) * twice_area;
                const double value = weight * f(x);
                local[0] += value * l0;
                local[1] += value * l1;
                local[2] += value * l2;
            }
        }
        for (int k = 0; k < 3; ++k) {
            if (vertex_dof[element[k]] >= 0) {
                load[vertex_dof[element[k]]] += local[k];
            }
        }
    }
    return load;
}

Vector project_l2(const Mesh& mesh, const SparseMatrix& mass, const SpatialFunction& f,
                  const ProjectionOptions& options) {
    if (mass.rows() != mesh.num_dofs()) {
        throw InvalidArgument("project_l2: mass matrix does not match the mesh");
    }
    const Eigen::SimplicialLDLT<SparseMatrix> factor(mass);
    if (factor.info() != Eigen::Success) {
        throw NumericalError("project_l2: mass matrix factorization failed");
    }
    return factor.solve(load_vector(mesh, f, options));
}

}  // namespace waveinv
