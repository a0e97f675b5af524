#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace waveinv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Closed-form function on the domain; in 1D the y coordinate is ignored.
using SpatialFunction = std::function<double(const Point&)>;

/// P1 mesh of (0,1) or (0,1)^2. Boundary vertices carry homogeneous Dirichlet
/// data and are excluded from the degree-of-freedom numbering.
class Mesh {
public:
    /// Barycentric location of a point: up to three (dof, weight) pairs.
    /// Boundary vertices appear with dof == -1.
    struct Location {
        int element = -1;
        std::array<int, 3> dofs{-1, -1, -1};
        std::array<double, 3> weights{0.0, 0.0, 0.0};
        int count = 0;
    };

    int dimension() const { return dimension_; }
    int cells_per_side() const { return cells_; }
    /// Grid spacing 1/cells_per_side.
    double spacing() const { return 1.0 / cells_; }
    /// Maximum element diameter.
    double h() const { return h_max_; }
    double min_diameter() const { return h_min_; }
    double quasi_uniformity() const { return h_max_ / h_min_; }

    std::span<const Point> vertices() const { return vertices_; }
    /// Vertex indices per element; segments use the first two entries.
    std::span<const std::array<int, 3>> elements() const { return elements_; }
    int vertices_per_element() const { return dimension_ + 1; }

    int num_dofs() const { return static_cast<int>(dof_vertex_.size()); }
    /// vertex -> dof, or -1 on the boundary.
    std::span<const int> vertex_dof() const { return vertex_dof_; }
    /// dof -> vertex.
    std::span<const int> dof_vertex() const { return dof_vertex_; }

    double element_measure(int element) const;
    double element_diameter(int element) const;

    bool contains(const Point& p) const;
    /// Throws InvalidArgument when p lies outside the closed domain.
    Location locate(const Point& p) const;

    /// Nodal interpolant on interior dofs.
    Vector interpolate(const SpatialFunction& f) const;
    /// P1 evaluation of an interior coefficient vector.
    double evaluate(const Vector& coefficients, const Point& p) const;

private:
    friend Mesh build_interval_mesh(int num_cells);
    friend Mesh build_square_mesh(int cells_per_side);

    void finalize();

    int dimension_ = 1;
    int cells_ = 0;
    double h_max_ = 0.0;
    double h_min_ = 0.0;
    std::vector<Point> vertices_;
    std::vector<std::array<int, 3>> elements_;
    std::vector<int> vertex_dof_;
    std::vector<int> dof_vertex_;
};

/// Uniform mesh of (0,1) with num_cells >= 2 segments.
Mesh build_interval_mesh(int num_cells);

/// Uniform grid of (0,1)^2, each square cut along its (0,0)-(1,1) diagonal.
Mesh build_square_mesh(int cells_per_side);

/// Consistent mass and stiffness matrices restricted to interior dofs.
struct FEMatrices {
    SparseMatrix mass;
    SparseMatrix stiffness;
};

FEMatrices assemble(const Mesh& mesh);

}  // namespace waveinv
