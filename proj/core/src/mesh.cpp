#include "waveinv/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

constexpr double kContainsTolerance = 1e-12;

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

int clamp_cell(double coordinate, int cells) {
    const int cell = static_cast<int>(std::floor(coordinate * cells));
    return std::clamp(cell, 0, cells - 1);
}

}  // namespace

Mesh build_interval_mesh(int num_cells) {
    if (num_cells < 2) {
        throw InvalidArgument("build_interval_mesh: num_cells must be >= 2, got " + std::to_string(num_cells));
    }
    Mesh mesh;
    mesh.dimension_ = 1;
    mesh.cells_ = num_cells;
    mesh.vertices_.reserve(num_cells + 1);
    for (int i = 0; i <= num_cells; ++i) {
        mesh.vertices_.push_back({static_cast<double>(i) / num_cells, 0.0});
    }
    mesh.elements_.reserve(num_cells);
    for (int i = 0; i < num_cells; ++i) {
        mesh.elements_.push_back({i, i + 1, -1});
    }
    mesh.vertex_dof_.assign(num_cells + 1, -1);
    for (int i = 1; i < num_cells; ++i) {
        mesh.vertex_dof_[i] = static_cast<int>(mesh.dof_vertex_.size());
        mesh.dof_vertex_.push_back(i);
    }
    mesh.finalize();
    return mesh;
}

Mesh build_square_mesh(int cells_per_side) {
    if (cells_per_side < 2) {
        throw InvalidArgument("build_square_mesh: cells_per_side must be >= 2, got " +
                              std::to_string(cells_per_side));
    }
    const int n = cells_per_side;
    Mesh mesh;
    mesh.dimension_ = 2;
    mesh.cells_ = n;
    auto vertex = [n](int i, int j) { return j * (n + 1) + i; };
    mesh.vertices_.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            mesh.vertices_.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    mesh.elements_.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            mesh.elements_.push_back({vertex(i, j), vertex(i + 1, j), vertex(i + 1, j + 1)});
            mesh.elements_.push_back({vertex(i, j), vertex(i + 1, j + 1), vertex(i, j + 1)});
        }
    }
    mesh.vertex_dof_.assign(mesh.vertices_.size(), -1);
    for (int j = 1; j < n; ++j) {
        for (int i = 1; i < n; ++i) {
            mesh.vertex_dof_[vertex(i, j)] = static_cast<int>(mesh.dof_vertex_.size());
            mesh.dof_vertex_.push_back(vertex(i, j));
        }
    }
    mesh.finalize();
    return mesh;
}

void Mesh::finalize() {
    h_max_ = 0.0;
    h_min_ = std::numeric_limits<double>::infinity();
    for (int e = 0; e < static_cast<int>(elements_.size()); ++e) {
        const double d = element_diameter(e);
        h_max_ = std::max(h_max_, d);
        h_min_ = std::min(h_min_, d);
    }
}

double Mesh::element_measure(int element) const {
    const auto& v = elements_.at(element);
    if (dimension_ == 1) {
        return vertices_[v[1]].x - vertices_[v[0]].x;
    }
    const Point& a = vertices_[v[0]];
    const Point& b = vertices_[v[1]];
    const Point& c = vertices_[v[2]];
    return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::element_diameter(int element) const {
    const auto& v = elements_.at(element);
    if (dimension_ == 1) {
        return distance(vertices_[v[0]], vertices_[v[1]]);
    }
    return std::max({distance(vertices_[v[0]], vertices_[v[1]]), distance(vertices_[v[1]], vertices_[v[2]]),
                     distance(vertices_[v[0]], vertices_[v[2]])});
}

bool Mesh::contains(const Point& p) const {
    const auto inside = [](double c) { return c >= -kContainsTolerance && c <= 1.0 + kContainsTolerance; };
    return dimension_ == 1 ? inside(p.x) : inside(p.x) && inside(p.y);
}

Mesh::Location Mesh::locate(const Point& p) const {
    if (!contains(p)) {
        throw InvalidArgument("Mesh::locate: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                              ") is outside the domain");
    }
    Location location;
    const int n = cells_;
    if (dimension_ == 1) {
        const int cell = clamp_cell(p.x, n);
        const double s = p.x * n - cell;
        location.element = cell;
        location.count = 2;
        location.dofs = {vertex_dof_[cell], vertex_dof_[cell + 1], -1};
        location.weights = {1.0 - s, s, 0.0};
        return location;
    }
    const int i = clamp_cell(p.x, n);
    const int j = clamp_cell(p.y, n);
    const double s = p.x * n - i;
    const double t = p.y * n - j;
    const int square = j * n + i;
    location.count = 3;
    if (s >= t) {
        location.element = 2 * square;
        location.weights = {1.0 - s, s - t, t};
    } else {
        location.element = 2 * square + 1;
        location.weights = {1.0 - t, s, t - s};
    }
    const auto& v = elements_[location.element];
    for (int k = 0; k < 3; ++k) {
        location.dofs[k] = vertex_dof_[v[k]];
    }
    return location;
}

Vector Mesh::interpolate(const SpatialFunction& f) const {
    Vector values(num_dofs());
    for (int dof = 0; dof < num_dofs(); ++dof) {
        values[dof] = f(vertices_[dof_vertex_[dof]]);
    }
    return values;
}

double Mesh::evaluate(const Vector& coefficients, const Point& p) const {
    if (coefficients.size() != num_dofs()) {
        throw InvalidArgument("Mesh::evaluate: coefficient vector has wrong length");
    }
    const Location location = locate(p);
    double value = 0.0;
    for (int k = 0; k < location.count; ++k) {
        if (location.dofs[k] >= 0) {
            value += location.weights[k] * coefficients[location.dofs[k]];
        }
    }
    return value;
}

FEMatrices assemble(const Mesh& mesh) {
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> mass;
    std::vector<Triplet> stiffness;
    const int local = mesh.vertices_per_element();
    mass.reserve(mesh.elements().size() * local * local);
    stiffness.reserve(mesh.elements().size() * local * local);
    const auto vertex_dof = mesh.vertex_dof();
    const auto vertices = mesh.vertices();

    for (int e = 0; e < static_cast<int>(mesh.elements().size()); ++e) {
        const auto& v = mesh.elements()[e];
        const double measure = mesh.element_measure(e);
        Eigen::Matrix3d element_mass = Eigen::Matrix3d::Zero();
        Eigen::Matrix3d element_stiffness = Eigen::Matrix3d::Zero();

        if (mesh.dimension() == 1) {
            element_mass.topLeftCorner<2, 2>() << 2.0, 1.0, 1.0, 2.0;
            element_mass *= measure / 6.0;
            element_stiffness.topLeftCorner<2, 2>() << 1.0, -1.0, -1.0, 1.0;
            element_stiffness /= measure;
        } else {
            element_mass << 2.0, 1.0, 1.0, 1.0, 2.0, 1.0, 1.0, 1.0, 2.0;
            element_mass *= measure / 12.0;
            // gradients of the barycentric coordinates
            const Point& a = vertices[v[0]];
            const Point& b = vertices[v[1]];
            const Point& c = vertices[v[2]];
            const double twice_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            Eigen::Matrix<double, 3, 2> gradients;
            gradients << b.y - c.y, c.x - b.x, c.y - a.y, a.x - c.x, a.y - b.y, b.x - a.x;
            gradients /= twice_area;
            element_stiffness = measure * gradients * gradients.transpose();
        }

        for (int r = 0; r < local; ++r) {
            const int row = vertex_dof[v[r]];
            if (row < 0) {
                continue;
            }
            for (int c = 0; c < local; ++c) {
                const int col = vertex_dof[v[c]];
                if (col < 0) {
                    continue;
                }
                mass.emplace_back(row, col, element_mass(r, c));
                stiffness.emplace_back(row, col, element_stiffness(r, c));
            }
        }
    }

    FEMatrices matrices;
    matrices.mass.resize(mesh.num_dofs(), mesh.num_dofs());
    matrices.stiffness.resize(mesh.num_dofs(), mesh.num_dofs());
    matrices.mass.setFromTriplets(mass.begin(), mass.end());
    matrices.stiffness.setFromTriplets(stiffness.begin(), stiffness.end());
    matrices.mass.makeCompressed();
    matrices.stiffness.makeCompressed();
    return matrices;
}

}  // namespace waveinv
