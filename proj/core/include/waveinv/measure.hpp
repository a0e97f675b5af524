#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "waveinv/mesh.hpp"

namespace waveinv {

enum class SensorLayout { uniform_grid, jittered_grid };

/// Distinct interior sensor locations together with the quasi-uniformity
/// data d_max (covering radius) and d_min (separation distance).
struct SensorSet {
    int dimension = 1;
    std::vector<Point> points;
    SensorLayout layout = SensorLayout::uniform_grid;
    double d_max = 0.0;
    double d_min = 0.0;

    std::size_t size() const { return points.size(); }
    /// d_max / d_min, defined as 1 for a single sensor.
    double quasi_uniformity() const;
};

/// d = 1: x_i = i/(n+1). d = 2: sqrt(n) x sqrt(n) interior lattice with the
/// same spacing rule per axis. The jittered layout perturbs each point by at
/// most a quarter spacing per axis. Throws InvalidArgument for n < 1 or a
/// non-square n in 2D.
SensorSet make_sensors(int dimension, int n, SensorLayout layout, std::uint64_t seed = 0);

enum class NoiseModel { Y1, Y2 };
enum class NoiseDistribution { gaussian, uniform, rademacher };

/// Independent centered noise of standard deviation sigma. All three
/// distributions have variance exactly sigma^2.
struct NoiseSpec {
    NoiseModel model = NoiseModel::Y2;
    double sigma = 0.0;
    NoiseDistribution distribution = NoiseDistribution::gaussian;
    std::uint64_t seed = 0;
};

struct MeasurementSet {
    SensorSet sensors;
    std::vector<double> values;
    std::vector<double> clean;
    NoiseSpec noise;

    std::size_t size() const { return values.size(); }
};

double empirical_inner(std::span<const double> u, std::span<const double> v);
double empirical_norm(std::span<const double> u);

/// n iid draws; deterministic in spec.seed.
std::vector<double> draw_noise(const NoiseSpec& spec, std::size_t n);

MeasurementSet synthesize(SensorSet sensors, std::vector<double> clean, const NoiseSpec& noise);

std::string to_string(SensorLayout layout);
std::string to_string(NoiseModel model);
std::string to_string(NoiseDistribution distribution);
SensorLayout parse_sensor_layout(const std::string& text);
NoiseModel parse_noise_model(const std::string& text);
NoiseDistribution parse_noise_distribution(const std::string& text);

/// CSV with a `#`-prefixed header recording n, sigma, seed, model,
/// distribution, dimension and layout, then columns
/// index,x[,y],clean,noisy. Values are written with 17 significant digits.
void write_csv(std::ostream& out, const MeasurementSet& data);
MeasurementSet read_measurements_csv(std::istream& in);

}  // namespace waveinv
