#include "waveinv/measure.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "waveinv/errors.hpp"

namespace waveinv {

namespace {

int exact_square_root(int n) {
    const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    return root * root == n ? root : -1;
}

double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void interval_spacing(SensorSet& set) {
    std::vector<double> xs;
    xs.reserve(set.size());
    for (const Point& p : set.points) {
        xs.push_back(p.x);
    }
    std::sort(xs.begin(), xs.end());
    double d_max = std::max(xs.front(), 1.0 - xs.back());
    double d_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < xs.size(); ++i) {
        const double gap = xs[i] - xs[i - 1];
        d_max = std::max(d_max, 0.5 * gap);
        d_min = std::min(d_min, gap);
    }
    set.d_max = d_max;
    set.d_min = xs.size() > 1 ? d_min : 0.0;
}

// Perturbed lattice: neighbours are searched in a window of lattice cells.
// The covering radius is approximated on a probe grid of resolution
// spacing / 4 (plus the domain corners), so it is a slight underestimate.
void lattice_spacing(SensorSet& set, int side) {
    auto at = [&](int i, int j) -> const Point& { return set.points[static_cast<std::size_t>(j) * side + i]; };
    double d_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            for (int dj = 0; dj <= 2; ++dj) {
                for (int di = -2; di <= 2; ++di) {
                    if (dj == 0 && di <= 0) {
                        continue;
                    }
                    const int ni = i + di;
                    const int nj = j + dj;
                    if (ni < 0 || ni >= side || nj >= side) {
                        continue;
                    }
                    d_min = std::min(d_min, distance(at(i, j), at(ni, nj)));
                }
            }
        }
    }
    const double spacing = 1.0 / (side + 1);
    const int probes = 4 * (side + 1);
    double d_max = 0.0;
    for (int b = 0; b <= probes; ++b) {
        for (int a = 0; a <= probes; ++a) {
            const Point probe{static_cast<double>(a) / probes, static_cast<double>(b) / probes};
            const int ci = std::clamp(static_cast<int>(std::lround(probe.x / spacing)) - 1, 0, side - 1);
            const int cj = std::clamp(static_cast<int>(std::lround(probe.y / spacing)) - 1, 0, side - 1);
            double nearest = std::numeric_limits<double>::infinity();
            for (int j = std::max(0, cj - 3); j <= std::min(side - 1, cj + 3); ++j) {
                for (int i = std::max(0, ci - 3); i <= std::min(side - 1, ci + 3); ++i) {
                    nearest = std::min(nearest, distance(probe, at(i, j)));
                }
            }
            d_max = std::max(d_max, nearest);
        }
    }
    set.d_max = d_max;
    set.d_min = side > 1 ? d_min : 0.0;
}

}  // namespace

double SensorSet::quasi_uniformity() const {
    if (points.size() < 2 || d_min <= 0.0) {
        return 1.0;
    }
    return d_max / d_min;
}

SensorSet make_sensors(int dimension, int n, SensorLayout layout, std::uint64_t seed) {
    if (dimension != 1 && dimension != 2) {
        throw InvalidArgument("make_sensors: dimension must be 1 or 2");
    }
    if (n < 1) {
        throw InvalidArgument("make_sensors: n must be >= 1");
    }
    SensorSet set;
    set.dimension = dimension;
    set.layout = layout;
    std::mt19937_64 engine(seed);
    const bool jitter = layout == SensorLayout::jittered_grid;

    if (dimension == 1) {
        const double spacing = 1.0 / (n + 1);
        std::uniform_real_distribution<double> offset(-0.25 * spacing, 0.25 * spacing);
        set.points.reserve(n);
        for (int i = 1; i <= n; ++i) {
            const double x = i * spacing + (jitter ? offset(engine) : 0.0);
            set.points.push_back({x, 0.0});
        }
        interval_spacing(set);
        return set;
    }

    const int side = exact_square_root(n);
    if (side < 0) {
        throw InvalidArgument("make_sensors: 2D grid layouts need a perfect square n, got " + std::to_string(n));
    }
    const double spacing = 1.0 / (side + 1);
    std::uniform_real_distribution<double> offset(-0.25 * spacing, 0.25 * spacing);
    set.points.reserve(n);
    for (int j = 1; j <= side; ++j) {
        for (int i = 1; i <= side; ++i) {
            double x = i * spacing;
            double y = j * spacing;
            if (jitter) {
                x += offset(engine);
                y += offset(engine);
            }
            set.points.push_back({x, y});
        }
    }
    if (jitter) {
        lattice_spacing(set, side);
    } else {
        set.d_max = std::sqrt(2.0) * spacing;
        set.d_min = side > 1 ? spacing : 0.0;
    }
    return set;
}

double empirical_inner(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw InvalidArgument("empirical_inner: vectors have different lengths");
    }
    if (u.empty()) {
        throw InvalidArgument("empirical_inner: vectors are empty");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        sum += u[i] * v[i];
    }
    return sum / static_cast<double>(u.size());
}

double empirical_norm(std::span<const double> u) { return std::sqrt(empirical_inner(u, u)); }

std::vector<double> draw_noise(const NoiseSpec& spec, std::size_t n) {
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
        throw InvalidArgument("draw_noise: sigma must be finite and non-negative");
    }
    std::vector<double> noise(n, 0.0);
    if (spec.sigma == 0.0) {
        return noise;
    }
    std::mt19937_64 engine(spec.seed);
    switch (spec.distribution) {
        case NoiseDistribution::gaussian: {
            std::normal_distribution<double> draw(0.0, spec.sigma);
            for (double& e : noise) {
                e = draw(engine);
            }
            break;
        }
        case NoiseDistribution::uniform: {
            const double half_width = std::sqrt(3.0) * spec.sigma;
            std::uniform_real_distribution<double> draw(-half_width, half_width);
            for (double& e : noise) {
                e = draw(engine);
            }
            break;
        }
        case NoiseDistribution::rademacher: {
            std::bernoulli_distribution coin(0.5);
            for (double& e : noise) {
                e = coin(engine) ? spec.sigma : -spec.sigma;
            }
            break;
        }
    }
    return noise;
}

MeasurementSet synthesize(SensorSet sensors, std::vector<double> clean, const NoiseSpec& noise) {
    if (clean.size() != sensors.size()) {
        throw InvalidArgument("synthesize: clean values do not match the sensor count");
    }
    MeasurementSet data;
    data.values = clean;
    const std::vector<double> errors = draw_noise(noise, clean.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        data.values[i] += errors[i];
    }
    data.sensors = std::move(sensors);
    data.clean = std::move(clean);
    data.noise = noise;
    return data;
}

std::string to_string(SensorLayout layout) {
    return layout == SensorLayout::uniform_grid ? "uniform_grid" : "jittered_grid";
}

std::string to_string(NoiseModel model) { return model == NoiseModel::Y1 ? "Y1" : "Y2"; }

std::string to_string(NoiseDistribution distribution) {
    switch (distribution) {
        case NoiseDistribution::gaussian:
            return "gaussian";
        case NoiseDistribution::uniform:
            return "uniform";
        case NoiseDistribution::rademacher:
            return "rademacher";
    }
    return "gaussian";
}

SensorLayout parse_sensor_layout(const std::string& text) {
    if (text == "uniform_grid" || text == "uniform") {
        return SensorLayout::uniform_grid;
    }
    if (text == "jittered_grid" || text == "jittered") {
        return SensorLayout::jittered_grid;
    }
    throw InvalidArgument("unknown sensor layout '" + text + "'");
}

NoiseModel parse_noise_model(const std::string& text) {
    if (text == "Y1" || text == "y1") {
        return NoiseModel::Y1;
    }
    if (text == "Y2" || text == "y2") {
        return NoiseModel::Y2;
    }
    throw InvalidArgument("unknown noise model '" + text + "'");
}

NoiseDistribution parse_noise_distribution(const std::string& text) {
    if (text == "gaussian") {
        return NoiseDistribution::gaussian;
    }
    if (text == "uniform") {
        return NoiseDistribution::uniform;
    }
    if (text == "rademacher") {
        return NoiseDistribution::rademacher;
    }
    throw InvalidArgument("unknown noise distribution '" + text + "'");
}

void write_csv(std::ostream& out, const MeasurementSet& data) {
    const auto& sensors = data.sensors;
    out << std::setprecision(17);
    out << "# waveinv measurements\n";
    out << "# n=" << data.size() << '\n';
    out << "# sigma=" << data.noise.sigma << '\n';
    out << "# seed=" << data.noise.seed << '\n';
    out << "# model=" << to_string(data.noise.model) << '\n';
    out << "# distribution=" << to_string(data.noise.distribution) << '\n';
    out << "# dimension=" << sensors.dimension << '\n';
    out << "# layout=" << to_string(sensors.layout) << '\n';
    out << "# d_max=" << sensors.d_max << '\n';
    out << "# d_min=" << sensors.d_min << '\n';
    out << (sensors.dimension == 1 ? "index,x,clean,noisy\n" : "index,x,y,clean,noisy\n");
    for (std::size_t i = 0; i < data.size(); ++i) {
        const Point& p = sensors.points[i];
        out << i << ',' << p.x << ',';
        if (sensors.dimension == 2) {
            out << p.y << ',';
        }
        out << data.clean[i] << ',' << data.values[i] << '\n';
    }
}

MeasurementSet read_measurements_csv(std::istream& in) {
    std::map<std::string, std::string> header;
    std::string line;
    bool seen_columns = false;
    MeasurementSet data;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            const auto eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                key.erase(0, key.find_first_not_of(' '));
                header[key] = line.substr(eq + 1);
            }
            continue;
        }
        if (!seen_columns) {
            seen_columns = true;
            if (!header.count("dimension")) {
                throw InvalidArgument("read_measurements_csv: missing '# dimension=' header");
            }
            data.sensors.dimension = std::stoi(header.at("dimension"));
            continue;
        }
        std::stringstream row(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(row, cell, ',')) {
            std::size_t used = 0;
            double value = 0.0;
            try {
                value = std::stod(cell, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0) {
                throw InvalidArgument("read_measurements_csv: '" + cell + "' is not a number");
            }
            cells.push_back(value);
        }
        const std::size_t expected = data.sensors.dimension == 1 ? 4 : 5;
        if (cells.size() != expected) {
            throw InvalidArgument("read_measurements_csv: malformed row '" + line + "'");
        }
        Point p{cells[1], data.sensors.dimension == 2 ? cells[2] : 0.0};
        data.sensors.points.push_back(p);
        data.clean.push_back(cells[expected - 2]);
        data.values.push_back(cells[expected - 1]);
    }
    if (!seen_columns) {
        throw InvalidArgument("read_measurements_csv: no column header found");
    }
    auto get = [&](const char* key, const std::string& fallback) {
        const auto it = header.find(key);
        return it == header.end() ? fallback : it->second;
    };
    data.noise.sigma = std::stod(get("sigma", "0"));
    data.noise.seed = std::stoull(get("seed", "0"));
    data.noise.model = parse_noise_model(get("model", "Y2"));
    data.noise.distribution = parse_noise_distribution(get("distribution", "gaussian"));
    data.sensors.layout = parse_sensor_layout(get("layout", "uniform_grid"));
    data.sensors.d_max = std::stod(get("d_max", "0"));
    data.sensors.d_min = std::stod(get("d_min", "0"));
    if (header.count("n") && std::stoul(header.at("n")) != data.size()) {
        throw InvalidArgument("read_measurements_csv: header n does not match the row count");
    }
    return data;
}

}  // namespace waveinv
