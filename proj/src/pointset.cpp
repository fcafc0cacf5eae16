#include "simplexscope/pointset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "simplexscope/errors.hpp"

namespace simplexscope {

namespace {
constexpr double kWeightSumTol = 1e-12;

std::string format_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}
}  // namespace

void validate_point_set(const PointSet& ps) {
    if (ps.points.rows() != ps.weights.size()) {
        throw InvalidInputError("PointSet: |points| != |weights|");
    }
    if (ps.size() == 0) return;
    if (ps.dim() < 1) throw InvalidInputError("PointSet: dimension must be >= 1");
    if (!ps.points.allFinite()) throw InvalidInputError("PointSet: points must be finite");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < ps.weights.size(); ++i) {
        if (!(ps.weights[i] > 0.0)) throw InvalidInputError("PointSet: weights must be positive");
        sum += ps.weights[i];
    }
    if (std::abs(sum - 1.0) > kWeightSumTol) {
        throw InvalidInputError("PointSet: weights must sum to 1 within 1e-12");
    }
}

PointSet make_uniform_point_set(const Eigen::MatrixXd& points, std::string provenance) {
    PointSet ps;
    ps.points = points;
    ps.weights = Eigen::VectorXd::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
    // Renormalize so the sum is exactly as close to 1 as doubles allow.
    ps.weights /= ps.weights.sum();
    ps.provenance = std::move(provenance);
    validate_point_set(ps);
    return ps;
}

void write_point_set_csv(std::ostream& out, const PointSet& ps) {
    validate_point_set(ps);
    out << "# d=" << ps.dim() << "\n";
    for (Eigen::Index i = 0; i < ps.size(); ++i) {
        for (int c = 0; c < ps.dim(); ++c) {
            out << format_full(ps.points(i, c)) << ",";
        }
        out << format_full(ps.weights[i]) << "\n";
    }
}

void write_point_set_csv_file(const std::string& path, const PointSet& ps) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_point_set_csv(out, ps);
    if (!out) throw IoError("write failed: " + path);
}

PointSet read_point_set_csv(std::istream& in, std::string provenance) {
    std::string line;
    if (!std::getline(in, line)) throw IoError("point set CSV: empty stream");
    int d = 0;
    if (std::sscanf(line.c_str(), "# d=%d", &d) != 1 || d < 1) {
        throw IoError("point set CSV: expected header '# d=<d>'");
    }

    std::vector<double> coords;
    std::vector<double> weights;
    Eigen::Index n = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream row(line);
        std::string cell;
        std::vector<double> values;
        while (std::getline(row, cell, ',')) {
            values.push_back(std::stod(cell));
        }
        if (static_cast<int>(values.size()) != d + 1) {
            throw IoError("point set CSV: row with wrong column count");
        }
        coords.insert(coords.end(), values.begin(), values.begin() + d);
        weights.push_back(values.back());
        ++n;
    }

    PointSet ps;
    ps.points.resize(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < d; ++c) {
            ps.points(i, c) = coords[static_cast<std::size_t>(i) * d + c];
        }
    }
    ps.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), n);
    ps.provenance = std::move(provenance);
    validate_point_set(ps);
    return ps;
}

PointSet read_point_set_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);
    return read_point_set_csv(in, "file:" + path);
}

}  // namespace simplexscope
