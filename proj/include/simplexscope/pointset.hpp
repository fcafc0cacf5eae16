#pragma once

#include <iosfwd>
#include <string>

#include <Eigen/Core>

namespace simplexscope {

/// Finite weighted point cloud approximating a pair (set, measure).
/// Weights are positive and sum to 1; an empty set is permitted (and is the
/// only case exempt from the normalization check).
struct PointSet {
    Eigen::MatrixXd points;   // n x d, one point per row
    Eigen::VectorXd weights;  // n positive entries summing to 1
    std::string provenance;

    Eigen::Index size() const { return points.rows(); }
    int dim() const { return static_cast<int>(points.cols()); }
};

/// Throws InvalidInputError on shape mismatch, non-finite coordinates,
/// non-positive weights, or a weight sum off 1 by more than 1e-12.
void validate_point_set(const PointSet& ps);

/// Equal-weight point set over the given coordinates.
PointSet make_uniform_point_set(const Eigen::MatrixXd& points, std::string provenance = {});

/// CSV exchange format: header line "# d=<d>", then one row per point with
/// columns x_1,...,x_d,weight. Full round-trip precision.
void write_point_set_csv(std::ostream& out, const PointSet& ps);
void write_point_set_csv_file(const std::string& path, const PointSet& ps);
PointSet read_point_set_csv(std::istream& in, std::string provenance = {});
PointSet read_point_set_csv_file(const std::string& path);

}  // namespace simplexscope
