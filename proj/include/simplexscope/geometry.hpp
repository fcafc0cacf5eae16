#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace simplexscope {

using EdgeList = std::vector<std::pair<int, int>>;

/// Ordered (k+1)-tuple of points in R^d, stored one point per row.
/// Repeated points are legal; degenerate configurations are valid inputs.
struct Config {
    Eigen::MatrixXd points;  // (k+1) x d

    int k() const { return static_cast<int>(points.rows()) - 1; }
    int dim() const { return static_cast<int>(points.cols()); }
};

/// Throws InvalidInputError unless the tuple has at least two points of a
/// common positive dimension.
void validate_config(const Config& config);

/// Vector of pairwise distances over a fixed edge set. For k <= d the edges
/// are all pairs i < j in lexicographic order; for k > d they are the
/// canonical independent edge set.
struct DistanceVector {
    Eigen::VectorXd entries;  // one nonnegative entry per edge
    EdgeList edges;           // 0-based vertex index pairs, lexicographic
};

/// y = scale * rotation * (x + translation). The rotation may include a
/// reflection (any element of O(d)).
struct SimilarityTransform {
    double scale = 1.0;
    Eigen::MatrixXd rotation;
    Eigen::VectorXd translation;
    double residual = 0.0;
};

/// All pairs (i, j), 0 <= i < j <= k, in lexicographic order.
EdgeList lexicographic_edges(int k);

/// Number of independent edges: k(k+1)/2 for k <= d, d(k+1) - C(d+1,2)
/// for k > d.
int independent_edge_count(int d, int k);

/// Edge set used by distance_vector. For k <= d, all pairs. For k > d,
/// the predecessor rule: vertex j (0-based, j >= 1) is joined to its
/// min(j, d) immediate predecessors; result sorted lexicographically and
/// of size independent_edge_count(d, k).
EdgeList canonical_edge_set(int d, int k);

/// Distance vector of a configuration over canonical_edge_set(d, k).
DistanceVector distance_vector(const Config& config);

/// Distances of `points` over `edges`, written to `out` (preallocated,
/// edges.size() entries). Allocation-free inner loop for bulk callers.
void distance_entries(const Eigen::MatrixXd& points, const EdgeList& edges, double* out);

/// Scale test used by the similarity searches:
/// |cand - r * base|_inf <= tol * |base|_inf.
bool matches_scale(const Eigen::VectorXd& base, const Eigen::VectorXd& cand, double r, double tol);

/// Returns r = |t2|_inf / |t1|_inf when t2 matches r * t1 within the
/// relative tolerance (with a 1e-12 absolute floor for near-zero entries),
/// nullopt otherwise. Throws DegenerateInputError when t1 is the zero
/// vector (the scale would be undefined).
std::optional<double> similarity_ratio(const DistanceVector& t1, const DistanceVector& t2,
                                       double tol);

/// Least-squares similarity alignment (centroid subtraction, norm-ratio
/// scale, orthogonal Procrustes over the full O(d), reflections included).
/// Returns the transform when the residual max_j |y_j - r Q (x_j + tau)|
/// is <= tol, nullopt otherwise.
std::optional<SimilarityTransform> recover_transform(const Config& x, const Config& y, double tol);

/// Applies y_j = scale * rotation * (x_j + translation) to every point.
Config apply_transform(const SimilarityTransform& transform, const Config& config);

/// Numerical rank of span{x_2 - x_1, ..., x_{k+1} - x_1}: singular values
/// above 1e-10 times the largest. 0 for a fully degenerate tuple; equals k
/// exactly when the configuration is a nondegenerate simplex.
int span_dimension(const Config& config);

}  // namespace simplexscope
