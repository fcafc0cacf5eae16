#include "simplexscope/geometry.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "simplexscope/errors.hpp"

namespace simplexscope {

namespace {
constexpr double kAbsFloor = 1e-12;       // absolute floor for relative similarity checks
constexpr double kRankRelTol = 1e-10;     // singular value cutoff for span_dimension
}  // namespace

void validate_config(const Config& config) {
    if (config.points.rows() < 2) {
        throw InvalidInputError("Config: need at least 2 points (k >= 1)");
    }
    if (config.points.cols() < 1) {
        throw InvalidInputError("Config: ambient dimension must be >= 1");
    }
    if (!config.points.allFinite()) {
        throw InvalidInputError("Config: points must be finite");
    }
}

EdgeList lexicographic_edges(int k) {
    EdgeList edges;
    edges.reserve(static_cast<std::size_t>(k) * (k + 1) / 2);
    for (int i = 0; i <= k; ++i) {
        for (int j = i + 1; j <= k; ++j) {
            edges.emplace_back(i, j);
        }
    }
    return edges;
}

int independent_edge_count(int d, int k) {
    if (d < 1 || k < 1) throw InvalidInputError("independent_edge_count: need d >= 1, k >= 1");
    if (k <= d) return k * (k + 1) / 2;
    return d * (k + 1) - (d + 1) * d / 2;
}

EdgeList canonical_edge_set(int d, int k) {
    if (d < 1 || k < 1) throw InvalidInputError("canonical_edge_set: need d >= 1, k >= 1");
    if (k <= d) return lexicographic_edges(k);
    EdgeList edges;
    for (int j = 1; j <= k; ++j) {
        const int span = std::min(j, d);
        for (int i = j - span; i < j; ++i) {
            edges.emplace_back(i, j);
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

void distance_entries(const Eigen::MatrixXd& points, const EdgeList& edges, double* out) {
    for (std::size_t e = 0; e < edges.size(); ++e) {
        out[e] = (points.row(edges[e].first) - points.row(edges[e].second)).norm();
    }
}

DistanceVector distance_vector(const Config& config) {
    validate_config(config);
    DistanceVector v;
    v.edges = canonical_edge_set(config.dim(), config.k());
    v.entries.resize(static_cast<Eigen::Index>(v.edges.size()));
    distance_entries(config.points, v.edges, v.entries.data());
    return v;
}

bool matches_scale(const Eigen::VectorXd& base, const Eigen::VectorXd& cand, double r,
                   double tol) {
    const double bound = tol * base.lpNorm<Eigen::Infinity>();
    return (cand - r * base).lpNorm<Eigen::Infinity>() <= bound;
}

std::optional<double> similarity_ratio(const DistanceVector& t1, const DistanceVector& t2,
                                       double tol) {
    if (t1.entries.size() != t2.entries.size()) {
        throw InvalidInputError("similarity_ratio: vectors of different length");
    }
    const double n1 = t1.entries.lpNorm<Eigen::Infinity>();
    if (n1 == 0.0) {
        throw DegenerateInputError("similarity_ratio: reference vector is zero, scale undefined");
    }
    const double r = t2.entries.lpNorm<Eigen::Infinity>() / n1;
    const double err = (t2.entries - r * t1.entries).lpNorm<Eigen::Infinity>();
    if (err <= std::max(tol * n1, kAbsFloor)) return r;
    return std::nullopt;
}

std::optional<SimilarityTransform> recover_transform(const Config& x, const Config& y,
                                                     double tol) {
    validate_config(x);
    validate_config(y);
    if (x.points.rows() != y.points.rows() || x.points.cols() != y.points.cols()) {
        throw InvalidInputError("recover_transform: shape mismatch");
    }
    const int d = x.dim();
    const auto n = x.points.rows();

    const Eigen::RowVectorXd cx = x.points.colwise().mean();
    const Eigen::RowVectorXd cy = y.points.colwise().mean();
    const Eigen::MatrixXd xc = x.points.rowwise() - cx;
    const Eigen::MatrixXd yc = y.points.rowwise() - cy;

    const double sx = xc.squaredNorm();
    const double sy = yc.squaredNorm();

    SimilarityTransform t;
    if (sx == 0.0) {
        // x is a single repeated point; only a point-to-point map can work.
        t.scale = 1.0;
        t.rotation = Eigen::MatrixXd::Identity(d, d);
        t.translation = (cy - cx).transpose();
    } else {
        t.scale = std::sqrt(sy / sx);
        if (t.scale <= 0.0) return std::nullopt;  // y degenerate, x not
        const Eigen::MatrixXd cross = yc.transpose() * xc;  // d x d
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
        // Best orthogonal factor over all of O(d); no determinant correction,
        // reflections are admissible rotations here.
        t.rotation = svd.matrixU() * svd.matrixV().transpose();
        // y ~ r Q x + b  with  b = cy - r Q cx;  y = r Q (x + tau)  gives
        // tau = Q^T b / r.
        const Eigen::VectorXd b = cy.transpose() - t.scale * t.rotation * cx.transpose();
        t.translation = t.rotation.transpose() * b / t.scale;
    }

    double residual = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd mapped =
            t.scale * t.rotation * (x.points.row(i).transpose() + t.translation);
        residual = std::max(residual, (y.points.row(i).transpose() - mapped).norm());
    }
    t.residual = residual;
    if (residual <= tol) return t;
    return std::nullopt;
}

Config apply_transform(const SimilarityTransform& transform, const Config& config) {
    Config out;
    out.points.resizeLike(config.points);
    for (Eigen::Index i = 0; i < config.points.rows(); ++i) {
        out.points.row(i) =
            (transform.scale * transform.rotation *
             (config.points.row(i).transpose() + transform.translation))
                .transpose();
    }
    return out;
}

int span_dimension(const Config& config) {
    validate_config(config);
    const auto n = config.points.rows();
    Eigen::MatrixXd diffs(n - 1, config.points.cols());
    for (Eigen::Index i = 1; i < n; ++i) {
        diffs.row(i - 1) = config.points.row(i) - config.points.row(0);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] == 0.0) return 0;
    const double cutoff = kRankRelTol * sv[0];
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv[i] > cutoff) ++rank;
    }
    return rank;
}

}  // namespace simplexscope
