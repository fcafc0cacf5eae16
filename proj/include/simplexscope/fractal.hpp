#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "simplexscope/pointset.hpp"

namespace simplexscope {

/// One contracting similarity x -> ratio * orthogonal * x + offset.
struct SimilarityMap {
    double ratio = 0.0;           // in (0, 1)
    Eigen::MatrixXd orthogonal;   // d x d
    Eigen::VectorXd offset;       // d
};

/// Iterated function system of contracting similarities in R^d.
struct IFSSystem {
    std::vector<SimilarityMap> maps;
    int dim = 0;
};

/// Throws InvalidInputError unless there are >= 2 maps, every ratio lies in
/// (0,1), and every orthogonal part is orthogonal within 1e-12.
void validate_ifs(const IFSSystem& ifs);

/// Point generation request. Full mode enumerates all maps^level codes;
/// random mode draws `count` i.i.d. codes (symbol probabilities ratio^s)
/// and composes them to a fixed convergence depth.
struct GenerateMode {
    enum class Kind { Full, Random } kind = Kind::Full;
    int level = 0;             // full mode
    std::int64_t count = 0;    // random mode
    std::uint64_t seed = 0;    // random mode (required)

    static GenerateMode full(int level) {
        GenerateMode m;
        m.kind = Kind::Full;
        m.level = level;
        return m;
    }
    static GenerateMode random(std::int64_t count, std::uint64_t seed) {
        GenerateMode m;
        m.kind = Kind::Random;
        m.count = count;
        m.seed = seed;
        return m;
    }
};

/// The unique s with sum_i ratio_i^s = 1, by bisection to 1e-12.
double similarity_dimension(const IFSSystem& ifs);

/// Finite approximation of the attractor with its natural self-similar
/// measure. Full mode: one point per length-L code (lexicographic order),
/// weight proportional to prod ratio^s, normalized. Random mode: uniform
/// weights 1/count. Deterministic given the mode.
/// Throws ResourceLimitError when maps^level exceeds `point_cap`.
PointSet generate_points(const IFSSystem& ifs, const GenerateMode& mode,
                         std::int64_t point_cap = (std::int64_t{1} << 22));

/// Center and radius of a ball that contains the attractor, derived from
/// map fixed points and the contraction ratios.
struct AttractorBound {
    Eigen::VectorXd center;
    double radius = 0.0;
};
AttractorBound attractor_bound(const IFSSystem& ifs);

/// Finite-resolution Frostman constant estimate.
struct FrostmanEstimate {
    double constant = 0.0;        // max over probes of mass(ball)/radius^s
    double argmax_radius = 0.0;
    Eigen::Index argmax_center = -1;
    /// True when the maximum is attained at the smallest grid radius: the
    /// constant is still growing as radii shrink (non-Frostman signal, e.g.
    /// an atom).
    bool min_radius_dominates = false;
};

/// Max over sampled centers x and grid radii rho of mu(B(x, rho)) / rho^s,
/// where mu(B) is the weight of support points within the closed ball.
/// `probes` centers are drawn from the support without replacement
/// (deterministic given seed); probes >= size means every point.
FrostmanEstimate frostman_surrogate(const PointSet& ps, double s,
                                    const std::vector<double>& radii, std::int64_t probes,
                                    std::uint64_t seed);

/// Least-squares slope of log N(delta) against log(1/delta), N = occupied
/// cells of side delta. Needs >= 3 scales spanning at least one decade.
/// Returns 0 for a single occupied cell at every scale; otherwise throws
/// DegenerateFitError when fewer than 2 distinct N values remain.
double box_dimension_estimate(const PointSet& ps, const std::vector<double>& scales);

/// Named IFS presets usable from the CLI.
std::vector<std::string> preset_names();
IFSSystem preset_ifs(const std::string& name);

}  // namespace simplexscope
