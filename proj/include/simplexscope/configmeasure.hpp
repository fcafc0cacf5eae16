#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "simplexscope/geometry.hpp"
#include "simplexscope/pointset.hpp"

namespace simplexscope {

inline constexpr std::int64_t kDefaultTupleCap = std::int64_t{1} << 22;
inline constexpr std::int64_t kDeltaTupleCap = std::int64_t{1} << 25;
inline constexpr double kDefaultDedupeTol = 1e-9;

/// Enumeration mode shared by the measure estimators: exhaustive runs over
/// all ordered (k+1)-tuples, sampled draws i.i.d. tuples from the product
/// measure.
struct SampleMode {
    enum class Kind { Exhaustive, Sampled } kind = Kind::Exhaustive;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;

    static SampleMode exhaustive() { return {}; }
    static SampleMode sampled(std::int64_t samples, std::uint64_t seed) {
        SampleMode m;
        m.kind = Kind::Sampled;
        m.samples = samples;
        m.seed = seed;
        return m;
    }
};

/// Empirical configuration measure: one weighted atom per generating tuple.
struct EmpiricalNu {
    int k = 0;
    int d = 0;
    EdgeList edges;
    Eigen::MatrixXd vectors;                 // atoms x |edges|
    Eigen::VectorXd weights;                 // positive
    Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic> tuples;  // atoms x (k+1) point indices
    double total_mass = 0.0;
    SampleMode mode;
};

/// Deduplicated set of realized distance vectors with sup-norm membership
/// queries. Scalar sets (k = 1) use a sorted array; higher edge dimensions
/// use a uniform grid.
class DeltaSet {
public:
    DeltaSet() = default;
    DeltaSet(int k, int d, EdgeList edges, double dedupe_tol);

    int k() const { return k_; }
    int d() const { return d_; }
    int edge_dim() const { return static_cast<int>(edges_.size()); }
    const EdgeList& edges() const { return edges_; }
    double dedupe_tol() const { return dedupe_tol_; }
    std::int64_t size() const { return count_; }

    Eigen::Map<const Eigen::VectorXd> vector(std::int64_t i) const {
        return {data_.data() + i * edge_dim(), edge_dim()};
    }

    /// Inserts unless an existing vector lies within dedupe_tol in sup norm.
    void insert(const double* v);

    /// True when some stored vector is within `radius` of q in sup norm.
    bool contains_within(const double* q, double radius) const;

    /// Sup-norm distance to the nearest stored vector (exhaustive scan).
    double distance_to(const double* q) const;

private:
    friend class DeltaMembership;
    int k_ = 0;
    int d_ = 0;
    EdgeList edges_;
    double dedupe_tol_ = kDefaultDedupeTol;
    std::int64_t count_ = 0;
    std::vector<double> data_;        // row-major, count x edge_dim
    std::vector<double> sorted_;      // edge_dim == 1: sorted copy (built lazily)
    bool sorted_dirty_ = true;
    void ensure_sorted();
};

/// One atom per ordered tuple (exhaustive) or per draw (sampled).
/// Exhaustive mode throws ResourceLimitError above `tuple_cap` tuples.
EmpiricalNu sample_nu(const PointSet& ps, int k, const SampleMode& mode,
                      std::int64_t tuple_cap = kDefaultTupleCap);

/// The realized configuration set: distance vectors of all ordered
/// (k+1)-tuples, deduplicated at `dedupe_tol` in sup norm.
DeltaSet delta_k(const PointSet& ps, int k, double dedupe_tol = kDefaultDedupeTol,
                 std::int64_t tuple_cap = kDeltaTupleCap);

/// Members t of `delta` with r*t still within eps of `delta`
/// (eps = 0 means membership at the set's dedupe tolerance).
DeltaSet delta_k_r(const DeltaSet& delta, double r, double eps);
DeltaSet delta_k_r(const PointSet& ps, int k, double r, double eps,
                   double dedupe_tol = kDefaultDedupeTol,
                   std::int64_t tuple_cap = kDeltaTupleCap);

/// Mass estimate with the trivially-matching zero-vector share split out.
struct MassEstimate {
    double mass = 0.0;
    double degenerate_mass = 0.0;
};

/// nu_k-mass of tuples whose distance vector t satisfies
/// dist_inf(r*t, Delta) <= max(eps, dedupe tol).
MassEstimate nu_mass_of_delta_r_detail(const PointSet& ps, int k, double r, double eps,
                                       const SampleMode& mode,
                                       std::int64_t tuple_cap = kDefaultTupleCap);
double nu_mass_of_delta_r(const PointSet& ps, int k, double r, double eps,
                          const SampleMode& mode, std::int64_t tuple_cap = kDefaultTupleCap);

/// Same, against a prebuilt configuration set (shared across a scan).
MassEstimate nu_mass_against_delta(const PointSet& ps, int k, const DeltaSet& delta, double r,
                                   double eps, const SampleMode& mode,
                                   std::int64_t tuple_cap = kDefaultTupleCap);

/// Product-measure mass of tuple pairs (x from X, y from Y) with
/// | |x^i-x^j| - r |y^i-y^j| | < eps on every edge. The predicate is
/// evaluated in the canonical r <= 1 orientation, which makes the
/// swap identity pair_count(X,Y,r,eps) = pair_count(Y,X,1/r,eps/r) exact
/// in exhaustive mode.
double pair_count(const PointSet& ps_x, const PointSet& ps_y, int k, double r, double eps,
                  const SampleMode& mode, std::int64_t tuple_cap = kDefaultTupleCap);

/// Annulus-kernel density of the mollified configuration measure at t:
/// sum over tuples of prod_e K_eps(t_e, s_e) * prod weights, with
/// K_eps(t, s) = 1{t-eps < s < t+eps} / vol_d(annulus(t, eps)).
double mollified_nu_density(const PointSet& ps, int k, const Eigen::VectorXd& t, double eps,
                            std::int64_t tuple_cap = kDefaultTupleCap);

/// Volume of {x in R^d : t-eps < |x| < t+eps}.
double annulus_volume(int d, double t, double eps);

/// Pair (or multi-scale) similarity witness: distance vectors of `others`
/// match scales * v(base) within the search tolerance. Transforms carry the
/// best similarity alignment when k <= d.
struct SimilarityWitness {
    Config base;
    std::vector<Config> others;
    std::vector<double> scales;
    std::vector<std::optional<SimilarityTransform>> transforms;
    double residual = 0.0;
    std::vector<int> base_tuple;
    std::vector<std::vector<int>> other_tuples;
};

inline constexpr std::int64_t kUnlimitedBudget = std::numeric_limits<std::int64_t>::max();

/// All tuple pairs (x, y) with |v(y) - r v(x)|_inf <= tol * |v(x)|_inf,
/// found through a normalized-direction hash index (complete: returns
/// exactly the brute-force list when the budget is not exhausted).
std::vector<SimilarityWitness> find_similar_pairs(const PointSet& ps, int k, double r, double tol,
                                                  std::int64_t budget = kUnlimitedBudget,
                                                  std::int64_t tuple_cap = kDefaultTupleCap);

/// Witnesses of {t, r_1 t, ..., r_{n-1} t} all realized, i.e. one matching
/// tuple per scale for a common base tuple. Scales must be pairwise
/// distinct; entries equal to 1 are dropped (the base realizes them).
std::vector<SimilarityWitness> find_multi_similarity(const PointSet& ps, int k,
                                                     std::vector<double> scales, double tol,
                                                     std::int64_t budget = kUnlimitedBudget,
                                                     std::int64_t tuple_cap = kDefaultTupleCap);

/// nu_k-mass of tuples whose vector lies in every Delta_k^{r_i, eps}.
MassEstimate joint_mass(const PointSet& ps, int k, const std::vector<double>& scales, double eps,
                        const SampleMode& mode, std::int64_t tuple_cap = kDefaultTupleCap);

struct ScanEntry {
    double r = 0.0;
    double mass = 0.0;
    double degenerate_mass = 0.0;
};

struct ScanResult {
    std::vector<ScanEntry> table;
    double min_mass = 0.0;
    double max_mass = 0.0;
};

/// nu_mass_of_delta_r on every grid point, sharing one configuration set.
ScanResult scan_r(const PointSet& ps, int k, const std::vector<double>& r_grid, double eps,
                  const SampleMode& mode, std::int64_t tuple_cap = kDefaultTupleCap);

struct PinnedPair {
    int y = 0;
    int z = 0;
    double dist_y = 0.0;
    double dist_z = 0.0;
};

/// All ordered pairs of support indices (y, z), both distinct from the pin
/// and from each other, with | |pin-z| - r |pin-y| | <= tol. The pin must
/// coincide with a support point (within 1e-12).
std::vector<PinnedPair> pinned_search(const PointSet& ps, const Eigen::VectorXd& pin, double r,
                                      double tol);

}  // namespace simplexscope
