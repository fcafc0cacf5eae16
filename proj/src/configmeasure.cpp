#include "simplexscope/configmeasure.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "simplexscope/errors.hpp"
#include "simplexscope/parallel.hpp"
#include "simplexscope/rng.hpp"

namespace simplexscope {

namespace {

constexpr int kGridMaxDim = 8;           // above this, fall back to linear scans
constexpr std::int64_t kChunk = 1 << 16;  // fixed chunk size for deterministic reductions
constexpr std::int64_t kExactSumPairLimit = std::int64_t{1} << 22;

std::int64_t ordered_tuple_count(std::int64_t n, int per_tuple, std::int64_t cap) {
    std::int64_t total = 1;
    for (int i = 0; i < per_tuple; ++i) {
        if (n == 0) return 0;
        if (total > cap / n) {
            throw ResourceLimitError("tuple enumeration exceeds configured cap");
        }
        total *= n;
    }
    if (total > cap) throw ResourceLimitError("tuple enumeration exceeds configured cap");
    return total;
}

void decode_tuple(std::int64_t index, std::int64_t n, int per_tuple, int* out) {
    for (int j = per_tuple - 1; j >= 0; --j) {
        out[j] = static_cast<int>(index % n);
        index /= n;
    }
}

bool advance_tuple(int* idx, std::int64_t n, int per_tuple) {
    for (int j = per_tuple - 1; j >= 0; --j) {
        if (++idx[j] < n) return true;
        idx[j] = 0;
    }
    return false;
}

std::uint64_t hash_cell_key(const std::int64_t* cell, int dim) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < dim; ++i) {
        h ^= static_cast<std::uint64_t>(cell[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

/// Uniform grid over R^dim keyed by hashed cell coordinates. Hash collisions
/// only add candidates; callers re-check exact distances.
struct GridIndex {
    int dim = 0;
    double cell = 1.0;
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> buckets;

    GridIndex() = default;
    GridIndex(int dim_, double cell_) : dim(dim_), cell(cell_) {}

    void key_of(const double* v, std::int64_t* out) const {
        for (int i = 0; i < dim; ++i) out[i] = static_cast<std::int64_t>(std::floor(v[i] / cell));
    }

    void insert(std::int64_t id, const double* v) {
        std::int64_t cellbuf[64];
        key_of(v, cellbuf);
        buckets[hash_cell_key(cellbuf, dim)].push_back(id);
    }

    /// Visits candidate ids in all 3^dim neighbor cells of v's cell.
    template <typename Fn>
    bool visit_neighbors(const double* v, Fn&& fn) const {
        std::int64_t base[64];
        std::int64_t probe[64];
        int offset[64];
        key_of(v, base);
        for (int i = 0; i < dim; ++i) offset[i] = -1;
        for (;;) {
            for (int i = 0; i < dim; ++i) probe[i] = base[i] + offset[i];
            auto it = buckets.find(hash_cell_key(probe, dim));
            if (it != buckets.end()) {
                for (const std::int64_t id : it->second) {
                    if (!fn(id)) return false;
                }
            }
            int i = dim - 1;
            while (i >= 0 && offset[i] == 1) offset[i--] = -1;
            if (i < 0) return true;
            ++offset[i];
        }
    }
};

double sup_dist(const double* a, const double* b, int dim) {
    double m = 0.0;
    for (int i = 0; i < dim; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// DeltaSet

DeltaSet::DeltaSet(int k, int d, EdgeList edges, double dedupe_tol)
    : k_(k), d_(d), edges_(std::move(edges)), dedupe_tol_(dedupe_tol) {
    if (dedupe_tol_ <= 0.0) dedupe_tol_ = 1e-15;
}

void DeltaSet::ensure_sorted() {
    if (!sorted_dirty_) return;
    sorted_ = data_;
    std::sort(sorted_.begin(), sorted_.end());
    sorted_dirty_ = false;
}

void DeltaSet::insert(const double* v) {
    const int dim = edge_dim();
    if (dim == 1) {
        // Scalar sets are deduplicated when sealed (sorted pass).
        data_.push_back(v[0]);
        ++count_;
        sorted_dirty_ = true;
        return;
    }
    if (contains_within(v, dedupe_tol_)) return;
    data_.insert(data_.end(), v, v + dim);
    ++count_;
}

bool DeltaSet::contains_within(const double* q, double radius) const {
    const int dim = edge_dim();
    if (count_ == 0) return false;
    if (dim == 1) {
        if (sorted_dirty_) {
            for (std::int64_t i = 0; i < count_; ++i) {
                if (std::abs(data_[static_cast<std::size_t>(i)] - q[0]) <= radius) return true;
            }
            return false;
        }
        auto it = std::lower_bound(sorted_.begin(), sorted_.end(), q[0] - radius);
        return it != sorted_.end() && *it <= q[0] + radius;
    }
    // Linear scan; higher layers use DeltaMembership for indexed queries.
    for (std::int64_t i = 0; i < count_; ++i) {
        if (sup_dist(data_.data() + i * dim, q, dim) <= radius) return true;
    }
    return false;
}

double DeltaSet::distance_to(const double* q) const {
    const int dim = edge_dim();
    double best = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < count_; ++i) {
        best = std::min(best, sup_dist(data_.data() + i * dim, q, dim));
    }
    return best;
}

namespace {

/// Read-only sup-norm membership view over a sealed DeltaSet at a fixed
/// radius. Grid-backed for 2..kGridMaxDim dimensions.
class DeltaMembership {
public:
    DeltaMembership(const DeltaSet& set, double radius) : set_(&set), radius_(radius) {
        const int dim = set.edge_dim();
        if (dim > 1 && dim <= kGridMaxDim && set.size() > 64) {
            grid_ = GridIndex(dim, std::max(radius, 1e-300));
            for (std::int64_t i = 0; i < set.size(); ++i) {
                grid_->insert(i, set.vector(i).data());
            }
        }
    }

    bool contains(const double* q) const {
        if (!grid_) return set_->contains_within(q, radius_);
        const int dim = set_->edge_dim();
        bool found = false;
        grid_->visit_neighbors(q, [&](std::int64_t id) {
            if (sup_dist(set_->vector(id).data(), q, dim) <= radius_) {
                found = true;
                return false;
            }
            return true;
        });
        return found;
    }

    double radius() const { return radius_; }

private:
    const DeltaSet* set_;
    double radius_;
    std::optional<GridIndex> grid_;
};

}  // namespace

// ---------------------------------------------------------------------------
// sample_nu

EmpiricalNu sample_nu(const PointSet& ps, int k, const SampleMode& mode, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (k < 1) throw InvalidInputError("sample_nu: k must be >= 1");
    if (ps.size() == 0) throw InvalidInputError("sample_nu: empty point set");
    const int d = ps.dim();
    const int per_tuple = k + 1;
    EmpiricalNu nu;
    nu.k = k;
    nu.d = d;
    nu.edges = canonical_edge_set(d, k);
    nu.mode = mode;
    const int E = static_cast<int>(nu.edges.size());
    const std::int64_t n = ps.size();

    if (mode.kind == SampleMode::Kind::Exhaustive) {
        const std::int64_t total = ordered_tuple_count(n, per_tuple, tuple_cap);
        nu.vectors.resize(total, E);
        nu.weights.resize(total);
        nu.tuples.resize(total, per_tuple);
        std::vector<int> idx(static_cast<std::size_t>(per_tuple), 0);
        Eigen::MatrixXd pts(per_tuple, d);
        KahanSum mass;
        for (std::int64_t t = 0; t < total; ++t) {
            double w = 1.0;
            for (int j = 0; j < per_tuple; ++j) {
                nu.tuples(t, j) = idx[static_cast<std::size_t>(j)];
                pts.row(j) = ps.points.row(idx[static_cast<std::size_t>(j)]);
                w *= ps.weights[idx[static_cast<std::size_t>(j)]];
            }
            distance_entries(pts, nu.edges, nu.vectors.row(t).data());
            nu.weights[t] = w;
            mass.add(w);
            advance_tuple(idx.data(), n, per_tuple);
        }
        nu.total_mass = mass.value();
    } else {
        if (mode.samples < 1) throw InvalidInputError("sample_nu: need >= 1 samples");
        const std::int64_t total = mode.samples;
        nu.vectors.resize(total, E);
        nu.weights = Eigen::VectorXd::Constant(total, 1.0 / static_cast<double>(total));
        nu.tuples.resize(total, per_tuple);
        DiscreteSampler sampler(ps.weights);
        Rng rng(mode.seed);
        Eigen::MatrixXd pts(per_tuple, d);
        for (std::int64_t t = 0; t < total; ++t) {
            for (int j = 0; j < per_tuple; ++j) {
                const int p = sampler.sample(rng);
                nu.tuples(t, j) = p;
                pts.row(j) = ps.points.row(p);
            }
            distance_entries(pts, nu.edges, nu.vectors.row(t).data());
        }
        nu.total_mass = 1.0;
    }
    return nu;
}

// ---------------------------------------------------------------------------
// delta_k and friends

namespace {

/// Row-major distance vectors for all ordered tuples; the workhorse behind
/// the exhaustive estimators at small scale.
struct TupleTable {
    int k = 0;
    int d = 0;
    EdgeList edges;
    std::int64_t count = 0;
    std::vector<double> vecs;    // count x E
    std::vector<int> tuples;     // count x (k+1)
    int E() const { return static_cast<int>(edges.size()); }
    const double* vec(std::int64_t i) const { return vecs.data() + i * E(); }
    const int* tuple(std::int64_t i) const { return tuples.data() + i * (k + 1); }
};

TupleTable build_tuple_table(const PointSet& ps, int k, std::int64_t cap) {
    validate_point_set(ps);
    if (k < 1) throw InvalidInputError("k must be >= 1");
    TupleTable table;
    table.k = k;
    table.d = ps.dim();
    if (ps.size() == 0) return table;
    table.edges = canonical_edge_set(table.d, k);
    const int per_tuple = k + 1;
    const std::int64_t n = ps.size();
    table.count = ordered_tuple_count(n, per_tuple, cap);
    table.vecs.resize(static_cast<std::size_t>(table.count) * table.E());
    table.tuples.resize(static_cast<std::size_t>(table.count) * per_tuple);
    std::vector<int> idx(static_cast<std::size_t>(per_tuple), 0);
    Eigen::MatrixXd pts(per_tuple, table.d);
    for (std::int64_t t = 0; t < table.count; ++t) {
        for (int j = 0; j < per_tuple; ++j) {
            table.tuples[static_cast<std::size_t>(t) * per_tuple + j] = idx[static_cast<std::size_t>(j)];
            pts.row(j) = ps.points.row(idx[static_cast<std::size_t>(j)]);
        }
        distance_entries(pts, table.edges, table.vecs.data() + static_cast<std::size_t>(t) * table.E());
        advance_tuple(idx.data(), n, per_tuple);
    }
    return table;
}

Config config_from_indices(const PointSet& ps, const int* idx, int per_tuple) {
    Config c;
    c.points.resize(per_tuple, ps.dim());
    for (int j = 0; j < per_tuple; ++j) c.points.row(j) = ps.points.row(idx[j]);
    return c;
}

}  // namespace

DeltaSet delta_k(const PointSet& ps, int k, double dedupe_tol, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (k < 1) throw InvalidInputError("delta_k: k must be >= 1");
    const int d = ps.size() > 0 ? ps.dim() : 1;
    DeltaSet set(k, d, canonical_edge_set(d, k), dedupe_tol);
    if (ps.size() == 0) return set;

    const std::int64_t n = ps.size();
    if (set.edge_dim() == 1) {
        // k = 1: the scalar distance is symmetric, so the unordered pairs
        // i <= j realize the same value set as all ordered tuples.
        const std::int64_t pairs = n * (n + 1) / 2;
        if (pairs > tuple_cap) throw ResourceLimitError("delta_k: pair count exceeds cap");
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(pairs));
        for (Eigen::Index i = 0; i < n; ++i) {
            values.push_back(0.0);  // (i, i)
            for (Eigen::Index j = i + 1; j < n; ++j) {
                values.push_back((ps.points.row(i) - ps.points.row(j)).norm());
            }
        }
        std::sort(values.begin(), values.end());
        double last = -std::numeric_limits<double>::infinity();
        for (const double v : values) {
            if (v - last > dedupe_tol) {
                set.insert(&v);
                last = v;
            }
        }
        set.ensure_sorted();
        return set;
    }

    const int per_tuple = k + 1;
    const std::int64_t total = ordered_tuple_count(n, per_tuple, tuple_cap);
    std::vector<int> idx(static_cast<std::size_t>(per_tuple), 0);
    Eigen::MatrixXd pts(per_tuple, d);
    std::vector<double> v(static_cast<std::size_t>(set.edge_dim()));
    GridIndex dedupe(set.edge_dim() <= kGridMaxDim ? set.edge_dim() : 0, dedupe_tol);
    const bool use_grid = set.edge_dim() <= kGridMaxDim;
    for (std::int64_t t = 0; t < total; ++t) {
        for (int j = 0; j < per_tuple; ++j) pts.row(j) = ps.points.row(idx[static_cast<std::size_t>(j)]);
        distance_entries(pts, set.edges(), v.data());
        if (use_grid) {
            bool dup = false;
            dedupe.visit_neighbors(v.data(), [&](std::int64_t id) {
                if (sup_dist(set.vector(id).data(), v.data(), set.edge_dim()) <= dedupe_tol) {
                    dup = true;
                    return false;
                }
                return true;
            });
            if (!dup) {
                const std::int64_t id = set.size();
                set.insert(v.data());
                if (set.size() > id) dedupe.insert(id, v.data());
            }
        } else {
            set.insert(v.data());
        }
        advance_tuple(idx.data(), n, per_tuple);
    }
    set.ensure_sorted();
    return set;
}

DeltaSet delta_k_r(const DeltaSet& delta, double r, double eps) {
    if (!(r > 0.0)) throw InvalidInputError("delta_k_r: r must be positive");
    if (eps < 0.0) throw InvalidInputError("delta_k_r: eps must be >= 0");
    const double radius = std::max(eps, delta.dedupe_tol());
    DeltaMembership member(delta, radius);
    DeltaSet out(delta.k(), delta.d(), delta.edges(), delta.dedupe_tol());
    const int dim = delta.edge_dim();
    std::vector<double> scaled(static_cast<std::size_t>(dim));
    for (std::int64_t i = 0; i < delta.size(); ++i) {
        const auto v = delta.vector(i);
        for (int e = 0; e < dim; ++e) scaled[static_cast<std::size_t>(e)] = r * v[e];
        if (member.contains(scaled.data())) out.insert(v.data());
    }
    out.ensure_sorted();
    return out;
}

DeltaSet delta_k_r(const PointSet& ps, int k, double r, double eps, double dedupe_tol,
                   std::int64_t tuple_cap) {
    return delta_k_r(delta_k(ps, k, dedupe_tol, tuple_cap), r, eps);
}

// ---------------------------------------------------------------------------
// nu mass estimators

namespace {

struct MassChunk {
    KahanSum mass;
    KahanSum degenerate;
};

MassEstimate reduce_mass(const std::vector<MassChunk>& chunks, double normalizer) {
    KahanSum mass;
    KahanSum degenerate;
    for (const auto& c : chunks) {
        mass.add(c.mass.value());
        degenerate.add(c.degenerate.value());
    }
    MassEstimate est;
    est.mass = std::clamp(mass.value() / normalizer, 0.0, 1.0);
    est.degenerate_mass = std::clamp(degenerate.value() / normalizer, 0.0, 1.0);
    return est;
}

template <typename Qualifies>
MassEstimate exhaustive_mass(const PointSet& ps, int k, std::int64_t tuple_cap,
                             Qualifies&& qualifies) {
    const std::int64_t n = ps.size();
    const int per_tuple = k + 1;
    const int d = ps.dim();
    const EdgeList edges = canonical_edge_set(d, k);
    const int E = static_cast<int>(edges.size());
    const std::int64_t total = ordered_tuple_count(n, per_tuple, tuple_cap);

    auto chunks = run_chunked<MassChunk>(total, kChunk, [&](std::int64_t, std::int64_t lo,
                                                            std::int64_t hi) {
        MassChunk acc;
        std::vector<int> idx(static_cast<std::size_t>(per_tuple));
        decode_tuple(lo, n, per_tuple, idx.data());
        Eigen::MatrixXd pts(per_tuple, d);
        std::vector<double> v(static_cast<std::size_t>(E));
        for (std::int64_t t = lo; t < hi; ++t) {
            double w = 1.0;
            for (int j = 0; j < per_tuple; ++j) {
                pts.row(j) = ps.points.row(idx[static_cast<std::size_t>(j)]);
                w *= ps.weights[idx[static_cast<std::size_t>(j)]];
            }
            distance_entries(pts, edges, v.data());
            if (qualifies(v.data())) {
                acc.mass.add(w);
                double sup = 0.0;
                for (int e = 0; e < E; ++e) sup = std::max(sup, v[static_cast<std::size_t>(e)]);
                if (sup == 0.0) acc.degenerate.add(w);
            }
            advance_tuple(idx.data(), n, per_tuple);
        }
        return acc;
    });
    return reduce_mass(chunks, 1.0);
}

template <typename Qualifies>
MassEstimate sampled_mass(const PointSet& ps, int k, const SampleMode& mode,
                          Qualifies&& qualifies) {
    if (mode.samples < 1) throw InvalidInputError("sampled mode: need >= 1 samples");
    const int per_tuple = k + 1;
    const int d = ps.dim();
    const EdgeList edges = canonical_edge_set(d, k);
    const int E = static_cast<int>(edges.size());
    DiscreteSampler sampler(ps.weights);

    auto chunks = run_chunked<MassChunk>(mode.samples, kChunk, [&](std::int64_t chunk,
                                                                   std::int64_t lo,
                                                                   std::int64_t hi) {
        MassChunk acc;
        Rng rng(derive_seed(mode.seed, static_cast<std::uint64_t>(chunk)));
        Eigen::MatrixXd pts(per_tuple, d);
        std::vector<double> v(static_cast<std::size_t>(E));
        for (std::int64_t t = lo; t < hi; ++t) {
            for (int j = 0; j < per_tuple; ++j) {
                pts.row(j) = ps.points.row(sampler.sample(rng));
            }
            distance_entries(pts, edges, v.data());
            if (qualifies(v.data())) {
                acc.mass.add(1.0);
                double sup = 0.0;
                for (int e = 0; e < E; ++e) sup = std::max(sup, v[static_cast<std::size_t>(e)]);
                if (sup == 0.0) acc.degenerate.add(1.0);
            }
        }
        return acc;
    });
    return reduce_mass(chunks, static_cast<double>(mode.samples));
}

}  // namespace

MassEstimate nu_mass_against_delta(const PointSet& ps, int k, const DeltaSet& delta, double r,
                                   double eps, const SampleMode& mode, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (ps.size() == 0) throw InvalidInputError("nu_mass: empty point set");
    if (!(r > 0.0)) throw InvalidInputError("nu_mass: r must be positive");
    if (eps < 0.0) throw InvalidInputError("nu_mass: eps must be >= 0");
    const double radius = std::max(eps, delta.dedupe_tol());
    DeltaMembership member(delta, radius);
    const int E = delta.edge_dim();
    auto qualifies = [&](const double* v) {
        double scaled[64];
        for (int e = 0; e < E; ++e) scaled[e] = r * v[e];
        return member.contains(scaled);
    };
    if (mode.kind == SampleMode::Kind::Exhaustive) {
        return exhaustive_mass(ps, k, tuple_cap, qualifies);
    }
    return sampled_mass(ps, k, mode, qualifies);
}

MassEstimate nu_mass_of_delta_r_detail(const PointSet& ps, int k, double r, double eps,
                                       const SampleMode& mode, std::int64_t tuple_cap) {
    const DeltaSet delta = delta_k(ps, k, kDefaultDedupeTol, kDeltaTupleCap);
    return nu_mass_against_delta(ps, k, delta, r, eps, mode, tuple_cap);
}

double nu_mass_of_delta_r(const PointSet& ps, int k, double r, double eps, const SampleMode& mode,
                          std::int64_t tuple_cap) {
    return nu_mass_of_delta_r_detail(ps, k, r, eps, mode, tuple_cap).mass;
}

MassEstimate joint_mass(const PointSet& ps, int k, const std::vector<double>& scales, double eps,
                        const SampleMode& mode, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (scales.empty()) throw InvalidInputError("joint_mass: scales must be nonempty");
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw InvalidInputError("joint_mass: scales must be positive");
        for (std::size_t j = i + 1; j < scales.size(); ++j) {
            if (scales[i] == scales[j]) {
                throw InvalidInputError("joint_mass: scales must be pairwise distinct");
            }
        }
    }
    if (eps < 0.0) throw InvalidInputError("joint_mass: eps must be >= 0");
    const DeltaSet delta = delta_k(ps, k, kDefaultDedupeTol, kDeltaTupleCap);
    const double radius = std::max(eps, delta.dedupe_tol());
    DeltaMembership member(delta, radius);
    const int E = delta.edge_dim();
    auto qualifies = [&](const double* v) {
        double scaled[64];
        for (const double r : scales) {
            for (int e = 0; e < E; ++e) scaled[e] = r * v[e];
            if (!member.contains(scaled)) return false;
        }
        return true;
    };
    if (mode.kind == SampleMode::Kind::Exhaustive) {
        return exhaustive_mass(ps, k, tuple_cap, qualifies);
    }
    return sampled_mass(ps, k, mode, qualifies);
}

ScanResult scan_r(const PointSet& ps, int k, const std::vector<double>& r_grid, double eps,
                  const SampleMode& mode, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (r_grid.empty()) throw InvalidInputError("scan_r: empty grid");
    for (const double r : r_grid) {
        if (!(r > 0.0)) throw InvalidInputError("scan_r: grid values must be positive");
    }
    const DeltaSet delta = delta_k(ps, k, kDefaultDedupeTol, kDeltaTupleCap);
    ScanResult result;
    result.min_mass = std::numeric_limits<double>::infinity();
    result.max_mass = 0.0;
    for (std::size_t i = 0; i < r_grid.size(); ++i) {
        SampleMode local = mode;
        if (mode.kind == SampleMode::Kind::Sampled) {
            local.seed = derive_seed(mode.seed, 0x5ca00000u + static_cast<std::uint64_t>(i));
        }
        const MassEstimate est = nu_mass_against_delta(ps, k, delta, r_grid[i], eps, local, tuple_cap);
        result.table.push_back({r_grid[i], est.mass, est.degenerate_mass});
        result.min_mass = std::min(result.min_mass, est.mass);
        result.max_mass = std::max(result.max_mass, est.mass);
    }
    return result;
}

// ---------------------------------------------------------------------------
// pair_count

namespace {

struct PairPredicate {
    // Canonical orientation: scale <= 1. When the requested r exceeds 1 the
    // roles of the two sides are exchanged, using exactly 1/r and eps/r; the
    // swap identity pair_count(X,Y,r,eps) = pair_count(Y,X,1/r,eps/r) is then
    // bit-exact in exhaustive mode.
    double scale;
    double bound;
    bool swapped;

    PairPredicate(double r, double eps) {
        if (r <= 1.0) {
            scale = r;
            bound = eps;
            swapped = false;
        } else {
            scale = 1.0 / r;
            bound = eps / r;
            swapped = true;
        }
    }

    bool operator()(const double* a, const double* b, int E) const {
        if (!swapped) {
            for (int e = 0; e < E; ++e) {
                if (!(std::abs(a[e] - scale * b[e]) < bound)) return false;
            }
        } else {
            for (int e = 0; e < E; ++e) {
                if (!(std::abs(b[e] - scale * a[e]) < bound)) return false;
            }
        }
        return true;
    }
};

double pair_count_exhaustive_small(const TupleTable& tx, const Eigen::VectorXd& wx,
                                   const TupleTable& ty, const Eigen::VectorXd& wy,
                                   const PairPredicate& pred) {
    // Collect qualifying weight products and sum them in sorted order: the
    // multiset of addends is symmetric under the swap identity, so the sum
    // is bit-identical for both orientations.
    const int E = tx.E();
    std::vector<double> wtx(static_cast<std::size_t>(tx.count));
    std::vector<double> wty(static_cast<std::size_t>(ty.count));
    for (std::int64_t i = 0; i < tx.count; ++i) {
        double w = 1.0;
        for (int j = 0; j <= tx.k; ++j) w *= wx[tx.tuple(i)[j]];
        wtx[static_cast<std::size_t>(i)] = w;
    }
    for (std::int64_t i = 0; i < ty.count; ++i) {
        double w = 1.0;
        for (int j = 0; j <= ty.k; ++j) w *= wy[ty.tuple(i)[j]];
        wty[static_cast<std::size_t>(i)] = w;
    }
    std::vector<double> addends;
    for (std::int64_t i = 0; i < tx.count; ++i) {
        for (std::int64_t j = 0; j < ty.count; ++j) {
            if (pred(tx.vec(i), ty.vec(j), E)) {
                addends.push_back(wtx[static_cast<std::size_t>(i)] * wty[static_cast<std::size_t>(j)]);
            }
        }
    }
    std::sort(addends.begin(), addends.end());
    double sum = 0.0;
    for (const double a : addends) sum += a;
    return sum;
}

/// k = 1 window path: per x-distance, scan the sorted y-distances whose
/// scaled value can fall inside the bound, verifying each candidate with
/// the exact predicate.
double pair_count_scalar_windows(const PointSet& ps_x, const PointSet& ps_y,
                                 const PairPredicate& pred) {
    const auto collect = [](const PointSet& ps) {
        const std::int64_t n = ps.size();
        std::vector<std::pair<double, double>> atoms;  // (distance, weight)
        atoms.reserve(static_cast<std::size_t>(n * n));
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                atoms.emplace_back((ps.points.row(i) - ps.points.row(j)).norm(),
                                   ps.weights[i] * ps.weights[j]);
            }
        }
        std::sort(atoms.begin(), atoms.end());
        return atoms;
    };
    const auto ax = collect(ps_x);
    const auto ay = collect(ps_y);

    // Querying side: for fixed a, candidates b with |a - s b| < eps (or the
    // swapped form) lie in a value window around a / s (resp. a * s).
    const double s = pred.scale;
    const double width = pred.bound;
    auto chunks = run_chunked<KahanSum>(
        static_cast<std::int64_t>(ax.size()), kChunk,
        [&](std::int64_t, std::int64_t lo, std::int64_t hi) {
            KahanSum acc;
            double one[1];
            double other[1];
            for (std::int64_t i = lo; i < hi; ++i) {
                const double a = ax[static_cast<std::size_t>(i)].first;
                const double wa = ax[static_cast<std::size_t>(i)].second;
                double center, half;
                if (!pred.swapped) {
                    center = a / s;        // |a - s b| < eps  =>  b near a/s
                    half = width / s;
                } else {
                    center = a * s;        // |b - s a| < eps  =>  b near s a
                    half = width;
                }
                const double slack = 1e-9 * std::max(1.0, std::abs(center)) + 1e-300;
                auto first = std::lower_bound(ay.begin(), ay.end(),
                                              std::make_pair(center - half - slack, 0.0));
                one[0] = a;
                for (auto it = first; it != ay.end() && it->first <= center + half + slack; ++it) {
                    other[0] = it->first;
                    if (pred(one, other, 1)) acc.add(wa * it->second);
                }
            }
            return acc;
        });
    KahanSum total;
    for (const auto& c : chunks) total.add(c.value());
    return total.value();
}

}  // namespace

double pair_count(const PointSet& ps_x, const PointSet& ps_y, int k, double r, double eps,
                  const SampleMode& mode, std::int64_t tuple_cap) {
    validate_point_set(ps_x);
    validate_point_set(ps_y);
    if (ps_x.size() == 0 || ps_y.size() == 0) return 0.0;
    if (k < 1) throw InvalidInputError("pair_count: k must be >= 1");
    if (ps_x.dim() != ps_y.dim()) throw InvalidInputError("pair_count: dimension mismatch");
    if (!(r > 0.0)) throw InvalidInputError("pair_count: r must be positive");
    if (!(eps > 0.0)) throw InvalidInputError("pair_count: eps must be positive");

    const PairPredicate pred(r, eps);
    const int per_tuple = k + 1;

    if (mode.kind == SampleMode::Kind::Sampled) {
        if (mode.samples < 1) throw InvalidInputError("pair_count: need >= 1 samples");
        const int d = ps_x.dim();
        const EdgeList edges = canonical_edge_set(d, k);
        const int E = static_cast<int>(edges.size());
        DiscreteSampler sx(ps_x.weights);
        DiscreteSampler sy(ps_y.weights);
        auto chunks = run_chunked<KahanSum>(
            mode.samples, kChunk, [&](std::int64_t chunk, std::int64_t lo, std::int64_t hi) {
                KahanSum acc;
                Rng rng(derive_seed(mode.seed, static_cast<std::uint64_t>(chunk)));
                Eigen::MatrixXd px(per_tuple, d), py(per_tuple, d);
                std::vector<double> vx(static_cast<std::size_t>(E)), vy(static_cast<std::size_t>(E));
                for (std::int64_t t = lo; t < hi; ++t) {
                    for (int j = 0; j < per_tuple; ++j) px.row(j) = ps_x.points.row(sx.sample(rng));
                    for (int j = 0; j < per_tuple; ++j) py.row(j) = ps_y.points.row(sy.sample(rng));
                    distance_entries(px, edges, vx.data());
                    distance_entries(py, edges, vy.data());
                    if (pred(vx.data(), vy.data(), E)) acc.add(1.0);
                }
                return acc;
            });
        KahanSum total;
        for (const auto& c : chunks) total.add(c.value());
        return std::clamp(total.value() / static_cast<double>(mode.samples), 0.0, 1.0);
    }

    const std::int64_t tx_count = ordered_tuple_count(ps_x.size(), per_tuple, tuple_cap);
    const std::int64_t ty_count = ordered_tuple_count(ps_y.size(), per_tuple, tuple_cap);
    if (k == 1 && (tx_count > kExactSumPairLimit / std::max<std::int64_t>(ty_count, 1))) {
        return pair_count_scalar_windows(ps_x, ps_y, pred);
    }
    const TupleTable tx = build_tuple_table(ps_x, k, tuple_cap);
    const TupleTable ty = build_tuple_table(ps_y, k, tuple_cap);
    return pair_count_exhaustive_small(tx, ps_x.weights, ty, ps_y.weights, pred);
}

// ---------------------------------------------------------------------------
// mollified density

double annulus_volume(int d, double t, double eps) {
    if (d < 1) throw InvalidInputError("annulus_volume: d must be >= 1");
    if (!(eps > 0.0)) throw InvalidInputError("annulus_volume: eps must be positive");
    const double unit_ball = std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
    const double hi = t + eps;
    const double lo = std::max(t - eps, 0.0);
    return unit_ball * (std::pow(hi, d) - std::pow(lo, d));
}

double mollified_nu_density(const PointSet& ps, int k, const Eigen::VectorXd& t, double eps,
                            std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (ps.size() == 0) return 0.0;
    if (!(eps > 0.0)) throw InvalidInputError("mollified_nu_density: eps must be positive");
    const int d = ps.dim();
    const EdgeList edges = canonical_edge_set(d, k);
    const int E = static_cast<int>(edges.size());
    if (t.size() != E) throw InvalidInputError("mollified_nu_density: wrong vector length");
    for (Eigen::Index e = 0; e < t.size(); ++e) {
        if (t[e] < 0.0) throw InvalidInputError("mollified_nu_density: negative entry");
    }

    std::vector<double> inv_vol(static_cast<std::size_t>(E));
    for (int e = 0; e < E; ++e) inv_vol[static_cast<std::size_t>(e)] = 1.0 / annulus_volume(d, t[e], eps);

    const std::int64_t n = ps.size();
    const int per_tuple = k + 1;
    const std::int64_t total = ordered_tuple_count(n, per_tuple, tuple_cap);
    auto chunks = run_chunked<KahanSum>(total, kChunk, [&](std::int64_t, std::int64_t lo,
                                                           std::int64_t hi) {
        KahanSum acc;
        std::vector<int> idx(static_cast<std::size_t>(per_tuple));
        decode_tuple(lo, n, per_tuple, idx.data());
        Eigen::MatrixXd pts(per_tuple, d);
        std::vector<double> v(static_cast<std::size_t>(E));
        for (std::int64_t tu = lo; tu < hi; ++tu) {
            for (int j = 0; j < per_tuple; ++j) pts.row(j) = ps.points.row(idx[static_cast<std::size_t>(j)]);
            distance_entries(pts, edges, v.data());
            double kernel = 1.0;
            for (int e = 0; e < E && kernel > 0.0; ++e) {
                const double s = v[static_cast<std::size_t>(e)];
                if (t[e] - eps < s && s < t[e] + eps) {
                    kernel *= inv_vol[static_cast<std::size_t>(e)];
                } else {
                    kernel = 0.0;
                }
            }
            if (kernel > 0.0) {
                double w = 1.0;
                for (int j = 0; j < per_tuple; ++j) w *= ps.weights[idx[static_cast<std::size_t>(j)]];
                acc.add(kernel * w);
            }
            advance_tuple(idx.data(), n, per_tuple);
        }
        return acc;
    });
    KahanSum total_sum;
    for (const auto& c : chunks) total_sum.add(c.value());
    return total_sum.value();
}

// ---------------------------------------------------------------------------
// similarity search

namespace {

struct DirectionIndex {
    const TupleTable* table;
    double cell;
    GridIndex grid;
    std::vector<std::int64_t> zero_ids;
    std::vector<double> inf_norms;

    DirectionIndex(const TupleTable& t, double angular_cell)
        : table(&t), cell(angular_cell), grid(t.E(), angular_cell) {
        const int E = t.E();
        std::vector<double> u(static_cast<std::size_t>(E));
        inf_norms.resize(static_cast<std::size_t>(t.count));
        for (std::int64_t i = 0; i < t.count; ++i) {
            const double* v = t.vec(i);
            double norm2 = 0.0;
            double sup = 0.0;
            for (int e = 0; e < E; ++e) {
                norm2 += v[e] * v[e];
                sup = std::max(sup, std::abs(v[e]));
            }
            inf_norms[static_cast<std::size_t>(i)] = sup;
            if (sup == 0.0) {
                zero_ids.push_back(i);
                continue;
            }
            const double inv = 1.0 / std::sqrt(norm2);
            for (int e = 0; e < E; ++e) u[static_cast<std::size_t>(e)] = v[e] * inv;
            grid.insert(i, u.data());
        }
    }

    /// Candidate tuple ids whose direction can match v's within the cell
    /// resolution. Sorted and deduplicated (neighbor cells can collide in
    /// the hash).
    std::vector<std::int64_t> candidates(const double* v) const {
        const int E = table->E();
        double norm2 = 0.0;
        for (int e = 0; e < E; ++e) norm2 += v[e] * v[e];
        std::vector<std::int64_t> out;
        if (norm2 == 0.0) return out;
        std::vector<double> u(static_cast<std::size_t>(E));
        const double inv = 1.0 / std::sqrt(norm2);
        for (int e = 0; e < E; ++e) u[static_cast<std::size_t>(e)] = v[e] * inv;
        grid.visit_neighbors(u.data(), [&](std::int64_t id) {
            out.push_back(id);
            return true;
        });
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }
};

SimilarityWitness make_witness(const PointSet& ps, const TupleTable& table, std::int64_t base,
                               const std::vector<std::int64_t>& others,
                               const std::vector<double>& scales) {
    const int per_tuple = table.k + 1;
    SimilarityWitness w;
    w.base = config_from_indices(ps, table.tuple(base), per_tuple);
    w.base_tuple.assign(table.tuple(base), table.tuple(base) + per_tuple);
    w.scales = scales;
    double residual = 0.0;
    const bool verify = table.k <= table.d;
    for (const std::int64_t o : others) {
        Config other = config_from_indices(ps, table.tuple(o), per_tuple);
        w.other_tuples.emplace_back(table.tuple(o), table.tuple(o) + per_tuple);
        if (verify) {
            auto t = recover_transform(w.base, other, std::numeric_limits<double>::infinity());
            if (t) residual = std::max(residual, t->residual);
            w.transforms.push_back(std::move(t));
        } else {
            w.transforms.push_back(std::nullopt);
        }
        w.others.push_back(std::move(other));
    }
    w.residual = residual;
    return w;
}

double angular_cell_for(double tol, double min_scale, int E) {
    // Unit directions of vectors matching at relative tolerance `tol` under
    // scale r differ by at most 2 sqrt(E) tol / r, so candidates always land
    // within one cell of each other at this resolution.
    const double bound = 2.0 * std::sqrt(static_cast<double>(E)) * tol / min_scale;
    return std::max(bound, 1e-12);
}

}  // namespace

std::vector<SimilarityWitness> find_similar_pairs(const PointSet& ps, int k, double r, double tol,
                                                  std::int64_t budget, std::int64_t tuple_cap) {
    validate_point_set(ps);
    if (!(r > 0.0)) throw InvalidInputError("find_similar_pairs: r must be positive");
    if (tol < 0.0) throw InvalidInputError("find_similar_pairs: tol must be >= 0");
    std::vector<SimilarityWitness> out;
    if (ps.size() == 0) return out;
    const TupleTable table = build_tuple_table(ps, k, tuple_cap);
    const int E = table.E();
    const DirectionIndex index(table, angular_cell_for(tol, r, E));

    std::int64_t examined = 0;
    for (std::int64_t x = 0; x < table.count; ++x) {
        const double* vx = table.vec(x);
        const bool zero_base = index.inf_norms[static_cast<std::size_t>(x)] == 0.0;
        std::vector<std::int64_t> cands;
        if (zero_base) {
            cands = index.zero_ids;  // |v(y)| <= tol * 0 forces v(y) = 0
        } else {
            cands = index.candidates(vx);
            if (r <= tol) {
                // Zero vectors satisfy |0 - r v(x)|_inf <= tol |v(x)|_inf.
                cands.insert(cands.end(), index.zero_ids.begin(), index.zero_ids.end());
                std::sort(cands.begin(), cands.end());
            }
        }
        for (const std::int64_t y : cands) {
            if (examined >= budget) return out;
            ++examined;
            Eigen::Map<const Eigen::VectorXd> a(vx, E);
            Eigen::Map<const Eigen::VectorXd> b(table.vec(y), E);
            if (matches_scale(a, b, r, tol)) {
                out.push_back(make_witness(ps, table, x, {y}, {r}));
            }
        }
    }
    return out;
}

std::vector<SimilarityWitness> find_multi_similarity(const PointSet& ps, int k,
                                                     std::vector<double> scales, double tol,
                                                     std::int64_t budget, std::int64_t tuple_cap) {
    validate_point_set(ps);
    for (std::size_t i = 0; i < scales.size(); ++i) {
        if (!(scales[i] > 0.0)) throw InvalidInputError("find_multi_similarity: scales must be positive");
        for (std::size_t j = i + 1; j < scales.size(); ++j) {
            if (scales[i] == scales[j]) {
                throw InvalidInputError("find_multi_similarity: scales must be pairwise distinct");
            }
        }
    }
    // Scale 1 is realized by the base tuple itself.
    scales.erase(std::remove(scales.begin(), scales.end(), 1.0), scales.end());

    std::vector<SimilarityWitness> out;
    if (ps.size() == 0) return out;
    const TupleTable table = build_tuple_table(ps, k, tuple_cap);
    const int E = table.E();

    if (scales.empty()) {
        // Every tuple is a trivial multiplicity-1 witness.
        const std::int64_t limit = std::min<std::int64_t>(table.count, budget);
        for (std::int64_t x = 0; x < limit; ++x) {
            out.push_back(make_witness(ps, table, x, {}, {}));
        }
        return out;
    }

    const double min_scale = *std::min_element(scales.begin(), scales.end());
    const DirectionIndex index(table, angular_cell_for(tol, min_scale, E));

    std::int64_t examined = 0;
    std::vector<std::int64_t> matches;
    for (std::int64_t x = 0; x < table.count; ++x) {
        const double* vx = table.vec(x);
        const bool zero_base = index.inf_norms[static_cast<std::size_t>(x)] == 0.0;
        std::vector<std::int64_t> cands;
        if (zero_base) {
            cands = index.zero_ids;
        } else {
            cands = index.candidates(vx);
        }
        matches.clear();
        bool complete = true;
        for (const double r : scales) {
            std::int64_t found = -1;
            Eigen::Map<const Eigen::VectorXd> a(vx, E);
            for (const std::int64_t y : cands) {
                if (examined >= budget) return out;
                ++examined;
                Eigen::Map<const Eigen::VectorXd> b(table.vec(y), E);
                if (matches_scale(a, b, r, tol)) {
                    found = y;
                    break;
                }
            }
            if (found < 0 && !zero_base && r <= tol && !index.zero_ids.empty()) {
                found = index.zero_ids.front();
            }
            if (found < 0) {
                complete = false;
                break;
            }
            matches.push_back(found);
        }
        if (complete) {
            out.push_back(make_witness(ps, table, x, matches, scales));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// pinned search

std::vector<PinnedPair> pinned_search(const PointSet& ps, const Eigen::VectorXd& pin, double r,
                                      double tol) {
    validate_point_set(ps);
    if (!(r > 0.0)) throw InvalidInputError("pinned_search: r must be positive");
    if (tol < 0.0) throw InvalidInputError("pinned_search: tol must be >= 0");
    if (pin.size() != ps.dim()) throw InvalidInputError("pinned_search: pin dimension mismatch");

    Eigen::Index pin_idx = -1;
    for (Eigen::Index i = 0; i < ps.size(); ++i) {
        if ((ps.points.row(i).transpose() - pin).lpNorm<Eigen::Infinity>() <= 1e-12) {
            pin_idx = i;
            break;
        }
    }
    if (pin_idx < 0) throw InvalidInputError("pinned_search: pin is not a support point");

    const Eigen::Index n = ps.size();
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        dist[static_cast<std::size_t>(i)] = (ps.points.row(i) - ps.points.row(pin_idx)).norm();
    }

    std::vector<PinnedPair> out;
    for (Eigen::Index y = 0; y < n; ++y) {
        if (y == pin_idx) continue;
        for (Eigen::Index z = 0; z < n; ++z) {
            if (z == pin_idx || z == y) continue;
            const double dy = dist[static_cast<std::size_t>(y)];
            const double dz = dist[static_cast<std::size_t>(z)];
            if (std::abs(dz - r * dy) <= tol) {
                out.push_back({static_cast<int>(y), static_cast<int>(z), dy, dz});
            }
        }
    }
    return out;
}

}  // namespace simplexscope
