#include "simplexscope/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include <Eigen/Dense>

#include "simplexscope/errors.hpp"
#include "simplexscope/rng.hpp"

namespace simplexscope {

namespace {

constexpr double kOrthoTol = 1e-12;

double moran_sum(const IFSSystem& ifs, double s) {
    double sum = 0.0;
    for (const auto& m : ifs.maps) sum += std::pow(m.ratio, s);
    return sum;
}

Eigen::VectorXd map_fixed_point(const SimilarityMap& m, int d) {
    // x* = ratio * Q * x* + offset
    const Eigen::MatrixXd a =
        Eigen::MatrixXd::Identity(d, d) - m.ratio * m.orthogonal;
    return a.partialPivLu().solve(m.offset);
}

std::uint64_t hash_cells(const std::vector<std::int64_t>& cell) {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::int64_t v : cell) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace

void validate_ifs(const IFSSystem& ifs) {
    if (ifs.dim < 1) throw InvalidInputError("IFSSystem: dimension must be >= 1");
    if (ifs.maps.size() < 2) throw InvalidInputError("IFSSystem: need at least 2 maps");
    for (const auto& m : ifs.maps) {
        if (!(m.ratio > 0.0 && m.ratio < 1.0)) {
            throw InvalidInputError("IFSSystem: every ratio must lie in (0,1)");
        }
        if (m.orthogonal.rows() != ifs.dim || m.orthogonal.cols() != ifs.dim ||
            m.offset.size() != ifs.dim) {
            throw InvalidInputError("IFSSystem: map shape mismatch");
        }
        const double err = (m.orthogonal.transpose() * m.orthogonal -
                            Eigen::MatrixXd::Identity(ifs.dim, ifs.dim))
                               .lpNorm<Eigen::Infinity>();
        if (err > kOrthoTol) throw InvalidInputError("IFSSystem: map is not orthogonal");
    }
}

double similarity_dimension(const IFSSystem& ifs) {
    validate_ifs(ifs);
    // moran_sum is strictly decreasing in s, > 1 at s = 0 (>= 2 maps).
    double lo = 0.0;
    double hi = 1.0;
    while (moran_sum(ifs, hi) > 1.0) hi *= 2.0;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (moran_sum(ifs, mid) > 1.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

AttractorBound attractor_bound(const IFSSystem& ifs) {
    validate_ifs(ifs);
    const int d = ifs.dim;
    Eigen::MatrixXd fixed(static_cast<Eigen::Index>(ifs.maps.size()), d);
    for (std::size_t i = 0; i < ifs.maps.size(); ++i) {
        fixed.row(static_cast<Eigen::Index>(i)) = map_fixed_point(ifs.maps[i], d).transpose();
    }
    AttractorBound bound;
    bound.center = fixed.colwise().mean().transpose();
    double rho_max = 0.0;
    double drift = 0.0;
    for (const auto& m : ifs.maps) {
        rho_max = std::max(rho_max, m.ratio);
        const Eigen::VectorXd moved = m.ratio * m.orthogonal * bound.center + m.offset;
        drift = std::max(drift, (moved - bound.center).norm());
    }
    // B(center, R) is invariant under every map once R >= drift / (1 - rho_max).
    bound.radius = drift / (1.0 - rho_max);
    return bound;
}

PointSet generate_points(const IFSSystem& ifs, const GenerateMode& mode, std::int64_t point_cap) {
    validate_ifs(ifs);
    const int d = ifs.dim;
    const int n_maps = static_cast<int>(ifs.maps.size());
    const double s = similarity_dimension(ifs);
    const Eigen::VectorXd base = map_fixed_point(ifs.maps.front(), d);

    PointSet ps;
    if (mode.kind == GenerateMode::Kind::Full) {
        if (mode.level < 0) throw InvalidInputError("generate_points: level must be >= 0");
        std::int64_t n = 1;
        for (int l = 0; l < mode.level; ++l) {
            n *= n_maps;
            if (n > point_cap) {
                throw ResourceLimitError("generate_points: maps^level exceeds point cap");
            }
        }
        ps.points.resize(n, d);
        ps.weights.resize(n);
        std::vector<int> code(static_cast<std::size_t>(mode.level), 0);
        std::vector<double> symbol_w(static_cast<std::size_t>(n_maps));
        for (int i = 0; i < n_maps; ++i) symbol_w[static_cast<std::size_t>(i)] = std::pow(ifs.maps[static_cast<std::size_t>(i)].ratio, s);
        for (std::int64_t idx = 0; idx < n; ++idx) {
            // idx -> code digits, most significant first (lexicographic order).
            std::int64_t rem = idx;
            for (int l = mode.level - 1; l >= 0; --l) {
                code[static_cast<std::size_t>(l)] = static_cast<int>(rem % n_maps);
                rem /= n_maps;
            }
            Eigen::VectorXd x = base;
            double w = 1.0;
            for (int l = mode.level - 1; l >= 0; --l) {
                const auto& m = ifs.maps[static_cast<std::size_t>(code[static_cast<std::size_t>(l)])];
                x = m.ratio * m.orthogonal * x + m.offset;
                w *= symbol_w[static_cast<std::size_t>(code[static_cast<std::size_t>(l)])];
            }
            ps.points.row(idx) = x.transpose();
            ps.weights[idx] = w;
        }
        ps.provenance = "ifs:full:level=" + std::to_string(mode.level);
    } else {
        if (mode.count < 1) throw InvalidInputError("generate_points: count must be >= 1");
        if (mode.count > point_cap) {
            throw ResourceLimitError("generate_points: count exceeds point cap");
        }
        // Depth at which the remaining contraction is below 1e-14 of the
        // attractor radius; points are then attractor samples to rounding.
        double rho_max = 0.0;
        for (const auto& m : ifs.maps) rho_max = std::max(rho_max, m.ratio);
        const AttractorBound bound = attractor_bound(ifs);
        const double target = 1e-14 * std::max(1.0, bound.radius);
        int depth = 1;
        double contraction = rho_max;
        while (contraction * std::max(1.0, bound.radius) > target && depth < 4096) {
            contraction *= rho_max;
            ++depth;
        }

        Eigen::VectorXd probs(n_maps);
        for (int i = 0; i < n_maps; ++i) probs[i] = std::pow(ifs.maps[static_cast<std::size_t>(i)].ratio, s);
        DiscreteSampler sampler(probs);

        ps.points.resize(mode.count, d);
        ps.weights = Eigen::VectorXd::Constant(mode.count, 1.0 / static_cast<double>(mode.count));
        Rng rng(mode.seed);
        std::vector<int> code(static_cast<std::size_t>(depth));
        for (std::int64_t idx = 0; idx < mode.count; ++idx) {
            for (int l = 0; l < depth; ++l) code[static_cast<std::size_t>(l)] = sampler.sample(rng);
            Eigen::VectorXd x = base;
            for (int l = depth - 1; l >= 0; --l) {
                const auto& m = ifs.maps[static_cast<std::size_t>(code[static_cast<std::size_t>(l)])];
                x = m.ratio * m.orthogonal * x + m.offset;
            }
            ps.points.row(idx) = x.transpose();
        }
        ps.provenance = "ifs:random:count=" + std::to_string(mode.count) +
                        ":seed=" + std::to_string(mode.seed);
    }

    ps.weights /= ps.weights.sum();
    validate_point_set(ps);
    return ps;
}

FrostmanEstimate frostman_surrogate(const PointSet& ps, double s, const std::vector<double>& radii,
                                    std::int64_t probes, std::uint64_t seed) {
    validate_point_set(ps);
    if (ps.size() == 0) throw InvalidInputError("frostman_surrogate: empty point set");
    if (!(s > 0.0)) throw InvalidInputError("frostman_surrogate: s must be positive");
    if (radii.empty()) throw InvalidInputError("frostman_surrogate: need at least one radius");
    for (double r : radii) {
        if (!(r > 0.0)) throw InvalidInputError("frostman_surrogate: radii must be positive");
    }

    const Eigen::Index n = ps.size();
    std::vector<Eigen::Index> centers;
    if (probes >= n) {
        centers.resize(static_cast<std::size_t>(n));
        std::iota(centers.begin(), centers.end(), Eigen::Index{0});
    } else {
        // Deterministic partial Fisher-Yates over point indices.
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), Eigen::Index{0});
        Rng rng(seed);
        for (std::int64_t i = 0; i < probes; ++i) {
            const auto j = i + rng.uniform_int(static_cast<std::int64_t>(n) - i);
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            centers.push_back(pool[static_cast<std::size_t>(i)]);
        }
    }

    const double rho_min = *std::min_element(radii.begin(), radii.end());
    FrostmanEstimate est;
    for (const Eigen::Index c : centers) {
        for (const double rho : radii) {
            double mass = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if ((ps.points.row(i) - ps.points.row(c)).norm() <= rho) mass += ps.weights[i];
            }
            const double value = mass / std::pow(rho, s);
            if (value > est.constant) {
                est.constant = value;
                est.argmax_radius = rho;
                est.argmax_center = c;
            }
        }
    }
    est.min_radius_dominates = (est.argmax_radius == rho_min);
    return est;
}

double box_dimension_estimate(const PointSet& ps, const std::vector<double>& scales) {
    validate_point_set(ps);
    if (ps.size() == 0) throw InvalidInputError("box_dimension_estimate: empty point set");
    if (scales.size() < 3) throw InvalidInputError("box_dimension_estimate: need >= 3 scales");
    const auto [mn, mx] = std::minmax_element(scales.begin(), scales.end());
    if (!(*mn > 0.0)) throw InvalidInputError("box_dimension_estimate: scales must be positive");
    if (*mx / *mn < 10.0) {
        throw InvalidInputError("box_dimension_estimate: scales must span at least one decade");
    }

    const int d = ps.dim();
    std::vector<double> log_inv_delta;
    std::vector<double> log_n;
    std::vector<std::int64_t> counts;
    std::vector<std::int64_t> cell(static_cast<std::size_t>(d));
    for (const double delta : scales) {
        std::unordered_set<std::uint64_t> occupied;
        for (Eigen::Index i = 0; i < ps.size(); ++i) {
            for (int c = 0; c < d; ++c) {
                cell[static_cast<std::size_t>(c)] =
                    static_cast<std::int64_t>(std::floor(ps.points(i, c) / delta));
            }
            occupied.insert(hash_cells(cell));
        }
        counts.push_back(static_cast<std::int64_t>(occupied.size()));
        log_inv_delta.push_back(std::log(1.0 / delta));
        log_n.push_back(std::log(static_cast<double>(occupied.size())));
    }

    const bool all_single = std::all_of(counts.begin(), counts.end(),
                                        [](std::int64_t c) { return c == 1; });
    if (all_single) return 0.0;  // a single occupied cell at every scale: dimension 0
    std::int64_t distinct = 1;
    for (std::size_t i = 1; i < counts.size(); ++i) {
        if (counts[i] != counts[0]) {
            distinct = 2;
            break;
        }
    }
    if (distinct < 2) {
        throw DegenerateFitError("box_dimension_estimate: fewer than 2 distinct box counts");
    }

    const double n = static_cast<double>(scales.size());
    const double sx = std::accumulate(log_inv_delta.begin(), log_inv_delta.end(), 0.0);
    const double sy = std::accumulate(log_n.begin(), log_n.end(), 0.0);
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < scales.size(); ++i) {
        sxx += log_inv_delta[i] * log_inv_delta[i];
        sxy += log_inv_delta[i] * log_n[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

IFSSystem axis_aligned_ifs(int d, double ratio, const std::vector<Eigen::VectorXd>& offsets) {
    IFSSystem ifs;
    ifs.dim = d;
    for (const auto& off : offsets) {
        SimilarityMap m;
        m.ratio = ratio;
        m.orthogonal = Eigen::MatrixXd::Identity(d, d);
        m.offset = off;
        ifs.maps.push_back(std::move(m));
    }
    return ifs;
}

Eigen::VectorXd vec2(double x, double y) {
    Eigen::VectorXd v(2);
    v << x, y;
    return v;
}

Eigen::VectorXd vec1(double x) {
    Eigen::VectorXd v(1);
    v << x;
    return v;
}

}  // namespace

std::vector<std::string> preset_names() {
    return {"cantor13_line", "cantor13_prod2", "cantor14_prod2", "sierpinski", "vicsek"};
}

IFSSystem preset_ifs(const std::string& name) {
    if (name == "cantor13_line") {
        // Middle-thirds set on [0,1]; dimension log2/log3.
        return axis_aligned_ifs(1, 1.0 / 3.0, {vec1(0.0), vec1(2.0 / 3.0)});
    }
    if (name == "cantor13_prod2") {
        // Planar product of two middle-thirds sets; dimension 2 log2/log3.
        return axis_aligned_ifs(2, 1.0 / 3.0,
                                {vec2(0.0, 0.0), vec2(2.0 / 3.0, 0.0), vec2(0.0, 2.0 / 3.0),
                                 vec2(2.0 / 3.0, 2.0 / 3.0)});
    }
    if (name == "cantor14_prod2") {
        // Quarter-ratio corner system; dimension exactly 1.
        return axis_aligned_ifs(2, 1.0 / 4.0,
                                {vec2(0.0, 0.0), vec2(3.0 / 4.0, 0.0), vec2(0.0, 3.0 / 4.0),
                                 vec2(3.0 / 4.0, 3.0 / 4.0)});
    }
    if (name == "sierpinski") {
        // Corner triangle system; dimension log3/log2.
        return axis_aligned_ifs(2, 0.5, {vec2(0.0, 0.0), vec2(0.5, 0.0), vec2(0.25, 0.5)});
    }
    if (name == "vicsek") {
        // Plus-shaped five-map system; dimension log5/log3.
        return axis_aligned_ifs(2, 1.0 / 3.0,
                                {vec2(0.0, 0.0), vec2(2.0 / 3.0, 0.0), vec2(1.0 / 3.0, 1.0 / 3.0),
                                 vec2(0.0, 2.0 / 3.0), vec2(2.0 / 3.0, 2.0 / 3.0)});
    }
    throw InvalidInputError("unknown preset: " + name);
}

}  // namespace simplexscope
