#include "simplexscope/pushforward.hpp"

#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Dense>

#include "simplexscope/errors.hpp"
#include "simplexscope/parallel.hpp"
#include "simplexscope/rng.hpp"

namespace simplexscope {

namespace {

constexpr double kMergeTol = 1e-12;

/// Exact packed cell key for d <= 3 (21 bits per signed coordinate);
/// hashed combination beyond that.
std::uint64_t cell_key(const std::int64_t* cell, int d) {
    if (d <= 3) {
        std::uint64_t key = 0;
        for (int i = 0; i < d; ++i) {
            key = (key << 21) | (static_cast<std::uint64_t>(cell[i] + (1 << 20)) & 0x1fffffULL);
        }
        return key;
    }
    std::uint64_t h = 1469598103934665603ULL;
    for (int i = 0; i < d; ++i) {
        h ^= static_cast<std::uint64_t>(cell[i]);
        h *= 1099511628211ULL;
    }
    return h;
}

struct RotationStats {
    KahanSum functional;  // sum over rotations of the per-rotation estimate
    std::int64_t max_cells = 0;
    bool atomic = false;
};

}  // namespace

RotationSample haar_rotation(int d, std::uint64_t seed) {
    if (d < 2) throw InvalidInputError("haar_rotation: d must be >= 2");
    Rng rng(seed);
    RotationSample sample;
    sample.seed = seed;
    for (;;) {
        Eigen::MatrixXd g(d, d);
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
        }
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
        Eigen::MatrixXd q = qr.householderQ();
        const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
        bool singular = false;
        for (int i = 0; i < d; ++i) {
            if (r(i, i) == 0.0) {
                singular = true;
                break;
            }
            if (r(i, i) < 0.0) q.col(i) = -q.col(i);
        }
        if (singular) continue;  // measure-zero event, resample
        sample.matrix = std::move(q);
        return sample;
    }
}

EmpiricalLambda lambda_pushforward(const PointSet& ps, double r, const RotationSample& rotation) {
    validate_point_set(ps);
    if (ps.size() == 0) throw InvalidInputError("lambda_pushforward: empty point set");
    if (!(r > 0.0)) throw InvalidInputError("lambda_pushforward: r must be positive");
    const int d = ps.dim();
    if (rotation.matrix.rows() != d || rotation.matrix.cols() != d) {
        throw InvalidInputError("lambda_pushforward: rotation dimension mismatch");
    }

    const Eigen::Index n = ps.size();
    // rotated[v] = r * Q * v, reused across all u.
    Eigen::MatrixXd rotated = r * (ps.points * rotation.matrix.transpose());

    EmpiricalLambda lambda;
    lambda.r = r;
    lambda.rotation = rotation.matrix;

    // Merge atoms within kMergeTol using a grid over atom positions.
    std::vector<double> coords;
    std::vector<double> weights;
    std::unordered_map<std::uint64_t, std::vector<std::int64_t>> buckets;
    std::vector<std::int64_t> cell(static_cast<std::size_t>(d));
    std::vector<std::int64_t> probe(static_cast<std::size_t>(d));
    Eigen::VectorXd z(d);
    std::vector<int> offsets(static_cast<std::size_t>(d));

    auto find_or_insert = [&](const Eigen::VectorXd& atom, double w) {
        for (int c = 0; c < d; ++c) {
            cell[static_cast<std::size_t>(c)] =
                static_cast<std::int64_t>(std::floor(atom[c] / kMergeTol));
        }
        // Probe all 3^d neighbor cells for an existing atom within tolerance.
        std::fill(offsets.begin(), offsets.end(), -1);
        for (;;) {
            for (int c = 0; c < d; ++c) probe[static_cast<std::size_t>(c)] = cell[static_cast<std::size_t>(c)] + offsets[static_cast<std::size_t>(c)];
            auto it = buckets.find(cell_key(probe.data(), d));
            if (it != buckets.end()) {
                for (const std::int64_t id : it->second) {
                    double sup = 0.0;
                    for (int c = 0; c < d; ++c) {
                        sup = std::max(sup, std::abs(coords[static_cast<std::size_t>(id) * d + c] - atom[c]));
                    }
                    if (sup <= kMergeTol) {
                        weights[static_cast<std::size_t>(id)] += w;
                        return;
                    }
                }
            }
            int i = d - 1;
            while (i >= 0 && offsets[static_cast<std::size_t>(i)] == 1) offsets[static_cast<std::size_t>(i--)] = -1;
            if (i < 0) break;
            ++offsets[static_cast<std::size_t>(i)];
        }
        const std::int64_t id = static_cast<std::int64_t>(weights.size());
        for (int c = 0; c < d; ++c) coords.push_back(atom[c]);
        weights.push_back(w);
        for (int c = 0; c < d; ++c) {
            cell[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(std::floor(atom[c] / kMergeTol));
        }
        buckets[cell_key(cell.data(), d)].push_back(id);
    };

    for (Eigen::Index u = 0; u < n; ++u) {
        for (Eigen::Index v = 0; v < n; ++v) {
            z = (ps.points.row(u) - rotated.row(v)).transpose();
            find_or_insert(z, ps.weights[u] * ps.weights[v]);
        }
    }

    const auto m = static_cast<Eigen::Index>(weights.size());
    lambda.atoms.resize(m, d);
    lambda.weights.resize(m);
    KahanSum mass;
    for (Eigen::Index i = 0; i < m; ++i) {
        for (int c = 0; c < d; ++c) lambda.atoms(i, c) = coords[static_cast<std::size_t>(i) * d + c];
        lambda.weights[i] = weights[static_cast<std::size_t>(i)];
        mass.add(weights[static_cast<std::size_t>(i)]);
    }
    lambda.total_mass = mass.value();
    return lambda;
}

LambdaFunctional lambda_Lk1_functional(const PointSet& ps, int k, double r, int n_rotations,
                                       double h, std::uint64_t seed) {
    validate_point_set(ps);
    if (ps.size() == 0) throw InvalidInputError("lambda_Lk1_functional: empty point set");
    if (k < 1) throw InvalidInputError("lambda_Lk1_functional: k must be >= 1");
    if (!(h > 0.0)) throw InvalidInputError("lambda_Lk1_functional: h must be positive");
    if (n_rotations < 1) throw InvalidInputError("lambda_Lk1_functional: need >= 1 rotations");
    if (!(r > 0.0)) throw InvalidInputError("lambda_Lk1_functional: r must be positive");

    const int d = ps.dim();
    const Eigen::Index n = ps.size();
    const double cell_volume = std::pow(h, d);

    auto chunks = run_chunked<RotationStats>(
        n_rotations, 1, [&](std::int64_t rot_idx, std::int64_t, std::int64_t) {
            RotationStats stats;
            const RotationSample rot =
                d >= 2 ? haar_rotation(d, derive_seed(seed, static_cast<std::uint64_t>(rot_idx)))
                       : RotationSample{Eigen::MatrixXd::Identity(1, 1), seed};
            const Eigen::MatrixXd rotated = r * (ps.points * rot.matrix.transpose());
            std::unordered_map<std::uint64_t, double> hist;
            std::vector<std::int64_t> cell(static_cast<std::size_t>(d));
            for (Eigen::Index u = 0; u < n; ++u) {
                for (Eigen::Index v = 0; v < n; ++v) {
                    for (int c = 0; c < d; ++c) {
                        cell[static_cast<std::size_t>(c)] = static_cast<std::int64_t>(
                            std::floor((ps.points(u, c) - rotated(v, c)) / h));
                    }
                    hist[cell_key(cell.data(), d)] += ps.weights[u] * ps.weights[v];
                }
            }
            // sum_cells (m / h^d)^{k+1} h^d = h^{-dk} sum m^{k+1}
            KahanSum powsum;
            for (const auto& [key, mass] : hist) {
                (void)key;
                powsum.add(std::pow(mass, k + 1));
            }
            stats.functional.add(powsum.value() / std::pow(cell_volume, k));
            stats.max_cells = static_cast<std::int64_t>(hist.size());
            stats.atomic = hist.size() == 1;
            return stats;
        });

    LambdaFunctional out;
    out.h = h;
    out.rotations = n_rotations;
    KahanSum total;
    for (const auto& c : chunks) {
        total.add(c.functional.value());
        out.max_occupied_cells = std::max(out.max_occupied_cells, c.max_cells);
        out.atomic_flag = out.atomic_flag || c.atomic;
    }
    out.value = total.value() / static_cast<double>(n_rotations);
    return out;
}

HoelderReport hoelder_check(const PointSet& ps, int k, double r, int n_rotations, double h,
                            std::uint64_t seed) {
    const LambdaFunctional f = lambda_Lk1_functional(ps, k, r, n_rotations, h, seed);
    HoelderReport report;
    report.functional = f.value;
    report.max_occupied_cells = f.max_occupied_cells;
    // Total lambda mass is 1 for a normalized point set.
    report.floor = 1.0 / std::pow(static_cast<double>(f.max_occupied_cells), k);
    report.pass = report.functional >= (1.0 - 1e-9) * report.floor;
    return report;
}

std::vector<CompareRow> compare_sides(const PointSet& ps, int k, double r,
                                      const std::vector<double>& eps_grid, int n_rotations,
                                      std::uint64_t seed, const SampleMode& pair_mode) {
    validate_point_set(ps);
    if (eps_grid.empty()) throw InvalidInputError("compare_sides: empty eps grid");
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw InvalidInputError("compare_sides: eps must be positive");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) {
            throw InvalidInputError("compare_sides: eps grid must be strictly decreasing");
        }
    }
    const int E = independent_edge_count(ps.dim(), k);
    std::vector<CompareRow> rows;
    for (const double eps : eps_grid) {
        CompareRow row;
        row.eps = eps;
        const double count = pair_count(ps, ps, k, r, eps, pair_mode);
        row.lhs = std::pow(eps, -E) * count;
        row.rhs = lambda_Lk1_functional(ps, k, r, n_rotations, eps, seed).value;
        row.ratio = row.rhs > 0.0 ? row.lhs / row.rhs
                                  : std::numeric_limits<double>::infinity();
        rows.push_back(row);
    }
    return rows;
}

}  // namespace simplexscope
