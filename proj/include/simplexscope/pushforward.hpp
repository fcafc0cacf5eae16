#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "simplexscope/configmeasure.hpp"
#include "simplexscope/pointset.hpp"

namespace simplexscope {

/// Haar-distributed orthogonal matrix (full O(d): determinant +1 or -1).
struct RotationSample {
    Eigen::MatrixXd matrix;
    std::uint64_t seed = 0;
};

/// QR orthonormalization of a Gaussian matrix with the R-diagonal sign
/// convention; the result is exactly Haar on O(d). Deterministic per seed.
RotationSample haar_rotation(int d, std::uint64_t seed);

/// Push-forward of mu x mu under (u, v) -> u - r * rotation * v, one atom
/// per ordered support pair, atoms merged within 1e-12 in sup norm.
struct EmpiricalLambda {
    Eigen::MatrixXd atoms;    // m x d
    Eigen::VectorXd weights;  // positive, sums to total_mass
    double r = 1.0;
    Eigen::MatrixXd rotation;
    double total_mass = 0.0;
};

EmpiricalLambda lambda_pushforward(const PointSet& ps, double r, const RotationSample& rotation);

/// Histogram estimate of the Haar-averaged integral of lambda^{k+1}:
/// mean over sampled rotations of sum_cells (cell_mass / h^d)^{k+1} h^d.
struct LambdaFunctional {
    double value = 0.0;
    std::int64_t max_occupied_cells = 0;  // max over rotations
    bool atomic_flag = false;             // all mass in one cell for some rotation
    double h = 0.0;
    int rotations = 0;
};

LambdaFunctional lambda_Lk1_functional(const PointSet& ps, int k, double r, int n_rotations,
                                       double h, std::uint64_t seed);

/// Discrete Hoelder floor: functional >= (1 - 1e-9) * mass^{k+1} / M^k with
/// M the max occupied-cell count (exact for h <= 1).
struct HoelderReport {
    double functional = 0.0;
    double floor = 0.0;
    std::int64_t max_occupied_cells = 0;
    bool pass = false;
};

HoelderReport hoelder_check(const PointSet& ps, int k, double r, int n_rotations, double h,
                            std::uint64_t seed);

/// Side-by-side comparison of the pair-count estimate (scaled by
/// eps^{-|edges|}) against the lambda functional at h = eps.
struct CompareRow {
    double eps = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;
};

std::vector<CompareRow> compare_sides(const PointSet& ps, int k, double r,
                                      const std::vector<double>& eps_grid, int n_rotations,
                                      std::uint64_t seed,
                                      const SampleMode& pair_mode = SampleMode::exhaustive());

}  // namespace simplexscope
