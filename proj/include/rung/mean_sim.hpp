#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rung/penalty.hpp"

namespace rung {

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(Point2 a, Point2 b);

struct OutlierModel {
    Point2 clean_center{0.0, 0.0};
    double clean_variance = 1.0;
    Point2 outlier_center{8.0, 8.0};
    double outlier_variance = 0.5;
};

struct SampleSet {
    std::vector<Point2> clean;
    std::vector<Point2> outliers;
    std::uint64_t seed = 0;

    std::vector<Point2> all() const;
    Point2 clean_mean() const;
    double outlier_ratio() const;
};

// `total` points of which round(ratio * total) are outliers. Clean points are
// drawn first, then outliers, each coordinate independently.
SampleSet generate_samples(std::size_t total, double outlier_ratio, std::uint64_t seed,
                           const OutlierModel& model = {});

struct MeanEstimate {
    Point2 value;
    std::vector<Point2> trajectory;  // starts with the initial point
    bool converged = false;
    std::size_t iterations_used = 0;
};

Point2 coordinate_median(std::span<const Point2> points);

// sum_i rho(||z - x_i||)
double estimation_objective(std::span<const Point2> points, const Penalty& p, Point2 z);

// Reweighting iterations z <- sum w_i x_i / sum w_i with w_i = p.weight(||z - x_i||),
// started from the coordinate-wise median unless `start` is given. Stops when a
// step moves z by at most `tol`, or when every weight is zero (not converged).
MeanEstimate estimate_mean(std::span<const Point2> points, const Penalty& p, std::size_t max_iter, double tol,
                           std::optional<Point2> start = std::nullopt);
MeanEstimate estimate_mean(const SampleSet& s, const Penalty& p, std::size_t max_iter, double tol,
                           std::optional<Point2> start = std::nullopt);

struct NamedEstimate {
    std::string estimator;
    MeanEstimate estimate;
};

struct BiasRow {
    std::string estimator;
    double ratio = 0.0;
    double distance = 0.0;
};

// Distance of every estimate to the mean of the clean samples.
std::vector<BiasRow> bias_report(const SampleSet& s, std::span<const NamedEstimate> estimates);

// Trajectory CSV `iter,x,y`; bias CSV `estimator,ratio,distance`.
void write_trajectory(const std::filesystem::path& path, const MeanEstimate& e);
void write_bias_report(const std::filesystem::path& path, std::span<const BiasRow> rows);

}  // namespace rung
