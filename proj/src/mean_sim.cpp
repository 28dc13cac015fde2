#include "rung/mean_sim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rung/csv.hpp"
#include "rung/random.hpp"

namespace rung {

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<Point2> SampleSet::all() const {
    std::vector<Point2> out(clean);
    out.insert(out.end(), outliers.begin(), outliers.end());
    return out;
}

Point2 SampleSet::clean_mean() const {
    if (clean.empty()) throw std::invalid_argument("sample set has no clean points");
    Point2 m;
    for (auto p : clean) {
        m.x += p.x;
        m.y += p.y;
    }
    m.x /= static_cast<double>(clean.size());
    m.y /= static_cast<double>(clean.size());
    return m;
}

double SampleSet::outlier_ratio() const {
    const std::size_t total = clean.size() + outliers.size();
    return total == 0 ? 0.0 : static_cast<double>(outliers.size()) / static_cast<double>(total);
}

SampleSet generate_samples(std::size_t total, double outlier_ratio, std::uint64_t seed, const OutlierModel& model) {
    if (!(outlier_ratio >= 0.0 && outlier_ratio < 1.0)) throw std::invalid_argument("outlier ratio must lie in [0,1)");
    if (total == 0) throw std::invalid_argument("sample count must be positive");
    const auto m = static_cast<std::size_t>(std::llround(outlier_ratio * static_cast<double>(total)));
    if (m >= total) throw std::invalid_argument("outlier ratio leaves no clean samples");

    SampleSet s;
    s.seed = seed;
    Rng rng(seed);
    auto draw = [&](Point2 c, double var) {
        const double sd = std::sqrt(var);
        const double x = c.x + sd * standard_normal(rng);
        const double y = c.y + sd * standard_normal(rng);
        return Point2{x, y};
    };
    for (std::size_t i = 0; i < total - m; ++i) s.clean.push_back(draw(model.clean_center, model.clean_variance));
    for (std::size_t i = 0; i < m; ++i) s.outliers.push_back(draw(model.outlier_center, model.outlier_variance));
    return s;
}

Point2 coordinate_median(std::span<const Point2> points) {
    if (points.empty()) throw std::invalid_argument("empty sample set");
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    };
    std::vector<double> xs, ys;
    for (auto p : points) {
        xs.push_back(p.x);
        ys.push_back(p.y);
    }
    return {median(std::move(xs)), median(std::move(ys))};
}

double estimation_objective(std::span<const Point2> points, const Penalty& p, Point2 z) {
    double s = 0.0;
    for (auto x : points) s += p.rho(distance(z, x));
    return s;
}

MeanEstimate estimate_mean(std::span<const Point2> points, const Penalty& p, std::size_t max_iter, double tol,
                           std::optional<Point2> start) {
    if (points.empty()) throw std::invalid_argument("empty sample set");
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");

    MeanEstimate est;
    Point2 z = start ? *start : coordinate_median(points);
    est.trajectory.push_back(z);
    for (std::size_t k = 0; k < max_iter; ++k) {
        double sw = 0.0, sx = 0.0, sy = 0.0;
        for (auto x : points) {
            const double w = p.weight(distance(z, x));
            sw += w;
            sx += w * x.x;
            sy += w * x.y;
        }
        if (sw == 0.0) break;
        const Point2 next{sx / sw, sy / sw};
        const double step = distance(next, z);
        z = next;
        est.trajectory.push_back(z);
        ++est.iterations_used;
        if (step <= tol) {
            est.converged = true;
            break;
        }
    }
    est.value = z;
    return est;
}

MeanEstimate estimate_mean(const SampleSet& s, const Penalty& p, std::size_t max_iter, double tol,
                           std::optional<Point2> start) {
    auto pts = s.all();
    return estimate_mean(pts, p, max_iter, tol, start);
}

std::vector<BiasRow> bias_report(const SampleSet& s, std::span<const NamedEstimate> estimates) {
    if (estimates.empty()) throw std::invalid_argument("no estimates to report");
    const Point2 truth = s.clean_mean();
    std::vector<BiasRow> rows;
    for (const auto& e : estimates) rows.push_back({e.estimator, s.outlier_ratio(), distance(e.estimate.value, truth)});
    return rows;
}

void write_trajectory(const std::filesystem::path& path, const MeanEstimate& e) {
    CsvWriter w(path);
    w.row("iter", "x", "y");
    for (std::size_t k = 0; k < e.trajectory.size(); ++k) w.row(std::uint64_t{k}, e.trajectory[k].x, e.trajectory[k].y);
    w.close();
}

void write_bias_report(const std::filesystem::path& path, std::span<const BiasRow> rows) {
    CsvWriter w(path);
    w.row("estimator", "ratio", "distance");
    for (const auto& r : rows) w.row(r.estimator, r.ratio, r.distance);
    w.close();
}

}  // namespace rung
