#include "rung/features.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rung/csv.hpp"

namespace rung {

bool FeatureMatrix::all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

double max_abs_diff(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("shape mismatch");
    double m = 0.0;
    auto va = a.values();
    auto vb = b.values();
    for (std::size_t i = 0; i < va.size(); ++i) m = std::max(m, std::abs(va[i] - vb[i]));
    return m;
}

FeatureMatrix read_features(const std::filesystem::path& path) {
    CsvReader r(path);
    const auto& h = r.header();
    if (h.size() < 2 || h[0] != "node") r.fail("expected header 'node,f0,...'");
    for (std::size_t k = 1; k < h.size(); ++k) {
        if (h[k] != "f" + std::to_string(k - 1)) r.fail("expected column 'f" + std::to_string(k - 1) + "'");
    }
    const std::size_t d = h.size() - 1;
    std::vector<double> values;
    std::vector<std::string> f;
    std::size_t rows = 0;
    while (r.next(f)) {
        if (f.size() != d + 1) r.fail("expected " + std::to_string(d + 1) + " fields, got " + std::to_string(f.size()));
        if (r.to_int(f[0]) != static_cast<long long>(rows)) r.fail("node ids must be 0..n-1 in order");
        for (std::size_t k = 1; k <= d; ++k) values.push_back(r.to_double(f[k]));
        ++rows;
    }
    if (rows == 0) r.fail("no feature rows");
    return FeatureMatrix(rows, d, std::move(values));
}

void write_features(const std::filesystem::path& path, const FeatureMatrix& f) {
    CsvWriter w(path);
    w << "node";
    for (std::size_t k = 0; k < f.cols(); ++k) w << ("f" + std::to_string(k));
    w.end_row();
    for (std::size_t i = 0; i < f.rows(); ++i) {
        w << std::uint64_t{i};
        for (double x : f.row(i)) w << x;
        w.end_row();
    }
    w.close();
}

}  // namespace rung
