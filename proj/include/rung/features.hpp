#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace rung {

// n x d row-major matrix of node signals.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
    FeatureMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), values_(std::move(values)) {
        if (values_.size() != rows_ * cols_) throw std::invalid_argument("feature values do not match shape");
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t k) { return values_[i * cols_ + k]; }
    double operator()(std::size_t i, std::size_t k) const { return values_[i * cols_ + k]; }

    std::span<double> row(std::size_t i) { return {values_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool same_shape(const FeatureMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool all_finite() const;

    friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

double max_abs_diff(const FeatureMatrix& a, const FeatureMatrix& b);

// Features CSV: header `node,f0,...,f{d-1}`, one row per node in order.
FeatureMatrix read_features(const std::filesystem::path& path);
void write_features(const std::filesystem::path& path, const FeatureMatrix& f);

}  // namespace rung
