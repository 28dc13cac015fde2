#pragma once

// Test-only reference computations. Nothing here calls into the library's
// numerical paths: graphs are rebuilt densely from raw edge lists and linear
// algebra is done with textbook dense algorithms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t n) { return Dense(n, std::vector<double>(n, 0.0)); }

// Dense 0/1 adjacency from raw pairs (either orientation, duplicates allowed).
inline Dense adjacency(std::size_t n, const std::vector<std::pair<int, int>>& pairs, bool self_loops) {
    Dense a = zeros(n);
    for (auto [i, j] : pairs) {
        if (i == j) continue;
        a[i][j] = 1.0;
        a[j][i] = 1.0;
    }
    if (self_loops) {
        for (std::size_t i = 0; i < n; ++i) a[i][i] = 1.0;
    }
    return a;
}

inline std::vector<double> degrees(const Dense& a) {
    std::vector<double> d(a.size(), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (double x : a[i]) d[i] += x;
    }
    return d;
}

inline Dense normalized(const Dense& a) {
    auto d = degrees(a);
    Dense t = zeros(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            if (a[i][j] != 0.0) t[i][j] = a[i][j] / std::sqrt(d[i] * d[j]);
        }
    }
    return t;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix.
inline std::vector<double> symmetric_eigenvalues(Dense m) {
    const std::size_t n = m.size();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += m[i][j] * m[i][j];
        }
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(m[p][q]) < 1e-300) continue;
                const double theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double mkp = m[k][p];
                    const double mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double mpk = m[p][k];
                    const double mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = m[i][i];
    std::sort(ev.begin(), ev.end());
    return ev;
}

inline double spectral_norm(const Dense& m) {
    auto ev = symmetric_eigenvalues(m);
    return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

// Gaussian elimination with partial pivoting; solves A X = B column by column.
inline Dense solve(Dense a, Dense b) {
    const std::size_t n = a.size();
    const std::size_t cols = b.empty() ? 0 : b[0].size();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        }
        if (std::abs(a[piv][c]) == 0.0) throw std::runtime_error("singular system");
        std::swap(a[c], a[piv]);
        std::swap(b[c], b[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c) continue;
            const double f = a[r][c] / a[c][c];
            if (f == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
            for (std::size_t k = 0; k < cols; ++k) b[r][k] -= f * b[c][k];
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t k = 0; k < cols; ++k) b[r][k] /= a[r][r];
    }
    return b;
}

inline Dense matmul(const Dense& a, const Dense& b) {
    const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
    Dense c(n, std::vector<double>(m, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][l] * b[l][j];
        }
    }
    return c;
}

// Random simple graph as raw pairs, each pair present with probability p.
inline std::vector<std::pair<int, int>> random_pairs(int n, double p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (u(rng) < p) out.emplace_back(i, j);
        }
    }
    return out;
}

inline Dense random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    Dense m(rows, std::vector<double>(cols));
    for (auto& r : m) {
        for (auto& x : r) x = nd(rng);
    }
    return m;
}

}  // namespace oracle
