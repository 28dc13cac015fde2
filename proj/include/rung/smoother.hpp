#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rung/features.hpp"
#include "rung/graph.hpp"
#include "rung/penalty.hpp"

namespace rung {

// First-order IRLS: F <- F - eta * grad H^(F). Without an explicit eta the
// step is eta_scale / ||diag(q) - W (.) A~ + lambda I||_2, recomputed every
// iteration unless freeze_eta keeps the value from the first step.
struct IrlsSolver {
    std::optional<double> eta;
    double eta_scale = 1.0;
    bool freeze_eta = false;
};

// Quasi-Newton IRLS with the diagonal preconditioner diag(q) + lambda I.
struct QnIrlsSolver {};

using Solver = std::variant<IrlsSolver, QnIrlsSolver>;

std::string solver_label(const Solver& s);

// lambda_hat = 1/(1+lambda), lambda_hat in (0,1)
double lambda_from_hat(double lambda_hat);
double hat_from_lambda(double lambda);

struct SmootherConfig {
    Penalty penalty = Penalty::mcp(3.0);
    double lambda = 1.0 / 9.0;
    std::size_t iterations = 10;
    Solver solver = QnIrlsSolver{};
    bool energy_trace = true;
    PowerIterationOptions power{};

    void validate() const;
};

struct SmootherState {
    EdgeWeights weights;       // W at the current iterate
    std::vector<double> q;     // q_m = sum_j W_mj A_mj / d_m
    double energy = 0.0;       // H at the current iterate
    std::size_t iteration = 0;
    double eta = 0.0;          // IRLS step that produced this iterate, 0 otherwise
    std::vector<NodeId> degenerate_rows;  // QN rows with q_i + lambda == 0, left unchanged
};

// Raised when a step that carries a descent guarantee increases the energy.
class DescentViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ||f_i/sqrt(d_i) - f_j/sqrt(d_j)||_2 for an existing edge (i,j).
double edge_difference(const SparseGraph& g, const FeatureMatrix& f, NodeId i, NodeId j);

// y_e for every stored edge; 0 for self-loops.
std::vector<double> edge_differences(const SparseGraph& g, const FeatureMatrix& f);

// H(F) = sum_{edges, i != j} A_ij rho(y_ij) + lambda sum_i ||f_i - f0_i||^2
double objective(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                 const FeatureMatrix& f0);

EdgeWeights compute_weights(const SparseGraph& g, const Penalty& p, const FeatureMatrix& f);

std::vector<double> weighted_degree_ratio(const SparseGraph& g, const EdgeWeights& w);

// Quadratic majorizer H^(F) + C with W frozen at `anchor`; equals H at the anchor.
double upper_bound(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                   const FeatureMatrix& f0, const FeatureMatrix& anchor);

// 2((diag(q) - W (.) A~ + lambda I) F - lambda F0), W and q taken at `anchor`.
FeatureMatrix bound_gradient(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& f,
                             const FeatureMatrix& f0, const FeatureMatrix& anchor);

struct DenseMatrix {
    std::size_t n = 0;
    std::vector<double> a;

    explicit DenseMatrix(std::size_t size = 0) : n(size), a(size * size, 0.0) {}
    double& operator()(std::size_t i, std::size_t j) { return a[i * n + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * n + j]; }
};

// 2(diag(q) - W (.) A~ + lambda I) at `anchor`. Test scale only (n <= 64).
DenseMatrix bound_hessian_dense(const SparseGraph& g, const Penalty& p, double lambda, const FeatureMatrix& anchor);

SmootherState initial_state(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f0);

struct StepResult {
    FeatureMatrix features;
    SmootherState state;
};

StepResult irls_step(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f,
                     const FeatureMatrix& f0, const SmootherState& state);

StepResult qn_irls_step(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f,
                        const FeatureMatrix& f0, const SmootherState& state);

struct SmoothResult {
    FeatureMatrix features;
    std::vector<double> energy_trace;  // iterations+1 values when enabled, iteration 0 first
    SmootherState state;
    std::size_t degenerate_row_updates = 0;
};

// Called after every iteration, including iteration 0 (the input).
using SmoothObserver = std::function<void(const FeatureMatrix&, const SmootherState&)>;

SmoothResult smooth(const SparseGraph& g, const SmootherConfig& cfg, const FeatureMatrix& f0,
                    const SmoothObserver& observer = {});

// Energy increase tolerated before a guaranteed-descent step is reported as a
// violation: relative 1e-9 plus the per-edge epsilon-clamp allowance.
double descent_slack(const SparseGraph& g, const Penalty& p, double energy);

// EnergyTrace CSV: `iter,energy`.
void write_energy_trace(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace rung
