#include "rung/penalty.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rung/csv.hpp"

namespace rung {

Penalty::Penalty(PenaltyKind kind, double gamma, double epsilon) : kind_(kind), gamma_(gamma), epsilon_(epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("penalty epsilon must be positive");
    if (kind == PenaltyKind::mcp && !(gamma > 0.0)) throw std::invalid_argument("MCP gamma must be positive");
}

Penalty Penalty::mcp(double gamma, double epsilon) { return Penalty(PenaltyKind::mcp, gamma, epsilon); }
Penalty Penalty::l1(double epsilon) { return Penalty(PenaltyKind::l1, 0.0, epsilon); }
Penalty Penalty::l2(double epsilon) { return Penalty(PenaltyKind::l2, 0.0, epsilon); }

double Penalty::rho(double y) const {
    if (!(y >= 0.0)) throw std::domain_error("penalty argument must be non-negative");
    switch (kind_) {
        case PenaltyKind::mcp:
            return y < gamma_ ? y - y * y / (2.0 * gamma_) : 0.5 * gamma_;
        case PenaltyKind::l1:
            return y;
        case PenaltyKind::l2:
            return y * y;
    }
    return 0.0;
}

double Penalty::weight(double y) const {
    const double yc = std::max(y, epsilon_);
    switch (kind_) {
        case PenaltyKind::mcp:
            // exact zero at and beyond the threshold
            return yc >= gamma_ ? 0.0 : std::max(0.0, 0.5 / yc - 0.5 / gamma_);
        case PenaltyKind::l1:
            return 0.5 / yc;
        case PenaltyKind::l2:
            return 1.0;
    }
    return 0.0;
}

std::string Penalty::name() const {
    switch (kind_) {
        case PenaltyKind::mcp:
            return "mcp";
        case PenaltyKind::l1:
            return "l1";
        case PenaltyKind::l2:
            return "l2";
    }
    return "?";
}

std::string Penalty::describe() const {
    if (kind_ == PenaltyKind::mcp) return "mcp(gamma=" + format_double(gamma_) + ")";
    return name();
}

}  // namespace rung
