#pragma once

#include <string>

namespace rung {

enum class PenaltyKind { mcp, l1, l2 };

// Edge penalty rho(y) on a feature difference y >= 0 together with its
// reweighting derivative w(y) = d rho / d(y^2).
//
//   MCP: rho = y - y^2/(2 gamma) for y < gamma, gamma/2 beyond;
//        w   = max(0, 1/(2y) - 1/(2 gamma))
//   L1:  rho = y,   w = 1/(2y)
//   L2:  rho = y^2, w = 1
//
// For MCP and L1 the weight diverges at y = 0; y is clamped to epsilon before
// the division so the weight stays finite.
class Penalty {
public:
    static Penalty mcp(double gamma, double epsilon = kDefaultEpsilon);
    static Penalty l1(double epsilon = kDefaultEpsilon);
    static Penalty l2(double epsilon = kDefaultEpsilon);

    PenaltyKind kind() const { return kind_; }
    // Only meaningful for MCP.
    double gamma() const { return gamma_; }
    double epsilon() const { return epsilon_; }

    double rho(double y) const;
    double weight(double y) const;

    // "mcp(gamma=3)", "l1", "l2"
    std::string describe() const;
    // "mcp", "l1", "l2"
    std::string name() const;

    static constexpr double kDefaultEpsilon = 1e-12;

    friend bool operator==(const Penalty&, const Penalty&) = default;

private:
    Penalty(PenaltyKind kind, double gamma, double epsilon);

    PenaltyKind kind_;
    double gamma_;
    double epsilon_;
};

}  // namespace rung
