#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spdebayes/kernels.hpp"

#include <nlohmann/json_fwd.hpp>

namespace spdebayes {

class WaveletBasis;

// Compactly supported piecewise polynomial with local-coordinate Horner
// coefficients per piece; zero outside [breaks.front(), breaks.back()].
struct PiecewisePoly {
    std::vector<double> breaks;
    std::vector<double> coeffs;  // n_pieces x stride, low order first
    int stride = 0;

    int n_pieces() const { return static_cast<int>(breaks.size()) - 1; }
    kernels::PiecewisePolyView view() const {
        return {breaks.data(), coeffs.data(), n_pieces(), stride};
    }
    double eval(double x) const;
};

// Reaction function f: R -> R. Immutable; evaluation is pure.
class ReactionModel {
public:
    enum class Kind { Zero, Constant, PiecewisePolynomial, CoefficientExpansion };

    ReactionModel() : kind_(Kind::Zero) {}
    static ReactionModel zero() { return ReactionModel(); }
    static ReactionModel constant(double c);
    static ReactionModel piecewise(PiecewisePoly poly);
    static ReactionModel expansion(std::shared_ptr<const WaveletBasis> basis,
                                   std::vector<double> coeffs);

    Kind kind() const { return kind_; }
    double operator()(double x) const { return eval(x); }
    double eval(double x) const;
    void eval_field(std::span<const double> x, std::span<double> out) const;

    // Smallest interval outside of which the model vanishes identically;
    // the whole line for nonzero constants.
    std::pair<double, double> support() const;
    bool has_compact_support() const;

    const PiecewisePoly* piecewise_poly() const {
        return kind_ == Kind::PiecewisePolynomial ? &poly_ : nullptr;
    }
    double constant_value() const { return constant_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    const std::shared_ptr<const WaveletBasis>& basis() const { return basis_; }

private:
    Kind kind_;
    double constant_ = 0.0;
    PiecewisePoly poly_;
    std::shared_ptr<const WaveletBasis> basis_;
    std::vector<double> coeffs_;
};

// The paper's ground truth: -(x^3 - 9x) on [-3.25, 3.25], degree-7 Hermite
// tail splines on [3.25, 3.5] and [-3.5, -3.25] matching value and first
// three derivatives at the inner knot and all zero at the outer knot.
// C^3 on all of R, identically zero for |x| >= 3.5.
ReactionModel allen_cahn_truncated();

ReactionModel from_coefficients(std::shared_ptr<const WaveletBasis> basis,
                                std::vector<double> coeffs);

// Upper-biased Lipschitz estimate: max probed difference quotient over the
// support plus sup |f| (the latter covers behaviour against functions that
// vanish where f does not).
double lipschitz_constant(const ReactionModel& m, double probe_grid_step);

nlohmann::json model_to_json(const ReactionModel& m);
ReactionModel model_from_json(const nlohmann::json& j);

}  // namespace spdebayes
