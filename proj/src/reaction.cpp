#include "spdebayes/reaction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "spdebayes/errors.hpp"
#include "spdebayes/wavelet.hpp"

namespace spdebayes {

namespace {

// Taylor shift: coefficients of p(x) in powers of (x - a), by repeated
// synthetic division. Exact for dyadic-rational inputs.
std::vector<double> shift_poly(std::vector<double> c, double a) {
    const int n = static_cast<int>(c.size());
    for (int i = 0; i < n; ++i) {
        for (int j = n - 2; j >= i; --j) c[j] += a * c[j + 1];
    }
    return c;
}

// Solves the 4x4 system for the degree 4..7 coefficients of a septic with
// prescribed value and first three derivatives at t = h (the lower-order
// coefficients 0..3 fix the data at t = 0).
std::array<double, 4> solve_tail_high_coeffs(double h, const std::array<double, 4>& rhs) {
    double A[4][5];
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            const int k = c + 4;
            double factor = 1.0;
            for (int d = 0; d < r; ++d) factor *= static_cast<double>(k - d);
            A[r][c] = factor * std::pow(h, k - r);
        }
        A[r][4] = rhs[r];
    }
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[pivot][col])) pivot = r;
        }
        std::swap(A[col], A[pivot]);
        for (int r = col + 1; r < 4; ++r) {
            const double f = A[r][col] / A[col][col];
            for (int c = col; c < 5; ++c) A[r][c] -= f * A[col][c];
        }
    }
    std::array<double, 4> x{};
    for (int r = 3; r >= 0; --r) {
        double s = A[r][4];
        for (int c = r + 1; c < 4; ++c) s -= A[r][c] * x[c];
        x[r] = s / A[r][r];
    }
    return x;
}

}  // namespace

double PiecewisePoly::eval(double x) const {
    double out;
    kernels::piecewise_poly_eval(view(), &x, &out, 1);
    return out;
}

ReactionModel ReactionModel::constant(double c) {
    ReactionModel m;
    m.kind_ = Kind::Constant;
    m.constant_ = c;
    return m;
}

ReactionModel ReactionModel::piecewise(PiecewisePoly poly) {
    if (poly.breaks.size() < 2 || poly.stride < 1 ||
        poly.coeffs.size() != static_cast<std::size_t>(poly.n_pieces()) * poly.stride) {
        throw ConfigError("ReactionModel: malformed piecewise polynomial");
    }
    if (!std::is_sorted(poly.breaks.begin(), poly.breaks.end())) {
        throw ConfigError("ReactionModel: breakpoints must be ascending");
    }
    ReactionModel m;
    m.kind_ = Kind::PiecewisePolynomial;
    m.poly_ = std::move(poly);
    return m;
}

ReactionModel ReactionModel::expansion(std::shared_ptr<const WaveletBasis> basis,
                                       std::vector<double> coeffs) {
    if (!basis) throw ConfigError("ReactionModel: null basis");
    if (coeffs.size() != basis->dim()) {
        throw ConfigError("ReactionModel: coefficient length does not match basis dimension");
    }
    ReactionModel m;
    m.kind_ = Kind::CoefficientExpansion;
    m.basis_ = std::move(basis);
    m.coeffs_ = std::move(coeffs);
    return m;
}

double ReactionModel::eval(double x) const {
    switch (kind_) {
        case Kind::Zero:
            return 0.0;
        case Kind::Constant:
            return constant_;
        case Kind::PiecewisePolynomial:
            return poly_.eval(x);
        case Kind::CoefficientExpansion:
            return basis_->reconstruct(coeffs_, x);
    }
    return 0.0;
}

void ReactionModel::eval_field(std::span<const double> x, std::span<double> out) const {
    switch (kind_) {
        case Kind::Zero:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case Kind::Constant:
            std::fill(out.begin(), out.end(), constant_);
            return;
        case Kind::PiecewisePolynomial:
            kernels::piecewise_poly_eval(poly_.view(), x.data(), out.data(), x.size());
            return;
        case Kind::CoefficientExpansion:
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = basis_->reconstruct(coeffs_, x[i]);
            return;
    }
}

std::pair<double, double> ReactionModel::support() const {
    switch (kind_) {
        case Kind::Zero:
            return {0.0, 0.0};
        case Kind::Constant:
            if (constant_ == 0.0) return {0.0, 0.0};
            return {-std::numeric_limits<double>::infinity(),
                    std::numeric_limits<double>::infinity()};
        case Kind::PiecewisePolynomial:
            return {poly_.breaks.front(), poly_.breaks.back()};
        case Kind::CoefficientExpansion:
            return basis_->xi();
    }
    return {0.0, 0.0};
}

bool ReactionModel::has_compact_support() const {
    return !(kind_ == Kind::Constant && constant_ != 0.0);
}

ReactionModel allen_cahn_truncated() {
    constexpr double inner = 3.25;
    constexpr double outer = 3.5;
    constexpr double h = outer - inner;

    PiecewisePoly poly;
    poly.stride = 8;
    poly.breaks = {-outer, -inner, inner, outer};
    poly.coeffs.assign(3 * 8, 0.0);

    // Core -(x^3 - 9x) re-expanded around the left endpoint -3.25.
    const std::vector<double> core_abs = {0.0, 9.0, 0.0, -1.0};
    const std::vector<double> core_local = shift_poly(core_abs, -inner);
    for (int d = 0; d < 4; ++d) poly.coeffs[8 + d] = core_local[d];

    // Value and derivatives of the core at +-3.25.
    const double f_a = 9.0 * inner - inner * inner * inner;
    const double fp_a = 9.0 - 3.0 * inner * inner;
    const double fpp_a = -6.0 * inner;
    const double fppp_a = -6.0;

    // Right tail on [3.25, 3.5]: matches the core at t=0, flat zero at t=h.
    {
        const std::array<double, 4> low = {f_a, fp_a, fpp_a / 2.0, fppp_a / 6.0};
        std::array<double, 4> rhs{};
        // Require p(h) = p'(h) = p''(h) = p'''(h) = 0 given the low coefficients.
        for (int r = 0; r < 4; ++r) {
            double s = 0.0;
            for (int k = r; k < 4; ++k) {
                double factor = 1.0;
                for (int d = 0; d < r; ++d) factor *= static_cast<double>(k - d);
                s += factor * low[k] * std::pow(h, k - r);
            }
            rhs[r] = -s;
        }
        const auto high = solve_tail_high_coeffs(h, rhs);
        for (int d = 0; d < 4; ++d) poly.coeffs[16 + d] = low[d];
        for (int d = 0; d < 4; ++d) poly.coeffs[16 + 4 + d] = high[d];
    }

    // Left tail on [-3.5, -3.25]: flat zero at t=0, matches the core at t=h.
    {
        const std::array<double, 4> rhs = {-f_a, fp_a, -fpp_a, fppp_a};
        const auto high = solve_tail_high_coeffs(h, rhs);
        for (int d = 0; d < 4; ++d) poly.coeffs[4 + d] = high[d];
    }

    return ReactionModel::piecewise(std::move(poly));
}

ReactionModel from_coefficients(std::shared_ptr<const WaveletBasis> basis,
                                std::vector<double> coeffs) {
    return ReactionModel::expansion(std::move(basis), std::move(coeffs));
}

double lipschitz_constant(const ReactionModel& m, double probe_grid_step) {
    if (!(probe_grid_step > 0.0)) throw ConfigError("lipschitz_constant: step must be positive");
    if (m.kind() == ReactionModel::Kind::Zero) return 0.0;
    if (m.kind() == ReactionModel::Kind::Constant) return std::abs(m.constant_value());

    const auto [lo, hi] = m.support();
    double max_slope = 0.0;
    double sup = 0.0;
    double prev = m.eval(lo - probe_grid_step);
    for (double x = lo; x <= hi + probe_grid_step; x += probe_grid_step) {
        const double v = m.eval(x);
        max_slope = std::max(max_slope, std::abs(v - prev) / probe_grid_step);
        sup = std::max(sup, std::abs(v));
        prev = v;
    }
    return max_slope + sup;
}

nlohmann::json model_to_json(const ReactionModel& m) {
    using nlohmann::json;
    switch (m.kind()) {
        case ReactionModel::Kind::Zero:
            return json{{"kind", "zero"}};
        case ReactionModel::Kind::Constant:
            return json{{"kind", "constant"}, {"value", m.constant_value()}};
        case ReactionModel::Kind::PiecewisePolynomial: {
            const PiecewisePoly& p = *m.piecewise_poly();
            if (p.breaks == allen_cahn_truncated().piecewise_poly()->breaks &&
                p.coeffs == allen_cahn_truncated().piecewise_poly()->coeffs) {
                return json{{"kind", "allen_cahn_truncated"}};
            }
            return json{{"kind", "piecewise_polynomial"},
                        {"breaks", p.breaks},
                        {"coeffs", p.coeffs},
                        {"stride", p.stride}};
        }
        case ReactionModel::Kind::CoefficientExpansion:
            return json{{"kind", "coefficient_expansion"},
                        {"basis", basis_to_json(*m.basis())},
                        {"coeffs", m.coefficients()}};
    }
    return json{{"kind", "zero"}};
}

ReactionModel model_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "zero") return ReactionModel::zero();
    if (kind == "constant") return ReactionModel::constant(j.at("value").get<double>());
    if (kind == "allen_cahn_truncated") return allen_cahn_truncated();
    if (kind == "piecewise_polynomial") {
        PiecewisePoly p;
        p.breaks = j.at("breaks").get<std::vector<double>>();
        p.coeffs = j.at("coeffs").get<std::vector<double>>();
        p.stride = j.at("stride").get<int>();
        return ReactionModel::piecewise(std::move(p));
    }
    if (kind == "coefficient_expansion") {
        auto basis = std::make_shared<WaveletBasis>(basis_from_json(j.at("basis")));
        return from_coefficients(std::move(basis), j.at("coeffs").get<std::vector<double>>());
    }
    throw ConfigError("unknown reaction model kind: " + kind);
}

}  // namespace spdebayes
