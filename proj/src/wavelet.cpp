#include "spdebayes/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spdebayes/errors.hpp"
#include "spdebayes/reaction.hpp"

namespace spdebayes {

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / i;
    return r;
}

// Roots of a polynomial (ascending coefficients) via the companion matrix.
std::vector<std::complex<double>> poly_roots(const std::vector<double>& coeffs) {
    const int deg = static_cast<int>(coeffs.size()) - 1;
    if (deg <= 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(deg, deg);
    for (int i = 0; i < deg; ++i) {
        companion(0, i) = -coeffs[deg - 1 - i] / coeffs[deg];
        if (i + 1 < deg) companion(i + 1, i) = 1.0;
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
    std::vector<std::complex<double>> roots(deg);
    for (int i = 0; i < deg; ++i) roots[i] = solver.eigenvalues()[i];
    return roots;
}

// phi at the integer points 1..2p-2 from the refinement fixed point.
std::vector<double> integer_point_values(const std::vector<double>& h) {
    const int len = static_cast<int>(h.size());
    const int m = len - 2;  // interior integer points
    Eigen::MatrixXd trans = Eigen::MatrixXd::Zero(m, m);
    const double sqrt2 = std::sqrt(2.0);
    for (int i = 1; i <= m; ++i) {
        for (int j = 1; j <= m; ++j) {
            const int tap = 2 * i - j;
            if (tap >= 0 && tap < len) trans(i - 1, j - 1) = sqrt2 * h[tap];
        }
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(trans);
    int best = 0;
    double best_dist = std::abs(solver.eigenvalues()[0] - std::complex<double>(1.0, 0.0));
    for (int i = 1; i < m; ++i) {
        const double dist = std::abs(solver.eigenvalues()[i] - std::complex<double>(1.0, 0.0));
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    if (best_dist > 1e-8) throw NumericalError("cascade: no unit eigenvalue for integer values");
    std::vector<double> values(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
        values[i] = solver.eigenvectors().col(best)[i].real();
        total += values[i];
    }
    for (double& v : values) v /= total;  // sum_k phi(k) = 1
    return values;
}

}  // namespace

std::vector<double> daubechies_filter(int p) {
    if (p < 1) throw ConfigError("daubechies_filter: p must be >= 1");
    if (p == 1) {
        const double v = 1.0 / std::sqrt(2.0);
        return {v, v};
    }
    // P(y) = sum_k C(p-1+k, k) y^k; its roots give the minimal-phase
    // spectral factor Q of |m0|^2 = cos^(2p)(w/2) P(sin^2(w/2)).
    std::vector<double> poly(p);
    for (int k = 0; k < p; ++k) poly[k] = binomial(p - 1 + k, k);
    const auto y_roots = poly_roots(poly);

    std::vector<std::complex<double>> q_roots;
    q_roots.reserve(y_roots.size());
    for (const auto& y : y_roots) {
        // z + 1/z = 2 - 4y  =>  z^2 - (2-4y) z + 1 = 0; keep |z| < 1.
        const std::complex<double> c = 2.0 - 4.0 * y;
        const std::complex<double> disc = std::sqrt(c * c - 4.0);
        const std::complex<double> z1 = (c + disc) / 2.0;
        const std::complex<double> z2 = (c - disc) / 2.0;
        q_roots.push_back(std::abs(z1) < std::abs(z2) ? z1 : z2);
    }

    // m0(z) = sqrt(2)/2^p * (1+z)^p * Q(z)/Q(1); expand in z.
    std::vector<std::complex<double>> coeffs{1.0};
    for (int i = 0; i < p; ++i) {  // multiply by (1 + z)
        std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            next[j] += coeffs[j];
            next[j + 1] += coeffs[j];
        }
        coeffs = std::move(next);
    }
    std::complex<double> q_at_one = 1.0;
    for (const auto& r : q_roots) {
        // multiply by (z - r)
        std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
        for (std::size_t j = 0; j < coeffs.size(); ++j) {
            next[j] += coeffs[j] * (-r);
            next[j + 1] += coeffs[j];
        }
        coeffs = std::move(next);
        q_at_one *= (1.0 - r);
    }
    const double scale = std::sqrt(2.0) / (std::pow(2.0, p) * q_at_one.real());
    std::vector<double> h(coeffs.size());
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        h[coeffs.size() - 1 - i] = coeffs[i].real() * scale;  // published ordering
    }
    return h;
}

double WaveletBasis::eval_haar_atom(const Atom& atom, double u) const {
    if (atom.is_scaling) return atom.norm;
    const double t = std::ldexp(u, atom.scale) - atom.translate;
    if (t < 0.0 || t >= 1.0) return 0.0;
    return t < 0.5 ? atom.norm : -atom.norm;
}

double WaveletBasis::eval_daubechies_atom(const Atom& atom, double u) const {
    const double t = std::ldexp(u, atom.scale) - atom.translate;
    const double support = static_cast<double>(2 * p_ - 1);
    if (t < 0.0 || t > support) return 0.0;
    const std::vector<double>& table = atom.is_scaling ? phi_table_ : psi_table_;
    const double pos = std::ldexp(t, cascade_depth_);
    auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= table.size()) i = table.size() - 2;
    const double frac = pos - static_cast<double>(i);
    return atom.norm * (table[i] + frac * (table[i + 1] - table[i]));
}

double WaveletBasis::eval(std::size_t index, double x) const {
    const double width = xi_.second - xi_.first;
    const double u = (x - xi_.first) / width;
    if (u < 0.0 || u >= 1.0) return 0.0;
    const Atom& atom = atoms_[index];
    return family_ == Family::Haar ? eval_haar_atom(atom, u) : eval_daubechies_atom(atom, u);
}

void WaveletBasis::eval_all(double x, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    std::size_t idx_buf[64];
    double val_buf[64];
    if (max_active_ <= 64) {
        const std::size_t count = sparse_eval(x, idx_buf, val_buf);
        for (std::size_t i = 0; i < count; ++i) out[idx_buf[i]] = val_buf[i];
    } else {
        for (std::size_t i = 0; i < dim(); ++i) out[i] = eval(i, x);
    }
}

std::size_t WaveletBasis::sparse_eval(double x, std::size_t* idx, double* val) const {
    const double width = xi_.second - xi_.first;
    const double u = (x - xi_.first) / width;
    if (u < 0.0 || u >= 1.0) return 0;
    std::size_t count = 0;
    if (family_ == Family::Haar) {
        idx[count] = 0;
        val[count++] = atoms_[0].norm;
        for (int level = 1; level <= max_level_; ++level) {
            const int scale = level - 1;
            const double scaled = std::ldexp(u, scale);
            const auto k = static_cast<int>(scaled);
            const double t = scaled - k;
            const std::size_t base = level_offset_[level];
            const double norm = atoms_[base].norm;
            idx[count] = base + static_cast<std::size_t>(k);
            val[count++] = (t < 0.5) ? norm : -norm;
        }
        return count;
    }
    // Daubechies: at most 2p-1 active translates per stored level.
    const int support = 2 * p_ - 1;
    for (std::size_t block = 0; block < level_offset_.size(); ++block) {
        const std::size_t base = level_offset_[block];
        const Atom& first = atoms_[base];
        const int scale = first.scale;
        const double scaled = std::ldexp(u, scale);
        const int k_max_level = (1 << scale) - support;  // largest admissible translate
        int k_lo = static_cast<int>(std::ceil(scaled)) - support;
        int k_hi = static_cast<int>(scaled);
        k_lo = std::max(k_lo, 0);
        k_hi = std::min(k_hi, k_max_level);
        for (int k = k_lo; k <= k_hi; ++k) {
            const std::size_t index = base + static_cast<std::size_t>(k);
            const double v = eval_daubechies_atom(atoms_[index], u);
            if (v != 0.0) {
                idx[count] = index;
                val[count++] = v;
            }
        }
    }
    return count;
}

double WaveletBasis::reconstruct(std::span<const double> coeffs, double x) const {
    if (coeffs.size() != dim()) throw ConfigError("reconstruct: coefficient dimension mismatch");
    std::vector<std::size_t> idx(max_active_);
    std::vector<double> val(max_active_);
    const std::size_t count = sparse_eval(x, idx.data(), val.data());
    double out = 0.0;
    for (std::size_t i = 0; i < count; ++i) out += coeffs[idx[i]] * val[i];
    return out;
}

WaveletBasis build_haar(std::pair<double, double> xi, int max_level) {
    if (!(xi.second > xi.first)) throw ConfigError("build_haar: degenerate interval");
    if (max_level < 0) throw ConfigError("build_haar: max_level must be >= 0");
    WaveletBasis basis;
    basis.family_ = WaveletBasis::Family::Haar;
    basis.xi_ = xi;
    basis.max_level_ = max_level;
    const double width = xi.second - xi.first;
    basis.quadrature_step_ = width * std::ldexp(1.0, -(max_level + 6));
    basis.max_active_ = static_cast<std::size_t>(max_level) + 1;

    basis.indices_.push_back({0, 0});
    basis.atoms_.push_back({0, 0, true, 1.0 / std::sqrt(width)});
    basis.level_offset_.assign(static_cast<std::size_t>(max_level) + 1, 0);
    for (int level = 1; level <= max_level; ++level) {
        const int scale = level - 1;
        basis.level_offset_[level] = basis.indices_.size();
        const double norm = std::sqrt(std::ldexp(1.0, scale) / width);
        for (int k = 0; k < (1 << scale); ++k) {
            basis.indices_.push_back({level, k});
            basis.atoms_.push_back({scale, k, false, norm});
        }
    }
    return basis;
}

WaveletBasis build_daubechies(std::pair<double, double> xi, int max_level, int p,
                              int cascade_depth) {
    if (!(xi.second > xi.first)) throw ConfigError("build_daubechies: degenerate interval");
    if (p < 2) throw ConfigError("build_daubechies: p must be >= 2");
    if (cascade_depth < 8) throw ConfigError("build_daubechies: cascade_depth must be >= 8");
    // Coarsest scale with 2^s >= 2 (2p - 1): below this the interior
    // translate set is too thin to be useful (any interior function keeps a
    // coefficient on a missing boundary-crossing translate at that scale,
    // leaving a permanent approximation floor).
    const int support = 2 * p - 1;
    int base_scale = 0;
    while ((1 << base_scale) < 2 * support) ++base_scale;
    if (max_level < base_scale) {
        throw ConfigError("build_daubechies: no interior translate fits below level " +
                          std::to_string(base_scale));
    }

    WaveletBasis basis;
    basis.family_ = WaveletBasis::Family::Daubechies;
    basis.xi_ = xi;
    basis.max_level_ = max_level;
    basis.p_ = p;
    basis.cascade_depth_ = cascade_depth;
    basis.base_scale_ = base_scale;
    const double width = xi.second - xi.first;
    basis.quadrature_step_ = width * std::ldexp(1.0, -(max_level + 6));

    basis.filter_ = daubechies_filter(p);
    const std::vector<double>& h = basis.filter_;

    // Mother scaling function by exact dyadic refinement.
    const auto interior = integer_point_values(h);
    std::vector<double> phi(static_cast<std::size_t>(support) + 1, 0.0);
    for (int i = 1; i < support; ++i) phi[i] = interior[i - 1];
    const double sqrt2 = std::sqrt(2.0);
    for (int depth = 0; depth < cascade_depth; ++depth) {
        const std::size_t coarse_n = phi.size();
        std::vector<double> fine(2 * (coarse_n - 1) + 1, 0.0);
        for (std::size_t j = 0; j < fine.size(); ++j) {
            if (j % 2 == 0) {
                fine[j] = phi[j / 2];
                continue;
            }
            double v = 0.0;
            for (int k = 0; k < 2 * p; ++k) {
                const long long src = static_cast<long long>(j) -
                                      static_cast<long long>(k) * (1ll << depth);
                if (src >= 0 && src < static_cast<long long>(coarse_n)) {
                    v += h[k] * phi[static_cast<std::size_t>(src)];
                }
            }
            fine[j] = sqrt2 * v;
        }
        phi = std::move(fine);
    }
    basis.phi_table_ = phi;

    // Mother wavelet psi(x) = sqrt(2) sum_k g_k phi(2x - k), g_k = (-1)^k h_{2p-1-k}.
    basis.psi_table_.assign(phi.size(), 0.0);
    const long long stride = 1ll << cascade_depth;
    for (std::size_t j = 0; j < basis.psi_table_.size(); ++j) {
        double v = 0.0;
        for (int k = 0; k < 2 * p; ++k) {
            const double g = ((k % 2) == 0 ? 1.0 : -1.0) * h[2 * p - 1 - k];
            const long long src = 2ll * static_cast<long long>(j) - k * stride;
            if (src >= 0 && src < static_cast<long long>(phi.size())) {
                v += g * phi[static_cast<std::size_t>(src)];
            }
        }
        basis.psi_table_[j] = sqrt2 * v;
    }

    // Index layout: interior scaling functions at the base scale (level s0),
    // wavelets of scale s at level s+1.
    {
        const double norm = std::sqrt(std::ldexp(1.0, base_scale) / width);
        basis.level_offset_.push_back(0);
        for (int k = 0; k <= (1 << base_scale) - support; ++k) {
            basis.indices_.push_back({base_scale, k});
            basis.atoms_.push_back({base_scale, k, true, norm});
        }
    }
    for (int level = base_scale + 1; level <= max_level; ++level) {
        const int scale = level - 1;
        basis.level_offset_.push_back(basis.indices_.size());
        const double norm = std::sqrt(std::ldexp(1.0, scale) / width);
        for (int k = 0; k <= (1 << scale) - support; ++k) {
            basis.indices_.push_back({level, k});
            basis.atoms_.push_back({scale, k, false, norm});
        }
    }
    basis.max_active_ = static_cast<std::size_t>(support) * basis.level_offset_.size();
    return basis;
}

std::vector<double> project(const WaveletBasis& basis, const std::function<double(double)>& f) {
    std::vector<double> coeffs(basis.dim(), 0.0);
    const auto [lo, hi] = basis.xi();
    const double step = basis.quadrature_step();
    const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step));
    std::vector<std::size_t> idx(basis.max_active());
    std::vector<double> val(basis.max_active());
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (static_cast<double>(i) + 0.5) * step;
        const double fx = f(x);
        if (fx == 0.0) continue;
        const std::size_t count = basis.sparse_eval(x, idx.data(), val.data());
        for (std::size_t j = 0; j < count; ++j) coeffs[idx[j]] += fx * val[j] * step;
    }
    return coeffs;
}

std::vector<double> project(const WaveletBasis& basis, const ReactionModel& f) {
    return project(basis, std::function<double(double)>([&f](double x) { return f.eval(x); }));
}

double sobolev_norm(const WaveletBasis& basis, std::span<const double> coeffs, double s) {
    if (coeffs.size() != basis.dim()) throw ConfigError("sobolev_norm: dimension mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const double weight = std::exp2(2.0 * s * basis.indices()[i].level);
        total += weight * coeffs[i] * coeffs[i];
    }
    return std::sqrt(total);
}

PriorSpec prior_covariance(const WaveletBasis& basis, double beta0) {
    if (!(beta0 >= 0.0)) throw ConfigError("prior_covariance: beta0 must be >= 0");
    PriorSpec spec;
    spec.beta0 = beta0;
    spec.max_level = basis.max_level();
    spec.variances.resize(basis.dim());
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        spec.variances[i] = std::exp2(-2.0 * beta0 * basis.indices()[i].level);
    }
    return spec;
}

std::pair<double, double> WaveletBasis::atom_unit_support(std::size_t index) const {
    const Atom& atom = atoms_[index];
    if (family_ == Family::Haar) {
        if (atom.is_scaling) return {0.0, 1.0};
        const double w = std::ldexp(1.0, -atom.scale);
        return {atom.translate * w, (atom.translate + 1) * w};
    }
    const double w = std::ldexp(1.0, -atom.scale);
    const double len = static_cast<double>(2 * p_ - 1);
    return {atom.translate * w, (atom.translate + len) * w};
}

std::vector<double> gram_matrix(const WaveletBasis& basis) {
    const std::size_t dim = basis.dim();
    std::vector<double> gram(dim * dim, 0.0);
    const auto [lo, hi] = basis.xi();
    const double width = hi - lo;

    if (basis.family() == WaveletBasis::Family::Haar) {
        // Midpoint on cells aligned with the finest Haar breakpoints: exact.
        const int m = basis.max_level() + 2;
        const auto n = static_cast<std::size_t>(1) << m;
        const double step = width / static_cast<double>(n);
        std::vector<std::size_t> idx(basis.max_active());
        std::vector<double> val(basis.max_active());
        for (std::size_t i = 0; i < n; ++i) {
            const double x = lo + (static_cast<double>(i) + 0.5) * step;
            const std::size_t count = basis.sparse_eval(x, idx.data(), val.data());
            for (std::size_t r = 0; r < count; ++r) {
                for (std::size_t c = 0; c < count; ++c) {
                    gram[idx[r] * dim + idx[c]] += val[r] * val[c] * step;
                }
            }
        }
        return gram;
    }

    // Daubechies: all atoms are piecewise linear with breakpoints on the
    // dyadic grid 2^-(scale+depth) in unit coordinates, and these grids are
    // nested. Integrating each pair on the finer of the two grids with the
    // exact linear-product rule (integral of a product of two linears over a
    // cell) gives the exact Gram of the interpolants.
    const int depth = basis.cascade_depth();
    for (std::size_t a = 0; a < dim; ++a) {
        const auto [a_lo, a_hi] = basis.atom_unit_support(a);
        for (std::size_t b = a; b < dim; ++b) {
            const auto [b_lo, b_hi] = basis.atom_unit_support(b);
            const double u_lo = std::max(a_lo, b_lo);
            const double u_hi = std::min(a_hi, b_hi);
            if (u_hi <= u_lo) continue;
            const int fine_scale =
                std::max(basis.atoms_[a].scale, basis.atoms_[b].scale) + depth;
            const double h_u = std::ldexp(1.0, -fine_scale);
            const auto j_lo = static_cast<long long>(std::llround(std::ldexp(u_lo, fine_scale)));
            const auto j_hi = static_cast<long long>(std::llround(std::ldexp(u_hi, fine_scale)));
            auto value = [&](std::size_t atom_idx, double u) {
                return basis.eval_daubechies_atom(basis.atoms_[atom_idx], u);
            };
            double acc = 0.0;
            double ua = static_cast<double>(j_lo) * h_u;
            double va0 = value(a, ua);
            double vb0 = value(b, ua);
            for (long long j = j_lo; j < j_hi; ++j) {
                const double ub = static_cast<double>(j + 1) * h_u;
                const double va1 = value(a, ub);
                const double vb1 = value(b, ub);
                acc += va0 * vb0 + (va0 + va1) * (vb0 + vb1) + va1 * vb1;
                va0 = va1;
                vb0 = vb1;
            }
            const double integral = acc * (h_u * width) / 6.0;
            gram[a * dim + b] = integral;
            gram[b * dim + a] = integral;
        }
    }
    return gram;
}

nlohmann::json basis_to_json(const WaveletBasis& basis) {
    nlohmann::json j;
    j["family"] = basis.family() == WaveletBasis::Family::Haar ? "haar" : "daubechies";
    j["xi"] = {basis.xi().first, basis.xi().second};
    j["max_level"] = basis.max_level();
    if (basis.family() == WaveletBasis::Family::Daubechies) {
        j["p"] = basis.daubechies_p();
        j["cascade_depth"] = basis.cascade_depth();
    }
    return j;
}

WaveletBasis basis_from_json(const nlohmann::json& j) {
    const std::string family = j.at("family").get<std::string>();
    const auto xi_arr = j.at("xi").get<std::vector<double>>();
    if (xi_arr.size() != 2) throw ConfigError("basis: xi must have two entries");
    const std::pair<double, double> xi{xi_arr[0], xi_arr[1]};
    const int max_level = j.at("max_level").get<int>();
    if (family == "haar") return build_haar(xi, max_level);
    if (family == "daubechies") {
        return build_daubechies(xi, max_level, j.at("p").get<int>(),
                                j.value("cascade_depth", 14));
    }
    throw ConfigError("unknown basis family: " + family);
}

}  // namespace spdebayes
