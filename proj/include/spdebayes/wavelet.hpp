#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace spdebayes {

class ReactionModel;

// Multi-index mu = (level, k) with |mu| = level. Index (0,0) is the Haar
// scaling function; level l >= 1 holds the wavelets of dyadic scale l-1
// (2^(l-1) translates for Haar). Daubechies families start at the coarsest
// scale whose interior translates fit inside Xi (see build_daubechies).
struct MultiIndex {
    int level = 0;
    int k = 0;

    friend bool operator==(const MultiIndex&, const MultiIndex&) = default;
};

struct PriorSpec {
    double beta0 = 0.0;
    int max_level = 0;
    std::vector<double> variances;  // 2^(-2*beta0*|mu|) per index
};

// Orthonormal wavelet family on the interval Xi. Immutable after
// construction; evaluation is pure and thread-safe.
class WaveletBasis {
public:
    enum class Family { Haar, Daubechies };

    Family family() const { return family_; }
    std::pair<double, double> xi() const { return xi_; }
    int max_level() const { return max_level_; }
    int daubechies_p() const { return p_; }
    int cascade_depth() const { return cascade_depth_; }
    double quadrature_step() const { return quadrature_step_; }

    std::size_t dim() const { return indices_.size(); }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    double eval(std::size_t index, double x) const;
    // Dense Psi(x); out.size() == dim(). Zero vector outside Xi.
    void eval_all(double x, std::span<double> out) const;

    // Sparse Psi(x): writes the nonzero entries, returns their count.
    // Buffers must hold at least max_active() entries.
    std::size_t sparse_eval(double x, std::size_t* idx, double* val) const;
    std::size_t max_active() const { return max_active_; }

    // sum_mu coeffs[mu] * psi_mu(x)
    double reconstruct(std::span<const double> coeffs, double x) const;

    // Tabulated mother scaling/wavelet values (Daubechies only), for tests.
    const std::vector<double>& phi_table() const { return phi_table_; }
    const std::vector<double>& psi_table() const { return psi_table_; }
    const std::vector<double>& filter() const { return filter_; }

    struct AtomInfo {
        int scale;
        int translate;
        bool is_scaling;
        double norm;
    };
    AtomInfo atom_info(std::size_t index) const {
        const Atom& a = atoms_[index];
        return {a.scale, a.translate, a.is_scaling, a.norm};
    }
    // Support of atom `index` in unit coordinates u = (x - lo)/|Xi|.
    std::pair<double, double> atom_unit_support(std::size_t index) const;

    friend WaveletBasis build_haar(std::pair<double, double> xi, int max_level);
    friend WaveletBasis build_daubechies(std::pair<double, double> xi, int max_level,
                                         int p, int cascade_depth);
    friend std::vector<double> gram_matrix(const WaveletBasis& basis);

private:
    Family family_ = Family::Haar;
    std::pair<double, double> xi_{-3.5, 3.5};
    int max_level_ = 0;
    int p_ = 0;
    int cascade_depth_ = 0;
    double quadrature_step_ = 0.0;
    std::size_t max_active_ = 1;
    std::vector<MultiIndex> indices_;

    // Per-index layout: dyadic scale, translate, scaling-vs-wavelet flag,
    // normalization

    struct Atom {
        int scale = 0;      // dyadic scale s: support width |Xi| * (supp len) / 2^s
        int translate = 0;  // k
        bool is_scaling = true;
        double norm = 1.0;  // sqrt(2^s / |Xi|)
    };
    std::vector<Atom> atoms_;
    std::vector<std::size_t> level_offset_;  // first index of each level

    // Daubechies tables on the dyadic grid over [0, 2p-1].
    std::vector<double> filter_;
    std::vector<double> phi_table_;
    std::vector<double> psi_table_;
    int base_scale_ = 0;  // s0: coarsest admissible scale

    double eval_haar_atom(const Atom& atom, double u) const;       // u in [0,1)
    double eval_daubechies_atom(const Atom& atom, double u) const;
};

// Scaling function |Xi|^(-1/2) on Xi plus Haar wavelets of scales
// 0..max_level-1; dimension 2^max_level; exactly orthonormal.
WaveletBasis build_haar(std::pair<double, double> xi, int max_level);

// Interior (zero-padded) Daubechies-p family: scaling functions at the
// coarsest scale s0 with supports inside Xi, wavelets of scales s0..M-1.
// Mother functions tabulated by exact dyadic refinement to 2^-cascade_depth
// and evaluated with linear interpolation.
WaveletBasis build_daubechies(std::pair<double, double> xi, int max_level,
                              int p, int cascade_depth);

// Daubechies-p scaling filter (2p taps, sum = sqrt(2)), computed by spectral
// factorization; exposed for the filter-identity tests.
std::vector<double> daubechies_filter(int p);

// Coefficients <f, psi_mu> by composite midpoint quadrature at the basis's
// quadrature step.
std::vector<double> project(const WaveletBasis& basis, const std::function<double(double)>& f);
std::vector<double> project(const WaveletBasis& basis, const ReactionModel& f);

// (sum_mu 2^(2 s |mu|) coeffs_mu^2)^(1/2)
double sobolev_norm(const WaveletBasis& basis, std::span<const double> coeffs, double s);

PriorSpec prior_covariance(const WaveletBasis& basis, double beta0);

// Gram matrix of the family by pairwise integration (piecewise-exact for
// Haar; Simpson on the common dyadic refinement for Daubechies). Row-major
// dim x dim; used by the orthonormality checks.
std::vector<double> gram_matrix(const WaveletBasis& basis);

nlohmann::json basis_to_json(const WaveletBasis& basis);
WaveletBasis basis_from_json(const nlohmann::json& j);

}  // namespace spdebayes
