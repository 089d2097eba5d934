#pragma once

#include <cblas.h>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <vector>

#include "cqnls/errors.hpp"
#include "cqnls/grid.hpp"

namespace cqnls {

/// Coupling constant a and its indicial data rho, beta, q0.
struct OperatorSpec {
    double a = 0.0;
    double rho = 0.0;
    double beta = 0.0;
    double q0 = std::numeric_limits<double>::infinity();

    static OperatorSpec make(double a) {
        if (!(a > -0.25)) throw DomainError("subcritical coupling required (a > -1/4)");
        OperatorSpec s;
        s.a = a;
        s.rho = 0.5 - std::sqrt(0.25 + a);
        s.beta = -s.rho;
        s.q0 = a >= 0.0 ? std::numeric_limits<double>::infinity() : 3.0 / s.rho;
        return s;
    }
};

struct Eigensystem {
    std::vector<double> values;   ///< ascending
    std::vector<double> vectors;  ///< column-major N x N, orthonormal
};

/**
 * @brief Tridiagonal discretization of L_a = -Delta + a/|x|^2 on radial functions.
 *
 * Works on v = r u at the free nodes. The stiffness part is the usual
 * three-point form of -v'' with v(0) = v(r_max) = 0. The potential enters as
 * a cell value p_i. For a < 0 it is chosen so that r^(beta+1), the
 * Friedrichs branch at the origin, is annihilated exactly, which keeps the
 * discrete form nonnegative and resolves the r^beta singularity; away from
 * the origin p_i / mu_i = a / r_i^2 + O(h^2). For a > 0 the potential is
 * already positive and is sampled directly, p_i = a mu_i / r_i^2, with the
 * half cell [0, r_1/2] lumped into the first node. Everything is stored in the symmetric
 * variables ut_i = sqrt(w_i) u_i, where the quadratic form is ut^T T ut.
 */
class DiscreteOperator {
public:
    DiscreteOperator(double a, GridPtr grid) : spec_(OperatorSpec::make(a)), grid_(std::move(grid)) {
        const int N = grid_->interior();
        const auto& r = grid_->nodes;
        const double b1 = spec_.beta + 1.0;
        auto phi = [&](int j) { return j < 0 ? 0.0 : std::pow(r[j], b1); };

        sdiag_.resize(N);
        soff_.resize(N - 1);
        p_.resize(N);
        d_.resize(N);
        e_.resize(N - 1);
        sqrt_w_.resize(N);
        for (int i = 0; i < N; ++i) {
            const double hl = r[i] - (i > 0 ? r[i - 1] : 0.0);
            const double hr = r[i + 1] - r[i];
            sdiag_[i] = 1.0 / hl + 1.0 / hr;
            if (i + 1 < N) soff_[i] = -1.0 / hr;
            if (spec_.a == 0.0) {
                p_[i] = 0.0;
            } else if (spec_.a > 0.0) {
                // the cell touching the origin is integrated with u held at u(r_1)
                const double cell = grid_->mu[i] + (i == 0 ? 0.5 * hl : 0.0);
                p_[i] = spec_.a * cell / (r[i] * r[i]);
            } else {
                const double f = phi(i);
                p_[i] = -((f - phi(i - 1)) / hl - (phi(i + 1) - f) / hr) / f;
            }
            sqrt_w_[i] = std::sqrt(grid_->weights[i]);
        }
        for (int i = 0; i < N; ++i) d_[i] = (sdiag_[i] + p_[i]) / grid_->mu[i];
        for (int i = 0; i + 1 < N; ++i) e_[i] = soff_[i] / std::sqrt(grid_->mu[i] * grid_->mu[i + 1]);

        lo_ = std::numeric_limits<double>::infinity();
        hi_ = -lo_;
        for (int i = 0; i < N; ++i) {
            const double rad = (i > 0 ? std::abs(e_[i - 1]) : 0.0) + (i + 1 < N ? std::abs(e_[i]) : 0.0);
            lo_ = std::min(lo_, d_[i] - rad);
            hi_ = std::max(hi_, d_[i] + rad);
        }
        cache_ = std::make_shared<Cache>();
    }

    const OperatorSpec& spec() const { return spec_; }
    double a() const { return spec_.a; }
    const GridPtr& grid() const { return grid_; }
    int dim() const { return grid_->interior(); }

    /// Symmetric tridiagonal T: diagonal and off-diagonal.
    const std::vector<double>& diag() const { return d_; }
    const std::vector<double>& offdiag() const { return e_; }
    /// Cell potential values p_i (stiffness units).
    const std::vector<double>& potential() const { return p_; }
    const std::vector<double>& sqrt_weights() const { return sqrt_w_; }
    /// Gershgorin enclosure of the spectrum of T.
    double spectrum_lo() const { return lo_; }
    double spectrum_hi() const { return hi_; }

    /// u -> ut = sqrt(w) u on the free nodes.
    std::vector<cplx> to_sym(const RadialField& f) const {
        require_same_grid(f, *grid_, "operator");
        std::vector<cplx> x(dim());
        for (int i = 0; i < dim(); ++i) x[i] = sqrt_w_[i] * f[i];
        return x;
    }

    RadialField from_sym(const std::vector<cplx>& x) const {
        RadialField f(grid_);
        for (int i = 0; i < dim(); ++i) f[i] = x[i] / sqrt_w_[i];
        return f;
    }

    /// y = T x.
    template <class V>
    void apply_sym(const std::vector<V>& x, std::vector<V>& y) const {
        const int N = dim();
        y.resize(N);
        if (N == 1) {
            y[0] = d_[0] * x[0];
            return;
        }
        y[0] = d_[0] * x[0] + e_[0] * x[1];
        for (int i = 1; i + 1 < N; ++i) y[i] = e_[i - 1] * x[i - 1] + d_[i] * x[i] + e_[i] * x[i + 1];
        y[N - 1] = e_[N - 2] * x[N - 2] + d_[N - 1] * x[N - 1];
    }

    /// ut^H T ut for the field, i.e. the Hdot^1_a seminorm squared.
    double quadratic_form(const RadialField& f) const {
        auto x = to_sym(f);
        std::vector<cplx> y;
        apply_sym(x, y);
        double s = 0.0;
        for (int i = 0; i < dim(); ++i) s += (std::conj(x[i]) * y[i]).real();
        return s;
    }

    /// Eigen decomposition of T, computed once and shared by copies.
    const Eigensystem& eigensystem() const {
        std::call_once(cache_->once, [this] {
            const int N = dim();
            Eigensystem es;
            // MRRR; the divide-and-conquer driver in the bundled OpenBLAS
            // returns wrong spectra on near-Toeplitz matrices.
            std::vector<double> dd = d_, off = e_;
            off.push_back(0.0);
            es.values.resize(N);
            es.vectors.assign(static_cast<size_t>(N) * N, 0.0);
            std::vector<lapack_int> support(2 * static_cast<size_t>(N));
            lapack_int m = 0;
            lapack_logical tryrac = 1;
            const int info = LAPACKE_dstemr(LAPACK_COL_MAJOR, 'V', 'A', N, dd.data(), off.data(), 0.0, 0.0, 0, 0, &m,
                                            es.values.data(), es.vectors.data(), N, N, support.data(), &tryrac);
            if (m != N) cache_->failed = true;
            if (info != 0) cache_->failed = true;
            cache_->es = std::move(es);
        });
        if (cache_->failed) throw SolverError("tridiagonal eigensolver failed");
        return cache_->es;
    }

private:
    struct Cache {
        std::once_flag once;
        Eigensystem es;
        bool failed = false;
    };

    OperatorSpec spec_;
    GridPtr grid_;
    std::vector<double> sdiag_, soff_, p_;
    std::vector<double> d_, e_, sqrt_w_;
    double lo_ = 0.0, hi_ = 0.0;
    std::shared_ptr<Cache> cache_;
};

inline DiscreteOperator build_operator(double a, GridPtr grid) { return DiscreteOperator(a, std::move(grid)); }

/// L_a f in the u variable; zero at the Dirichlet node.
inline RadialField apply_operator(const DiscreteOperator& op, const RadialField& f) {
    auto x = op.to_sym(f);
    std::vector<cplx> y;
    op.apply_sym(x, y);
    return op.from_sym(y);
}

namespace detail {

/// y = Z^T x (transpose = true) or y = Z x for complex x, via two real columns.
inline std::vector<cplx> real_matvec(const std::vector<double>& Z, int N, const std::vector<cplx>& x, bool transpose) {
    std::vector<double> in(2 * static_cast<size_t>(N)), out(2 * static_cast<size_t>(N));
    for (int i = 0; i < N; ++i) {
        in[i] = x[i].real();
        in[N + i] = x[i].imag();
    }
    cblas_dgemm(CblasColMajor, transpose ? CblasTrans : CblasNoTrans, CblasNoTrans, N, 2, N, 1.0, Z.data(), N,
                in.data(), N, 0.0, out.data(), N);
    std::vector<cplx> y(N);
    for (int i = 0; i < N; ++i) y[i] = cplx(out[i], out[N + i]);
    return y;
}

}  // namespace detail

/// exp(-i tau L_a) f by expansion in the cached eigenbasis.
inline RadialField linear_propagate(const DiscreteOperator& op, const RadialField& f, double tau) {
    if (tau == 0.0) {
        require_same_grid(f, *op.grid(), "linear_propagate");
        return f;
    }
    const auto& es = op.eigensystem();
    const int N = op.dim();
    auto c = detail::real_matvec(es.vectors, N, op.to_sym(f), true);
    for (int k = 0; k < N; ++k) c[k] *= std::polar(1.0, -tau * es.values[k]);
    return op.from_sym(detail::real_matvec(es.vectors, N, c, false));
}

/**
 * @brief exp(-i tau T) by Chebyshev expansion; cheap per application.
 *
 * Coefficients are Bessel values J_k(tau * halfwidth); the series is cut
 * where they fall below 1e-17 past the turning index.
 */
class ChebyshevPropagator {
public:
    ChebyshevPropagator(const DiscreteOperator& op, double tau) : op_(&op), tau_(tau) {
        center_ = 0.5 * (op.spectrum_hi() + op.spectrum_lo());
        half_ = 0.5 * (op.spectrum_hi() - op.spectrum_lo());
        const double z = std::abs(tau) * half_;
        const double sgn = tau < 0 ? -1.0 : 1.0;
        for (int k = 0;; ++k) {
            const double j = std::cyl_bessel_j(static_cast<double>(k), z);
            // (-i)^k, with tau < 0 flipping the sign of odd powers
            static const cplx cyc[4] = {cplx(1, 0), cplx(0, -1), cplx(-1, 0), cplx(0, 1)};
            cplx ik = cyc[k % 4];
            if (sgn < 0 && (k % 2)) ik = -ik;
            coef_.push_back((k == 0 ? 1.0 : 2.0) * j * ik);
            if (k > z + 8 && std::abs(j) < 1e-17) break;
            if (k > 100000) throw SolverError("Chebyshev series did not converge");
        }
        phase_ = std::polar(1.0, -tau * center_);
    }

    int terms() const { return static_cast<int>(coef_.size()); }

    void apply(std::vector<cplx>& x) const {
        const int N = op_->dim();
        std::vector<cplx> t0 = x, t1, t2(N), y(N);
        auto Xmul = [&](const std::vector<cplx>& in, std::vector<cplx>& out) {
            op_->apply_sym(in, out);
            for (int i = 0; i < N; ++i) out[i] = (out[i] - center_ * in[i]) / half_;
        };
        for (int i = 0; i < N; ++i) y[i] = coef_[0] * t0[i];
        if (coef_.size() > 1) {
            Xmul(t0, t1);
            for (int i = 0; i < N; ++i) y[i] += coef_[1] * t1[i];
        }
        for (size_t k = 2; k < coef_.size(); ++k) {
            Xmul(t1, t2);
            for (int i = 0; i < N; ++i) {
                t2[i] = 2.0 * t2[i] - t0[i];
                y[i] += coef_[k] * t2[i];
            }
            std::swap(t0, t1);
            std::swap(t1, t2);
        }
        for (int i = 0; i < N; ++i) x[i] = phase_ * y[i];
    }

    RadialField apply(const RadialField& f) const {
        auto x = op_->to_sym(f);
        apply(x);
        return op_->from_sym(x);
    }

private:
    const DiscreteOperator* op_;
    double tau_;
    double center_ = 0.0, half_ = 1.0;
    cplx phase_;
    std::vector<cplx> coef_;
};

/// Solve (alpha I + beta T) x = b for SPD shifts (alpha > 0, beta >= 0); Thomas algorithm.
template <class V>
std::vector<V> solve_shifted(const DiscreteOperator& op, double alpha, double beta, const std::vector<V>& b) {
    const int N = op.dim();
    const auto& d = op.diag();
    const auto& e = op.offdiag();
    std::vector<double> c(N);
    std::vector<V> x(N);
    double m = alpha + beta * d[0];
    c[0] = N > 1 ? beta * e[0] / m : 0.0;
    x[0] = b[0] / m;
    for (int i = 1; i < N; ++i) {
        const double sub = beta * e[i - 1];
        m = alpha + beta * d[i] - sub * c[i - 1];
        c[i] = i + 1 < N ? beta * e[i] / m : 0.0;
        x[i] = (b[i] - sub * x[i - 1]) / m;
    }
    for (int i = N - 2; i >= 0; --i) x[i] -= c[i] * x[i + 1];
    return x;
}

/// Solve (T + diag(s)) x = b with partial pivoting (indefinite systems).
inline std::vector<double> solve_tridiag_general(const DiscreteOperator& op, const std::vector<double>& s,
                                                 std::vector<double> b) {
    const int N = op.dim();
    std::vector<double> dl = op.offdiag(), du = op.offdiag(), dd(N);
    for (int i = 0; i < N; ++i) dd[i] = op.diag()[i] + s[i];
    const int info = LAPACKE_dgtsv(LAPACK_COL_MAJOR, N, 1, dl.data(), dd.data(), du.data(), b.data(), N);
    if (info != 0) throw SolverError("singular tridiagonal system");
    return b;
}

}  // namespace cqnls
