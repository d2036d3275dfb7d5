#include "seqfo/certificates.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <vector>

namespace seqfo {

namespace {

std::string num(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void require(bool ok, const char* msg) {
    if (!ok) throw AssumptionViolationError(msg);
}

double spectral_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

/// Halton low-discrepancy point in [0,1)^d; `index` is 1-based.
void halton_point(long index, const std::vector<int>& bases, double* out) {
    for (size_t d = 0; d < bases.size(); ++d) {
        double f = 1.0, r = 0.0;
        long i = index;
        const int b = bases[d];
        while (i > 0) {
            f /= b;
            r += f * (i % b);
            i /= b;
        }
        out[d] = r;
    }
}

std::vector<int> first_primes(int count) {
    std::vector<int> primes;
    for (int n = 2; (int)primes.size() < count; ++n) {
        bool is_prime = true;
        for (int p : primes) {
            if (p * p > n) break;
            if (n % p == 0) {
                is_prime = false;
                break;
            }
        }
        if (is_prime) primes.push_back(n);
    }
    return primes;
}

}  // namespace

void RegularityConstants::validate() const {
    const double vals[] = {rho_f, G_u_f, L_f_x, L_f_u, L_h,
                           mu_J,  L_J_u, L_J_y, G_u_J, G_y_J};
    for (double v : vals)
        require(std::isfinite(v), "regularity constants must be finite");
    require(rho_f >= 0.0 && rho_f < 1.0,
            "contraction factor rho_f must lie in [0, 1)");
    require(G_u_f >= 0.0, "G_u_f must be nonnegative");
    require(L_f_x >= 0.0 && L_f_u >= 0.0,
            "dynamics Lipschitz constants must be nonnegative");
    require(L_h >= 0.0, "L_h must be nonnegative");
    require(mu_J > 0.0, "strong-monotonicity constant mu_J must be positive");
    require(L_J_u >= mu_J,
            "gradient Lipschitz constant L_J_u must be >= mu_J");
    require(L_J_y >= 0.0, "L_J_y must be nonnegative");
    require(G_u_J >= 0.0 && G_y_J >= 0.0,
            "gradient norm bounds must be nonnegative");
}

double lipschitz_sensitivity_constant(const RegularityConstants& c) {
    c.validate();
    const double denom = 1.0 - c.rho_f;
    return ((denom * c.L_f_u) + c.G_u_f * c.L_f_x) / (denom * denom);
}

double spectral_radius_2x2(const Eigen::Matrix2d& M) {
    if (!M.allFinite())
        throw InvalidArgumentError("spectral_radius_2x2: non-finite entry");
    const double a = M(0, 0), b = M(0, 1), c = M(1, 0), d = M(1, 1);
    const double disc = (a - d) * (a - d) + 4.0 * b * c;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        return std::max(std::abs((a + d + s) / 2.0),
                        std::abs((a + d - s) / 2.0));
    }
    // Complex conjugate pair: |lambda|^2 = det(M), positive when disc < 0.
    return std::sqrt(a * d - b * c);
}

Certificate build_certificate(const RegularityConstants& c, double alpha,
                              int T) {
    c.validate();
    if (!(alpha > 0.0) || !std::isfinite(alpha))
        throw InvalidArgumentError("build_certificate: alpha must be positive");
    if (T < 1) throw InvalidArgumentError("build_certificate: T must be >= 1");

    Certificate cert;
    cert.constants = c;
    cert.alpha = alpha;
    cert.T = T;
    cert.sensitivity_lipschitz = lipschitz_sensitivity_constant(c);
    cert.C = cert.sensitivity_lipschitz * (1.0 + c.L_h);
    cert.C1 = c.L_h * c.L_J_y + c.G_y_J * cert.C;
    cert.C2 = c.L_J_u + c.L_h * c.L_J_y;

    const double radicand =
        1.0 - 2.0 * alpha * c.mu_J + alpha * alpha * c.L_J_u * c.L_J_u;
    if (radicand < 0.0) {
        std::ostringstream os;
        os << "build_certificate: 1 - 2*alpha*mu_J + alpha^2*L_J_u^2 = "
           << radicand << " < 0 (alpha=" << alpha << ", mu_J=" << c.mu_J
           << ", L_J_u=" << c.L_J_u << ")";
        throw AssumptionViolationError(os.str());
    }

    cert.M << std::sqrt(radicand) + alpha * cert.C1, alpha * cert.C2, c.G_u_f,
        c.rho_f;
    cert.rho_M = spectral_radius_2x2(cert.M);

    // C == 0 means the point linearization equals the exact steady-state
    // sensitivity everywhere (linear plant), so the tracking error is
    // identically zero and certification does not need rho_M < 1.
    cert.certified = cert.rho_M < 1.0 || cert.C == 0.0;

    if (cert.certified) {
        if (cert.rho_M < 1.0) {
            const double common = alpha * alpha * cert.C *
                                  (c.G_u_J + c.L_h * c.G_y_J) /
                                  (1.0 - cert.rho_M);
            cert.sfo_error_bound = common * c.L_h / (1.0 - c.rho_f);
            cert.smtfo_error_slope =
                common * (1.0 + c.G_u_f / (1.0 - c.rho_f));
            cert.smtfo_error_bound =
                *cert.sfo_error_bound + (T - 1) * *cert.smtfo_error_slope;
        } else {  // certified via C == 0 with rho_M >= 1
            cert.sfo_error_bound = 0.0;
            cert.smtfo_error_slope = 0.0;
            cert.smtfo_error_bound = 0.0;
        }
    }
    return cert;
}

std::string Certificate::to_kv_block() const {
    std::ostringstream os;
    os << "alpha = " << num(alpha) << "\n";
    os << "T = " << T << "\n";
    os << "rho_f = " << num(constants.rho_f) << "\n";
    os << "G_u_f = " << num(constants.G_u_f) << "\n";
    os << "L_f_x = " << num(constants.L_f_x) << "\n";
    os << "L_f_u = " << num(constants.L_f_u) << "\n";
    os << "L_h = " << num(constants.L_h) << "\n";
    os << "mu_J = " << num(constants.mu_J) << "\n";
    os << "L_J_u = " << num(constants.L_J_u) << "\n";
    os << "L_J_y = " << num(constants.L_J_y) << "\n";
    os << "G_u_J = " << num(constants.G_u_J) << "\n";
    os << "G_y_J = " << num(constants.G_y_J) << "\n";
    os << "sensitivity_lipschitz = " << num(sensitivity_lipschitz) << "\n";
    os << "C = " << num(C) << "\n";
    os << "C1 = " << num(C1) << "\n";
    os << "C2 = " << num(C2) << "\n";
    os << "M11 = " << num(M(0, 0)) << "\n";
    os << "M12 = " << num(M(0, 1)) << "\n";
    os << "M21 = " << num(M(1, 0)) << "\n";
    os << "M22 = " << num(M(1, 1)) << "\n";
    os << "rho_M = " << num(rho_M) << "\n";
    os << "certified = " << (certified ? "true" : "false") << "\n";
    if (sfo_error_bound)
        os << "sfo_error_bound = " << num(*sfo_error_bound) << "\n";
    if (smtfo_error_bound)
        os << "smtfo_error_bound = " << num(*smtfo_error_bound) << "\n";
    if (smtfo_error_slope)
        os << "smtfo_error_slope = " << num(*smtfo_error_slope) << "\n";
    return os.str();
}

std::optional<double> design_stepsize(const RegularityConstants& c,
                                      double target, int grid) {
    c.validate();
    if (!(target > 0.0 && target < 1.0))
        throw InvalidArgumentError("design_stepsize: target must be in (0,1)");
    if (grid < 2)
        throw InvalidArgumentError("design_stepsize: grid must be >= 2");

    auto rho_at = [&](double alpha) {
        return build_certificate(c, alpha, 1).rho_M;
    };

    const double lg_lo = std::log10(1e-8), lg_hi = 0.0;
    auto alpha_at = [&](int i) {
        return std::pow(10.0, lg_lo + (lg_hi - lg_lo) * i / (grid - 1));
    };

    int best = -1;
    for (int i = 0; i < grid; ++i)
        if (rho_at(alpha_at(i)) <= target) best = i;
    if (best < 0) return std::nullopt;
    if (best == grid - 1) return alpha_at(best);

    // Bisect between the qualifying grid point and the next (failing)
    // one, keeping the invariant that `lo` qualifies.
    double lo = alpha_at(best), hi = alpha_at(best + 1);
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (rho_at(mid) <= target)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double output_tracking_error_bound(const RegularityConstants& c, double alpha,
                                   long k, double e0) {
    c.validate();
    if (k < 0) throw InvalidArgumentError("output_tracking_error_bound: k < 0");
    if (e0 < 0.0)
        throw InvalidArgumentError("output_tracking_error_bound: e0 < 0");
    if (!(alpha >= 0.0))
        throw InvalidArgumentError("output_tracking_error_bound: alpha < 0");
    return std::pow(c.rho_f, static_cast<double>(k)) * e0 +
           alpha * c.L_h * (c.G_u_J + c.L_h * c.G_y_J) / (1.0 - c.rho_f);
}

RegularityConstants estimate_constants(const Plant& plant,
                                       const ProblemSpec& prob,
                                       const Vec& state_lo,
                                       const Vec& state_hi, int samples,
                                       unsigned seed) {
    prob.validate();
    const long n = plant.state_dim(), p = plant.input_dim();
    if (state_lo.size() != n || state_hi.size() != n)
        throw InvalidArgumentError("estimate_constants: state box dimension");
    for (long i = 0; i < n; ++i)
        if (!(state_lo(i) <= state_hi(i)))
            throw InvalidArgumentError("estimate_constants: state box inverted");
    if (prob.lower.size() != p)
        throw InvalidArgumentError(
            "estimate_constants: problem box does not match plant input");
    if (samples < 2)
        throw InvalidArgumentError("estimate_constants: need >= 2 samples");

    const auto bases = first_primes(static_cast<int>(n + p));
    std::vector<double> unit(n + p);

    struct Sample {
        Vec x, u;
        Mat A, B;
        Vec y_ss;  // steady output at u
        Vec gu, gy;
    };
    std::vector<Sample> S;
    S.reserve(samples);

    for (int s = 0; s < samples; ++s) {
        // `seed` acts as a skip offset into the quasi-random sequence, so
        // different seeds give different (still deterministic) samplings.
        halton_point(static_cast<long>(seed) + 1 + s, bases, unit.data());
        Sample smp;
        smp.x.resize(n);
        smp.u.resize(p);
        for (long i = 0; i < n; ++i)
            smp.x(i) = state_lo(i) + unit[i] * (state_hi(i) - state_lo(i));
        for (long i = 0; i < p; ++i)
            smp.u(i) =
                prob.lower(i) + unit[n + i] * (prob.upper(i) - prob.lower(i));

        auto lin = linearize(plant, smp.x, smp.u);
        smp.A = std::move(lin.A);
        smp.B = std::move(lin.B);
        Vec xss = steady_state(plant, smp.u);
        smp.y_ss = plant.measure(xss, smp.u);
        smp.gu = prob.grad_u(smp.u, smp.y_ss);
        smp.gy = prob.grad_y(smp.u, smp.y_ss);
        S.push_back(std::move(smp));
    }

    double max_A = 0.0, max_B = 0.0, max_gu = 0.0, max_gy = 0.0;
    for (const auto& s : S) {
        max_A = std::max(max_A, spectral_norm(s.A));
        max_B = std::max(max_B, spectral_norm(s.B));
        max_gu = std::max(max_gu, s.gu.norm());
        max_gy = std::max(max_gy, s.gy.norm());
    }

    double L_f_x = 0.0, L_f_u = 0.0, L_h = 0.0, L_J_u = 0.0, L_J_y = 0.0;
    double mu_J = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < S.size(); ++i) {
        for (size_t j = i + 1; j < S.size(); ++j) {
            const auto &a = S[i], &b = S[j];
            const double dxu = std::sqrt((a.x - b.x).squaredNorm() +
                                         (a.u - b.u).squaredNorm());
            if (dxu > 1e-12) {
                L_f_x = std::max(L_f_x, spectral_norm(a.A - b.A) / dxu);
                L_f_u = std::max(L_f_u, spectral_norm(a.B - b.B) / dxu);
            }
            const double du = (a.u - b.u).norm();
            if (du > 1e-12) {
                L_h = std::max(L_h, (a.y_ss - b.y_ss).norm() / du);
                // Monotonicity quotient at a shared output value.
                Vec gu_b_at_ya = prob.grad_u(b.u, a.y_ss);
                const double quot =
                    (a.gu - gu_b_at_ya).dot(a.u - b.u) / (du * du);
                mu_J = std::min(mu_J, quot);
            }
            const double duy = std::sqrt((a.u - b.u).squaredNorm() +
                                         (a.y_ss - b.y_ss).squaredNorm());
            if (duy > 1e-12) {
                L_J_u = std::max(L_J_u, (a.gu - b.gu).norm() / duy);
                L_J_y = std::max(L_J_y, (a.gy - b.gy).norm() / duy);
            }
        }
    }

    constexpr double kInflate = 1.1;  // sup-type estimates: safety margin up
    constexpr double kDeflate = 0.9;  // min-type estimate: safety margin down

    RegularityConstants c;
    c.rho_f = kInflate * max_A;
    c.G_u_f = kInflate * max_B;
    c.L_f_x = kInflate * L_f_x;
    c.L_f_u = kInflate * L_f_u;
    c.L_h = kInflate * L_h;
    c.G_u_J = kInflate * max_gu;
    c.G_y_J = kInflate * max_gy;
    c.L_J_u = kInflate * L_J_u;
    c.L_J_y = kInflate * L_J_y;
    if (!std::isfinite(mu_J) || mu_J <= 0.0)
        throw AssumptionViolationError(
            "estimate_constants: sampled strong-monotonicity constant is not "
            "positive; the cost is not strongly convex in u on this region");
    c.mu_J = kDeflate * mu_J;
    if (c.rho_f >= 1.0)
        throw AssumptionViolationError(
            "estimate_constants: inflated contraction estimate rho_f >= 1");
    // Guard against sampling quirks leaving L_J_u below mu_J (validate()
    // requires L_J_u >= mu_J; the true constants always satisfy it).
    c.L_J_u = std::max(c.L_J_u, c.mu_J);
    c.validate();
    return c;
}

}  // namespace seqfo
