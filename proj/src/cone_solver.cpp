#include "vucoord/cone_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vucoord {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kStepScale = 0.99;
constexpr int kSigmaExponent = 3;

/// Nesterov-Todd scaling: diagonal for the orthant block, hyperbolic
/// Householder (beta, v) per SOC block. W z = W^{-1} s = lmbda.
struct Scaling {
    VectorXd d;  // orthant diagonal
    std::vector<double> beta;
    std::vector<VectorXd> v;
};

double soc_residual_norm(const VectorXd& u) {
    // sqrt(u0^2 - |u1|^2) for u strictly inside the cone, computed stably
    const double head = u(0);
    const double tail = u.size() > 1 ? u.tail(u.size() - 1).norm() : 0.0;
    return std::sqrt(std::max(head - tail, 0.0) * (head + tail));
}

class ConeOps {
public:
    explicit ConeOps(const ConeDims& dims) : dims_(dims) {
        offsets_.reserve(dims.soc.size());
        int at = dims.orthant;
        for (int q : dims.soc) {
            offsets_.push_back(at);
            at += q;
        }
        total_ = at;
    }

    int total() const { return total_; }
    int degree() const { return dims_.degree(); }

    VectorXd identity() const {
        VectorXd e = VectorXd::Zero(total_);
        e.head(dims_.orthant).setOnes();
        for (size_t k = 0; k < offsets_.size(); ++k) e(offsets_[k]) = 1.0;
        return e;
    }

    /// min {t | u + t*e >= 0}; negative when u is strictly inside the cone.
    double max_step(const VectorXd& u) const {
        double t = -std::numeric_limits<double>::infinity();
        if (dims_.orthant > 0) t = std::max(t, -u.head(dims_.orthant).minCoeff());
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int q = dims_.soc[k];
            const double tail = q > 1 ? u.segment(offsets_[k] + 1, q - 1).norm() : 0.0;
            t = std::max(t, tail - u(offsets_[k]));
        }
        return t == -std::numeric_limits<double>::infinity() ? 0.0 : t;
    }

    /// Jordan product x o y.
    VectorXd product(const VectorXd& x, const VectorXd& y) const {
        VectorXd out(total_);
        out.head(dims_.orthant) = x.head(dims_.orthant).cwiseProduct(y.head(dims_.orthant));
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int o = offsets_[k];
            const int q = dims_.soc[k];
            out(o) = x.segment(o, q).dot(y.segment(o, q));
            if (q > 1)
                out.segment(o + 1, q - 1) =
                    x(o) * y.segment(o + 1, q - 1) + y(o) * x.segment(o + 1, q - 1);
        }
        return out;
    }

    /// x := lmbda o\ x (inverse Jordan product).
    void inverse_product(const VectorXd& lmbda, VectorXd& x) const {
        x.head(dims_.orthant).array() /= lmbda.head(dims_.orthant).array();
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int o = offsets_[k];
            const int q = dims_.soc[k];
            if (q == 1) {
                x(o) /= lmbda(o);
                continue;
            }
            const double aa = soc_residual_norm(lmbda.segment(o, q));
            const double aa2 = aa * aa;
            const double cc = x(o);
            const double dd = lmbda.segment(o + 1, q - 1).dot(x.segment(o + 1, q - 1));
            x(o) = (cc * lmbda(o) - dd) / aa2;
            x.segment(o + 1, q - 1) =
                (x.segment(o + 1, q - 1) * (aa2 / lmbda(o)) +
                 lmbda.segment(o + 1, q - 1) * (dd / lmbda(o) - cc)) /
                aa2;
        }
    }

    Scaling compute_scaling(const VectorXd& s, const VectorXd& z, VectorXd& lmbda) const {
        Scaling w;
        w.d = (s.head(dims_.orthant).array() / z.head(dims_.orthant).array()).sqrt();
        lmbda.head(dims_.orthant) =
            (s.head(dims_.orthant).array() * z.head(dims_.orthant).array()).sqrt();
        w.beta.resize(offsets_.size());
        w.v.resize(offsets_.size());
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int o = offsets_[k];
            const int q = dims_.soc[k];
            const VectorXd sk = s.segment(o, q);
            const VectorXd zk = z.segment(o, q);
            const double aa = soc_residual_norm(sk);
            const double bb = soc_residual_norm(zk);
            w.beta[k] = std::sqrt(aa / bb);
            const double cc = std::sqrt((sk.dot(zk) / aa / bb + 1.0) / 2.0);

            VectorXd vk = zk / bb;
            vk.tail(q - 1) *= -1.0; // J * (zk/bb)
            vk += sk / aa;
            vk /= 2.0 * cc;
            vk(0) += 1.0;
            vk /= std::sqrt(2.0 * vk(0));
            w.v[k] = std::move(vk);

            const double dd = 2.0 * cc + sk(0) / aa + zk(0) / bb;
            lmbda(o) = cc;
            lmbda.segment(o + 1, q - 1) = (cc + zk(0) / bb) / dd * sk.tail(q - 1) / aa +
                                          (cc + sk(0) / aa) / dd * zk.tail(q - 1) / bb;
            lmbda.segment(o, q) *= std::sqrt(aa * bb);
        }
        return w;
    }

    /// x := W x (inverse = false) or x := W^{-1} x (inverse = true).
    void scale(const Scaling& w, VectorXd& x, bool inverse) const {
        if (inverse)
            x.head(dims_.orthant).array() /= w.d.array();
        else
            x.head(dims_.orthant).array() *= w.d.array();
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int o = offsets_[k];
            const int q = dims_.soc[k];
            const VectorXd& v = w.v[k];
            VectorXd xk = x.segment(o, q);
            if (inverse) {
                // W^{-1} = 1/beta * J (2 v v' - J) J
                xk.tail(q - 1) *= -1.0;
                VectorXd hk = 2.0 * v * v.dot(xk);
                hk(0) -= xk(0);
                hk.tail(q - 1) += xk.tail(q - 1);
                hk.tail(q - 1) *= -1.0;
                x.segment(o, q) = hk / w.beta[k];
            } else {
                VectorXd hk = 2.0 * v * v.dot(xk);
                hk(0) -= xk(0);
                hk.tail(q - 1) += xk.tail(q - 1);
                x.segment(o, q) = hk * w.beta[k];
            }
        }
    }

    /// Columnwise W^{-1} G.
    MatrixXd scale_matrix_inverse(const Scaling& w, const MatrixXd& g) const {
        MatrixXd out = g;
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            VectorXd col = out.col(c);
            scale(w, col, true);
            out.col(c) = col;
        }
        return out;
    }

    /// x := H(lmbda^{1/2}) x, the metric in which max_step measures the
    /// distance of a scaled direction to the cone boundary.
    void scale2(const VectorXd& lmbda, VectorXd& x) const {
        x.head(dims_.orthant).array() /= lmbda.head(dims_.orthant).array();
        for (size_t k = 0; k < offsets_.size(); ++k) {
            const int o = offsets_[k];
            const int q = dims_.soc[k];
            const double a = soc_residual_norm(lmbda.segment(o, q));
            const double lx = (lmbda(o) * x(o) -
                               lmbda.segment(o + 1, q - 1).dot(x.segment(o + 1, q - 1))) /
                              a;
            const double x0 = x(o);
            x(o) = lx;
            const double c = -(lx + x0) / (lmbda(o) / a + 1.0) / a;
            if (q > 1) x.segment(o + 1, q - 1) += c * lmbda.segment(o + 1, q - 1);
            x.segment(o, q) *= 1.0 / a;
        }
    }

private:
    ConeDims dims_;
    std::vector<int> offsets_;
    int total_ = 0;
};

/// Factors the reduced KKT system
///   [ P + G' W^{-2} G + reg   A'   ] [ux]   [bx + G' W^{-2} bz]
///   [ A                      -reg  ] [uy] = [by]
/// and returns (ux, uy, W uz) with uz = W^{-2} (G ux - bz).
class KktSolver {
public:
    KktSolver(const ConicProgramData& data, const ConeOps& ops, double reg)
        : data_(data), ops_(ops), reg_(reg) {}

    bool factor(const Scaling& w) {
        gs_ = ops_.scale_matrix_inverse(w, data_.G);
        const Eigen::Index n = data_.P.rows();
        const Eigen::Index p = data_.A.rows();
        MatrixXd kkt(n + p, n + p);
        kkt.topLeftCorner(n, n) = data_.P + gs_.transpose() * gs_;
        kkt.topLeftCorner(n, n).diagonal().array() += reg_;
        kkt.topRightCorner(n, p) = data_.A.transpose();
        kkt.bottomLeftCorner(p, n) = data_.A;
        kkt.bottomRightCorner(p, p).setZero();
        kkt.bottomRightCorner(p, p).diagonal().array() -= reg_;
        lu_.compute(kkt);
        scaling_ = &w;
        VectorXd probe = lu_.solve(VectorXd::Ones(n + p));
        return probe.allFinite();
    }

    /// In-place solve; on exit x,y hold ux,uy and z holds W uz.
    void solve(VectorXd& x, VectorXd& y, VectorXd& z) const {
        VectorXd wz = z;
        ops_.scale(*scaling_, wz, true); // W^{-1} bz
        const Eigen::Index n = data_.P.rows();
        const Eigen::Index p = data_.A.rows();
        VectorXd rhs(n + p);
        rhs.head(n) = x + gs_.transpose() * wz;
        rhs.tail(p) = y;
        VectorXd sol = lu_.solve(rhs);
        x = sol.head(n);
        y = sol.tail(p);
        z = gs_ * x - wz; // W uz
    }

private:
    const ConicProgramData& data_;
    const ConeOps& ops_;
    double reg_;
    MatrixXd gs_;
    Eigen::PartialPivLU<MatrixXd> lu_;
    const Scaling* scaling_ = nullptr;
};

} // namespace

ConeQpResult solve_cone_qp(const ConicProgramData& data, const ConeQpSettings& settings) {
    const Eigen::Index n = data.P.rows();
    const Eigen::Index p = data.A.rows();
    const ConeOps ops(data.dims);
    const int cdim = ops.total();

    ConeQpResult result;
    result.message = "not solved";

    if (data.G.rows() != cdim || data.h.size() != cdim || data.q.size() != n ||
        data.A.cols() != n || data.b.size() != p) {
        result.message = "inconsistent problem dimensions";
        return result;
    }

    if (cdim == 0) {
        // equality-constrained QP: one saddle-point solve
        Eigen::MatrixXd kktm(n + p, n + p);
        kktm.topLeftCorner(n, n) = data.P;
        kktm.topRightCorner(n, p) = data.A.transpose();
        kktm.bottomLeftCorner(p, n) = data.A;
        kktm.bottomRightCorner(p, p).setZero();
        VectorXd rhs(n + p);
        rhs.head(n) = -data.q;
        rhs.tail(p) = data.b;
        const VectorXd sol = Eigen::PartialPivLU<MatrixXd>(kktm).solve(rhs);
        if (!sol.allFinite()) {
            result.message = "singular equality-constrained KKT system";
            return result;
        }
        result.x = sol.head(n);
        result.y = sol.tail(p);
        result.z = VectorXd::Zero(0);
        result.s = VectorXd::Zero(0);
        result.primal_obj = 0.5 * result.x.dot(data.P * result.x) + data.q.dot(result.x);
        result.dual_obj = result.primal_obj;
        result.primal_res = p > 0 ? (data.A * result.x - data.b).norm() : 0.0;
        result.dual_res =
            (data.P * result.x + data.q + data.A.transpose() * result.y).norm() /
            std::max(1.0, data.q.norm());
        result.status = result.primal_res <= settings.feastol * std::max(1.0, data.b.norm())
                            ? ConeQpStatus::optimal
                            : ConeQpStatus::numerical_failure;
        result.message = "equality-constrained solve";
        return result;
    }

    KktSolver kkt(data, ops, settings.static_reg);
    const VectorXd e = ops.identity();

    // Newton residual of the scaled system, used for iterative refinement.
    Scaling w;
    VectorXd lmbda = VectorXd::Zero(cdim);
    auto newton_residual = [&](const VectorXd& bx, const VectorXd& by, const VectorXd& bz,
                               const VectorXd& bs, const VectorXd& ux, const VectorXd& uy,
                               const VectorXd& uz, const VectorXd& us, VectorXd& vx, VectorXd& vy,
                               VectorXd& vz, VectorXd& vs) {
        VectorXd uz_unscaled = uz;
        ops.scale(w, uz_unscaled, true); // W^{-1} (W uz) -> uz
        vx = bx - data.P * ux - data.A.transpose() * uy - data.G.transpose() * uz_unscaled;
        vy = by - data.A * ux;
        VectorXd ws = us;
        ops.scale(w, ws, false); // W' us
        vz = bz - data.G * ux - ws;
        vs = bs - ops.product(lmbda, uz + us);
    };

    // Solves the scaled Newton system; x,y,z,s carry the rhs in and the
    // (scaled) steps out.
    auto solve_newton = [&](VectorXd& x, VectorXd& y, VectorXd& z, VectorXd& s) {
        const VectorXd bx = x, by = y, bz = z, bs = s;
        // s := lmbda o\ bs; z := bz - W'(lmbda o\ bs); solve; s := s - z
        ops.inverse_product(lmbda, s);
        VectorXd ws = s;
        ops.scale(w, ws, false);
        z -= ws;
        kkt.solve(x, y, z);
        s -= z;
        for (int r = 0; r < settings.refinement; ++r) {
            VectorXd vx, vy, vz, vs;
            newton_residual(bx, by, bz, bs, x, y, z, s, vx, vy, vz, vs);
            ops.inverse_product(lmbda, vs);
            VectorXd wvs = vs;
            ops.scale(w, wvs, false);
            vz -= wvs;
            kkt.solve(vx, vy, vz);
            vs -= vz;
            x += vx;
            y += vy;
            z += vz;
            s += vs;
        }
    };

    // Initial point: solve with identity scaling, then shift into the cone.
    VectorXd x = -data.q;
    VectorXd y = data.b;
    VectorXd z = data.h;
    VectorXd s(cdim);
    {
        Scaling unit;
        unit.d = VectorXd::Ones(data.dims.orthant);
        for (int q : data.dims.soc) {
            unit.beta.push_back(1.0);
            VectorXd v = VectorXd::Zero(q);
            v(0) = 1.0;
            unit.v.push_back(std::move(v));
        }
        w = unit;
        if (!kkt.factor(w)) {
            result.message = "initial KKT factorization failed (rank deficiency?)";
            return result;
        }
        kkt.solve(x, y, z);
        if (!x.allFinite() || !y.allFinite() || !z.allFinite()) {
            result.message = "initial solve produced non-finite values";
            return result;
        }
        s = -z;
        const double ts = ops.max_step(s);
        if (ts >= -1e-8 * std::max(s.norm(), 1.0)) s += (1.0 + ts) * e;
        const double tz = ops.max_step(z);
        if (tz >= -1e-8 * std::max(z.norm(), 1.0)) z += (1.0 + tz) * e;
    }

    const double resx0 = std::max(1.0, data.q.norm());
    const double resy0 = std::max(1.0, data.b.norm());
    const double resz0 = std::max(1.0, data.h.norm());

    double gap = s.dot(z);
    VectorXd ws3 = VectorXd::Zero(cdim);

    for (int iters = 0;; ++iters) {
        const VectorXd rx = data.P * x + data.q + data.A.transpose() * y + data.G.transpose() * z;
        const VectorXd ry = data.A * x - data.b;
        const VectorXd rz = s + data.G * x - data.h;
        const double f0 = 0.5 * x.dot(data.P * x) + data.q.dot(x);

        result.primal_obj = f0;
        result.dual_obj = f0 + y.dot(ry) + z.dot(rz) - gap;
        result.gap = gap;
        if (result.primal_obj < 0.0)
            result.rel_gap = gap / -result.primal_obj;
        else if (result.dual_obj > 0.0)
            result.rel_gap = gap / result.dual_obj;
        else
            result.rel_gap = std::numeric_limits<double>::quiet_NaN();
        result.primal_res = std::max(ry.norm() / resy0, rz.norm() / resz0);
        result.dual_res = rx.norm() / resx0;
        result.iterations = iters;
        result.x = x;
        result.y = y;
        result.z = z;
        result.s = s;

        if (result.primal_res <= settings.feastol && result.dual_res <= settings.feastol &&
            (gap <= settings.abstol ||
             (!std::isnan(result.rel_gap) && result.rel_gap <= settings.reltol))) {
            result.status = ConeQpStatus::optimal;
            result.message = "optimal";
            return result;
        }

        // Farkas certificate: z in cone with A'y + G'z ~ 0 and b'y + h'z < 0
        // proves primal infeasibility.
        {
            const double scale = std::max({1.0, y.lpNorm<Eigen::Infinity>(),
                                           z.lpNorm<Eigen::Infinity>()});
            const double cert_res =
                (data.A.transpose() * y + data.G.transpose() * z).lpNorm<Eigen::Infinity>();
            const double cert_val = data.b.dot(y) + data.h.dot(z);
            if (cert_val < -1e-8 * scale && cert_res <= 1e-9 * scale) {
                result.status = ConeQpStatus::infeasible;
                result.message = "primal infeasible (Farkas certificate)";
                return result;
            }
        }

        if (iters == settings.max_iters) {
            result.status = ConeQpStatus::max_iters;
            result.message = "maximum iterations reached";
            return result;
        }

        w = ops.compute_scaling(s, z, lmbda);
        const VectorXd lmbdasq = ops.product(lmbda, lmbda);
        if (!kkt.factor(w)) {
            result.status = ConeQpStatus::numerical_failure;
            result.message = "singular KKT system";
            return result;
        }

        const double mu = gap / ops.degree();
        double sigma = 0.0;
        double step = 1.0;
        VectorXd dx, dy, dz, ds;

        for (int pass = 0; pass < 2; ++pass) {
            ds = -lmbdasq;
            if (pass == 1) {
                ds -= ws3;
                ds += sigma * mu * e;
            }
            dx = -rx;
            dy = -ry;
            dz = -rz;
            solve_newton(dx, dy, dz, ds);
            if (!dx.allFinite() || !dz.allFinite() || !ds.allFinite()) {
                result.status = ConeQpStatus::numerical_failure;
                result.message = "non-finite search direction";
                return result;
            }

            const double dsdz = ds.dot(dz);
            if (pass == 0) ws3 = ops.product(ds, dz);

            VectorXd ds_l = ds;
            VectorXd dz_l = dz;
            ops.scale2(lmbda, ds_l);
            ops.scale2(lmbda, dz_l);
            const double t = std::max({0.0, ops.max_step(ds_l), ops.max_step(dz_l)});
            if (t == 0.0)
                step = 1.0;
            else
                step = std::min(1.0, (pass == 0 ? 1.0 : kStepScale) / t);
            if (pass == 0)
                sigma = std::pow(
                    std::min(1.0, std::max(0.0, 1.0 - step + dsdz / gap * step * step)),
                    kSigmaExponent);
        }

        x += step * dx;
        y += step * dy;
        ops.scale(w, ds, false); // W' (W^{-T} ds) -> ds
        ops.scale(w, dz, true);  // W^{-1} (W dz) -> dz
        s += step * ds;
        z += step * dz;

        // Guard: the 0.99 step rule keeps both iterates strictly interior.
        if (ops.max_step(s) >= 0.0 || ops.max_step(z) >= 0.0) {
            result.status = ConeQpStatus::numerical_failure;
            result.message = "iterate left the cone interior";
            return result;
        }
        gap = s.dot(z);
    }
}

} // namespace vucoord
