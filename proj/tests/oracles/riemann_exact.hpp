#pragma once

// Exact Riemann solver for the 1D Euler equations with an ideal-gas EOS,
// used as an independent oracle for the shock-tube validation. Follows the
// classical pressure-iteration construction (two-shock/two-rarefaction
// casework with Newton updates).

#include <cmath>
#include <stdexcept>

namespace oracle {

struct RiemannState {
    double rho, u, p;
};

class ExactRiemann {
  public:
    ExactRiemann(RiemannState left, RiemannState right, double gamma)
        : left_(left), right_(right), g_(gamma) {
        cl_ = std::sqrt(g_ * left_.p / left_.rho);
        cr_ = std::sqrt(g_ * right_.p / right_.rho);
        solve_star();
    }

    double p_star() const { return p_star_; }
    double u_star() const { return u_star_; }

    /// Solution sampled at similarity coordinate xi = x / t.
    RiemannState sample(double xi) const {
        if (xi <= u_star_) return sample_left(xi);
        return sample_right(xi);
    }

  private:
    double f_side(double p, const RiemannState& s, double c) const {
        if (p > s.p) {
            const double a = 2.0 / ((g_ + 1.0) * s.rho);
            const double b = (g_ - 1.0) / (g_ + 1.0) * s.p;
            return (p - s.p) * std::sqrt(a / (p + b));
        }
        return 2.0 * c / (g_ - 1.0) * (std::pow(p / s.p, (g_ - 1.0) / (2.0 * g_)) - 1.0);
    }

    double df_side(double p, const RiemannState& s, double c) const {
        if (p > s.p) {
            const double a = 2.0 / ((g_ + 1.0) * s.rho);
            const double b = (g_ - 1.0) / (g_ + 1.0) * s.p;
            return std::sqrt(a / (b + p)) * (1.0 - (p - s.p) / (2.0 * (b + p)));
        }
        return 1.0 / (s.rho * c) * std::pow(p / s.p, -(g_ + 1.0) / (2.0 * g_));
    }

    void solve_star() {
        // two-rarefaction initial guess, positive-clamped
        double p = std::max(
            1e-12, std::pow((cl_ + cr_ - 0.5 * (g_ - 1.0) * (right_.u - left_.u)) /
                                (cl_ / std::pow(left_.p, (g_ - 1.0) / (2.0 * g_)) +
                                 cr_ / std::pow(right_.p, (g_ - 1.0) / (2.0 * g_))),
                            2.0 * g_ / (g_ - 1.0)));
        for (int it = 0; it < 100; ++it) {
            const double f =
                f_side(p, left_, cl_) + f_side(p, right_, cr_) + (right_.u - left_.u);
            const double df = df_side(p, left_, cl_) + df_side(p, right_, cr_);
            const double p_new = std::max(1e-14, p - f / df);
            if (std::abs(p_new - p) / (0.5 * (p_new + p)) < 1e-14) {
                p = p_new;
                break;
            }
            p = p_new;
        }
        p_star_ = p;
        u_star_ = 0.5 * (left_.u + right_.u) +
                  0.5 * (f_side(p, right_, cr_) - f_side(p, left_, cl_));
    }

    RiemannState sample_left(double xi) const {
        if (p_star_ > left_.p) {  // left shock
            const double ratio = p_star_ / left_.p;
            const double gm = (g_ - 1.0) / (g_ + 1.0);
            const double s = left_.u - cl_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ratio +
                                                       (g_ - 1.0) / (2.0 * g_));
            if (xi < s) return left_;
            const double rho = left_.rho * (ratio + gm) / (gm * ratio + 1.0);
            return {rho, u_star_, p_star_};
        }
        // left rarefaction
        const double c_star = cl_ * std::pow(p_star_ / left_.p, (g_ - 1.0) / (2.0 * g_));
        const double head = left_.u - cl_;
        const double tail = u_star_ - c_star;
        if (xi < head) return left_;
        if (xi > tail) {
            const double rho = left_.rho * std::pow(p_star_ / left_.p, 1.0 / g_);
            return {rho, u_star_, p_star_};
        }
        const double u = 2.0 / (g_ + 1.0) * (cl_ + 0.5 * (g_ - 1.0) * left_.u + xi);
        const double c = 2.0 / (g_ + 1.0) * (cl_ + 0.5 * (g_ - 1.0) * (left_.u - xi));
        const double rho = left_.rho * std::pow(c / cl_, 2.0 / (g_ - 1.0));
        const double p = left_.p * std::pow(c / cl_, 2.0 * g_ / (g_ - 1.0));
        return {rho, u, p};
    }

    RiemannState sample_right(double xi) const {
        if (p_star_ > right_.p) {  // right shock
            const double ratio = p_star_ / right_.p;
            const double gm = (g_ - 1.0) / (g_ + 1.0);
            const double s = right_.u + cr_ * std::sqrt((g_ + 1.0) / (2.0 * g_) * ratio +
                                                        (g_ - 1.0) / (2.0 * g_));
            if (xi > s) return right_;
            const double rho = right_.rho * (ratio + gm) / (gm * ratio + 1.0);
            return {rho, u_star_, p_star_};
        }
        // right rarefaction
        const double c_star = cr_ * std::pow(p_star_ / right_.p, (g_ - 1.0) / (2.0 * g_));
        const double head = right_.u + cr_;
        const double tail = u_star_ + c_star;
        if (xi > head) return right_;
        if (xi < tail) {
            const double rho = right_.rho * std::pow(p_star_ / right_.p, 1.0 / g_);
            return {rho, u_star_, p_star_};
        }
        const double u = 2.0 / (g_ + 1.0) * (-cr_ + 0.5 * (g_ - 1.0) * right_.u + xi);
        const double c = 2.0 / (g_ + 1.0) * (cr_ - 0.5 * (g_ - 1.0) * (right_.u - xi));
        const double rho = right_.rho * std::pow(c / cr_, 2.0 / (g_ - 1.0));
        const double p = right_.p * std::pow(c / cr_, 2.0 * g_ / (g_ - 1.0));
        return {rho, u, p};
    }

    RiemannState left_, right_;
    double g_, cl_, cr_;
    double p_star_ = 0.0, u_star_ = 0.0;
};

}  // namespace oracle
