#pragma once
#include "errors.hpp"
#include "lattice.hpp"

#include <cmath>
#include <utility>
#include <vector>

namespace floq {

// Time-periodic in-plane forcing A(T) with period T_per.
class ForcingProfile {
  public:
    enum class Kind { circular, tabulated };

    Kind kind() const { return kind_; }
    double T_per() const { return T_per_; }
    double R_amp() const { return R_amp_; }
    double omega() const { return omega_; }
    bool zero_mean() const { return zero_mean_; }

    static ForcingProfile circular(double R, double omega) {
        if (!(omega > 0.0)) throw PreconditionError("ForcingProfile: omega must be positive");
        ForcingProfile f;
        f.kind_ = Kind::circular;
        f.R_amp_ = R;
        f.omega_ = omega;
        f.T_per_ = 2.0 * M_PI / omega; // one forcing cycle per period
        f.zero_mean_ = true;
        return f;
    }

    static ForcingProfile circular_checked(double R, double omega, double T_per) {
        if (std::abs(T_per * omega - 2.0 * M_PI) > 1e-12)
            throw PreconditionError("ForcingProfile: T_per * omega != 2*pi");
        return circular(R, omega);
    }

    // A == 0 with a chosen period (the autonomous case)
    static ForcingProfile none(double T_per) {
        return tabulated(T_per, {Vec2(0.0, 0.0)});
    }

    // uniform samples of A over [0, T_per); periodic linear interpolation
    static ForcingProfile tabulated(double T_per, std::vector<Vec2> samples) {
        if (!(T_per > 0.0)) throw PreconditionError("ForcingProfile: T_per must be positive");
        if (samples.empty()) throw PreconditionError("ForcingProfile: empty sample table");
        ForcingProfile f;
        f.kind_ = Kind::tabulated;
        f.T_per_ = T_per;
        f.samples_ = std::move(samples);
        Vec2 mean = Vec2::Zero();
        for (auto& s : f.samples_) mean += s;
        mean *= T_per / static_cast<double>(f.samples_.size());
        f.zero_mean_ = std::abs(mean.x()) <= 1e-10 && std::abs(mean.y()) <= 1e-10;
        return f;
    }

    // A -> -A; for circular forcing this is a half-period time shift
    ForcingProfile negated() const {
        ForcingProfile f = *this;
        f.R_amp_ = -f.R_amp_;
        for (auto& s : f.samples_) s = -s;
        return f;
    }

    Vec2 at(double T) const {
        if (kind_ == Kind::circular)
            return R_amp_ * Vec2(std::cos(omega_ * T), std::sin(omega_ * T));
        const std::size_t n = samples_.size();
        if (n == 1) return samples_[0];
        double u = std::fmod(T / T_per_, 1.0);
        if (u < 0.0) u += 1.0;
        double p = u * static_cast<double>(n);
        auto i = static_cast<std::size_t>(p);
        double w = p - static_cast<double>(i);
        return (1.0 - w) * samples_[i % n] + w * samples_[(i + 1) % n];
    }

  private:
    Kind kind_ = Kind::circular;
    double T_per_ = 1.0;
    double R_amp_ = 0.0;
    double omega_ = 0.0;
    bool zero_mean_ = false;
    std::vector<Vec2> samples_;
};

} // namespace floq
