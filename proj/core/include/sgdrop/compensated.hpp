#pragma once

#include <cmath>

namespace sgdrop {

/// Neumaier's variant of Kahan summation. Unlike plain Kahan it stays exact
/// when an addend is larger than the running sum, which happens constantly
/// when alternating-sign phase increments are accumulated.
template <typename Real>
class CompensatedSum {
public:
    CompensatedSum& operator+=(Real value) {
        const Real t = sum_ + value;
        if (std::abs(sum_) >= std::abs(value)) compensation_ += (sum_ - t) + value;
        else compensation_ += (value - t) + sum_;
        sum_ = t;
        return *this;
    }

    Real value() const { return sum_ + compensation_; }

private:
    Real sum_{0};
    Real compensation_{0};
};

} // namespace sgdrop
