#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace qtt {

/// Parameters of the base-b, level-L tensorization of [0,1)^D.
struct EncodingParams {
    int b = 2;  ///< base, >= 2
    int L = 0;  ///< level, >= 0
    int D = 1;  ///< spatial dimension, >= 1

    void validate() const {
        if (b < 2) throw std::invalid_argument("EncodingParams: base b must be >= 2");
        if (L < 0) throw std::invalid_argument("EncodingParams: level L must be >= 0");
        if (D < 1) throw std::invalid_argument("EncodingParams: dimension D must be >= 1");
    }

    bool operator==(const EncodingParams&) const = default;
};

/// Digit-string / remainder pair identifying a point of [0,1)^D.
///
/// Digits are stored level-major: (i_1^1,...,i_D^1, i_1^2,...,i_D^2, ...),
/// i.e. digits[ (k-1)*D + (nu-1) ] is the k-th base-b digit of coordinate nu.
struct DigitAddress {
    std::vector<int> digits;        // length L*D, each in [0, b)
    std::vector<double> remainders; // length D, each in [0, 1)

    void validate(const EncodingParams& p) const {
        p.validate();
        if (static_cast<int>(digits.size()) != p.L * p.D)
            throw std::invalid_argument("DigitAddress: digit count does not match L*D");
        if (static_cast<int>(remainders.size()) != p.D)
            throw std::invalid_argument("DigitAddress: remainder count does not match D");
        for (int d : digits)
            if (d < 0 || d >= p.b)
                throw std::invalid_argument("DigitAddress: digit out of range [0,b)");
        for (double r : remainders)
            if (!(r >= 0.0 && r < 1.0))
                throw std::invalid_argument("DigitAddress: remainder out of range [0,1)");
    }
};

/// First L base-b digits of each coordinate plus the rescaled remainder
/// b^L x - floor(b^L x). Coordinates must lie in the half-open cube [0,1)^D;
/// exact 1.0 is rejected.
inline DigitAddress encode_point(const std::vector<double>& x, const EncodingParams& p) {
    p.validate();
    if (static_cast<int>(x.size()) != p.D)
        throw std::invalid_argument("encode_point: point dimension does not match D");

    DigitAddress addr;
    addr.digits.assign(static_cast<size_t>(p.L) * p.D, 0);
    addr.remainders.assign(p.D, 0.0);

    const double scale = std::pow(static_cast<double>(p.b), p.L);
    for (int nu = 0; nu < p.D; ++nu) {
        if (!(x[nu] >= 0.0 && x[nu] < 1.0))
            throw std::domain_error("encode_point: coordinate outside [0,1)");
        const double scaled = scale * x[nu];
        auto n = static_cast<std::int64_t>(std::floor(scaled));
        addr.remainders[nu] = scaled - static_cast<double>(n);
        // digits of n, most significant first = level 1
        for (int k = p.L; k >= 1; --k) {
            addr.digits[static_cast<size_t>(k - 1) * p.D + nu] = static_cast<int>(n % p.b);
            n /= p.b;
        }
    }
    return addr;
}

/// Inverse of encode_point: x_nu = sum_k i_nu^k b^{-k} + b^{-L} xbar_nu.
inline std::vector<double> decode_point(const DigitAddress& addr, const EncodingParams& p) {
    addr.validate(p);
    std::vector<double> x(p.D, 0.0);
    const double scale = std::pow(static_cast<double>(p.b), p.L);
    for (int nu = 0; nu < p.D; ++nu) {
        std::int64_t n = 0;
        for (int k = 1; k <= p.L; ++k)
            n = n * p.b + addr.digits[static_cast<size_t>(k - 1) * p.D + nu];
        x[nu] = (static_cast<double>(n) + addr.remainders[nu]) / scale;
    }
    return x;
}

/// Mode sizes of the (L+1)*D tensor modes: L*D digit modes of size b followed
/// by D polynomial modes of size m+1. For L=0 only the D polynomial modes remain.
inline std::vector<int> mode_sizes(const EncodingParams& p, int m) {
    p.validate();
    if (m < 0) throw std::invalid_argument("mode_sizes: polynomial degree must be >= 0");
    std::vector<int> sizes;
    sizes.reserve(static_cast<size_t>(p.L + 1) * p.D);
    for (int i = 0; i < p.L * p.D; ++i) sizes.push_back(p.b);
    for (int nu = 0; nu < p.D; ++nu) sizes.push_back(m + 1);
    return sizes;
}

} // namespace qtt
