#pragma once

#include "reduction.hpp"

namespace splc {

/// Thresholds for a PURIFY chain of d NOT links whose pairs use (r, r').
/// Inputs at or below R_L drive the chain output to at most L; inputs at or
/// above R_U drive it to at least H.
struct ChainBounds {
    int chain = 0;
    Rational r;
    Rational r_prime;
    Rational A;
    Rational A_prime;
    Rational B;
    Rational B_prime;
    Rational R_L;
    Rational R_U;
};

inline ChainBounds chain_bounds(const ReductionParams &p, int chain, const Rational &H_low, const Rational &H,
                                const Rational &L) {
    ChainBounds cb;
    cb.chain = chain;
    cb.r = p.r_chain(chain, 1);
    cb.r_prime = p.r_chain(chain, 2);
    const Rational one = 1;
    const Rational two = 2;
    Rational t_bar = p.t_bar();
    cb.A = (one - two * p.t - cb.r - p.epsilon) / p.t;
    cb.A_prime = (one - two * p.t - cb.r_prime - p.epsilon) / p.t;
    cb.B = (one - two * t_bar - cb.r + p.epsilon) / p.t;
    cb.B_prime = (one - two * t_bar - cb.r_prime + p.epsilon) / p.t;
    unsigned long half = p.d / 2;

    Rational lower_fixed = H_low * (one - cb.B) / (one - cb.A_prime * cb.B);
    cb.R_L = lower_fixed + pow(cb.A_prime * cb.B, half) * (L - lower_fixed);
    Rational upper_fixed = H_low * (one - cb.A) / (one - cb.A * cb.B_prime);
    cb.R_U = upper_fixed + pow(cb.A * cb.B_prime, half) * (H - upper_fixed);
    return cb;
}

}  // namespace splc
