#include "feinfn/rng.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace feinfn {

double Rng::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
}

std::int64_t Rng::uniform_int(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<std::int64_t>(next_u64() % static_cast<std::uint64_t>(n));
}

std::string Rng::state() const {
    std::ostringstream os;
    os << gen_;
    // The cached Box-Muller draw travels as raw bits; decimal text would
    // truncate it and fork the stream after a restore.
    os << " " << (has_cached_ ? 1 : 0) << " " << std::bit_cast<std::uint64_t>(cached_);
    return os.str();
}

void Rng::set_state(const std::string& s) {
    std::istringstream is(s);
    is >> gen_;
    int flag = 0;
    std::uint64_t bits = 0;
    is >> flag >> bits;
    has_cached_ = (flag == 1);
    cached_ = std::bit_cast<double>(bits);
    if (is.fail()) throw std::invalid_argument("Rng::set_state: malformed state string");
}

}  // namespace feinfn
